#pragma once

// Random objects and independent reference computations shared by the unit
// and acceptance tests. Nothing here calls the library routine it checks.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <random>
#include <vector>

#include "bellforge/bellforge.hpp"

namespace testkit {

using namespace bellforge;
using Rng = std::mt19937_64;

inline Operator gaussian(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::normal_distribution<double> g;
  Operator m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = Complex(g(rng), g(rng));
  return m;
}

inline Ket random_ket(std::size_t d, Rng& rng) {
  Ket v = gaussian(static_cast<Eigen::Index>(d), 1, rng);
  return v / v.norm();
}

inline Operator random_density(std::size_t d, Rng& rng, std::size_t rank = 0) {
  if (rank == 0) rank = d;
  const Operator g = gaussian(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(rank), rng);
  Operator rho = g * g.adjoint();
  return rho / rho.trace().real();
}

inline BipartiteState random_state(std::size_t da, std::size_t db, Rng& rng, std::size_t rank = 0) {
  return validate_state(random_density(da * db, rng, rank), FactorSpace::bipartite(da, db));
}

// Haar-ish isometry (rows >= cols) from the QR factor of a Gaussian matrix.
inline Operator random_isometry(std::size_t rows, std::size_t cols, Rng& rng) {
  const Operator g = gaussian(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols), rng);
  Eigen::HouseholderQR<Operator> qr(g);
  return qr.householderQ() * Operator::Identity(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

inline Operator random_unitary(std::size_t d, Rng& rng) { return random_isometry(d, d, rng); }

// U diag(+-1) U^dag with at least one eigenvalue of each sign when d >= 2.
inline DichotomicObservable random_observable(std::size_t d, Rng& rng) {
  const Operator u = random_unitary(d, rng);
  std::uniform_int_distribution<std::size_t> pick(1, d > 1 ? d - 1 : 1);
  const std::size_t plus = d > 1 ? pick(rng) : 1;
  Operator diag = Operator::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < d; ++i) diag(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = i < plus ? 1.0 : -1.0;
  Operator o = u * diag * u.adjoint();
  o = 0.5 * (o + o.adjoint()).eval();
  return DichotomicObservable(o);
}

inline ChshSettings random_settings(std::size_t da, std::size_t db, Rng& rng) {
  return {random_observable(da, rng), random_observable(da, rng), random_observable(db, rng), random_observable(db, rng)};
}

// Kraus branches of a random instrument: blocks of a random isometry.
inline std::vector<Operator> random_instrument(std::size_t branches, std::size_t out_dim, std::size_t in_dim, Rng& rng) {
  const Operator v = random_isometry(branches * out_dim, in_dim, rng);
  std::vector<Operator> out;
  for (std::size_t i = 0; i < branches; ++i)
    out.push_back(v.middleRows(static_cast<Eigen::Index>(i * out_dim), static_cast<Eigen::Index>(out_dim)));
  return out;
}

// E_i = S^{-1/2} G_i G_i^dag S^{-1/2} with S = sum_i G_i G_i^dag.
inline Povm random_povm(Side side, std::size_t d, std::size_t outcomes, Rng& rng) {
  std::vector<Operator> g;
  Operator s = Operator::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < outcomes; ++i) {
    const Operator x = gaussian(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d), rng);
    g.push_back(x * x.adjoint());
    s += g.back();
  }
  Eigen::SelfAdjointEigenSolver<Operator> es(s);
  const Operator inv_sqrt = es.eigenvectors() * es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() * es.eigenvectors().adjoint();
  std::vector<Operator> e;
  for (const auto& x : g) {
    Operator y = inv_sqrt * x * inv_sqrt;
    e.push_back(0.5 * (y + y.adjoint()));
  }
  Operator last = identity(d);
  for (std::size_t i = 0; i + 1 < outcomes; ++i) last -= e[i];
  e.back() = last;
  return Povm(side, std::move(e));
}

// ---------------------------------------------------------------------------
// Two-setting, two-outcome references

// Kronecker product from the index formula only.
inline Operator kron_reference(const Operator& a, const Operator& b) {
  Operator out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      for (Eigen::Index k = 0; k < b.rows(); ++k)
        for (Eigen::Index l = 0; l < b.cols(); ++l) out(i * b.rows() + k, j * b.cols() + l) = a(i, j) * b(k, l);
  return out;
}

// p[k][l][i][j] layout used by the 2222 references.
using Table = std::array<std::array<std::array<std::array<double, 2>, 2>, 2>, 2>;

inline Behavior from_table(const Table& t) {
  const auto s = Scenario::binary();
  std::vector<double> p(16);
  for (std::size_t k = 0; k < 2; ++k)
    for (std::size_t l = 0; l < 2; ++l)
      for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j) p[s.index(k, l, i, j)] = t[k][l][i][j];
  return Behavior(s, std::move(p));
}

inline Table to_table(const Behavior& b) {
  Table t{};
  for (std::size_t k = 0; k < 2; ++k)
    for (std::size_t l = 0; l < 2; ++l)
      for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j) t[k][l][i][j] = b(k, l, i, j);
  return t;
}

// Deterministic box: A answers a[k], B answers b[l].
inline Table deterministic_table(std::array<int, 2> a, std::array<int, 2> b) {
  Table t{};
  for (int k = 0; k < 2; ++k)
    for (int l = 0; l < 2; ++l) t[k][l][a[k]][b[l]] = 1.0;
  return t;
}

// PR box variant: i xor j = k l xor alpha k xor beta l xor gamma.
inline Table pr_table(int alpha, int beta, int gamma) {
  Table t{};
  for (int k = 0; k < 2; ++k)
    for (int l = 0; l < 2; ++l)
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) t[k][l][i][j] = ((i ^ j) == ((k & l) ^ (alpha & k) ^ (beta & l) ^ gamma)) ? 0.5 : 0.0;
  return t;
}

inline double correlator_ref(const Table& t, int k, int l) { return t[k][l][0][0] + t[k][l][1][1] - t[k][l][0][1] - t[k][l][1][0]; }

// The eight CHSH expressions sum_kl (-1)^(k l + alpha k + beta l + gamma) E_kl.
inline std::array<double, 8> chsh_variants(const Table& t) {
  std::array<double, 8> out{};
  int n = 0;
  for (int alpha = 0; alpha < 2; ++alpha)
    for (int beta = 0; beta < 2; ++beta)
      for (int gamma = 0; gamma < 2; ++gamma) {
        double v = 0.0;
        for (int k = 0; k < 2; ++k)
          for (int l = 0; l < 2; ++l) {
            const int sgn = (k & l) ^ (alpha & k) ^ (beta & l) ^ gamma;
            v += (sgn ? -1.0 : 1.0) * correlator_ref(t, k, l);
          }
        out[n++] = v;
      }
  return out;
}

inline double max_chsh_variant(const Table& t) {
  const auto v = chsh_variants(t);
  return *std::max_element(v.begin(), v.end());
}

// Fine's theorem: a no-signaling 2222 behavior is local iff every CHSH
// variant is at most 2.
inline bool fine_local(const Table& t, double tol = 1e-9) { return max_chsh_variant(t) <= 2.0 + tol; }

// Random no-signaling behavior: one randomly chosen PR box with weight
// w ~ U(0, pr_max) on top of a random mixture of the 16 local vertices.
inline Table random_ns_table(Rng& rng, double pr_max = 1.0) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> bit(0, 1);
  Table local{};
  double total = 0.0;
  for (int a0 = 0; a0 < 2; ++a0)
    for (int a1 = 0; a1 < 2; ++a1)
      for (int b0 = 0; b0 < 2; ++b0)
        for (int b1 = 0; b1 < 2; ++b1) {
          const double w = std::pow(u(rng), 4.0);
          const auto d = deterministic_table({a0, a1}, {b0, b1});
          total += w;
          for (int k = 0; k < 2; ++k)
            for (int l = 0; l < 2; ++l)
              for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j) local[k][l][i][j] += w * d[k][l][i][j];
        }
  const double w = pr_max * u(rng);
  const auto pr = pr_table(bit(rng), bit(rng), bit(rng));
  Table t{};
  for (int k = 0; k < 2; ++k)
    for (int l = 0; l < 2; ++l)
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) t[k][l][i][j] = w * pr[k][l][i][j] + (1 - w) * local[k][l][i][j] / total;
  return t;
}

// ---------------------------------------------------------------------------
// Protocols and separable maps

// Alternating protocol with `pairs` A/B round pairs. Every round has
// `branches` outcomes and independent random instruments per history.
// `out_dims[r]` overrides the output dimension of round r.
inline AlternatingProtocol random_protocol(std::size_t pairs, std::size_t dim, std::size_t branches, Rng& rng,
                                           std::vector<std::size_t> out_dims = {}) {
  AlternatingProtocol p;
  p.dim_a = p.dim_b = dim;
  std::size_t cur[2] = {dim, dim};
  std::vector<OutcomeHistory> hist{{}};
  for (std::size_t r = 0; r < 2 * pairs; ++r) {
    InstrumentRound round;
    round.branches = branches;
    round.in_dim = cur[r % 2];
    round.out_dim = r < out_dims.size() ? out_dims[r] : round.in_dim;
    std::vector<OutcomeHistory> next;
    for (const auto& h : hist) {
      const auto ops = random_instrument(branches, round.out_dim, round.in_dim, rng);
      for (std::size_t i = 0; i < branches; ++i) {
        auto key = h;
        key.push_back(i);
        round.ops[key] = ops[i];
        next.push_back(key);
      }
    }
    hist = std::move(next);
    cur[r % 2] = round.out_dim;
    p.rounds.push_back(std::move(round));
  }
  return p;
}

// Three-branch separable map on two qutrits,
//   (M~, I), (M, N~), (M, N)   with M = N = |0><0| + |1><1|, M~ = N~ = |2><2|.
// With records, branch i also writes |i> into A' (before A) and B' (after B).
struct ThreeBranchMap {
  std::vector<SeparableBranch> branches;
  std::optional<FactorSpace> output_space;
};

inline ThreeBranchMap three_branch_map(bool with_records) {
  const Operator m = qutrit::lower_block(), mt = qutrit::top_level(), id = identity(3);
  const std::vector<std::pair<Operator, Operator>> parts = {{mt, id}, {m, mt}, {m, m}};
  ThreeBranchMap out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (!with_records) {
      out.branches.push_back({parts[i].first, parts[i].second});
      continue;
    }
    const Operator rec = basis_ket(3, i);
    out.branches.push_back({kron_reference(rec, parts[i].first), kron_reference(parts[i].second, rec)});
  }
  if (with_records)
    out.output_space = FactorSpace({{"A'", 3, Side::A, true}, {"A", 3, Side::A, false}, {"B", 3, Side::B, false}, {"B'", 3, Side::B, true}});
  return out;
}

}  // namespace testkit
