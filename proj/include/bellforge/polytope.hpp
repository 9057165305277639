#pragma once

// Bell scenarios, behaviors p(ij|kl), deterministic strategies and
// membership in the local polytope L = conv{d_lambda}.
//
// Indices are 0-based throughout: setting k of A, setting l of B, outcome i
// of A, outcome j of B. Behavior entries are stored block by block, (k, l)
// blocks in k-major order, each block an m_k x n_l row-major table.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "bellforge/quantum.hpp"
#include "bellforge/simplex.hpp"

namespace bellforge {

inline constexpr std::size_t kVertexCap = 100000;

class Scenario {
 public:
  Scenario() = default;
  Scenario(std::vector<std::size_t> outcomes_a, std::vector<std::size_t> outcomes_b)
      : a_(std::move(outcomes_a)), b_(std::move(outcomes_b)) {
    if (a_.empty() || b_.empty()) throw ValidationError("scenario needs at least one setting per side");
    for (auto m : a_)
      if (m == 0) throw ValidationError("outcome counts must be positive");
    for (auto n : b_)
      if (n == 0) throw ValidationError("outcome counts must be positive");
    offsets_.reserve(a_.size() * b_.size());
    std::size_t off = 0;
    for (auto m : a_)
      for (auto n : b_) {
        offsets_.push_back(off);
        off += m * n;
      }
    entries_ = off;
  }

  static Scenario binary(std::size_t settings_a = 2, std::size_t settings_b = 2) {
    return Scenario(std::vector<std::size_t>(settings_a, 2), std::vector<std::size_t>(settings_b, 2));
  }

  const std::vector<std::size_t>& outcomes_a() const { return a_; }
  const std::vector<std::size_t>& outcomes_b() const { return b_; }
  std::size_t settings_a() const { return a_.size(); }
  std::size_t settings_b() const { return b_.size(); }
  std::size_t entries() const { return entries_; }

  std::size_t index(std::size_t k, std::size_t l, std::size_t i, std::size_t j) const {
    return offsets_[k * b_.size() + l] + i * b_[l] + j;
  }

  // Number of deterministic strategies; saturates above the cap.
  std::size_t vertex_count() const {
    std::size_t v = 1;
    for (auto m : a_) v = saturating_mul(v, m);
    for (auto n : b_) v = saturating_mul(v, n);
    return v;
  }

  friend bool operator==(const Scenario& x, const Scenario& y) { return x.a_ == y.a_ && x.b_ == y.b_; }

 private:
  static std::size_t saturating_mul(std::size_t a, std::size_t b) {
    return a > (kVertexCap + 1) / b ? kVertexCap + 1 : a * b;
  }

  std::vector<std::size_t> a_, b_;
  std::vector<std::size_t> offsets_;
  std::size_t entries_ = 0;
};

// Table of joint probabilities. Entries >= -1e-10 and every (k, l) block sums
// to one within 1e-9.
class Behavior {
 public:
  Behavior(Scenario s, std::vector<double> probs) : scenario_(std::move(s)), probs_(std::move(probs)) {
    if (probs_.size() != scenario_.entries()) throw ValidationError("behavior size does not match scenario");
    for (double p : probs_) {
      if (!std::isfinite(p)) throw ValidationError("behavior has non-finite entries");
      if (p < -tol::kEig) throw ValidationError("behavior has negative entries");
    }
    for (std::size_t k = 0; k < scenario_.settings_a(); ++k)
      for (std::size_t l = 0; l < scenario_.settings_b(); ++l) {
        double sum = 0.0;
        for (std::size_t i = 0; i < scenario_.outcomes_a()[k]; ++i)
          for (std::size_t j = 0; j < scenario_.outcomes_b()[l]; ++j) sum += (*this)(k, l, i, j);
        if (std::abs(sum - 1.0) > tol::kCompare)
          throw ValidationError("behavior block (" + std::to_string(k + 1) + "," + std::to_string(l + 1) +
                                ") is not normalized");
      }
  }

  const Scenario& scenario() const { return scenario_; }
  const std::vector<double>& probs() const { return probs_; }
  double operator()(std::size_t k, std::size_t l, std::size_t i, std::size_t j) const {
    return probs_[scenario_.index(k, l, i, j)];
  }

  Eigen::VectorXd vector() const { return Eigen::Map<const Eigen::VectorXd>(probs_.data(), static_cast<Eigen::Index>(probs_.size())); }

 private:
  Scenario scenario_;
  std::vector<double> probs_;
};

// lambda = (r_1..r_K, s_1..s_L): one fixed outcome per setting.
struct DeterministicStrategy {
  std::vector<std::size_t> a;
  std::vector<std::size_t> b;

  friend bool operator==(const DeterministicStrategy&, const DeterministicStrategy&) = default;
};

inline void check_strategy(const Scenario& s, const DeterministicStrategy& st) {
  if (st.a.size() != s.settings_a() || st.b.size() != s.settings_b())
    throw ValidationError("index out of range: strategy does not match scenario");
  for (std::size_t k = 0; k < st.a.size(); ++k)
    if (st.a[k] >= s.outcomes_a()[k]) throw ValidationError("index out of range: outcome for A setting " + std::to_string(k + 1));
  for (std::size_t l = 0; l < st.b.size(); ++l)
    if (st.b[l] >= s.outcomes_b()[l]) throw ValidationError("index out of range: outcome for B setting " + std::to_string(l + 1));
}

// Mixed-radix decoding over (r_1..r_K, s_1..s_L), s_L fastest. Index 0 is the
// all-first-outcomes strategy.
inline DeterministicStrategy strategy_at(const Scenario& s, std::size_t index) {
  DeterministicStrategy st{std::vector<std::size_t>(s.settings_a()), std::vector<std::size_t>(s.settings_b())};
  for (std::size_t l = s.settings_b(); l-- > 0;) {
    st.b[l] = index % s.outcomes_b()[l];
    index /= s.outcomes_b()[l];
  }
  for (std::size_t k = s.settings_a(); k-- > 0;) {
    st.a[k] = index % s.outcomes_a()[k];
    index /= s.outcomes_a()[k];
  }
  return st;
}

inline std::size_t strategy_index(const Scenario& s, const DeterministicStrategy& st) {
  check_strategy(s, st);
  std::size_t idx = 0;
  for (std::size_t k = 0; k < st.a.size(); ++k) idx = idx * s.outcomes_a()[k] + st.a[k];
  for (std::size_t l = 0; l < st.b.size(); ++l) idx = idx * s.outcomes_b()[l] + st.b[l];
  return idx;
}

inline void check_vertex_cap(const Scenario& s) {
  if (s.vertex_count() > kVertexCap) throw ValidationError("vertex cap exceeded");
}

inline Behavior deterministic_behavior(const Scenario& s, const DeterministicStrategy& st) {
  check_strategy(s, st);
  std::vector<double> p(s.entries(), 0.0);
  for (std::size_t k = 0; k < s.settings_a(); ++k)
    for (std::size_t l = 0; l < s.settings_b(); ++l) p[s.index(k, l, st.a[k], st.b[l])] = 1.0;
  return Behavior(s, std::move(p));
}

inline Behavior uniform_behavior(const Scenario& s) {
  std::vector<double> p(s.entries());
  for (std::size_t k = 0; k < s.settings_a(); ++k)
    for (std::size_t l = 0; l < s.settings_b(); ++l)
      for (std::size_t i = 0; i < s.outcomes_a()[k]; ++i)
        for (std::size_t j = 0; j < s.outcomes_b()[l]; ++j)
          p[s.index(k, l, i, j)] = 1.0 / static_cast<double>(s.outcomes_a()[k] * s.outcomes_b()[l]);
  return Behavior(s, std::move(p));
}

// ---------------------------------------------------------------------------
// Quantum behaviors

inline Behavior behavior_from_state(const BipartiteState& state, const std::vector<Povm>& povms_a,
                                    const std::vector<Povm>& povms_b) {
  const auto da = state.side_dim(Side::A), db = state.side_dim(Side::B);
  std::vector<std::size_t> ma, nb;
  for (const auto& p : povms_a) {
    if (p.party() != Side::A || p.dim() != da) throw ValidationError("dimension mismatch: A-side POVM");
    ma.push_back(p.outcomes());
  }
  for (const auto& p : povms_b) {
    if (p.party() != Side::B || p.dim() != db) throw ValidationError("dimension mismatch: B-side POVM");
    nb.push_back(p.outcomes());
  }
  Scenario s(ma, nb);
  std::vector<double> probs(s.entries());
  for (std::size_t k = 0; k < povms_a.size(); ++k)
    for (std::size_t l = 0; l < povms_b.size(); ++l)
      for (std::size_t i = 0; i < ma[k]; ++i)
        for (std::size_t j = 0; j < nb[l]; ++j)
          probs[s.index(k, l, i, j)] = product_expectation(state.matrix(), povms_a[k][i], povms_b[l][j]);
  for (auto& p : probs)
    if (p < 0.0 && p > -tol::kEig) p = 0.0;
  return Behavior(std::move(s), std::move(probs));
}

inline bool no_signaling_check(const Behavior& b, double tol = tol::kCompare) {
  const auto& s = b.scenario();
  for (std::size_t k = 0; k < s.settings_a(); ++k)
    for (std::size_t i = 0; i < s.outcomes_a()[k]; ++i) {
      double ref = 0.0;
      for (std::size_t l = 0; l < s.settings_b(); ++l) {
        double m = 0.0;
        for (std::size_t j = 0; j < s.outcomes_b()[l]; ++j) m += b(k, l, i, j);
        if (l == 0) ref = m;
        else if (std::abs(m - ref) > tol) return false;
      }
    }
  for (std::size_t l = 0; l < s.settings_b(); ++l)
    for (std::size_t j = 0; j < s.outcomes_b()[l]; ++j) {
      double ref = 0.0;
      for (std::size_t k = 0; k < s.settings_a(); ++k) {
        double m = 0.0;
        for (std::size_t i = 0; i < s.outcomes_a()[k]; ++i) m += b(k, l, i, j);
        if (k == 0) ref = m;
        else if (std::abs(m - ref) > tol) return false;
      }
    }
  return true;
}

// p * b + (1 - p) * d_lambda.
inline Behavior mix_with_vertex(const Behavior& b, double weight_p, const DeterministicStrategy& st) {
  if (!(weight_p > 0.0 && weight_p <= 1.0)) throw ValidationError("weight outside (0,1]");
  const auto d = deterministic_behavior(b.scenario(), st);
  std::vector<double> p(b.probs().size());
  for (std::size_t e = 0; e < p.size(); ++e) p[e] = weight_p * b.probs()[e] + (1.0 - weight_p) * d.probs()[e];
  return Behavior(b.scenario(), std::move(p));
}

// ---------------------------------------------------------------------------
// Bell inequalities and membership

// Linear functional s . p + s0 with s . d_lambda + s0 <= 0 on every vertex.
// A behavior is certified nonlocal when s . p + s0 > 0.
struct BellInequality {
  std::vector<double> coefficients;
  double offset = 0.0;

  double evaluate(const Behavior& b) const {
    double v = offset;
    for (std::size_t e = 0; e < coefficients.size(); ++e) v += coefficients[e] * b.probs()[e];
    return v;
  }

  // max_lambda (s . d_lambda + s0), computed by full vertex enumeration.
  double max_over_vertices(const Scenario& s) const {
    check_vertex_cap(s);
    double best = -std::numeric_limits<double>::infinity();
    const auto v = s.vertex_count();
    for (std::size_t idx = 0; idx < v; ++idx) {
      const auto st = strategy_at(s, idx);
      double val = offset;
      for (std::size_t k = 0; k < s.settings_a(); ++k)
        for (std::size_t l = 0; l < s.settings_b(); ++l) val += coefficients[s.index(k, l, st.a[k], st.b[l])];
      best = std::max(best, val);
    }
    return best;
  }

  // Violation of b on the CHSH scale, where the functional is rescaled so
  // that white noise evaluates to -2 (CHSH - 2 itself is fixed by this).
  std::optional<double> chsh_scale_margin(const Behavior& b) const {
    const double noise = evaluate(uniform_behavior(b.scenario()));
    if (!(noise < -tol::kLp)) return std::nullopt;
    return evaluate(b) * (2.0 / -noise);
  }
};

struct MembershipResult {
  bool inside = false;
  std::optional<std::vector<double>> weights;  // one per vertex, enumeration order
  std::optional<BellInequality> certificate;
  double margin = 0.0;  // s . b + s0 of the re-verified certificate
};

namespace detail {

// Columns (d_lambda; 1) for every vertex, rows per behavior entry plus the
// normalization row.
inline Eigen::MatrixXd vertex_matrix(const Scenario& s) {
  check_vertex_cap(s);
  const auto v = s.vertex_count();
  const auto rows = static_cast<Eigen::Index>(s.entries() + 1);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(rows, static_cast<Eigen::Index>(v));
  for (std::size_t idx = 0; idx < v; ++idx) {
    const auto st = strategy_at(s, idx);
    for (std::size_t k = 0; k < s.settings_a(); ++k)
      for (std::size_t l = 0; l < s.settings_b(); ++l)
        a(static_cast<Eigen::Index>(s.index(k, l, st.a[k], st.b[l])), static_cast<Eigen::Index>(idx)) = 1.0;
    a(rows - 1, static_cast<Eigen::Index>(idx)) = 1.0;
  }
  return a;
}

inline Eigen::VectorXd extended(const Behavior& b) {
  Eigen::VectorXd rhs(static_cast<Eigen::Index>(b.probs().size() + 1));
  rhs.head(rhs.size() - 1) = b.vector();
  rhs(rhs.size() - 1) = 1.0;
  return rhs;
}

// Turn a dual vector y = (s, s0) into a certificate; shift s0 so that the
// inequality is exactly valid on every vertex, and reject it if b is then
// no longer strictly violated.
inline std::optional<BellInequality> verified_certificate(const Behavior& b, const Eigen::VectorXd& y) {
  BellInequality ineq;
  const auto n = static_cast<std::size_t>(y.size() - 1);
  ineq.coefficients.assign(y.data(), y.data() + n);
  ineq.offset = y(y.size() - 1);
  const double top = ineq.max_over_vertices(b.scenario());
  if (top > 0.0) ineq.offset -= top;
  if (ineq.max_over_vertices(b.scenario()) > 1e-12) return std::nullopt;
  if (!(ineq.evaluate(b) > tol::kLp)) return std::nullopt;
  return ineq;
}

}  // namespace detail

// Decide b in L by phase-1 simplex over the vertex columns. Outside L, the
// certificate is read off the final phase-1 duals (Farkas ray) and
// re-verified against every vertex.
inline MembershipResult lp_membership(const Behavior& b) {
  const auto& s = b.scenario();
  const auto a = detail::vertex_matrix(s);
  const auto rhs = detail::extended(b);
  const auto sol = lp::feasibility(a, rhs);
  MembershipResult out;
  if (sol.status == lp::Status::optimal) {
    out.inside = true;
    // Prefer the decomposition maximizing the smallest weight: q = t + r,
    // r >= 0. White noise then decomposes uniformly.
    Eigen::MatrixXd spread(a.rows(), a.cols() + 1);
    spread.leftCols(a.cols()) = a;
    spread.col(a.cols()) = a.rowwise().sum();
    Eigen::VectorXd c = Eigen::VectorXd::Zero(a.cols() + 1);
    c(a.cols()) = -1.0;
    const auto fair = lp::minimize(spread, rhs, c);
    Eigen::VectorXd q = sol.x;
    if (fair.status == lp::Status::optimal) q = fair.x.head(a.cols()).array() + fair.x(a.cols());
    std::vector<double> w(q.data(), q.data() + q.size());
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    for (auto& x : w) x /= total;
    out.weights = std::move(w);
    return out;
  }
  auto cert = detail::verified_certificate(b, sol.farkas);
  if (!cert) throw NumericalError("certificate verification failed");
  out.margin = cert->evaluate(b);
  out.certificate = std::move(*cert);
  return out;
}

// Reconstruct sum_lambda q_lambda d_lambda from membership weights.
inline std::vector<double> mixture_of_vertices(const Scenario& s, const std::vector<double>& weights) {
  std::vector<double> p(s.entries(), 0.0);
  for (std::size_t idx = 0; idx < weights.size(); ++idx) {
    if (weights[idx] == 0.0) continue;
    const auto st = strategy_at(s, idx);
    for (std::size_t k = 0; k < s.settings_a(); ++k)
      for (std::size_t l = 0; l < s.settings_b(); ++l) p[s.index(k, l, st.a[k], st.b[l])] += weights[idx];
  }
  return p;
}

struct ViolationResult {
  BellInequality inequality;  // normalized: white noise evaluates to -2
  double margin;              // value on b; > 0 iff b is outside L
};

// Witness maximization: the inequality most violated by b among those
// normalized to -2 on white noise u. Solves
//   max t  s.t.  b = sum_l q_l d_l + t u,  q >= 0,  sum_l q_l + t = 1
// whose optimal duals are the inequality. Returns nullopt when b is not in
// the affine hull of L (signaling behaviors), where no such normalization
// exists.
inline std::optional<ViolationResult> maximize_violation(const Behavior& b) {
  const auto& s = b.scenario();
  const auto verts = detail::vertex_matrix(s);
  const auto u = detail::extended(uniform_behavior(s));
  const auto v = verts.cols();
  Eigen::MatrixXd a(verts.rows(), v + 2);
  a.leftCols(v) = verts;
  a.col(v) = u;
  a.col(v + 1) = -u;
  Eigen::VectorXd c = Eigen::VectorXd::Zero(v + 2);
  c(v) = -1.0;
  c(v + 1) = 1.0;
  const auto sol = lp::minimize(a, detail::extended(b), c);
  if (sol.status != lp::Status::optimal) return std::nullopt;
  BellInequality ineq;
  const auto n = static_cast<std::size_t>(sol.duals.size() - 1);
  ineq.coefficients.resize(n);
  for (std::size_t e = 0; e < n; ++e) ineq.coefficients[e] = 2.0 * sol.duals(static_cast<Eigen::Index>(e));
  ineq.offset = 2.0 * sol.duals(sol.duals.size() - 1);
  const double top = ineq.max_over_vertices(s);
  if (top > 0.0) ineq.offset -= top;
  if (ineq.max_over_vertices(s) > 1e-12) throw NumericalError("certificate verification failed");
  const double margin = ineq.evaluate(b);
  return ViolationResult{std::move(ineq), margin};
}

struct EscapeResult {
  DeterministicStrategy strategy;
  Behavior mixed;
  MembershipResult result;
};

// First vertex (enumeration order) whose mixture p b + (1 - p) d_lambda lies
// outside L. Some vertex always qualifies when b is outside L, since L is
// closed and convex.
inline EscapeResult find_escaping_vertex(const Behavior& b, double weight_p) {
  if (!(weight_p > 0.0 && weight_p <= 1.0)) throw ValidationError("weight outside (0,1]");
  if (lp_membership(b).inside) throw ValidationError("input behavior is local");
  const auto& s = b.scenario();
  const auto v = s.vertex_count();
  for (std::size_t idx = 0; idx < v; ++idx) {
    auto st = strategy_at(s, idx);
    auto mixed = mix_with_vertex(b, weight_p, st);
    auto res = lp_membership(mixed);
    if (!res.inside) return {std::move(st), std::move(mixed), std::move(res)};
  }
  throw NumericalError("no escaping vertex found");
}

// ---------------------------------------------------------------------------
// Lifted measurements

// Extend a POVM by a record system: on the record_projector block it acts
// as the original POVM, on the complement it always yields `forced_outcome`.
// A-side records precede the system (P0 (x) A_i + delta (I - P0) (x) I),
// B-side records follow it (B_j (x) Q0 + delta I (x) (I - Q0)).
inline Povm lift_povm(const Povm& povm, const Operator& record_projector, std::size_t forced_outcome) {
  const auto rd = static_cast<std::size_t>(record_projector.rows());
  if (record_projector.rows() != record_projector.cols() || !is_hermitian(record_projector) ||
      max_abs(record_projector * record_projector - record_projector) > tol::kCompare)
    throw ValidationError("not a projector");
  if (forced_outcome >= povm.outcomes()) throw ValidationError("outcome out of range");
  const Operator rest = identity(rd) - record_projector;
  const Operator sys_id = identity(povm.dim());
  std::vector<Operator> lifted;
  for (std::size_t i = 0; i < povm.outcomes(); ++i) {
    Operator e = povm.party() == Side::A ? tensor(record_projector, povm[i]) : tensor(povm[i], record_projector);
    if (i == forced_outcome) e += povm.party() == Side::A ? tensor(rest, sys_id) : tensor(sys_id, rest);
    lifted.push_back(std::move(e));
  }
  return Povm(povm.party(), std::move(lifted), povm.labels());
}

}  // namespace bellforge
