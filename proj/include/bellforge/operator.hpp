#pragma once

// Dense complex operator algebra: Kronecker products, partial traces,
// Hermitian spectra, PSD square roots and trace distance.
//
// Kronecker convention: the left factor is major, i.e. for a (m x n) and
// b (p x q), (a (x) b)(i*p + k, j*q + l) = a(i, j) * b(k, l). Every tensor
// layout in the library follows this.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "bellforge/errors.hpp"

namespace bellforge {

using Complex = std::complex<double>;
using Operator = Eigen::MatrixXcd;
using Ket = Eigen::VectorXcd;

enum class Side { A, B };

inline const char* side_name(Side s) { return s == Side::A ? "A" : "B"; }

// One tensor factor of a Hilbert space. `record` marks classical-record
// ancillas written by LOCC rounds.
struct Factor {
  std::string label;
  std::size_t dim = 1;
  Side side = Side::A;
  bool record = false;

  friend bool operator==(const Factor&, const Factor&) = default;
};

// Ordered list of tensor factors. All A-side factors precede all B-side
// factors, so any operator on the space splits as X_A (x) X_B.
class FactorSpace {
 public:
  FactorSpace() = default;

  explicit FactorSpace(std::vector<Factor> factors) : factors_(std::move(factors)) {
    std::set<std::string> seen;
    bool seen_b = false;
    for (const auto& f : factors_) {
      if (f.dim == 0) throw ValidationError("factor '" + f.label + "' has zero dimension");
      if (!seen.insert(f.label).second) throw ValidationError("duplicate factor label '" + f.label + "'");
      if (f.side == Side::B) seen_b = true;
      if (f.side == Side::A && seen_b)
        throw ValidationError("A-side factor '" + f.label + "' follows a B-side factor");
    }
  }

  static FactorSpace bipartite(std::size_t dim_a, std::size_t dim_b, std::string a = "A",
                               std::string b = "B") {
    return FactorSpace({{std::move(a), dim_a, Side::A, false}, {std::move(b), dim_b, Side::B, false}});
  }

  const std::vector<Factor>& factors() const { return factors_; }
  std::size_t size() const { return factors_.size(); }
  const Factor& operator[](std::size_t i) const { return factors_.at(i); }

  std::vector<std::string> labels() const {
    std::vector<std::string> out;
    for (const auto& f : factors_) out.push_back(f.label);
    return out;
  }
  std::vector<std::size_t> dims() const {
    std::vector<std::size_t> out;
    for (const auto& f : factors_) out.push_back(f.dim);
    return out;
  }

  std::size_t dim() const {
    std::size_t d = 1;
    for (const auto& f : factors_) d *= f.dim;
    return d;
  }

  std::size_t side_dim(Side s) const {
    std::size_t d = 1;
    for (const auto& f : factors_)
      if (f.side == s) d *= f.dim;
    return d;
  }

  std::size_t side_count(Side s) const {
    return static_cast<std::size_t>(
        std::count_if(factors_.begin(), factors_.end(), [s](const Factor& f) { return f.side == s; }));
  }

  bool contains(const std::string& label) const {
    return std::any_of(factors_.begin(), factors_.end(), [&](const Factor& f) { return f.label == label; });
  }

  std::size_t index_of(const std::string& label) const {
    for (std::size_t i = 0; i < factors_.size(); ++i)
      if (factors_[i].label == label) return i;
    throw ValidationError("unknown label '" + label + "'");
  }

  // Subspace made of the listed labels, in this space's order.
  FactorSpace restricted_to(const std::set<std::string>& keep) const {
    for (const auto& l : keep) (void)index_of(l);
    std::vector<Factor> out;
    for (const auto& f : factors_)
      if (keep.count(f.label)) out.push_back(f);
    return FactorSpace(std::move(out));
  }

  std::set<std::string> record_labels() const {
    std::set<std::string> out;
    for (const auto& f : factors_)
      if (f.record) out.insert(f.label);
    return out;
  }

  std::set<std::string> system_labels() const {
    std::set<std::string> out;
    for (const auto& f : factors_)
      if (!f.record) out.insert(f.label);
    return out;
  }

  friend bool operator==(const FactorSpace&, const FactorSpace&) = default;

 private:
  std::vector<Factor> factors_;
};

// ---------------------------------------------------------------------------
// Elementary constructors

inline Operator identity(std::size_t n) { return Operator::Identity(n, n); }

inline Ket basis_ket(std::size_t dim, std::size_t i) {
  Ket k = Ket::Zero(dim);
  k(i) = 1.0;
  return k;
}

// |i><j| on a space of dimension `dim`.
inline Operator basis_op(std::size_t dim, std::size_t i, std::size_t j) {
  Operator m = Operator::Zero(dim, dim);
  m(i, j) = 1.0;
  return m;
}

inline Operator projector(std::size_t dim, std::size_t i) { return basis_op(dim, i, i); }

inline Operator projector(const Ket& v) { return v * v.adjoint(); }

// ---------------------------------------------------------------------------
// Tensor products

inline Operator tensor(const Operator& a, const Operator& b) {
  const auto p = b.rows(), q = b.cols();
  Operator out(a.rows() * p, a.cols() * q);
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * p, j * q, p, q) = a(i, j) * b;
  return out;
}

inline Operator tensor(std::initializer_list<Operator> ops) {
  Operator out = Operator::Identity(1, 1);
  for (const auto& o : ops) out = tensor(out, o);
  return out;
}

inline Ket tensor_ket(const Ket& a, const Ket& b) {
  Ket out(a.size() * b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a(i) * b;
  return out;
}

// ---------------------------------------------------------------------------
// Predicates and norms

inline double max_abs(const Operator& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

inline double hermiticity_defect(const Operator& m) {
  if (m.rows() != m.cols()) return std::numeric_limits<double>::infinity();
  return max_abs(m - m.adjoint());
}

inline bool is_hermitian(const Operator& m, double tol = tol::kEig) { return hermiticity_defect(m) <= tol; }

inline Complex trace(const Operator& m) { return m.trace(); }

// ---------------------------------------------------------------------------
// Partial trace

namespace detail {

// Row offset contributed by each multi-index over `which` factors.
inline std::vector<std::size_t> factor_offsets(const std::vector<std::size_t>& dims,
                                              const std::vector<std::size_t>& which) {
  std::vector<std::size_t> strides(dims.size(), 1);
  for (std::size_t f = dims.size(); f-- > 1;) strides[f - 1] = strides[f] * dims[f];
  std::size_t count = 1;
  for (auto f : which) count *= dims[f];
  std::vector<std::size_t> offsets(count, 0);
  // Mixed-radix counter over `which`, last listed factor fastest.
  std::vector<std::size_t> digit(which.size(), 0);
  for (std::size_t n = 0; n < count; ++n) {
    std::size_t off = 0;
    for (std::size_t w = 0; w < which.size(); ++w) off += digit[w] * strides[which[w]];
    offsets[n] = off;
    for (std::size_t w = which.size(); w-- > 0;) {
      if (++digit[w] < dims[which[w]]) break;
      digit[w] = 0;
    }
  }
  return offsets;
}

}  // namespace detail

// Trace out every factor whose label is not in `keep`. The result acts on
// the kept factors in their original order.
inline Operator partial_trace(const Operator& op, const FactorSpace& space, const std::set<std::string>& keep) {
  if (op.rows() != op.cols()) throw ValidationError("dimension mismatch: partial trace of a non-square operator");
  if (static_cast<std::size_t>(op.rows()) != space.dim())
    throw ValidationError("dimension mismatch: operator is " + std::to_string(op.rows()) + "-dimensional, space is " +
                          std::to_string(space.dim()));
  for (const auto& l : keep) (void)space.index_of(l);

  const auto dims = space.dims();
  std::vector<std::size_t> kept, traced;
  for (std::size_t f = 0; f < space.size(); ++f) (keep.count(space[f].label) ? kept : traced).push_back(f);

  const auto kept_off = detail::factor_offsets(dims, kept);
  const auto traced_off = detail::factor_offsets(dims, traced);
  const auto n = static_cast<Eigen::Index>(kept_off.size());
  Operator out = Operator::Zero(n, n);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < n; ++c) {
      Complex acc = 0.0;
      for (auto t : traced_off) acc += op(kept_off[r] + t, kept_off[c] + t);
      out(r, c) = acc;
    }
  return out;
}

// ---------------------------------------------------------------------------
// Local sandwiches

// (X (x) I_b) rho (X (x) I_b)^dagger for X acting on the left tensor block of
// dimension `dim_left` (X may be rectangular).
inline Operator conjugate_left(const Operator& rho, const Operator& x, std::size_t dim_left) {
  const auto total = static_cast<std::size_t>(rho.rows());
  if (rho.rows() != rho.cols() || dim_left == 0 || total % dim_left != 0 ||
      static_cast<std::size_t>(x.cols()) != dim_left)
    throw ValidationError("dimension mismatch in local operation");
  const auto right = static_cast<Eigen::Index>(total / dim_left);
  const auto out_left = x.rows();

  auto apply = [&](const Operator& m) {
    Operator t = Operator::Zero(out_left * right, m.cols());
    for (Eigen::Index i = 0; i < out_left; ++i)
      for (Eigen::Index a = 0; a < x.cols(); ++a) {
        if (x(i, a) == Complex(0.0)) continue;
        t.middleRows(i * right, right) += x(i, a) * m.middleRows(a * right, right);
      }
    return t;
  };
  Operator half = apply(rho);                   // (X (x) I) rho
  Operator full = apply(half.adjoint().eval());  // (X (x) I) rho^dag (X (x) I)^dag
  return full.adjoint();
}

// (I_a (x) Y) rho (I_a (x) Y)^dagger for Y acting on the right tensor block of
// dimension `dim_right`.
inline Operator conjugate_right(const Operator& rho, const Operator& y, std::size_t dim_right) {
  const auto total = static_cast<std::size_t>(rho.rows());
  if (rho.rows() != rho.cols() || dim_right == 0 || total % dim_right != 0 ||
      static_cast<std::size_t>(y.cols()) != dim_right)
    throw ValidationError("dimension mismatch in local operation");
  const auto left = static_cast<Eigen::Index>(total / dim_right);
  const auto in_r = static_cast<Eigen::Index>(dim_right);
  const auto out_r = y.rows();

  auto apply = [&](const Operator& m) {
    Operator t(left * out_r, m.cols());
    for (Eigen::Index a = 0; a < left; ++a) t.middleRows(a * out_r, out_r).noalias() = y * m.middleRows(a * in_r, in_r);
    return t;
  };
  Operator half = apply(rho);
  Operator full = apply(half.adjoint().eval());
  return full.adjoint();
}

// Insert a classical record |value><value| of dimension `record_dim` between
// the first `left_dim` dimensions of rho and the rest.
inline Operator insert_record(const Operator& rho, std::size_t left_dim, std::size_t record_dim, std::size_t value) {
  const auto total = static_cast<std::size_t>(rho.rows());
  if (left_dim == 0 || total % left_dim != 0 || value >= record_dim)
    throw ValidationError("dimension mismatch in record insertion");
  const std::size_t right = total / left_dim;
  const auto n = static_cast<Eigen::Index>(total * record_dim);
  Operator out = Operator::Zero(n, n);
  for (std::size_t l = 0; l < left_dim; ++l)
    for (std::size_t lp = 0; lp < left_dim; ++lp) {
      const auto r0 = static_cast<Eigen::Index>((l * record_dim + value) * right);
      const auto c0 = static_cast<Eigen::Index>((lp * record_dim + value) * right);
      out.block(r0, c0, right, right) = rho.block(l * right, lp * right, right, right);
    }
  return out;
}

// ---------------------------------------------------------------------------
// Spectra

struct Eigensystem {
  std::vector<double> values;  // descending
  Operator vectors;            // column i pairs with values[i]
};

inline Eigensystem hermitian_eig(const Operator& op) {
  if (op.rows() != op.cols()) throw ValidationError("not Hermitian: operator is not square");
  if (!is_hermitian(op)) throw ValidationError("not Hermitian");
  const Operator sym = 0.5 * (op + op.adjoint());
  Eigen::SelfAdjointEigenSolver<Operator> solver(sym);
  if (solver.info() != Eigen::Success) throw NumericalError("Hermitian eigensolver did not converge");
  const auto n = sym.rows();
  Eigensystem out;
  out.values.resize(static_cast<std::size_t>(n));
  out.vectors.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out.values[static_cast<std::size_t>(i)] = solver.eigenvalues()(n - 1 - i);
    out.vectors.col(i) = solver.eigenvectors().col(n - 1 - i);
  }
  return out;
}

// Spectrum only, descending. Cheaper than hermitian_eig for large operators.
inline std::vector<double> hermitian_eigenvalues(const Operator& op) {
  if (op.rows() != op.cols() || !is_hermitian(op)) throw ValidationError("not Hermitian");
  const Operator sym = 0.5 * (op + op.adjoint());
  Eigen::SelfAdjointEigenSolver<Operator> solver(sym, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericalError("Hermitian eigensolver did not converge");
  std::vector<double> v(solver.eigenvalues().data(), solver.eigenvalues().data() + solver.eigenvalues().size());
  std::reverse(v.begin(), v.end());
  return v;
}

inline double max_eigenvalue(const Operator& op) { return hermitian_eigenvalues(op).front(); }

// Unique PSD square root. Eigenvalues in [-tol, 0) are clamped to zero.
inline Operator psd_sqrt(const Operator& op) {
  const auto es = hermitian_eig(op);
  if (!es.values.empty() && es.values.back() < -tol::kEig) throw ValidationError("not positive semidefinite");
  Eigen::VectorXd roots(static_cast<Eigen::Index>(es.values.size()));
  for (std::size_t i = 0; i < es.values.size(); ++i) roots(static_cast<Eigen::Index>(i)) = std::sqrt(std::max(es.values[i], 0.0));
  Operator out = es.vectors * roots.cast<Complex>().asDiagonal() * es.vectors.adjoint();
  return 0.5 * (out + out.adjoint());
}

inline double trace_distance(const Operator& a, const Operator& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw ValidationError("dimension mismatch in trace distance");
  const auto v = hermitian_eigenvalues(a - b);
  return 0.5 * std::accumulate(v.begin(), v.end(), 0.0, [](double s, double x) { return s + std::abs(x); });
}

}  // namespace bellforge
