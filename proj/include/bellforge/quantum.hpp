#pragma once

// Validated density operators, POVMs and dichotomic observables.

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "bellforge/operator.hpp"

namespace bellforge {

// Density operator on a FactorSpace with an A/B partition. Hermitian, PSD
// and unit trace within tol::kEig.
class BipartiteState {
 public:
  const Operator& matrix() const { return matrix_; }
  const FactorSpace& space() const { return space_; }
  std::size_t dim() const { return space_.dim(); }
  std::size_t side_dim(Side s) const { return space_.side_dim(s); }

  friend BipartiteState validate_state(Operator matrix, FactorSpace space);

 private:
  BipartiteState(Operator m, FactorSpace s) : matrix_(std::move(m)), space_(std::move(s)) {}

  Operator matrix_;
  FactorSpace space_;
};

inline BipartiteState validate_state(Operator matrix, FactorSpace space) {
  if (matrix.rows() != matrix.cols() || static_cast<std::size_t>(matrix.rows()) != space.dim())
    throw ValidationError("dimension mismatch: matrix is " + std::to_string(matrix.rows()) + "x" +
                          std::to_string(matrix.cols()) + ", space dimension is " + std::to_string(space.dim()));
  if (!matrix.allFinite()) throw ValidationError("not Hermitian: non-finite entries");
  if (!is_hermitian(matrix)) throw ValidationError("not Hermitian");
  matrix = 0.5 * (matrix + matrix.adjoint()).eval();
  if (std::abs(matrix.trace() - Complex(1.0)) > tol::kEig) throw ValidationError("trace not 1");
  const auto spectrum = hermitian_eigenvalues(matrix);
  if (spectrum.back() < -tol::kEig) throw ValidationError("not PSD");
  return BipartiteState(std::move(matrix), std::move(space));
}

// Normalized projector onto `vector`.
inline BipartiteState pure_state(const Ket& vector, FactorSpace space) {
  const double norm = vector.norm();
  if (norm == 0.0 || !std::isfinite(norm)) throw ValidationError("zero vector");
  const Ket v = vector / norm;
  return validate_state(v * v.adjoint(), std::move(space));
}

// Re tr(rho X).
inline double expectation(const BipartiteState& rho, const Operator& x) {
  if (x.rows() != rho.matrix().rows() || x.cols() != rho.matrix().cols())
    throw ValidationError("dimension mismatch in expectation value");
  return (rho.matrix().cwiseProduct(x.transpose())).sum().real();
}

// Scale-free Re tr(rho (X (x) Y)) where X acts on the first dim(X) indices.
inline double product_expectation(const Operator& rho, const Operator& x, const Operator& y) {
  const auto da = x.rows(), db = y.rows();
  if (rho.rows() != da * db) throw ValidationError("dimension mismatch in expectation value");
  // tr(rho (X (x) Y)) = sum_{a a'} X(a', a) tr(rho_{a a'} Y) with rho_{a a'} the (a, a') block.
  Complex acc = 0.0;
  for (Eigen::Index a = 0; a < da; ++a)
    for (Eigen::Index ap = 0; ap < da; ++ap) {
      const Complex xa = x(ap, a);
      if (xa == Complex(0.0)) continue;
      acc += xa * rho.block(a * db, ap * db, db, db).cwiseProduct(y.transpose()).sum();
    }
  return acc.real();
}

// Generalized measurement on one party's space. Elements are PSD and sum to
// the identity within tol::kCompare. Labels default to 1..m.
class Povm {
 public:
  Povm(Side party, std::vector<Operator> elements, std::vector<int> labels = {})
      : party_(party), elements_(std::move(elements)), labels_(std::move(labels)) {
    if (elements_.empty()) throw ValidationError("POVM has no outcomes");
    const auto d = elements_.front().rows();
    Operator sum = Operator::Zero(d, d);
    for (const auto& e : elements_) {
      if (e.rows() != d || e.cols() != d) throw ValidationError("dimension mismatch between POVM elements");
      if (!is_hermitian(e)) throw ValidationError("POVM element not Hermitian");
      if (hermitian_eigenvalues(e).back() < -tol::kEig) throw ValidationError("POVM element not PSD");
      sum += e;
    }
    if (max_abs(sum - identity(static_cast<std::size_t>(d))) > tol::kCompare)
      throw ValidationError("POVM elements do not sum to identity");
    if (labels_.empty())
      for (std::size_t i = 0; i < elements_.size(); ++i) labels_.push_back(static_cast<int>(i) + 1);
    if (labels_.size() != elements_.size()) throw ValidationError("POVM label count mismatch");
  }

  Side party() const { return party_; }
  std::size_t outcomes() const { return elements_.size(); }
  std::size_t dim() const { return static_cast<std::size_t>(elements_.front().rows()); }
  const Operator& operator[](std::size_t i) const { return elements_.at(i); }
  const std::vector<Operator>& elements() const { return elements_; }
  const std::vector<int>& labels() const { return labels_; }

 private:
  Side party_;
  std::vector<Operator> elements_;
  std::vector<int> labels_;
};

// Hermitian operator with O^2 = I. Degenerate spectra (e.g. O = I) are allowed.
class DichotomicObservable {
 public:
  explicit DichotomicObservable(Operator m) : matrix_(std::move(m)) {
    if (matrix_.rows() != matrix_.cols()) throw ValidationError("observable not square");
    if (!is_hermitian(matrix_)) throw ValidationError("observable not Hermitian");
    if (max_abs(matrix_ * matrix_ - identity(static_cast<std::size_t>(matrix_.rows()))) > tol::kCompare)
      throw ValidationError("spectrum not +-1");
  }

  const Operator& matrix() const { return matrix_; }
  std::size_t dim() const { return static_cast<std::size_t>(matrix_.rows()); }

 private:
  Operator matrix_;
};

// {(I + O)/2, (I - O)/2} labelled +1, -1.
inline Povm observable_to_povm(const DichotomicObservable& obs, Side party) {
  const Operator id = identity(obs.dim());
  return Povm(party, {0.5 * (id + obs.matrix()), 0.5 * (id - obs.matrix())}, {+1, -1});
}

}  // namespace bellforge
