#pragma once

// Local filtering rho -> (M (x) N) rho (M (x) N)^dag / p and complement filters.

#include <cmath>
#include <string>
#include <utility>

#include "bellforge/quantum.hpp"

namespace bellforge {

// Contraction M with M^dag M <= I acting on one party's full space.
class LocalFilter {
 public:
  // Filters with top eigenvalue of M^dag M in (1, 1 + 1e-9] are rescaled by
  // its square root; larger violations are rejected.
  LocalFilter(Side party, Operator m) : party_(party), matrix_(std::move(m)) {
    if (matrix_.rows() != matrix_.cols()) throw ValidationError("filter is not square");
    if (!matrix_.allFinite()) throw ValidationError("filter has non-finite entries");
    const double top = max_eigenvalue(matrix_.adjoint() * matrix_);
    if (top > 1.0 + tol::kCompare) throw ValidationError("contraction violated: largest eigenvalue of M^dag M is " +
                                                         std::to_string(top));
    if (top > 1.0) matrix_ /= std::sqrt(top);
  }

  static LocalFilter identity_on(Side party, std::size_t dim) { return LocalFilter(party, identity(dim)); }

  Side party() const { return party_; }
  const Operator& matrix() const { return matrix_; }
  std::size_t dim() const { return static_cast<std::size_t>(matrix_.rows()); }

 private:
  Side party_;
  Operator matrix_;
};

// M~ = sqrt(I - M^dag M), so that M^dag M + M~^dag M~ = I.
inline LocalFilter complement_filter(const LocalFilter& f) {
  const Operator rest = identity(f.dim()) - f.matrix().adjoint() * f.matrix();
  return LocalFilter(f.party(), psd_sqrt(rest));
}

namespace detail {

inline void check_filter_pair(const BipartiteState& state, const LocalFilter& m, const LocalFilter& n) {
  if (m.party() != Side::A || n.party() != Side::B) throw ValidationError("filters must act on A and B respectively");
  if (m.dim() != state.side_dim(Side::A) || n.dim() != state.side_dim(Side::B))
    throw ValidationError("dimension mismatch between filters and state");
}

}  // namespace detail

// Unnormalized (M (x) N) rho (M (x) N)^dag on the state's own space.
inline Operator filter_unnormalized(const BipartiteState& state, const Operator& m, const Operator& n) {
  const auto da = state.side_dim(Side::A);
  const auto db = state.side_dim(Side::B);
  return conjugate_right(conjugate_left(state.matrix(), m, da), n, db);
}

struct FilterOutcome {
  BipartiteState state;
  double probability;
};

inline FilterOutcome apply_filters(const BipartiteState& state, const LocalFilter& m, const LocalFilter& n) {
  detail::check_filter_pair(state, m, n);
  Operator out = filter_unnormalized(state, m.matrix(), n.matrix());
  const double p = out.trace().real();
  if (!(p > tol::kProbability)) throw ValidationError("zero success probability");
  out /= p;
  return {validate_state(std::move(out), state.space()), p};
}

}  // namespace bellforge
