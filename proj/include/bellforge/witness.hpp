#pragma once

// CHSH evaluation, the record-controlled qutrit observables of the hidden
// nonlocality example, and the two-qubit maximal-CHSH (Horodecki) criterion.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <functional>
#include <iostream>
#include <string>
#include <utility>

#include "bellforge/polytope.hpp"

namespace bellforge {

inline const double kTsirelson = 2.0 * std::sqrt(2.0);

using WarningHandler = std::function<void(const std::string&)>;

inline WarningHandler& warning_handler() {
  static WarningHandler handler = [](const std::string& msg) { std::cerr << "warning: " << msg << '\n'; };
  return handler;
}

inline void set_warning_handler(WarningHandler h) { warning_handler() = std::move(h); }

struct ChshSettings {
  DichotomicObservable a1, a2, b1, b2;
};

// A1 (x) (B1 + B2) + A2 (x) (B1 - B2).
inline Operator chsh_operator(const ChshSettings& s) {
  return tensor(s.a1.matrix(), s.b1.matrix() + s.b2.matrix()) + tensor(s.a2.matrix(), s.b1.matrix() - s.b2.matrix());
}

// <A1 (B1 + B2) + A2 (B1 - B2)>. Values beyond 2 sqrt(2) trigger a warning.
inline double chsh_value(const BipartiteState& state, const ChshSettings& s) {
  const auto da = state.side_dim(Side::A), db = state.side_dim(Side::B);
  if (s.a1.dim() != da || s.a2.dim() != da || s.b1.dim() != db || s.b2.dim() != db)
    throw ValidationError("dimension mismatch between CHSH settings and state");
  const Operator& rho = state.matrix();
  const Operator bp = s.b1.matrix() + s.b2.matrix();
  const Operator bm = s.b1.matrix() - s.b2.matrix();
  const double v = product_expectation(rho, s.a1.matrix(), bp) + product_expectation(rho, s.a2.matrix(), bm);
  if (std::abs(v) > kTsirelson + tol::kCompare)
    warning_handler()("CHSH value " + std::to_string(v) + " exceeds the Tsirelson bound");
  return v;
}

// E(k,l) = sum_ij a_i b_j p(ij|kl) with outcome 0 -> +1, outcome 1 -> -1.
inline double correlator(const Behavior& b, std::size_t k, std::size_t l) {
  double e = 0.0;
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) e += ((i == j) ? 1.0 : -1.0) * b(k, l, i, j);
  return e;
}

// E11 + E12 + E21 - E22 on a two-setting, two-outcome behavior.
inline double chsh_from_behavior(const Behavior& b) {
  const Scenario two = Scenario::binary();
  if (!(b.scenario() == two)) throw ValidationError("CHSH needs a 2-setting / 2-outcome scenario");
  return correlator(b, 0, 0) + correlator(b, 0, 1) + correlator(b, 1, 0) - correlator(b, 1, 1);
}

inline std::vector<Povm> povms_of(const DichotomicObservable& x, const DichotomicObservable& y, Side side) {
  return {observable_to_povm(x, side), observable_to_povm(y, side)};
}

// ---------------------------------------------------------------------------
// Hidden nonlocality example observables

namespace qutrit {

inline Operator sigma1() {
  Operator m = Operator::Zero(3, 3);
  m(0, 0) = 1.0;
  m(1, 1) = -1.0;
  return m;
}

inline Operator sigma2() {
  Operator m = Operator::Zero(3, 3);
  m(0, 1) = 1.0;
  m(1, 0) = 1.0;
  return m;
}

// Projector onto span{|0>, |1>} and onto |2>.
inline Operator lower_block() { return projector(3, 0) + projector(3, 1); }
inline Operator top_level() { return projector(3, 2); }

}  // namespace qutrit

// Observables on the bare qutrits: A_k = sigma_k + |2><2|,
// B_l = (sigma'_1 + (3 - 2l) sigma'_2)/sqrt(2) + |2'><2'| with l = 1, 2.
inline ChshSettings qutrit_chsh_settings() {
  const double r = 1.0 / std::sqrt(2.0);
  const Operator top = qutrit::top_level();
  return {DichotomicObservable(qutrit::sigma1() + top), DichotomicObservable(qutrit::sigma2() + top),
          DichotomicObservable(r * (qutrit::sigma1() + qutrit::sigma2()) + top),
          DichotomicObservable(r * (qutrit::sigma1() - qutrit::sigma2()) + top)};
}

// Record projector P_0 = |0><0| (x) |0><0| on two qubit records.
inline Operator first_record_block() { return tensor(projector(2, 0), projector(2, 0)); }

// Observables on A'A''A and B B'B'' (12 dimensions each):
//   A_k = P_0 (x) (sigma_k + M~) + (I - P_0) (x) I_A
//   B_l = (... + N~) (x) Q_0 + I_B (x) (I - Q_0)
// They act as the qutrit settings on the first record block and as +1 elsewhere.
inline ChshSettings record_controlled_chsh_settings() {
  const auto base = qutrit_chsh_settings();
  const Operator p0 = first_record_block();
  const Operator rest = identity(4) - p0;
  const Operator id3 = identity(3);
  auto lift_a = [&](const DichotomicObservable& o) { return DichotomicObservable(tensor(p0, o.matrix()) + tensor(rest, id3)); };
  auto lift_b = [&](const DichotomicObservable& o) { return DichotomicObservable(tensor(o.matrix(), p0) + tensor(id3, rest)); };
  return {lift_a(base.a1), lift_a(base.a2), lift_b(base.b1), lift_b(base.b2)};
}

// ---------------------------------------------------------------------------
// Two-qubit criterion

namespace pauli {

inline Operator x() {
  Operator m = Operator::Zero(2, 2);
  m(0, 1) = m(1, 0) = 1.0;
  return m;
}
inline Operator y() {
  Operator m = Operator::Zero(2, 2);
  m(0, 1) = Complex(0.0, -1.0);
  m(1, 0) = Complex(0.0, 1.0);
  return m;
}
inline Operator z() {
  Operator m = Operator::Zero(2, 2);
  m(0, 0) = 1.0;
  m(1, 1) = -1.0;
  return m;
}

inline std::array<Operator, 3> all() { return {x(), y(), z()}; }

// n . sigma for a unit vector n.
inline Operator along(const Eigen::Vector3d& n) { return n(0) * x() + n(1) * y() + n(2) * z(); }

}  // namespace pauli

// Correlation matrix T_ij = tr(rho sigma_i (x) sigma_j).
inline Eigen::Matrix3d correlation_matrix(const BipartiteState& state) {
  if (state.side_dim(Side::A) != 2 || state.side_dim(Side::B) != 2)
    throw ValidationError("wrong dimensions: Horodecki criterion needs a two-qubit state");
  const auto s = pauli::all();
  Eigen::Matrix3d t;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) t(i, j) = product_expectation(state.matrix(), s[i], s[j]);
  return t;
}

struct MaxChsh {
  double value;
  ChshSettings settings;
};

// 2 sqrt(t1 + t2) for the two largest eigenvalues of T^T T, with settings
// built from the singular vectors of T:
//   B1 +- B2 = 2 (cos th v1, sin th v2),  A1 = u1, A2 = u2,  tan th = s2/s1.
inline MaxChsh horodecki_max_chsh(const BipartiteState& state) {
  const Eigen::Matrix3d t = correlation_matrix(state);
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(t, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto sv = svd.singularValues();  // descending, >= 0
  const double s1 = sv(0), s2 = sv(1);
  const double value = 2.0 * std::sqrt(s1 * s1 + s2 * s2);
  double c = 1.0, s = 0.0;
  if (value > 0.0) {
    c = s1 / std::hypot(s1, s2);
    s = s2 / std::hypot(s1, s2);
  }
  Eigen::Vector3d u1 = svd.matrixU().col(0), u2 = svd.matrixU().col(1);
  const Eigen::Vector3d v1 = svd.matrixV().col(0), v2 = svd.matrixV().col(1);
  const Eigen::Vector3d b1 = c * v1 + s * v2, b2 = c * v1 - s * v2;
  ChshSettings settings{DichotomicObservable(pauli::along(u1)), DichotomicObservable(pauli::along(u2)),
                        DichotomicObservable(pauli::along(b1.normalized())),
                        DichotomicObservable(pauli::along(b2.normalized()))};
  return {value, std::move(settings)};
}

}  // namespace bellforge
