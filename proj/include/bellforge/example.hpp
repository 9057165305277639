#pragma once

// The two-qutrit Bell-local state with filter-revealable nonlocality,
//
//   rho = p |psi><psi| + p M (x) N~ + q M~ (x) N + 4q M~ (x) N~,
//   |psi> = (|00'> + |11'>)/sqrt(2),  M = |0><0| + |1><1|,  M~ = |2><2|,
//   q = (1 - 3p)/6,  0 < p <= 1/18,
//
// its two-bit LOCC image rho_2 and the end-to-end verification report.

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "bellforge/locc.hpp"
#include "bellforge/witness.hpp"

namespace bellforge {

inline constexpr double kMaxExampleP = 1.0 / 18.0;

inline void check_example_p(double p) {
  if (!(p > 0.0 && p <= kMaxExampleP * (1.0 + 1e-12))) throw ValidationError("p out of range (0, 1/18]");
}

inline double example_q(double p) { return (1.0 - 3.0 * p) / 6.0; }

inline Ket example_psi() {
  Ket v = Ket::Zero(9);
  v(0) = v(4) = 1.0 / std::sqrt(2.0);
  return v;
}

inline FactorSpace qutrit_pair_space() { return FactorSpace::bipartite(3, 3); }

inline BipartiteState example_state(double p) {
  check_example_p(p);
  const double q = example_q(p);
  const Operator m = qutrit::lower_block(), mt = qutrit::top_level();
  Operator rho = p * projector(example_psi()) + p * tensor(m, mt) + q * tensor(mt, m) + 4.0 * q * tensor(mt, mt);
  return validate_state(std::move(rho), qutrit_pair_space());
}

inline LocalFilter example_filter(Side side) { return LocalFilter(side, qutrit::lower_block()); }

inline double closed_form_chsh(double p) { return 2.0 * p * (std::sqrt(2.0) - 1.0) + 2.0; }

struct HiddenNonlocalityExample {
  double p;
  double q;
  BipartiteState rho;
  LocalFilter m;
  LocalFilter n;
  BipartiteState rho2;
  ProtocolTranscript transcript;
  ChshSettings settings;
};

inline HiddenNonlocalityExample build_example(double p) {
  auto rho = example_state(p);
  auto m = example_filter(Side::A);
  auto n = example_filter(Side::B);
  auto out = reveal_two_bits(rho, m, n);
  return {p,         example_q(p), std::move(rho), std::move(m), std::move(n), std::move(out.state),
          std::move(out.transcript), record_controlled_chsh_settings()};
}

struct ExampleReport {
  double p = 0.0;
  double q = 0.0;
  double filter_probability = 0.0;
  double filtered_fidelity = 0.0;  // <psi| rho_hat |psi>
  double chsh = 0.0;
  double chsh_closed_form = 0.0;
  double chsh_abs_diff = 0.0;
  DeterministicStrategy forced_strategy;
  MembershipResult membership;             // rho_2 under lifted measurements
  std::optional<ViolationResult> witness;  // strongest noise-normalized violation
  double lifted_identity_error = 0.0;      // max |p~ - (p p + (1-p) d)|
  double roundtrip_trace_distance = 0.0;   // tr_records(rho_2) vs rho
  std::vector<double> block_weights;       // record blocks 00, 01, 10, 11
  std::size_t bits_a_to_b = 0;
  std::size_t bits_b_to_a = 0;

  bool nonlocal() const { return !membership.inside; }
};

inline ExampleReport example_report(double p) {
  check_example_p(p);
  const auto ex = build_example(p);
  ExampleReport rep;
  rep.p = p;
  rep.q = ex.q;

  const auto filtered = apply_filters(ex.rho, ex.m, ex.n);
  rep.filter_probability = filtered.probability;
  rep.filtered_fidelity = (example_psi().adjoint() * filtered.state.matrix() * example_psi())(0, 0).real();

  rep.chsh = chsh_value(ex.rho2, ex.settings);
  rep.chsh_closed_form = closed_form_chsh(p);
  rep.chsh_abs_diff = std::abs(rep.chsh - rep.chsh_closed_form);

  // Behavior of the filtered state, the escaping vertex at weight p, and the
  // lifted measurements forcing that vertex off the first record block.
  const auto base = qutrit_chsh_settings();
  const auto povms_a = povms_of(base.a1, base.a2, Side::A);
  const auto povms_b = povms_of(base.b1, base.b2, Side::B);
  const auto hat = behavior_from_state(filtered.state, povms_a, povms_b);
  const auto escape = find_escaping_vertex(hat, filtered.probability);
  rep.forced_strategy = escape.strategy;

  const Operator p0 = first_record_block();
  const auto lifted_a = lift_measurements(povms_a, p0, escape.strategy.a);
  const auto lifted_b = lift_measurements(povms_b, p0, escape.strategy.b);
  const auto tilde = behavior_from_state(ex.rho2, lifted_a, lifted_b);
  for (std::size_t e = 0; e < tilde.probs().size(); ++e)
    rep.lifted_identity_error = std::max(rep.lifted_identity_error, std::abs(tilde.probs()[e] - escape.mixed.probs()[e]));
  rep.membership = lp_membership(tilde);
  rep.witness = maximize_violation(tilde);

  rep.roundtrip_trace_distance = trace_distance(trace_out_all_records(ex.rho2).matrix(), ex.rho.matrix());
  for (std::size_t a = 0; a < 2; ++a)
    for (std::size_t b = 0; b < 2; ++b) rep.block_weights.push_back(record_block(ex.rho2, {a, b}, {a, b}).trace().real());
  rep.bits_a_to_b = ex.transcript.bits_a_to_b;
  rep.bits_b_to_a = ex.transcript.bits_b_to_a;
  return rep;
}

}  // namespace bellforge
