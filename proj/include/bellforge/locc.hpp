#pragma once

// One-way LOCC rounds, the filter-based protocols that turn a filtered
// nonlocality into a deterministic one, separable-branch selection and
// record bookkeeping.
//
// Factor layout: A-side records precede the A systems, B-side records follow
// the B systems, each in the order they were written. After the two rounds
// of reveal_two_bits the space is A' A'' A B B' B''.

#include <cmath>
#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "bellforge/filtering.hpp"
#include "bellforge/polytope.hpp"

namespace bellforge {

enum class Direction { a_to_b, b_to_a };

inline Side sender_of(Direction d) { return d == Direction::a_to_b ? Side::A : Side::B; }
inline Side receiver_of(Direction d) { return d == Direction::a_to_b ? Side::B : Side::A; }

struct Branch {
  Operator kraus;  // acts on the sender's whole side (records included)
  std::string label;
};

// Sender measures with Kraus operators F_i (sum F_i^dag F_i = I) and both
// parties store the outcome i in fresh record ancillas of dimension equal to
// the branch count.
struct OneWayRound {
  Direction direction = Direction::a_to_b;
  std::vector<Branch> branches;
  std::string sender_record;
  std::string receiver_record;
  // New dimension of the sender's system factor, when F_i are rectangular.
  // Requires exactly one non-record factor on the sender side.
  std::optional<std::size_t> sender_output_dim;

  std::size_t record_dim() const { return branches.size(); }
  std::size_t bits() const {
    std::size_t b = 0;
    while ((std::size_t{1} << b) < branches.size()) ++b;
    return b;
  }
};

struct ProtocolTranscript {
  std::vector<OneWayRound> rounds;
  std::size_t bits_a_to_b = 0;
  std::size_t bits_b_to_a = 0;
  FactorSpace final_space;

  void record(OneWayRound r, FactorSpace space) {
    (r.direction == Direction::a_to_b ? bits_a_to_b : bits_b_to_a) += r.bits();
    rounds.push_back(std::move(r));
    final_space = std::move(space);
  }
};

namespace detail {

// Position of the first A-side system factor (records are inserted before it).
inline std::size_t a_record_insert_pos(const FactorSpace& s) {
  std::size_t pos = 0;
  while (pos < s.size() && s[pos].side == Side::A && s[pos].record) ++pos;
  return pos;
}

inline std::size_t dim_of_range(const FactorSpace& s, std::size_t begin, std::size_t end) {
  std::size_t d = 1;
  for (std::size_t i = begin; i < end; ++i) d *= s[i].dim;
  return d;
}

}  // namespace detail

inline BipartiteState apply_one_way(const BipartiteState& state, const OneWayRound& round) {
  if (round.branches.empty()) throw ValidationError("one-way round has no branches");
  const Side sender = sender_of(round.direction);
  const auto& in_space = state.space();
  const std::size_t d_in = in_space.side_dim(sender);

  // Sender side after the Kraus map.
  std::vector<Factor> factors = in_space.factors();
  if (round.sender_output_dim) {
    std::optional<std::size_t> sys;
    for (std::size_t i = 0; i < factors.size(); ++i)
      if (factors[i].side == sender && !factors[i].record) {
        if (sys) throw ValidationError("resizing needs a single sender system factor");
        sys = i;
      }
    if (!sys) throw ValidationError("resizing needs a single sender system factor");
    factors[*sys].dim = *round.sender_output_dim;
  }
  std::size_t d_out = 1;
  for (const auto& f : factors)
    if (f.side == sender) d_out *= f.dim;

  Operator completeness = Operator::Zero(static_cast<Eigen::Index>(d_in), static_cast<Eigen::Index>(d_in));
  for (const auto& br : round.branches) {
    if (static_cast<std::size_t>(br.kraus.cols()) != d_in || static_cast<std::size_t>(br.kraus.rows()) != d_out)
      throw ValidationError("dimension mismatch: Kraus operator '" + br.label + "'");
    completeness += br.kraus.adjoint() * br.kraus;
  }
  if (max_abs(completeness - identity(d_in)) > tol::kCompare)
    throw ValidationError("Kraus completeness violated");

  // Record factors.
  const std::size_t rd = round.record_dim();
  const std::string a_label = sender == Side::A ? round.sender_record : round.receiver_record;
  const std::string b_label = sender == Side::B ? round.sender_record : round.receiver_record;
  FactorSpace mid(factors);
  const std::size_t a_pos = detail::a_record_insert_pos(mid);
  const std::size_t a_left = detail::dim_of_range(mid, 0, a_pos);
  std::vector<Factor> out_factors = factors;
  out_factors.insert(out_factors.begin() + static_cast<std::ptrdiff_t>(a_pos), Factor{a_label, rd, Side::A, true});
  out_factors.push_back(Factor{b_label, rd, Side::B, true});
  FactorSpace out_space(std::move(out_factors));

  const auto n = static_cast<Eigen::Index>(out_space.dim());
  Operator out = Operator::Zero(n, n);
  for (std::size_t i = 0; i < rd; ++i) {
    const Operator& f = round.branches[i].kraus;
    Operator branch = sender == Side::A ? conjugate_left(state.matrix(), f, d_in) : conjugate_right(state.matrix(), f, d_in);
    branch = insert_record(branch, a_left, rd, i);
    branch = insert_record(branch, static_cast<std::size_t>(branch.rows()), rd, i);
    out += branch;
  }
  return validate_state(std::move(out), std::move(out_space));
}

namespace detail {

// Embed a filter acting on the party's system factors into the party's side
// (identity on its records).
inline Operator embed_on_side(const FactorSpace& s, Side side, const Operator& m) {
  std::size_t rec = 1, sys = 1;
  for (const auto& f : s.factors()) {
    if (f.side != side) continue;
    (f.record ? rec : sys) *= f.dim;
  }
  if (static_cast<std::size_t>(m.cols()) != sys) throw ValidationError("dimension mismatch between filter and state");
  // Records precede systems on A; follow them on B. Mixed layouts are not produced by this library.
  return side == Side::A ? tensor(identity(rec), m) : tensor(m, identity(rec));
}

inline std::size_t system_dim(const FactorSpace& s, Side side) {
  std::size_t d = 1;
  for (const auto& f : s.factors())
    if (f.side == side && !f.record) d *= f.dim;
  return d;
}

inline OneWayRound filter_round(const FactorSpace& s, const LocalFilter& f, std::string sender_record,
                                std::string receiver_record) {
  if (f.dim() != system_dim(s, f.party())) throw ValidationError("dimension mismatch between filter and state");
  const auto comp = complement_filter(f);
  OneWayRound r;
  r.direction = f.party() == Side::A ? Direction::a_to_b : Direction::b_to_a;
  r.branches = {{embed_on_side(s, f.party(), f.matrix()), "pass"}, {embed_on_side(s, f.party(), comp.matrix()), "fail"}};
  r.sender_record = std::move(sender_record);
  r.receiver_record = std::move(receiver_record);
  return r;
}

}  // namespace detail

struct ProtocolOutcome {
  BipartiteState state;
  ProtocolTranscript transcript;
};

// rho -> rho_1 -> rho_2 = sum_i P_i (x) K_i rho K_i^dag (x) Q_i with
// K = (M N, M N~, M~ N, M~ N~). One bit each way.
inline ProtocolOutcome reveal_two_bits(const BipartiteState& state, const LocalFilter& m, const LocalFilter& n) {
  if (m.party() != Side::A || n.party() != Side::B) throw ValidationError("filters must act on A and B respectively");
  ProtocolTranscript tr;
  auto r1 = detail::filter_round(state.space(), m, "A'", "B'");
  auto rho1 = apply_one_way(state, r1);
  tr.record(std::move(r1), rho1.space());
  auto r2 = detail::filter_round(rho1.space(), n, "B''", "A''");
  auto rho2 = apply_one_way(rho1, r2);
  tr.record(std::move(r2), rho2.space());
  return {std::move(rho2), std::move(tr)};
}

// rho -> rho_1 = R_0 (x) M rho M^dag (x) S_0 + R_1 (x) M~ rho M~^dag (x) S_1.
inline ProtocolOutcome reveal_one_bit(const BipartiteState& state, const LocalFilter& m) {
  ProtocolTranscript tr;
  auto r1 = detail::filter_round(state.space(), m, m.party() == Side::A ? "A'" : "B'", m.party() == Side::A ? "B'" : "A'");
  auto rho1 = apply_one_way(state, r1);
  tr.record(std::move(r1), rho1.space());
  return {std::move(rho1), std::move(tr)};
}

// Unnormalized block with A-side records fixed to `a_values` and B-side
// records to `b_values` (in factor order), records traced out.
inline Operator record_block(const BipartiteState& state, const std::vector<std::size_t>& a_values,
                             const std::vector<std::size_t>& b_values) {
  const auto& s = state.space();
  Operator proj = Operator::Identity(1, 1);
  std::size_t ia = 0, ib = 0;
  for (const auto& f : s.factors()) {
    if (!f.record) {
      proj = tensor(proj, identity(f.dim));
      continue;
    }
    const auto& vals = f.side == Side::A ? a_values : b_values;
    auto& idx = f.side == Side::A ? ia : ib;
    if (idx >= vals.size() || vals[idx] >= f.dim) throw ValidationError("record value out of range");
    proj = tensor(proj, projector(f.dim, vals[idx++]));
  }
  if (ia != a_values.size() || ib != b_values.size()) throw ValidationError("record value count mismatch");
  return partial_trace(proj * state.matrix() * proj, s, s.system_labels());
}

inline BipartiteState trace_out_records(const BipartiteState& state, const std::set<std::string>& drop) {
  const auto& s = state.space();
  std::set<std::string> keep;
  for (const auto& l : drop) (void)s.index_of(l);
  for (const auto& f : s.factors())
    if (!drop.count(f.label)) keep.insert(f.label);
  return validate_state(partial_trace(state.matrix(), s, keep), s.restricted_to(keep));
}

inline BipartiteState trace_out_all_records(const BipartiteState& state) {
  return trace_out_records(state, state.space().record_labels());
}

// Behavior of `state` under the POVMs, then membership in L.
inline MembershipResult certify_nonlocal(const BipartiteState& state, const std::vector<Povm>& povms_a,
                                         const std::vector<Povm>& povms_b) {
  return lp_membership(behavior_from_state(state, povms_a, povms_b));
}

// Lift each POVM by the record projector, forcing outcome strategy[k] on the
// complement block.
inline std::vector<Povm> lift_measurements(const std::vector<Povm>& povms, const Operator& record_projector,
                                           const std::vector<std::size_t>& forced) {
  if (forced.size() != povms.size()) throw ValidationError("strategy does not match the number of settings");
  std::vector<Povm> out;
  for (std::size_t k = 0; k < povms.size(); ++k) out.push_back(lift_povm(povms[k], record_projector, forced[k]));
  return out;
}

struct SeparableBranch {
  Operator m;  // on A (may map into a larger output space)
  Operator n;  // on B
};

struct BranchSelection {
  std::size_t index;
  BipartiteState state;
  double weight;
  MembershipResult result;
};

// Among omega_i = (M_i (x) N_i) rho (M_i (x) N_i)^dag / q_i, return the first
// whose behavior lies outside L. Requires sum M_i^dag M_i (x) N_i^dag N_i = I and
// a nonlocal aggregate sum q_i omega_i. `output_space` carries the branch
// outputs; it defaults to the input space for square branches.
inline BranchSelection select_nonlocal_branch(const BipartiteState& state, const std::vector<SeparableBranch>& branches,
                                              const std::vector<Povm>& povms_a, const std::vector<Povm>& povms_b,
                                              std::optional<FactorSpace> output_space = std::nullopt) {
  if (branches.empty()) throw ValidationError("separable map has no branches");
  const auto da = state.side_dim(Side::A), db = state.side_dim(Side::B);
  const FactorSpace out_space = output_space ? *output_space : state.space();
  const auto oa = out_space.side_dim(Side::A), ob = out_space.side_dim(Side::B);

  Operator completeness = Operator::Zero(static_cast<Eigen::Index>(da * db), static_cast<Eigen::Index>(da * db));
  for (const auto& br : branches) {
    if (static_cast<std::size_t>(br.m.cols()) != da || static_cast<std::size_t>(br.n.cols()) != db ||
        static_cast<std::size_t>(br.m.rows()) != oa || static_cast<std::size_t>(br.n.rows()) != ob)
      throw ValidationError("dimension mismatch: separable branch");
    completeness += tensor(br.m.adjoint() * br.m, br.n.adjoint() * br.n);
  }
  if (max_abs(completeness - identity(da * db)) > tol::kCompare)
    throw ValidationError("separable map is not trace preserving");

  std::vector<Operator> parts;
  Operator aggregate = Operator::Zero(static_cast<Eigen::Index>(oa * ob), static_cast<Eigen::Index>(oa * ob));
  for (const auto& br : branches) {
    parts.push_back(conjugate_right(conjugate_left(state.matrix(), br.m, da), br.n, db));
    aggregate += parts.back();
  }
  const auto agg_state = validate_state(aggregate, out_space);
  if (certify_nonlocal(agg_state, povms_a, povms_b).inside) throw ValidationError("aggregate behavior is local");

  for (std::size_t i = 0; i < branches.size(); ++i) {
    const double q = parts[i].trace().real();
    if (q <= tol::kProbability) continue;
    auto omega = validate_state(parts[i] / q, out_space);
    auto res = certify_nonlocal(omega, povms_a, povms_b);
    if (!res.inside) return {i, std::move(omega), q, std::move(res)};
  }
  throw NumericalError("no nonlocal branch");
}

}  // namespace bellforge
