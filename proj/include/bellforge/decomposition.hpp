#pragma once

// General alternating-round LOCC maps and their decomposition into a chain of
// one-way rounds with classical record ancillas.
//
// Round r (1-based) is performed by A when r is odd and by B when r is even.
// Its branch operators may depend on every earlier outcome: ops are keyed by
// the full outcome prefix (i_1, ..., i_r), the last entry being this round's
// outcome. Records of round r are written to A'r and B'r (dimension d_r).

#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "bellforge/locc.hpp"

namespace bellforge {

inline constexpr std::size_t kComposedDimCap = 4096;

using OutcomeHistory = std::vector<std::size_t>;

struct InstrumentRound {
  std::size_t branches = 1;
  std::size_t in_dim = 1;
  std::size_t out_dim = 1;
  std::map<OutcomeHistory, Operator> ops;

  const Operator& op(const OutcomeHistory& history) const {
    auto it = ops.find(history);
    if (it == ops.end()) throw ValidationError("missing branch operator for an outcome history");
    return it->second;
  }
};

struct AlternatingProtocol {
  std::size_t dim_a = 1;
  std::size_t dim_b = 1;
  std::vector<InstrumentRound> rounds;  // A, B, A, B, ...

  std::size_t pairs() const { return rounds.size() / 2; }
  static Side side_of_round(std::size_t r0) { return r0 % 2 == 0 ? Side::A : Side::B; }
};

namespace detail {

// All outcome tuples over the first `count` rounds, mixed radix, last fastest.
inline std::vector<OutcomeHistory> histories(const AlternatingProtocol& p, std::size_t count) {
  std::vector<OutcomeHistory> out{{}};
  for (std::size_t r = 0; r < count; ++r) {
    std::vector<OutcomeHistory> next;
    for (const auto& h : out)
      for (std::size_t i = 0; i < p.rounds[r].branches; ++i) {
        auto e = h;
        e.push_back(i);
        next.push_back(std::move(e));
      }
    out = std::move(next);
  }
  return out;
}

inline std::size_t record_product(const AlternatingProtocol& p, std::size_t count) {
  std::size_t d = 1;
  for (std::size_t r = 0; r < count; ++r) d *= p.rounds[r].branches;
  return d;
}

}  // namespace detail

// Checks the dimension chain and, for every earlier history, the
// completeness relation sum_i M_(h,i)^dag M_(h,i) = I.
inline void validate_protocol(const AlternatingProtocol& p) {
  if (p.rounds.empty() || p.rounds.size() % 2 != 0) throw ValidationError("protocol needs an even, nonzero number of rounds");
  std::size_t cur[2] = {p.dim_a, p.dim_b};
  for (std::size_t r = 0; r < p.rounds.size(); ++r) {
    const auto& round = p.rounds[r];
    const auto side = r % 2;
    if (round.branches == 0) throw ValidationError("round " + std::to_string(r + 1) + " has no branches");
    if (round.in_dim != cur[side]) throw ValidationError("dimension chain mismatch at round " + std::to_string(r + 1));
    for (const auto& h : detail::histories(p, r)) {
      Operator sum = Operator::Zero(static_cast<Eigen::Index>(round.in_dim), static_cast<Eigen::Index>(round.in_dim));
      for (std::size_t i = 0; i < round.branches; ++i) {
        auto key = h;
        key.push_back(i);
        const auto& m = round.op(key);
        if (static_cast<std::size_t>(m.rows()) != round.out_dim || static_cast<std::size_t>(m.cols()) != round.in_dim)
          throw ValidationError("dimension chain mismatch at round " + std::to_string(r + 1));
        sum += m.adjoint() * m;
      }
      if (max_abs(sum - identity(round.in_dim)) > tol::kCompare)
        throw ValidationError("completeness violated at round " + std::to_string(r + 1));
    }
    cur[side] = round.out_dim;
  }
}

struct KrausPair {
  Operator a;  // M^(2n-1)_{i_{2n-1}} ... M^(1)_{i_1}
  Operator b;  // N^(2n)_{i_{2n}} ... N^(2)_{i_2}
};

// K_i = (product of A ops) (x) (product of B ops) for a full outcome tuple.
inline KrausPair kraus_for(const AlternatingProtocol& p, const OutcomeHistory& outcomes) {
  Operator ka = identity(p.dim_a), kb = identity(p.dim_b);
  OutcomeHistory prefix;
  for (std::size_t r = 0; r < p.rounds.size(); ++r) {
    prefix.push_back(outcomes[r]);
    const auto& m = p.rounds[r].op(prefix);
    if (r % 2 == 0) ka = (m * ka).eval();
    else kb = (m * kb).eval();
  }
  return {std::move(ka), std::move(kb)};
}

// Lambda(rho) = sum_i K_i rho K_i^dag. The state must have one system factor
// per side; output factors keep their labels with the final dimensions.
inline BipartiteState apply_direct(const AlternatingProtocol& p, const BipartiteState& state) {
  validate_protocol(p);
  const auto& s = state.space();
  if (s.size() != 2 || s[0].side != Side::A || s[1].side != Side::B || s[0].dim != p.dim_a || s[1].dim != p.dim_b)
    throw ValidationError("dimension chain mismatch: protocol expects a bipartite " + std::to_string(p.dim_a) + "x" +
                          std::to_string(p.dim_b) + " state");
  std::size_t out_a = p.dim_a, out_b = p.dim_b;
  for (std::size_t r = 0; r < p.rounds.size(); ++r) (r % 2 == 0 ? out_a : out_b) = p.rounds[r].out_dim;

  Operator out = Operator::Zero(static_cast<Eigen::Index>(out_a * out_b), static_cast<Eigen::Index>(out_a * out_b));
  for (const auto& outcomes : detail::histories(p, p.rounds.size())) {
    const auto k = kraus_for(p, outcomes);
    if (max_abs(k.a) == 0.0 || max_abs(k.b) == 0.0) continue;
    out += conjugate_right(conjugate_left(state.matrix(), k.a, p.dim_a), k.b, p.dim_b);
  }
  FactorSpace space({{s[0].label, out_a, Side::A, false}, {s[1].label, out_b, Side::B, false}});
  return validate_state(std::move(out), std::move(space));
}

struct ComposedMap {
  std::vector<OneWayRound> rounds;
  FactorSpace total_space;
};

inline std::string record_label(Side side, std::size_t round1) {
  return std::string(side_name(side)) + "'" + std::to_string(round1);
}

// The one-way rounds Lambda_1 ... Lambda_2n. Round r's sender applies, for
// record value j, F_j = sum_h P_h (x) M_(h,j) (A) or N_(h,j) (x) Q_h (B),
// where h ranges over the earlier outcomes and P_h, Q_h are the projectors
// onto the sender's copies of those records.
inline ComposedMap build_composed(const AlternatingProtocol& p, const std::string& a_label = "A",
                                  const std::string& b_label = "B") {
  validate_protocol(p);
  ComposedMap out;
  std::size_t sys[2] = {p.dim_a, p.dim_b};
  std::vector<Factor> factors{{a_label, p.dim_a, Side::A, false}, {b_label, p.dim_b, Side::B, false}};
  for (std::size_t r = 0; r < p.rounds.size(); ++r) {
    const auto& round = p.rounds[r];
    const Side side = AlternatingProtocol::side_of_round(r);
    const std::size_t rec = detail::record_product(p, r);
    const std::size_t s = r % 2;

    OneWayRound ow;
    ow.direction = side == Side::A ? Direction::a_to_b : Direction::b_to_a;
    ow.sender_record = record_label(side, r + 1);
    ow.receiver_record = record_label(side == Side::A ? Side::B : Side::A, r + 1);
    if (round.out_dim != round.in_dim) ow.sender_output_dim = round.out_dim;

    const auto hist = detail::histories(p, r);
    for (std::size_t j = 0; j < round.branches; ++j) {
      Operator f = Operator::Zero(static_cast<Eigen::Index>(rec * round.out_dim), static_cast<Eigen::Index>(rec * round.in_dim));
      for (std::size_t hi = 0; hi < hist.size(); ++hi) {
        auto key = hist[hi];
        key.push_back(j);
        const Operator control = projector(rec, hi);
        f += side == Side::A ? tensor(control, round.op(key)) : tensor(round.op(key), control);
      }
      ow.branches.push_back({std::move(f), std::to_string(j)});
    }

    // Track the space to enforce the dimension cap.
    sys[s] = round.out_dim;
    std::vector<Factor> next;
    std::size_t a_recs = 0;
    for (const auto& fct : factors)
      if (fct.side == Side::A && fct.record) ++a_recs;
    for (const auto& fct : factors) {
      Factor g = fct;
      if (!g.record) g.dim = sys[g.side == Side::A ? 0 : 1];
      next.push_back(g);
    }
    next.insert(next.begin() + static_cast<std::ptrdiff_t>(a_recs), Factor{record_label(Side::A, r + 1), round.branches, Side::A, true});
    next.push_back(Factor{record_label(Side::B, r + 1), round.branches, Side::B, true});
    factors = std::move(next);
    std::size_t total = 1;
    for (const auto& fct : factors) total *= fct.dim;
    if (total > kComposedDimCap) throw ValidationError("ancilla dimension overflow: composed space exceeds 4096");

    out.rounds.push_back(std::move(ow));
  }
  out.total_space = FactorSpace(std::move(factors));
  return out;
}

// Phi(rho) = Lambda_2n o ... o Lambda_1 (rho).
inline BipartiteState apply_composed(const ComposedMap& map, const BipartiteState& state) {
  BipartiteState cur = state;
  for (const auto& r : map.rounds) cur = apply_one_way(cur, r);
  return cur;
}

// Trace distance between Phi(rho) with all records traced out and Lambda(rho).
inline double verify_equivalence(const AlternatingProtocol& p, const BipartiteState& state) {
  const auto& s = state.space();
  if (s.size() != 2) throw ValidationError("protocol expects a bipartite state with one factor per side");
  const auto composed = build_composed(p, s[0].label, s[1].label);
  const auto phi = apply_composed(composed, state);
  const auto reduced = trace_out_all_records(phi);
  const auto direct = apply_direct(p, state);
  return trace_distance(reduced.matrix(), direct.matrix());
}

}  // namespace bellforge
