#pragma once

// JSON encodings ("schema": "bellforge/1"). Complex numbers are [re, im]
// pairs, operators are row-major. Setting/outcome/history indices in files
// are 1-based.

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "bellforge/decomposition.hpp"
#include "bellforge/example.hpp"

namespace bellforge::io {

using Json = nlohmann::json;

inline constexpr const char* kSchema = "bellforge/1";

namespace detail {

template <typename T>
T get(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw ParseError(std::string("missing key '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw ParseError(std::string("bad value for '") + key + "': " + e.what());
  }
}

inline void check_schema(const Json& j) {
  if (!j.is_object() || !j.contains("schema") || j["schema"] != kSchema)
    throw ParseError(std::string("expected \"schema\": \"") + kSchema + "\"");
}

inline Side parse_side(const std::string& s) {
  if (s == "A") return Side::A;
  if (s == "B") return Side::B;
  throw ParseError("party must be \"A\" or \"B\"");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Files

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw ParseError("malformed JSON in '" + path + "': " + e.what());
  }
}

inline void write_json_file(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Operators

inline Json to_json(const Operator& m) {
  Json data = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back({m(r, c).real(), m(r, c).imag()});
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

inline Operator operator_from_json(const Json& j) {
  const auto rows = detail::get<long long>(j, "rows");
  const auto cols = detail::get<long long>(j, "cols");
  if (rows <= 0 || cols <= 0) throw ParseError("operator dimensions must be positive");
  const auto& data = j.at("data");
  if (!data.is_array() || data.size() != static_cast<std::size_t>(rows * cols))
    throw ParseError("operator data length must equal rows*cols");
  Operator m(rows, cols);
  std::size_t n = 0;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c, ++n) {
      const auto& e = data[n];
      if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
        throw ParseError("operator entries must be [re, im] pairs");
      const double re = e[0].get<double>(), im = e[1].get<double>();
      if (!std::isfinite(re) || !std::isfinite(im)) throw ParseError("operator entries must be finite");
      m(r, c) = Complex(re, im);
    }
  return m;
}

// ---------------------------------------------------------------------------
// Spaces and states

inline Json space_to_json(const FactorSpace& s) {
  Json a = Json::array(), b = Json::array(), rec = Json::array();
  for (const auto& f : s.factors()) {
    (f.side == Side::A ? a : b).push_back(f.label);
    if (f.record) rec.push_back(f.label);
  }
  return {{"dims", s.dims()}, {"labels", s.labels()}, {"partition", {{"A", a}, {"B", b}}}, {"records", rec}};
}

inline FactorSpace space_from_json(const Json& j) {
  const auto dims = detail::get<std::vector<std::size_t>>(j, "dims");
  const auto labels = detail::get<std::vector<std::string>>(j, "labels");
  if (dims.size() != labels.size()) throw ParseError("dims and labels differ in length");
  const auto& part = j.contains("partition") ? j.at("partition") : throw ParseError("missing key 'partition'");
  const auto a = detail::get<std::vector<std::string>>(part, "A");
  const auto b = detail::get<std::vector<std::string>>(part, "B");
  std::set<std::string> as(a.begin(), a.end()), bs(b.begin(), b.end());
  std::set<std::string> rec;
  if (j.contains("records")) {
    const auto r = detail::get<std::vector<std::string>>(j, "records");
    rec.insert(r.begin(), r.end());
  }
  std::vector<Factor> factors;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    const bool in_a = as.count(labels[i]) > 0, in_b = bs.count(labels[i]) > 0;
    if (in_a == in_b) throw ValidationError("label '" + labels[i] + "' must be in exactly one partition side");
    factors.push_back({labels[i], dims[i], in_a ? Side::A : Side::B, rec.count(labels[i]) > 0});
  }
  if (as.size() + bs.size() != labels.size()) throw ValidationError("partition names unknown labels");
  return FactorSpace(std::move(factors));
}

inline Json to_json(const BipartiteState& s) {
  Json j = space_to_json(s.space());
  j["schema"] = kSchema;
  j["matrix"] = to_json(s.matrix());
  return j;
}

inline BipartiteState state_from_json(const Json& j) {
  detail::check_schema(j);
  auto space = space_from_json(j);
  if (!j.contains("matrix")) throw ParseError("missing key 'matrix'");
  return validate_state(operator_from_json(j.at("matrix")), std::move(space));
}

inline void save_state(const std::string& path, const BipartiteState& s) { write_json_file(path, to_json(s)); }
inline BipartiteState load_state(const std::string& path) { return state_from_json(read_json_file(path)); }

// ---------------------------------------------------------------------------
// Filters and settings

inline Json to_json(const LocalFilter& f) {
  return {{"schema", kSchema}, {"party", side_name(f.party())}, {"matrix", to_json(f.matrix())}};
}

inline LocalFilter filter_from_json(const Json& j) {
  detail::check_schema(j);
  const auto side = detail::parse_side(detail::get<std::string>(j, "party"));
  if (!j.contains("matrix")) throw ParseError("missing key 'matrix'");
  return LocalFilter(side, operator_from_json(j.at("matrix")));
}

inline Json to_json(const ChshSettings& s) {
  return {{"schema", kSchema},
          {"a1", to_json(s.a1.matrix())},
          {"a2", to_json(s.a2.matrix())},
          {"b1", to_json(s.b1.matrix())},
          {"b2", to_json(s.b2.matrix())}};
}

inline ChshSettings settings_from_json(const Json& j) {
  detail::check_schema(j);
  auto obs = [&](const char* key) {
    if (!j.contains(key)) throw ParseError(std::string("missing key '") + key + "'");
    return DichotomicObservable(operator_from_json(j.at(key)));
  };
  return {obs("a1"), obs("a2"), obs("b1"), obs("b2")};
}

// ---------------------------------------------------------------------------
// Behaviors

inline std::string block_key(std::size_t k, std::size_t l) { return std::to_string(k + 1) + "," + std::to_string(l + 1); }

inline Json to_json(const Behavior& b) {
  const auto& s = b.scenario();
  Json probs = Json::object();
  for (std::size_t k = 0; k < s.settings_a(); ++k)
    for (std::size_t l = 0; l < s.settings_b(); ++l) {
      Json rows = Json::array();
      for (std::size_t i = 0; i < s.outcomes_a()[k]; ++i) {
        Json row = Json::array();
        for (std::size_t j = 0; j < s.outcomes_b()[l]; ++j) row.push_back(b(k, l, i, j));
        rows.push_back(std::move(row));
      }
      probs[block_key(k, l)] = std::move(rows);
    }
  return {{"schema", kSchema}, {"mA", s.outcomes_a()}, {"nB", s.outcomes_b()}, {"probs", std::move(probs)}};
}

inline Behavior behavior_from_json(const Json& j) {
  detail::check_schema(j);
  Scenario s(detail::get<std::vector<std::size_t>>(j, "mA"), detail::get<std::vector<std::size_t>>(j, "nB"));
  if (!j.contains("probs") || !j.at("probs").is_object()) throw ParseError("missing object 'probs'");
  const auto& probs = j.at("probs");
  if (probs.size() != s.settings_a() * s.settings_b()) throw ParseError("probs must hold one block per setting pair");
  std::vector<double> p(s.entries());
  for (std::size_t k = 0; k < s.settings_a(); ++k)
    for (std::size_t l = 0; l < s.settings_b(); ++l) {
      const auto key = block_key(k, l);
      if (!probs.contains(key)) throw ParseError("missing block '" + key + "'");
      const auto rows = detail::get<std::vector<std::vector<double>>>(probs, key.c_str());
      if (rows.size() != s.outcomes_a()[k]) throw ParseError("block '" + key + "' has wrong row count");
      for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != s.outcomes_b()[l]) throw ParseError("block '" + key + "' has wrong column count");
        for (std::size_t jj = 0; jj < rows[i].size(); ++jj) p[s.index(k, l, i, jj)] = rows[i][jj];
      }
    }
  return Behavior(std::move(s), std::move(p));
}

inline Json to_json(const DeterministicStrategy& st) {
  Json a = Json::array(), b = Json::array();
  for (auto r : st.a) a.push_back(r + 1);
  for (auto s : st.b) b.push_back(s + 1);
  return {{"r", a}, {"s", b}};
}

inline Json to_json(const MembershipResult& r) {
  Json j = {{"inside", r.inside}};
  if (r.weights) j["weights"] = *r.weights;
  if (r.certificate) {
    j["certificate"] = {{"coefficients", r.certificate->coefficients}, {"offset", r.certificate->offset}};
    j["margin"] = r.margin;
  }
  return j;
}

inline Json to_json(const ViolationResult& v) {
  return {{"coefficients", v.inequality.coefficients}, {"offset", v.inequality.offset}, {"margin", v.margin}};
}

// ---------------------------------------------------------------------------
// Protocols

inline Json to_json(const ProtocolTranscript& t) {
  Json rounds = Json::array();
  for (const auto& r : t.rounds)
    rounds.push_back({{"direction", r.direction == Direction::a_to_b ? "A->B" : "B->A"},
                      {"branches", r.branches.size()},
                      {"bits", r.bits()},
                      {"sender_record", r.sender_record},
                      {"receiver_record", r.receiver_record}});
  return {{"bits_a_to_b", t.bits_a_to_b}, {"bits_b_to_a", t.bits_b_to_a}, {"rounds", rounds},
          {"final_space", space_to_json(t.final_space)}};
}

inline Json to_json(const AlternatingProtocol& p) {
  Json rounds = Json::array();
  for (std::size_t r = 0; r < p.rounds.size(); ++r) {
    const auto& round = p.rounds[r];
    Json ops = Json::array();
    for (const auto& [hist, m] : round.ops) {
      Json h = Json::array();
      for (auto v : hist) h.push_back(v + 1);
      ops.push_back({{"history", h}, {"matrix", to_json(m)}});
    }
    rounds.push_back({{"side", side_name(AlternatingProtocol::side_of_round(r))},
                      {"branches", round.branches},
                      {"in_dim", round.in_dim},
                      {"out_dim", round.out_dim},
                      {"ops", ops}});
  }
  return {{"schema", kSchema}, {"dim_a", p.dim_a}, {"dim_b", p.dim_b}, {"rounds", rounds}};
}

inline AlternatingProtocol protocol_from_json(const Json& j) {
  detail::check_schema(j);
  AlternatingProtocol p;
  p.dim_a = detail::get<std::size_t>(j, "dim_a");
  p.dim_b = detail::get<std::size_t>(j, "dim_b");
  if (!j.contains("rounds") || !j.at("rounds").is_array()) throw ParseError("missing array 'rounds'");
  std::size_t r = 0;
  for (const auto& rj : j.at("rounds")) {
    const auto side = detail::parse_side(detail::get<std::string>(rj, "side"));
    if (side != AlternatingProtocol::side_of_round(r)) throw ValidationError("rounds must alternate A, B, A, B, ...");
    InstrumentRound round;
    round.branches = detail::get<std::size_t>(rj, "branches");
    round.in_dim = detail::get<std::size_t>(rj, "in_dim");
    round.out_dim = detail::get<std::size_t>(rj, "out_dim");
    if (!rj.contains("ops") || !rj.at("ops").is_array()) throw ParseError("missing array 'ops'");
    for (const auto& oj : rj.at("ops")) {
      auto hist = detail::get<std::vector<std::size_t>>(oj, "history");
      for (auto& v : hist) {
        if (v == 0) throw ParseError("history entries are 1-based");
        --v;
      }
      if (!oj.contains("matrix")) throw ParseError("missing key 'matrix'");
      round.ops[hist] = operator_from_json(oj.at("matrix"));
    }
    p.rounds.push_back(std::move(round));
    ++r;
  }
  return p;
}

// ---------------------------------------------------------------------------
// Report

inline Json to_json(const ExampleReport& r) {
  Json j = {{"schema", kSchema},
            {"p", r.p},
            {"q", r.q},
            {"filter_probability", r.filter_probability},
            {"filtered_fidelity", r.filtered_fidelity},
            {"chsh", r.chsh},
            {"chsh_closed_form", r.chsh_closed_form},
            {"chsh_abs_diff", r.chsh_abs_diff},
            {"forced_strategy", to_json(r.forced_strategy)},
            {"verdict", r.nonlocal() ? "NONLOCAL" : "LOCAL"},
            {"membership", to_json(r.membership)},
            {"lifted_identity_error", r.lifted_identity_error},
            {"roundtrip_trace_distance", r.roundtrip_trace_distance},
            {"block_weights", r.block_weights},
            {"bits_a_to_b", r.bits_a_to_b},
            {"bits_b_to_a", r.bits_b_to_a}};
  if (r.witness) j["witness"] = to_json(*r.witness);
  return j;
}

}  // namespace bellforge::io
