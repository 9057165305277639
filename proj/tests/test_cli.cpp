#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "bellforge/cli.hpp"
#include "support.hpp"

using namespace bellforge;
using testkit::Rng;
namespace fs = std::filesystem;

namespace {

class Workspace {
 public:
  Workspace() {
    dir_ = fs::temp_directory_path() / ("bellforge-test-" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "-" +
                                        ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  ~Workspace() { fs::remove_all(dir_); }

  std::string write(const std::string& name, const std::string& text) const {
    const auto path = (dir_ / name).string();
    std::ofstream(path) << text;
    return path;
  }
  std::string write(const std::string& name, const io::Json& j) const { return write(name, j.dump(2)); }

 private:
  fs::path dir_;
};

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

BipartiteState random_recorded_state(Rng& rng) {
  std::uniform_int_distribution<std::size_t> d(1, 3);
  std::vector<Factor> f{{"R", d(rng), Side::A, true}, {"A", d(rng), Side::A, false}, {"B", d(rng), Side::B, false}};
  if (rng() % 2) f.push_back({"S", 2, Side::B, true});
  FactorSpace space(f);
  return validate_state(testkit::random_density(space.dim(), rng), space);
}

Behavior random_behavior(Rng& rng) {
  std::uniform_int_distribution<std::size_t> n(1, 3);
  std::vector<std::size_t> ma(n(rng)), nb(n(rng));
  for (auto& m : ma) m = n(rng);
  for (auto& x : nb) x = n(rng);
  Scenario s(ma, nb);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> p(s.entries());
  for (std::size_t k = 0; k < ma.size(); ++k)
    for (std::size_t l = 0; l < nb.size(); ++l) {
      double total = 0.0;
      for (std::size_t i = 0; i < ma[k]; ++i)
        for (std::size_t j = 0; j < nb[l]; ++j) total += (p[s.index(k, l, i, j)] = u(rng));
      for (std::size_t i = 0; i < ma[k]; ++i)
        for (std::size_t j = 0; j < nb[l]; ++j) p[s.index(k, l, i, j)] /= total;
    }
  return Behavior(s, p);
}

}  // namespace

// ---------------------------------------------------------------------------
// Serialization

TEST(Json, StateRoundTripIsBitExact) {
  Rng rng(51);
  for (int t = 0; t < 50; ++t) {
    const auto st = random_recorded_state(rng);
    const auto text = io::to_json(st).dump();
    const auto back = io::state_from_json(io::Json::parse(text));
    EXPECT_EQ(back.space(), st.space());
    EXPECT_TRUE(back.matrix() == st.matrix());
    EXPECT_EQ(io::to_json(back).dump(), text);
  }
}

TEST(Json, FilterSettingsBehaviorProtocolRoundTrips) {
  Rng rng(52);
  for (int t = 0; t < 50; ++t) {
    Operator g = testkit::gaussian(3, 3, rng);
    g /= std::sqrt(max_eigenvalue(g.adjoint() * g)) * 1.01;
    const LocalFilter f(t % 2 ? Side::A : Side::B, g);
    const auto f2 = io::filter_from_json(io::Json::parse(io::to_json(f).dump()));
    EXPECT_EQ(f2.party(), f.party());
    EXPECT_TRUE(f2.matrix() == f.matrix());

    const auto s = testkit::random_settings(2, 3, rng);
    const auto s2 = io::settings_from_json(io::Json::parse(io::to_json(s).dump()));
    EXPECT_TRUE(s2.a1.matrix() == s.a1.matrix() && s2.a2.matrix() == s.a2.matrix());
    EXPECT_TRUE(s2.b1.matrix() == s.b1.matrix() && s2.b2.matrix() == s.b2.matrix());

    const auto b = random_behavior(rng);
    const auto b2 = io::behavior_from_json(io::Json::parse(io::to_json(b).dump()));
    EXPECT_EQ(b2.scenario(), b.scenario());
    EXPECT_EQ(b2.probs(), b.probs());

    const auto p = testkit::random_protocol(1, 2, 2 + t % 2, rng);
    const auto text = io::to_json(p).dump();
    const auto p2 = io::protocol_from_json(io::Json::parse(text));
    EXPECT_EQ(io::to_json(p2).dump(), text);
  }
}

TEST(Json, BehaviorKeysAreOneBased) {
  const auto j = io::to_json(uniform_behavior(Scenario::binary()));
  EXPECT_TRUE(j["probs"].contains("1,1"));
  EXPECT_TRUE(j["probs"].contains("2,2"));
  EXPECT_FALSE(j["probs"].contains("0,0"));
  EXPECT_EQ(j["schema"], "bellforge/1");
}

TEST(Json, ParseAndValidationErrors) {
  auto j = io::to_json(example_state(1.0 / 18.0));
  j["schema"] = "other/2";
  EXPECT_THROW(io::state_from_json(j), ParseError);
  j = io::to_json(example_state(1.0 / 18.0));
  j["matrix"]["data"][0] = {1.0};
  EXPECT_THROW(io::state_from_json(j), ParseError);
  j = io::to_json(example_state(1.0 / 18.0));
  j["matrix"]["rows"] = 8;
  EXPECT_THROW(io::state_from_json(j), ParseError);
  j = io::to_json(example_state(1.0 / 18.0));
  j["partition"]["A"] = io::Json::array({"A", "B"});
  EXPECT_THROW(io::state_from_json(j), ValidationError);
  EXPECT_THROW(io::operator_from_json(io::Json{{"rows", 1}, {"cols", 1}, {"data", {{"x", 0}}}}), ParseError);
}

// ---------------------------------------------------------------------------
// Command line

TEST(Cli, UnknownCommandAndMissingOptions) {
  EXPECT_EQ(run({"frobnicate"}).code, 2);
  EXPECT_NE(run({"frobnicate"}).err.find("unknown command"), std::string::npos);
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"chsh", "--state"}).code, 2);
  EXPECT_EQ(run({"--help"}).code, 0);
}

TEST(Cli, FileErrors) {
  Workspace ws;
  EXPECT_EQ(run({"membership", "--behavior", "/nonexistent/b.json"}).code, 2);
  const auto bad = ws.write("bad.json", std::string("{ not json"));
  EXPECT_EQ(run({"membership", "--behavior", bad}).code, 2);
  Operator neg = Operator::Zero(4, 4);
  neg(0, 0) = 1.5;
  neg(1, 1) = -0.5;
  auto j = io::to_json(validate_state(identity(4) / 4.0, FactorSpace::bipartite(2, 2)));
  j["matrix"] = io::to_json(neg);
  const auto st = ws.write("neg.json", j);
  const auto settings = ws.write("s.json", io::to_json(ChshSettings{DichotomicObservable(pauli::z()), DichotomicObservable(pauli::x()),
                                                                    DichotomicObservable(pauli::z()), DichotomicObservable(pauli::x())}));
  const auto r = run({"chsh", "--state", st, "--settings", settings});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("not PSD"), std::string::npos);
}

TEST(Cli, FilterCommand) {
  Workspace ws;
  const auto st = ws.write("rho.json", io::to_json(example_state(1.0 / 18.0)));
  const auto ma = ws.write("m.json", io::to_json(example_filter(Side::A)));
  const auto nb = ws.write("n.json", io::to_json(example_filter(Side::B)));
  const auto r = run({"filter", "--state", st, "--ma", ma, "--nb", nb, "--json"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto direct = apply_filters(example_state(1.0 / 18.0), example_filter(Side::A), example_filter(Side::B));
  EXPECT_EQ(r.out, io::Json({{"schema", io::kSchema}, {"probability", direct.probability}, {"state", io::to_json(direct.state)}}).dump(2) + "\n");
  EXPECT_NE(run({"filter", "--state", st, "--ma", ma, "--nb", nb}).out.find("probability: "), std::string::npos);
  // Swapped parties.
  EXPECT_EQ(run({"filter", "--state", st, "--ma", nb, "--nb", ma}).code, 1);

  // A filter annihilating the state.
  const auto dead = ws.write("dead.json", io::to_json(LocalFilter(Side::A, Operator::Zero(3, 3))));
  const auto z = run({"filter", "--state", st, "--ma", dead, "--nb", nb});
  EXPECT_EQ(z.code, 1);
  EXPECT_NE(z.err.find("zero success probability"), std::string::npos);
}

TEST(Cli, RevealCommand) {
  Workspace ws;
  const auto st = ws.write("rho.json", io::to_json(example_state(1.0 / 18.0)));
  const auto ma = ws.write("m.json", io::to_json(example_filter(Side::A)));
  const auto nb = ws.write("n.json", io::to_json(example_filter(Side::B)));
  const auto r = run({"reveal", "--state", st, "--ma", ma, "--nb", nb, "--json"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto direct = reveal_two_bits(example_state(1.0 / 18.0), example_filter(Side::A), example_filter(Side::B));
  EXPECT_EQ(r.out, io::Json({{"schema", io::kSchema}, {"transcript", io::to_json(direct.transcript)}, {"state", io::to_json(direct.state)}})
                           .dump(2) +
                       "\n");
  const auto one = run({"reveal", "--state", st, "--ma", ma, "--one-bit"});
  ASSERT_EQ(one.code, 0) << one.err;
  EXPECT_NE(one.out.find("bits A->B: 1\nbits B->A: 0"), std::string::npos);
  EXPECT_EQ(run({"reveal", "--state", st, "--ma", ma}).code, 2);
}

TEST(Cli, MembershipCommand) {
  Workspace ws;
  const auto noise = ws.write("white_noise.json", io::to_json(uniform_behavior(Scenario::binary())));
  const auto r = run({"membership", "--behavior", noise});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.rfind("INSIDE\n", 0), 0u);
  const auto j = run({"membership", "--behavior", noise, "--json"});
  const auto parsed = io::Json::parse(j.out);
  EXPECT_TRUE(parsed["inside"].get<bool>());
  for (double w : parsed["weights"].get<std::vector<double>>()) EXPECT_NEAR(w, 1.0 / 16.0, 1e-12);

  const auto pr = ws.write("pr.json", io::to_json(testkit::from_table(testkit::pr_table(0, 0, 0))));
  const auto out = run({"membership", "--behavior", pr, "--json"});
  ASSERT_EQ(out.code, 0);
  auto direct = io::to_json(lp_membership(testkit::from_table(testkit::pr_table(0, 0, 0))));
  direct["schema"] = io::kSchema;
  EXPECT_EQ(out.out, direct.dump(2) + "\n");
  EXPECT_NE(run({"membership", "--behavior", pr}).out.find("OUTSIDE"), std::string::npos);
}

TEST(Cli, ChshCommand) {
  Workspace ws;
  const auto ex = build_example(1.0 / 18.0);
  const auto st = ws.write("rho2.json", io::to_json(ex.rho2));
  const auto s = ws.write("s.json", io::to_json(ex.settings));
  const auto r = run({"chsh", "--state", st, "--settings", s, "--json"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NEAR(io::Json::parse(r.out)["chsh"].get<double>(), closed_form_chsh(1.0 / 18.0), 1e-9);
  const auto rho = ws.write("rho.json", io::to_json(ex.rho));
  EXPECT_EQ(run({"chsh", "--state", rho, "--settings", s}).code, 1);
}

TEST(Cli, ReportCommand) {
  const auto r = run({"paper", "--p", "0.05555555555"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream lines(r.out);
  std::string header, row;
  std::getline(lines, header);
  std::getline(lines, row);
  EXPECT_EQ(header, cli::report_table_header());
  EXPECT_NE(row.find("2.04602"), std::string::npos);
  EXPECT_NE(row.find("NONLOCAL"), std::string::npos);

  const auto grid = run({"paper", "--p", "0.05", "--grid", "4", "--json"});
  ASSERT_EQ(grid.code, 0);
  const auto reports = io::Json::parse(grid.out)["reports"];
  ASSERT_EQ(reports.size(), 4u);
  EXPECT_EQ(io::to_json(example_report(0.05)).dump(), reports[3].dump());
  EXPECT_EQ(run({"paper", "--p", "0.2"}).code, 1);
  EXPECT_EQ(run({"paper", "--p", "abc"}).code, 2);
}

TEST(Cli, DecomposeCheckCommand) {
  Workspace ws;
  Rng rng(53);
  const auto p = testkit::random_protocol(1, 2, 2, rng);
  const auto st = testkit::random_state(2, 2, rng);
  const auto pf = ws.write("protocol.json", io::to_json(p));
  const auto sf = ws.write("state.json", io::to_json(st));
  const auto r = run({"decompose-check", "--protocol", pf, "--state", sf, "--json"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, io::Json({{"schema", io::kSchema}, {"trace_distance", verify_equivalence(p, st)}}).dump(2) + "\n");
  EXPECT_LE(io::Json::parse(r.out)["trace_distance"].get<double>(), 1e-10);

  auto broken = io::to_json(p);
  broken["rounds"][0]["side"] = "B";
  EXPECT_EQ(run({"decompose-check", "--protocol", ws.write("broken.json", broken), "--state", sf}).code, 1);
}
