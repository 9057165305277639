#pragma once

// Command-line front end. run() is the whole program minus main(), so tests
// can drive it with captured streams.
//
// Exit codes: 0 success, 1 validation error, 2 I/O / parse error or unknown
// command.

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "bellforge/json_io.hpp"

namespace bellforge::cli {

inline constexpr int kOk = 0;
inline constexpr int kValidation = 1;
inline constexpr int kParse = 2;

// Column order of the report table printed by `paper`.
inline const std::vector<std::string> kReportColumns = {"p",      "q",      "filter_prob", "chsh",         "closed_form", "abs_diff",
                                                       "verdict", "margin", "roundtrip_td", "bits_ab",     "bits_ba"};

inline std::string report_table_header() {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-14s %-14s %-14s %-14s %-14s %-10s %-9s %-12s %-12s %-7s %s", "p", "q", "filter_prob",
                "chsh", "closed_form", "abs_diff", "verdict", "margin", "roundtrip_td", "bits_ab", "bits_ba");
  return buf;
}

inline std::string report_table_row(const ExampleReport& r) {
  const double margin = r.witness ? r.witness->margin : 0.0;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-14.10f %-14.10f %-14.10f %-14.10f %-14.10f %-10.3e %-9s %-12.4e %-12.3e %-7zu %zu", r.p,
                r.q, r.filter_probability, r.chsh, r.chsh_closed_form, r.chsh_abs_diff, r.nonlocal() ? "NONLOCAL" : "LOCAL",
                margin, r.roundtrip_trace_distance, r.bits_a_to_b, r.bits_b_to_a);
  return buf;
}

// p, 2p/N ... p for --grid N, or just p.
inline std::vector<double> report_grid(double p, std::size_t n) {
  std::vector<double> out;
  for (std::size_t i = 1; i <= n; ++i) out.push_back(p * static_cast<double>(i) / static_cast<double>(n));
  return out;
}

namespace detail {

inline LocalFilter load_filter(const std::string& path, Side expected, const char* flag) {
  auto f = io::filter_from_json(io::read_json_file(path));
  if (f.party() != expected)
    throw ValidationError(std::string(flag) + " must be a filter for party " + side_name(expected));
  return f;
}

inline void print_state_text(std::ostream& out, const BipartiteState& s) {
  out << "factors:";
  for (const auto& f : s.space().factors()) out << ' ' << f.label << '[' << f.dim << ',' << side_name(f.side) << (f.record ? ",record" : "") << ']';
  out << '\n' << "state: " << io::to_json(s).dump() << '\n';
}

}  // namespace detail

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"bellforge: hidden Bell nonlocality toolkit"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  std::string state_path, ma_path, nb_path, behavior_path, settings_path, protocol_path;
  bool json = false, one_bit = false;
  double p_value = kMaxExampleP;
  std::size_t grid = 1;

  auto* filter = app.add_subcommand("filter", "apply local filters M (x) N to a state");
  filter->add_option("--state", state_path, "state JSON")->required();
  filter->add_option("--ma", ma_path, "A-side filter JSON")->required();
  filter->add_option("--nb", nb_path, "B-side filter JSON")->required();
  filter->add_flag("--json", json, "machine-readable output");

  auto* reveal = app.add_subcommand("reveal", "run the LOCC filter-revealing protocol");
  reveal->add_option("--state", state_path, "state JSON")->required();
  reveal->add_option("--ma", ma_path, "A-side filter JSON")->required();
  reveal->add_option("--nb", nb_path, "B-side filter JSON (not used with --one-bit)");
  reveal->add_flag("--one-bit", one_bit, "one bit A->B, no B filter");
  reveal->add_flag("--json", json, "machine-readable output");

  auto* membership = app.add_subcommand("membership", "local polytope membership test");
  membership->add_option("--behavior", behavior_path, "behavior JSON")->required();
  membership->add_flag("--json", json, "machine-readable output");

  auto* chsh = app.add_subcommand("chsh", "CHSH value of a state");
  chsh->add_option("--state", state_path, "state JSON")->required();
  chsh->add_option("--settings", settings_path, "settings JSON")->required();
  chsh->add_flag("--json", json, "machine-readable output");

  auto* paper = app.add_subcommand("paper", "end-to-end report for the qutrit example");
  paper->add_option("--p", p_value, "mixing weight in (0, 1/18]")->required();
  paper->add_option("--grid", grid, "rows p*i/N for i = 1..N")->check(CLI::PositiveNumber);
  paper->add_flag("--json", json, "machine-readable output");

  auto* decompose = app.add_subcommand("decompose-check", "compare a protocol with its one-way decomposition");
  decompose->add_option("--protocol", protocol_path, "protocol JSON")->required();
  decompose->add_option("--state", state_path, "state JSON")->required();
  decompose->add_flag("--json", json, "machine-readable output");

  if (!args.empty() && !args.front().empty() && args.front().front() != '-') {
    const auto subs = app.get_subcommands([](const CLI::App*) { return true; });
    const bool known = std::any_of(subs.begin(), subs.end(), [&](const CLI::App* s) { return s->get_name() == args.front(); });
    if (!known) {
      err << "error: unknown command '" << args.front() << "'\n";
      return kParse;
    }
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kParse;
  }

  const WarningHandler saved = warning_handler();
  set_warning_handler([&err](const std::string& msg) { err << "warning: " << msg << '\n'; });
  struct Restore {
    const WarningHandler& h;
    ~Restore() { set_warning_handler(h); }
  } restore{saved};

  try {
    if (filter->parsed()) {
      const auto state = io::load_state(state_path);
      const auto m = detail::load_filter(ma_path, Side::A, "--ma");
      const auto n = detail::load_filter(nb_path, Side::B, "--nb");
      const auto res = apply_filters(state, m, n);
      if (json) {
        out << io::Json{{"schema", io::kSchema}, {"probability", res.probability}, {"state", io::to_json(res.state)}}.dump(2) << '\n';
      } else {
        out << "probability: " << io::Json(res.probability).dump() << '\n';
        detail::print_state_text(out, res.state);
      }
    } else if (reveal->parsed()) {
      if (!one_bit && nb_path.empty()) throw ParseError("--nb is required unless --one-bit is given");
      const auto state = io::load_state(state_path);
      const auto m = detail::load_filter(ma_path, Side::A, "--ma");
      const auto res = one_bit ? reveal_one_bit(state, m) : reveal_two_bits(state, m, detail::load_filter(nb_path, Side::B, "--nb"));
      if (json) {
        out << io::Json{{"schema", io::kSchema}, {"transcript", io::to_json(res.transcript)}, {"state", io::to_json(res.state)}}.dump(2)
            << '\n';
      } else {
        out << "bits A->B: " << res.transcript.bits_a_to_b << '\n' << "bits B->A: " << res.transcript.bits_b_to_a << '\n';
        detail::print_state_text(out, res.state);
      }
    } else if (membership->parsed()) {
      const auto b = io::behavior_from_json(io::read_json_file(behavior_path));
      const auto res = lp_membership(b);
      if (json) {
        auto j = io::to_json(res);
        j["schema"] = io::kSchema;
        out << j.dump(2) << '\n';
      } else {
        out << (res.inside ? "INSIDE" : "OUTSIDE") << '\n';
        if (res.weights) out << "weights: " << io::Json(*res.weights).dump() << '\n';
        if (res.certificate) {
          out << "certificate coefficients: " << io::Json(res.certificate->coefficients).dump() << '\n'
              << "certificate offset: " << io::Json(res.certificate->offset).dump() << '\n'
              << "margin: " << io::Json(res.margin).dump() << '\n';
        }
      }
    } else if (chsh->parsed()) {
      const auto state = io::load_state(state_path);
      const auto settings = io::settings_from_json(io::read_json_file(settings_path));
      const double v = chsh_value(state, settings);
      if (json) out << io::Json{{"schema", io::kSchema}, {"chsh", v}}.dump(2) << '\n';
      else out << "chsh: " << io::Json(v).dump() << '\n';
    } else if (paper->parsed()) {
      check_example_p(p_value);
      std::vector<ExampleReport> reports;
      for (double p : report_grid(p_value, grid)) reports.push_back(example_report(p));
      if (json) {
        io::Json rows = io::Json::array();
        for (const auto& r : reports) rows.push_back(io::to_json(r));
        out << io::Json{{"schema", io::kSchema}, {"reports", rows}}.dump(2) << '\n';
      } else {
        out << report_table_header() << '\n';
        for (const auto& r : reports) out << report_table_row(r) << '\n';
      }
    } else if (decompose->parsed()) {
      const auto protocol = io::protocol_from_json(io::read_json_file(protocol_path));
      const auto state = io::load_state(state_path);
      const double d = verify_equivalence(protocol, state);
      if (json) out << io::Json{{"schema", io::kSchema}, {"trace_distance", d}}.dump(2) << '\n';
      else out << "trace distance: " << io::Json(d).dump() << '\n';
    }
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kParse;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << '\n';
    return kValidation;
  }
  return kOk;
}

}  // namespace bellforge::cli
