#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "netfab/netfab.hpp"

using namespace netfab;

namespace {

constexpr int kExitViolation = 1;
constexpr int kExitInput = 2;

ScenarioConfig load(const std::string& ref) {
  if (std::filesystem::is_regular_file(ref)) {
    std::ifstream in(ref);
    if (!in) throw Error(Errc::InvalidArgument, "cannot read " + ref);
    std::stringstream ss;
    ss << in.rdbuf();
    return load_scenario(ss.str());
  }
  if (auto c = bundled_scenario(ref)) return *c;
  throw Error(Errc::InvalidArgument, "'" + ref + "' is neither a file nor a bundled scenario (see `netfab scenarios`)");
}

Time seconds_arg(double s) { return static_cast<Time>(std::llround(s * 1e6)); }

void write_out(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw Error(Errc::InvalidArgument, "cannot write " + path);
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"netfab: packet-level simulator of a VLAN-segmented beamline network"};
  app.require_subcommand(1);

  std::string scenario;
  std::optional<std::uint64_t> seed;

  auto* run = app.add_subcommand("run", "run a scenario and print the metrics report");
  double until = -1;
  std::string trace_path, report_path;
  run->add_option("scenario", scenario, "scenario file or bundled name")->required();
  run->add_option("--seed", seed, "override the scenario seed");
  run->add_option("--until", until, "stop time in seconds (default: scenario duration)");
  run->add_option("--trace", trace_path, "write the event trace to FILE");
  run->add_option("--report", report_path, "write the report to FILE instead of stdout");

  auto* ver = app.add_subcommand("verify", "check an invariant; exit 1 on violation");
  std::string invariant;
  ver->add_option("scenario", scenario, "scenario file or bundled name")->required();
  ver->add_option("--invariant", invariant, "isolation | zone-policy | nat-bijection | failover | determinism")
      ->required();
  ver->add_option("--seed", seed, "override the scenario seed");

  auto* inj = app.add_subcommand("inject", "print the scenario with one more fault scheduled");
  double at = 0;
  std::string action, target, output;
  inj->add_option("scenario", scenario, "scenario file or bundled name")->required();
  inj->add_option("--at", at, "fault time in seconds")->required();
  inj->add_option("--action", action, "fail_node | fail_link | recover")->required();
  inj->add_option("--target", target, "node or link id")->required();
  inj->add_option("--output,-o", output, "write to FILE instead of stdout");

  auto* st = app.add_subcommand("status", "run to a time and print node state and affected beamlines");
  std::optional<std::string> node;
  st->add_option("scenario", scenario, "scenario file or bundled name")->required();
  st->add_option("--at", at, "query time in seconds")->required();
  st->add_option("--node", node, "limit the report to one node");

  auto* list = app.add_subcommand("scenarios", "list bundled scenarios");
  std::string show;
  list->add_option("--show", show, "print one bundled scenario in file format");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*list) {
      if (!show.empty()) {
        auto c = bundled_scenario(show);
        if (!c) throw Error(Errc::InvalidArgument, "no bundled scenario '" + show + "'");
        std::cout << serialize_scenario(*c);
        return 0;
      }
      for (const auto& s : bundled_scenarios()) std::cout << s.name << "\t" << s.summary << "\n";
      return 0;
    }

    ScenarioConfig cfg = load(scenario);
    if (seed) cfg.engine.seed = *seed;

    if (*run) {
      std::ofstream trace;
      EngineOptions opt;
      opt.digest = true;
      if (!trace_path.empty()) {
        trace.open(trace_path);
        if (!trace) throw Error(Errc::InvalidArgument, "cannot write " + trace_path);
        opt.trace = &trace;
      }
      Engine e(cfg, opt);
      e.run_until(until >= 0 ? seconds_arg(until) : cfg.engine.duration);
      write_out(report_path, format_metrics(e.metrics(), cfg.name.empty() ? scenario : cfg.name));
      return 0;
    }

    if (*ver) {
      VerifyResult r = verify(cfg, invariant);
      std::cout << format_verify(r, cfg.name.empty() ? scenario : cfg.name);
      return r.pass ? 0 : kExitViolation;
    }

    if (*inj) {
      auto a = parse_fault_action(action);
      if (!a) throw Error(Errc::InvalidArgument, "unknown action '" + action + "'");
      cfg.faults.push_back({seconds_arg(at), *a, target});
      validate_scenario(cfg);
      write_out(output, serialize_scenario(cfg));
      return 0;
    }

    if (*st) {
      Engine e(cfg);
      e.run_until(seconds_arg(at));
      std::cout << format_status(e.status(node));
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "netfab: " << e.what() << "\n";
    return kExitInput;
  }
  return 0;
}
