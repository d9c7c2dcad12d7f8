// l2ext command line: l2ext <command> [--scenario PATH] [--out DIR] ...
// Exit codes: 0 success, 1 demo/selftest checks failed, 2 validation
// failure, 3 analysis precondition failure.

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "l2ext/runner.hpp"

namespace {

std::pair<double, double> parse_window(const std::string& v) {
  const auto c = v.find(':');
  if (c == std::string::npos) throw l2ext::ValidationError("--lambda-window expects LO:HI, got '" + v + "'");
  std::size_t p1 = 0, p2 = 0;
  double lo = 0.0, hi = 0.0;
  try {
    lo = std::stod(v.substr(0, c), &p1);
    hi = std::stod(v.substr(c + 1), &p2);
  } catch (const std::exception&) {
    throw l2ext::ValidationError("--lambda-window: cannot parse '" + v + "'");
  }
  if (p1 != c || p2 != v.size() - c - 1 || !(lo > 0.0) || !(hi > lo))
    throw l2ext::ValidationError("--lambda-window: need 0 < LO < HI, got '" + v + "'");
  return {lo, hi};
}

void print_result(const std::string& command, const l2ext::json& summary) {
  const auto& r = summary["result"];
  if (command == "demo") {
    std::printf("%-18s %-10s %10s %10s %9s  %s\n", "family", "parameter", "expected", "measured", "stderr", "result");
    for (const auto& row : r["rows"])
      std::printf("%-18s %-10s %10.4f %10.4f %9.4f  %s\n", row["family"].get<std::string>().c_str(),
                  row["parameter"].get<std::string>().c_str(), row["expected"].get<double>(),
                  row["measured"].is_number() ? row["measured"].get<double>() : NAN,
                  row["stderr"].is_number() ? row["stderr"].get<double>() : NAN, row["pass"].get<bool>() ? "pass" : "FAIL");
    return;
  }
  if (command == "selftest") {
    for (const auto& s : r["suites"])
      std::printf("%-30s %5zu instances  %s\n", s["suite"].get<std::string>().c_str(), s["instances"].get<std::size_t>(),
                  s["pass"].get<bool>() ? "pass" : "FAIL");
    return;
  }
  std::cout << summary.dump(2) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Extended L2 invariants of parametrized operator families"};
  std::string command, scenario_path, out_dir = "out", window;
  std::optional<std::size_t> resolution;
  std::optional<double> eps_rank;
  unsigned threads = 0;
  std::uint64_t seed = 0;
  app.add_option("command", command, "sdf | capacity | divisor | betti | germ | torus | demo | selftest")->required();
  app.add_option("--scenario", scenario_path, "scenario file");
  app.add_option("--out", out_dir, "output directory")->capture_default_str();
  app.add_option("--resolution", resolution, "cells per axis, overriding the scenario");
  app.add_option("--eps-rank", eps_rank, "rank threshold");
  app.add_option("--lambda-window", window, "capacity fit window LO:HI");
  app.add_option("--threads", threads, "worker threads (0 = all cores)");
  app.add_option("--seed", seed, "seed for probes and random suites");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    l2ext::parallel::set_threads(threads);
    l2ext::RunOptions opt;
    opt.out = out_dir;
    opt.resolution = resolution;
    opt.eps_rank = eps_rank;
    opt.seed = seed;
    if (!window.empty()) opt.window = parse_window(window);
    if (resolution && *resolution == 0) throw l2ext::ValidationError("--resolution must be positive");
    if (eps_rank && !(*eps_rank >= 0.0)) throw l2ext::ValidationError("--eps-rank must be nonnegative");

    std::optional<l2ext::Scenario> scenario;
    if (!scenario_path.empty()) scenario = l2ext::load_scenario(scenario_path, seed);
    const l2ext::json summary = l2ext::run(scenario ? &*scenario : nullptr, command, opt);
    print_result(command, summary);
    if ((command == "demo" || command == "selftest") && !summary["result"]["all_pass"].get<bool>()) return 1;
    return 0;
  } catch (const l2ext::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return 2;
  } catch (const l2ext::PreconditionError& e) {
    std::cerr << "precondition failed: " << e.what() << '\n';
    return 3;
  }
}
