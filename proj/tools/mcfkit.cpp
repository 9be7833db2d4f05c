#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "mcf/parallel.hpp"
#include "mcf/report.hpp"

namespace {

enum Exit { ok = 0, failed = 1, usage = 2, bad_report = 3 };

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mcfkit: Morse-Conley-Floer computations from scenario files"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run the tasks of a scenario and write a JSON report");
  std::string scenario, output = "mcfkit-out";
  bool halt = false, dump = false;
  unsigned long long seed = 0;
  int threads = 0;
  run->add_option("scenario", scenario, "scenario file")->required();
  run->add_option("--output", output, "output directory")->capture_default_str();
  run->add_flag("--halt-on-fail", halt, "stop at the first failing task");
  auto* seed_opt = run->add_option("--seed", seed, "override the scenario seed");
  run->add_option("--threads", threads, "worker threads (0: OpenMP default)");
  run->add_flag("--dump-orbits", dump, "write witness orbits as CSV under <output>/orbits");

  auto* ex = app.add_subcommand("explain", "summarize a report");
  std::string report_path;
  ex->add_option("report", report_path, "report.json")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? ok : usage;
  }

  if (*run) {
    mcf::cli::Scenario sc;
    try {
      sc = mcf::cli::load_scenario(scenario);
    } catch (const mcf::cli::ScenarioError& e) {
      std::cerr << scenario << ": " << e.what() << "\n";
      return usage;
    }
    if (threads > 0) mcf::par::set_threads(threads);
    mcf::cli::RunOptions opt;
    opt.output_dir = output;
    opt.halt_on_fail = halt;
    opt.dump_orbits = dump;
    if (*seed_opt) opt.seed = seed;
    try {
      auto out = mcf::cli::run_scenario(sc, opt);
      const auto& s = out.report["summary"];
      std::cout << s["passed"] << " passed, " << s["failed"] << " failed, " << s["errors"] << " errors; report in "
                << output << "/report.json\n";
      return out.exit_code == 0 ? ok : failed;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return failed;
    }
  }

  std::ifstream in(report_path);
  if (!in) {
    std::cerr << "cannot open " << report_path << "\n";
    return usage;
  }
  try {
    auto j = mcf::io::json::parse(in);
    std::cout << mcf::cli::explain(j);
  } catch (const mcf::io::json::parse_error& e) {
    std::cerr << report_path << ": " << e.what() << "\n";
    return bad_report;
  } catch (const mcf::cli::ReportError& e) {
    std::cerr << report_path << ": " << e.what() << "\n";
    return bad_report;
  }
  return ok;
}
