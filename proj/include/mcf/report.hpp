#pragma once

#include <optional>
#include <stdexcept>
#include <string>

#include "mcf/json_io.hpp"
#include "mcf/scenario.hpp"

namespace mcf::cli {

inline constexpr const char* kReportSchema = "mcfkit-report/1";

struct RunOptions {
  std::string output_dir;  // empty: nothing written to disk
  bool halt_on_fail = false;
  bool dump_orbits = false;
  std::optional<unsigned long long> seed;  // overrides the scenario seed
};

struct RunOutcome {
  io::json report;
  io::json timings;
  int exit_code = 0;
};

// Runs tasks in order. Exit code 0 iff every task passes.
RunOutcome run_scenario(const Scenario& sc, const RunOptions& opt);

struct ReportError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// Throws ReportError on schema mismatch.
std::string explain(const io::json& report);

// "Z² ⊕ Z/2", "0" for the trivial group.
std::string group_string(const io::json& degree);

}  // namespace mcf::cli
