#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "phdiff/config.hpp"
#include "phdiff/report.hpp"

namespace phdiff {

enum ExitCode : int {
  kExitOk = 0,
  kExitCheckFailed = 1,
  kExitInvalid = 2,
  kExitRuntime = 3,
};

struct RunOptions {
  // Empty selects config.output_dir.
  std::filesystem::path out_dir;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
  unsigned threads = 0;
  std::ostream* log = nullptr;  // nullptr: std::cout
};

struct RunResult {
  int exit_code = kExitOk;
  std::filesystem::path out_dir;
  std::vector<std::filesystem::path> files;
  VerificationReport report;
};

// Each writes config.echo plus its artifacts into the run directory. All
// files are assembled in memory and written after computation completes.
RunResult run_forward(ExperimentConfig config, const RunOptions& options);
RunResult run_reverse(ExperimentConfig config, const RunOptions& options);
RunResult run_verify(ExperimentConfig config, const RunOptions& options);
RunResult run_compare_sde(ExperimentConfig config, const RunOptions& options);

// Loads the config and dispatches on "forward" | "reverse" | "verify" |
// "compare-sde", mapping exceptions onto exit codes (config and validation
// errors -> kExitInvalid, everything else -> kExitRuntime).
int run_command(const std::string& command, const std::filesystem::path& config_path,
                const RunOptions& options, std::ostream& err);

}  // namespace phdiff
