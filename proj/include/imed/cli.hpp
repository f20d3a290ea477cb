#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "imed/dataset.hpp"
#include "imed/estimators.hpp"
#include "imed/simharness.hpp"

namespace imed {

enum class Command { analyze, bootstrap_ci, sensitivity, simulate, diagnose_weights };

/// Fully parsed run configuration. A single flat JSON document; all
/// randomness flows from `seed` through keyed streams.
struct RunConfig {
  Command command = Command::analyze;
  std::uint64_t seed = 0;
  int threads = 0;  // 0: all available cores
  std::string output;
  std::string config_text;  // raw document, hashed into every output

  // analyze / bootstrap / sensitivity / diagnose-weights
  std::string data_path;
  VariableSchema schema;
  EstimatorConfig estimator;

  int bootstrap_replicates = 10000;
  double level = 0.95;

  // diagnose-weights
  double weight_threshold = 10.0;
  double weight_bin_width = 0.5;

  // simulate
  StudyConfig study;
};

/// Parses a config document; throws DataError with the offending field named.
RunConfig parse_config_text(const std::string& text);
RunConfig parse_config_file(const std::string& path);

/// Executes the configured command and writes its output files.
/// Returns 0 on success; throws on failure.
void run_command(const RunConfig& cfg);

/// Entry point behind the binary: `run <config.json> [--force] [--threads N]`.
/// Exit codes: 0 success, 1 estimation failure, 2 config or data error.
int cli_main(int argc, const char* const* argv);

}  // namespace imed
