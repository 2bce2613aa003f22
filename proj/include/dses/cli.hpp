#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dses/config.hpp"

namespace dses::cli {

enum ExitCode : int { kOk = 0, kEnvelopeViolated = 1, kUsage = 2, kRuntime = 3 };

struct RunOptions {
  std::optional<std::filesystem::path> config;
  std::optional<std::string> preset;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials;
  std::filesystem::path out = "dses_out";
  std::vector<std::string> sets;
};

/// Config or preset with --set, --seed and --trials applied.
ScenarioConfig resolve_scenario(const RunOptions& options);

struct ScenarioResult {
  nlohmann::json summary;
  /// nullopt when the scenario declares no acceptance envelope.
  std::optional<bool> accepted;
};

/// Runs one scenario (no variants) and writes its artifacts into `dir`:
/// trajectory.csv, eigvec.csv (directed), plot_vehicle_<i>.csv (if asked)
/// and summary.json.
ScenarioResult run_scenario(const ScenarioConfig& cfg, const std::filesystem::path& dir);

/// The `run` command. Scenarios with variants run each variant into its own
/// subdirectory. Returns kEnvelopeViolated iff a declared envelope fails.
int cmd_run(const RunOptions& options, std::ostream& log);

/// The `report` command: reads a run directory, writes report.json and the
/// per-vehicle plot CSVs into `out` (the run directory when empty).
int cmd_report(const std::filesystem::path& run_dir, const std::filesystem::path& out, std::ostream& log);

int cmd_presets(std::ostream& log);
int cmd_validate(const RunOptions& options, std::ostream& log);

/// Rate section for a scenario: the RateReport JSON, or a
/// not-applicable marker for non-quadratic fields.
nlohmann::json rate_section(const ScenarioConfig& cfg);

}  // namespace dses::cli
