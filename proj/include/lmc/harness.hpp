#pragma once

#include "lmc/potentials.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace lmc {

/// Optional knobs; unset fields fall back to the planner or to per-experiment defaults.
struct Overrides {
  std::optional<double> delta;
  std::optional<std::uint64_t> n;
  std::optional<double> substep;
  std::optional<int> projections;
  std::optional<double> practical_scale;
  std::optional<double> friction_c;
  std::optional<double> horizon;
  std::optional<int> checkpoints;
  std::optional<std::vector<double>> deltas;
  std::optional<std::uint64_t> reference_size;
  std::optional<std::uint64_t> max_steps;  // per-member budget for sample runs
  std::optional<int> resamples;

  bool operator==(const Overrides&) const = default;
};

inline const std::vector<std::string> kSamplers{"od", "ud", "coupled-od", "coupled-ud", "discretization-od",
                                                "discretization-ud"};

struct ExperimentConfig {
  std::string name = "experiment";
  std::string sampler;
  json potential;
  double epsilon = 0.1;
  std::uint64_t ensemble = 1000;
  std::uint64_t seed = 0;
  std::vector<double> x0;                   // empty: origin
  std::vector<std::vector<double>> starts;  // coupled-ud start points (default: x0)
  std::string output_dir;                   // empty: $LMC_OUTPUT_DIR, then "."
  std::string reference;                    // optional CSV of reference samples
  Overrides overrides;

  bool operator==(const ExperimentConfig&) const = default;

  json to_json() const;
  std::string to_toml() const;
  static ExperimentConfig from_json(const json& j);
  /// Field-level checks that need no simulation: sampler name, positivity,
  /// potential construction, file existence. Throws UsageError with the field path.
  void validate() const;
};

ExperimentConfig parse_config_toml(std::string_view text);
/// .toml or .json by extension. Relative `reference` paths resolve against the file's directory.
ExperimentConfig load_config(const std::filesystem::path& path);

/// Value of LMC_OUTPUT_DIR, or ".".
std::filesystem::path default_output_dir();

/// Writes through a temporary file in the same directory and renames it into place.
void atomic_write(const std::filesystem::path& path, std::string_view content);

/// Loads a CSV of samples (one row per sample, optional header line).
Matrix load_samples_csv(const std::filesystem::path& path);

struct RunOutcome {
  json report;
  int exit_code = 0;  // 0 pass, 2 assertion failure
  std::vector<std::filesystem::path> files;
};

/// Runs one experiment. With write = true the report and traces go to the output directory.
RunOutcome run_experiment(const ExperimentConfig& cfg, bool write = true);

/// Report minus its timing section, for determinism comparisons.
json without_timing(json report);

struct PlotOutcome {
  std::vector<std::filesystem::path> files;
  std::vector<std::string> warnings;
};

/// SVG curves for a report: log-scale distance against iteration for sample
/// runs, log-log error against δ (slope annotated) for sweeps.
PlotOutcome emit_plots(const std::filesystem::path& report_path, const std::filesystem::path& out_dir = {});

std::string software_version();

}  // namespace lmc
