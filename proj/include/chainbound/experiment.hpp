#pragma once

// Config-driven sweeps comparing Monte Carlo ground truth with the bounds.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "chainbound/banach.hpp"
#include "chainbound/bounds.hpp"
#include "chainbound/chain.hpp"
#include "chainbound/gauss_mc.hpp"

namespace chainbound {

enum class FunctionSource { RandomRademacherMatrices, RandomUnitVectors, File };

/// INI-style configuration. Sections: [experiment], [chain], [space],
/// [functions], [constants]. See configs/ for examples.
struct ExperimentConfig {
  std::string name = "experiment";
  ChainSpec chain = ChainSpec::cycle(16);
  NormedSpace space = NormedSpace::lp(2.0, 1);
  FunctionSource functions = FunctionSource::RandomUnitVectors;
  std::filesystem::path functions_path;
  bool time_homogeneous = false;
  std::optional<std::uint64_t> functions_seed;
  std::vector<std::size_t> n_sweep{64};
  std::size_t trials = 1000;
  std::size_t l_trials = 200;
  std::uint64_t seed = 1;
  UniversalConstants constants;
  /// Log-spaced grid of this many points over [0.1, 10] x empirical mean,
  /// unless explicit thresholds are given.
  std::size_t threshold_count = 32;
  std::vector<double> thresholds;
  std::vector<std::string> bounds_enabled{"paulin", "main_expectation", "main_tail",
                                          "sharp_expectation", "gaussian_matrix", "nsw",
                                          "mcdiarmid"};
  /// Smoothness parameter s for the independent Banach-space bound.
  double smoothness_s = 1.0;
  double mixing_threshold = 0.25;
  /// Cap tail bounds at 1.
  bool probability_mode = true;
  std::filesystem::path output_dir = "chainbound_out";

  /// Throws ValidationError describing the first violated constraint.
  void validate() const;
};

ExperimentConfig parse_experiment_config(std::string_view text);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
/// Canonical INI text with every default spelled out.
std::string format_experiment_config(const ExperimentConfig& config);

struct ReportRow {
  std::size_t n = 0;
  std::optional<double> threshold;
  double empirical_mean = 0.0;
  std::optional<double> empirical_tail;
  std::string bound_name;
  double bound_value = 0.0;
  double ratio = 0.0;
};

struct SweepPoint {
  std::size_t n = 0;
  McEstimate gaussian_complexity;
  McEstimate chain_sum;
  VarianceStatistics variance;
  TailCurve tail;
  std::vector<ReportRow> rows;
  /// Per threshold, the tail bound values keyed by bound name (NaN when the
  /// bound is not enabled or not applicable).
  std::vector<std::pair<std::string, std::vector<double>>> tail_bounds;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::size_t n_states = 0;
  double lambda = 0.0;
  std::optional<std::size_t> tau;
  Eigen::VectorXd mu;
  std::vector<SweepPoint> points;
  std::vector<std::string> notes;
  double wall_seconds = 0.0;
};

/// Errors are rethrown with the failing stage prefixed to the message.
ExperimentReport run_experiment(const ExperimentConfig& config);

/// Long format: n,threshold,empirical_mean,empirical_tail,bound_name,bound_value,ratio.
std::string report_csv(const ExperimentReport& report);
/// Wide format per sweep point: threshold,empirical_tail,paulin,main_tail,nsw,mcdiarmid.
std::string tail_csv(const SweepPoint& point);
nlohmann::json report_json(const ExperimentReport& report);

/// Writes <name>.csv, <name>.json and <name>_tails_n<n>.csv atomically into
/// `dir` and returns the CSV path.
std::filesystem::path write_report(const ExperimentReport& report,
                                   const std::filesystem::path& dir);

/// CHAINBOUND_OUTPUT_DIR if set, else the configured directory.
std::filesystem::path resolve_output_dir(const ExperimentConfig& config);

}  // namespace chainbound
