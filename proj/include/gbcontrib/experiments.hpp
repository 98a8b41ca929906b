#pragma once

// Runners for the consistency (correlated feature, noise) and outlier
// protocols. Each produces tidy, plot-ready tables; nothing is rendered.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "gbcontrib/contrib.hpp"
#include "gbcontrib/dataset.hpp"
#include "gbcontrib/gbdt.hpp"

namespace gbcontrib::experiments {

inline constexpr const char* kAutoFeature = "auto";

struct FeatureSummary {
  std::string feature;
  double mean_contribution = 0.0;
  double mean_abs_contribution = 0.0;
};

struct RunRecord {
  std::uint64_t seed = 0;
  std::string variant;  // "original"/"augmented", or the noise level
  std::vector<FeatureSummary> features;
};

struct ExperimentReport {
  std::string name;
  std::vector<RunRecord> runs;
  std::vector<std::pair<std::string, std::string>> metadata;
};

/// experiment,seed,variant,feature,mean_contribution,mean_abs_contribution
void write_report_csv(std::ostream& out, const ExperimentReport& report);
/// {"experiment": ..., "metadata": {...}}
void write_metadata_json(std::ostream& out, const ExperimentReport& report);

/// Per-feature mean and mean |.| of the contributions over `explanations`.
std::vector<FeatureSummary> summarize(const std::vector<std::string>& names,
                                      const std::vector<Explanation>& explanations);

/// Name of the feature with the largest global importance of a model fit on
/// the whole dataset (first one on ties).
std::string most_important_feature(const Dataset& ds, const GbdtParams& params);

// sklearn-style defaults with the estimator counts and depths the protocols use.
GbdtParams correlation_defaults();
GbdtParams noise_defaults();
GbdtParams outlier_defaults();

inline const std::vector<std::uint64_t> kDefaultSeeds = {0, 1, 2, 3, 4};

struct CorrelationOptions {
  std::string base_feature = kAutoFeature;
  std::string new_feature = "correlated";
  std::vector<std::uint64_t> seeds = kDefaultSeeds;
  GbdtParams model = correlation_defaults();
  double test_fraction = 0.1;
  // Drawn per seed from U[0.5, 2] and U[-1, 1] when unset.
  std::optional<double> factor;
  std::optional<double> offset;
};

struct CorrelationRun {
  std::uint64_t seed = 0;
  double factor = 1.0;
  double offset = 0.0;
  std::vector<Explanation> original;   // original model on the test split
  std::vector<Explanation> augmented;  // augmented model on the same rows
};

struct CorrelationResult {
  ExperimentReport report;
  std::string base_feature;
  std::size_t base_index = 0;
  std::size_t new_index = 0;  // column of the added feature in the augmented data
  std::vector<CorrelationRun> runs;
};

/// For each seed: split with the seed, train on the original data and on the
/// data with a correlated copy of the base feature, explain the shared test
/// rows with both. The augmented variant also reports a "<base>+<new>" row.
CorrelationResult run_correlation_experiment(const Dataset& ds, const CorrelationOptions& opts);

struct NoiseOptions {
  std::string feature = kAutoFeature;
  std::vector<double> levels = {0, 100, 200, 300, 400};
  std::uint64_t seed = 0;
  GbdtParams model = noise_defaults();
  double test_fraction = 0.1;
};

struct NoiseResult {
  ExperimentReport report;
  std::string feature;
  std::size_t feature_index = 0;
  // One per level, same order as NoiseOptions::levels.
  std::vector<std::vector<FeatureSummary>> summaries;
};

/// Adds noise of each level to the training split only, retrains, and explains
/// the same clean test split.
NoiseResult run_noise_experiment(const Dataset& ds, const NoiseOptions& opts);

struct OutlierOptions {
  std::string feature;  // empty selects the first feature
  std::vector<std::uint64_t> seeds = kDefaultSeeds;
  GbdtParams model = outlier_defaults();
  double test_fraction = 0.1;
};

struct OutlierRun {
  std::uint64_t seed = 0;
  OutlierSample sample;
  Explanation explanation;
  std::size_t rank = 0;  // 1 = largest |contribution|
};

struct OutlierResult {
  ExperimentReport report;
  std::string feature;
  std::size_t feature_index = 0;
  std::vector<OutlierRun> runs;
};

/// Trains on each seed's split, builds the fake register from the training
/// part and explains it.
OutlierResult run_outlier_experiment(const Dataset& ds, const OutlierOptions& opts);

/// seed,bias,<feature...>,prediction,y_fake,manipulated_feature,manipulated_rank
void write_outlier_csv(std::ostream& out, const OutlierResult& result,
                       const std::vector<std::string>& feature_names);

/// 1 + number of features with strictly larger |contribution|.
std::size_t abs_contribution_rank(const Explanation& e, std::size_t feature);

/// Writes <name>.csv and <name>_meta.json into `dir` (created if missing).
/// Returns the CSV path.
std::filesystem::path write_report_files(const std::filesystem::path& dir,
                                         const ExperimentReport& report);
std::filesystem::path write_outlier_files(const std::filesystem::path& dir,
                                          const OutlierResult& result,
                                          const std::vector<std::string>& feature_names);

}  // namespace gbcontrib::experiments
