#include "gbcontrib/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "gbcontrib/error.hpp"
#include "gbcontrib/random.hpp"
#include "gbcontrib/report.hpp"
#include "json.hpp"

namespace gbcontrib::experiments {

namespace {

// Stream ids, so factor/offset and noise draws never share a sequence with
// the split or the trees of the same seed.
constexpr std::uint64_t kCorrelationStream = 0xc0441;
constexpr std::uint64_t kNoiseStream = 0x4015e;

std::string describe(const GbdtParams& p) {
  return "n_estimators=" + std::to_string(p.n_estimators) +
         " learning_rate=" + format_real(p.learning_rate) +
         " max_depth=" + std::to_string(p.cart.max_depth) +
         " min_samples_leaf=" + std::to_string(p.cart.min_samples_leaf) +
         " min_samples_split=" + std::to_string(p.cart.min_samples_split) +
         " min_gain=" + format_real(p.cart.min_gain);
}

std::string join_seeds(const std::vector<std::uint64_t>& seeds) {
  std::string out;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(seeds[i]);
  }
  return out;
}

GbdtParams with_seed(GbdtParams p, std::uint64_t seed) {
  p.seed = seed;
  return p;
}

std::string resolve_feature(const Dataset& ds, const std::string& requested,
                            const GbdtParams& params) {
  if (requested == kAutoFeature) return most_important_feature(ds, params);
  ds.require_feature(requested);
  return requested;
}

void check_seeds(const std::vector<std::uint64_t>& seeds) {
  if (seeds.empty()) throw InvalidArgument("at least one seed is required");
}

}  // namespace

GbdtParams correlation_defaults() {
  GbdtParams p;
  p.n_estimators = 10;
  p.learning_rate = 0.1;
  p.cart.max_depth = 3;
  return p;
}

GbdtParams noise_defaults() {
  GbdtParams p = correlation_defaults();
  p.cart.max_depth = 2;
  return p;
}

GbdtParams outlier_defaults() {
  GbdtParams p = correlation_defaults();
  p.cart.max_depth = 15;
  return p;
}

std::vector<FeatureSummary> summarize(const std::vector<std::string>& names,
                                      const std::vector<Explanation>& explanations) {
  std::vector<FeatureSummary> out(names.size());
  for (std::size_t f = 0; f < names.size(); ++f) {
    out[f].feature = names[f];
    double sum = 0.0;
    double abs_sum = 0.0;
    for (const Explanation& e : explanations) {
      sum += e.contributions.at(f);
      abs_sum += std::abs(e.contributions.at(f));
    }
    const auto n = static_cast<double>(std::max<std::size_t>(explanations.size(), 1));
    out[f].mean_contribution = sum / n;
    out[f].mean_abs_contribution = abs_sum / n;
  }
  return out;
}

std::string most_important_feature(const Dataset& ds, const GbdtParams& params) {
  const Ensemble model = fit_gbdt(ds, params);
  const std::vector<double> importance = feature_importance(model);
  const auto best = std::max_element(importance.begin(), importance.end());
  return ds.feature_names()[static_cast<std::size_t>(best - importance.begin())];
}

std::size_t abs_contribution_rank(const Explanation& e, std::size_t feature) {
  const double mine = std::abs(e.contributions.at(feature));
  std::size_t larger = 0;
  for (double c : e.contributions) {
    if (std::abs(c) > mine) ++larger;
  }
  return larger + 1;
}

CorrelationResult run_correlation_experiment(const Dataset& ds, const CorrelationOptions& opts) {
  check_seeds(opts.seeds);
  opts.model.validate();
  CorrelationResult result;
  result.base_feature =
      resolve_feature(ds, opts.base_feature, with_seed(opts.model, opts.seeds.front()));
  result.base_index = ds.require_feature(result.base_feature);
  result.new_index = ds.cols();
  result.report.name = "correlation";

  std::string factors;
  for (std::uint64_t seed : opts.seeds) {
    Rng rng(derive_seed(seed, kCorrelationStream));
    const double drawn_factor = rng.uniform(0.5, 2.0);
    const double drawn_offset = rng.uniform(-1.0, 1.0);
    CorrelationRun run;
    run.seed = seed;
    run.factor = opts.factor.value_or(drawn_factor);
    run.offset = opts.offset.value_or(drawn_offset);

    const Dataset augmented =
        add_correlated_feature(ds, result.base_feature, run.factor, run.offset, opts.new_feature);
    const TrainTestSplit original_split = train_test_split(ds, opts.test_fraction, seed);
    const TrainTestSplit augmented_split = train_test_split(augmented, opts.test_fraction, seed);
    const GbdtParams params = with_seed(opts.model, seed);
    const Ensemble original_model = fit_gbdt(original_split.train, params);
    const Ensemble augmented_model = fit_gbdt(augmented_split.train, params);
    run.original = batch_explain(original_model, original_split.test);
    run.augmented = batch_explain(augmented_model, augmented_split.test);

    result.report.runs.push_back({seed, "original", summarize(ds.feature_names(), run.original)});
    RunRecord aug{seed, "augmented", summarize(augmented.feature_names(), run.augmented)};
    FeatureSummary pair;
    pair.feature = result.base_feature + "+" + opts.new_feature;
    double sum = 0.0;
    double abs_sum = 0.0;
    for (const Explanation& e : run.augmented) {
      const double c = e.contributions[result.base_index] + e.contributions[result.new_index];
      sum += c;
      abs_sum += std::abs(c);
    }
    const auto n = static_cast<double>(std::max<std::size_t>(run.augmented.size(), 1));
    pair.mean_contribution = sum / n;
    pair.mean_abs_contribution = abs_sum / n;
    aug.features.push_back(pair);
    result.report.runs.push_back(std::move(aug));

    if (!factors.empty()) factors += ';';
    factors += format_real(run.factor) + "x+" + format_real(run.offset);
    result.runs.push_back(std::move(run));
  }

  auto& meta = result.report.metadata;
  meta.emplace_back("dataset_fingerprint", fingerprint(ds));
  meta.emplace_back("params", describe(opts.model));
  meta.emplace_back("base_feature", result.base_feature);
  meta.emplace_back("new_feature", opts.new_feature);
  meta.emplace_back("seeds", join_seeds(opts.seeds));
  meta.emplace_back("test_fraction", format_real(opts.test_fraction));
  meta.emplace_back("transforms", factors);
  return result;
}

NoiseResult run_noise_experiment(const Dataset& ds, const NoiseOptions& opts) {
  opts.model.validate();
  if (opts.levels.empty()) throw InvalidArgument("at least one noise level is required");
  for (double level : opts.levels) {
    if (!(level >= 0.0) || !std::isfinite(level)) {
      throw InvalidArgument("noise levels must be nonnegative");
    }
  }
  NoiseResult result;
  const GbdtParams params = with_seed(opts.model, opts.seed);
  result.feature = resolve_feature(ds, opts.feature, params);
  result.feature_index = ds.require_feature(result.feature);
  result.report.name = "noise";

  const TrainTestSplit split = train_test_split(ds, opts.test_fraction, opts.seed);
  const std::uint64_t noise_seed = derive_seed(opts.seed, kNoiseStream);
  for (double level : opts.levels) {
    const Dataset noised = add_gaussian_noise(split.train, result.feature, level, noise_seed);
    const Ensemble model = fit_gbdt(noised, params);
    auto summary = summarize(ds.feature_names(), batch_explain(model, split.test));
    result.report.runs.push_back({opts.seed, format_real(level), summary});
    result.summaries.push_back(std::move(summary));
  }

  std::string levels;
  for (double level : opts.levels) {
    if (!levels.empty()) levels += ',';
    levels += format_real(level);
  }
  auto& meta = result.report.metadata;
  meta.emplace_back("dataset_fingerprint", fingerprint(ds));
  meta.emplace_back("params", describe(opts.model));
  meta.emplace_back("feature", result.feature);
  meta.emplace_back("levels", levels);
  meta.emplace_back("seed", std::to_string(opts.seed));
  meta.emplace_back("test_fraction", format_real(opts.test_fraction));
  return result;
}

OutlierResult run_outlier_experiment(const Dataset& ds, const OutlierOptions& opts) {
  check_seeds(opts.seeds);
  opts.model.validate();
  OutlierResult result;
  result.feature = opts.feature.empty() ? ds.feature_names().front() : opts.feature;
  result.feature_index = ds.require_feature(result.feature);
  result.report.name = "outlier";

  for (std::uint64_t seed : opts.seeds) {
    const TrainTestSplit split = train_test_split(ds, opts.test_fraction, seed);
    const Ensemble model = fit_gbdt(split.train, with_seed(opts.model, seed));
    OutlierRun run;
    run.seed = seed;
    run.sample = make_outlier(split.train, result.feature);
    run.explanation = feature_contributions(model, run.sample.x_fake);
    run.rank = abs_contribution_rank(run.explanation, result.feature_index);
    result.report.runs.push_back(
        {seed, "fake", summarize(ds.feature_names(), {run.explanation})});
    result.runs.push_back(std::move(run));
  }

  auto& meta = result.report.metadata;
  meta.emplace_back("dataset_fingerprint", fingerprint(ds));
  meta.emplace_back("params", describe(opts.model));
  meta.emplace_back("feature", result.feature);
  meta.emplace_back("seeds", join_seeds(opts.seeds));
  meta.emplace_back("test_fraction", format_real(opts.test_fraction));
  return result;
}

void write_report_csv(std::ostream& out, const ExperimentReport& report) {
  out << "experiment,seed,variant,feature,mean_contribution,mean_abs_contribution\n";
  for (const RunRecord& run : report.runs) {
    for (const FeatureSummary& f : run.features) {
      out << report.name << ',' << run.seed << ',' << run.variant << ',' << f.feature << ','
          << format_real(f.mean_contribution) << ',' << format_real(f.mean_abs_contribution)
          << '\n';
    }
  }
}

void write_metadata_json(std::ostream& out, const ExperimentReport& report) {
  nlohmann::json meta = nlohmann::json::object();
  for (const auto& [key, value] : report.metadata) meta[key] = value;
  nlohmann::json j = {{"experiment", report.name}, {"metadata", meta}};
  out << j.dump(2) << '\n';
}

void write_outlier_csv(std::ostream& out, const OutlierResult& result,
                       const std::vector<std::string>& feature_names) {
  out << "seed,bias";
  for (const auto& name : feature_names) out << ',' << name;
  out << ",prediction,y_fake,manipulated_feature,manipulated_rank\n";
  for (const OutlierRun& run : result.runs) {
    out << run.seed << ',' << format_real(run.explanation.bias);
    for (double c : run.explanation.contributions) out << ',' << format_real(c);
    out << ',' << format_real(run.explanation.prediction) << ',' << format_real(run.sample.y_fake)
        << ',' << result.feature << ',' << run.rank << '\n';
  }
}

namespace {

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  return out;
}

void write_meta_file(const std::filesystem::path& dir, const ExperimentReport& report) {
  auto out = open_output(dir / (report.name + "_meta.json"));
  write_metadata_json(out, report);
}

}  // namespace

std::filesystem::path write_report_files(const std::filesystem::path& dir,
                                         const ExperimentReport& report) {
  std::filesystem::create_directories(dir);
  const auto csv = dir / (report.name + ".csv");
  {
    auto out = open_output(csv);
    write_report_csv(out, report);
  }
  write_meta_file(dir, report);
  return csv;
}

std::filesystem::path write_outlier_files(const std::filesystem::path& dir,
                                          const OutlierResult& result,
                                          const std::vector<std::string>& feature_names) {
  std::filesystem::create_directories(dir);
  const auto csv = dir / (result.report.name + ".csv");
  {
    auto out = open_output(csv);
    write_outlier_csv(out, result, feature_names);
  }
  write_meta_file(dir, result.report);
  return csv;
}

}  // namespace gbcontrib::experiments
