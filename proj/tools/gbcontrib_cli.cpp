// gbcontrib command-line tool.
//
// Exit codes: 0 success, 2 usage error, 3 data/model/IO error,
// 4 verification failure.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gbcontrib/contrib.hpp"
#include "gbcontrib/dataset.hpp"
#include "gbcontrib/error.hpp"
#include "gbcontrib/experiments.hpp"
#include "gbcontrib/gbdt.hpp"
#include "gbcontrib/oracle.hpp"
#include "gbcontrib/report.hpp"

namespace {

using namespace gbcontrib;
namespace ex = gbcontrib::experiments;

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitVerify = 4;

class VerificationFailure : public Error {
 public:
  using Error::Error;
};

struct ModelFlags {
  std::size_t n_estimators;
  int max_depth;
  double learning_rate = 0.1;
  std::size_t min_samples_leaf = 1;
  std::size_t min_samples_split = 2;
  std::uint64_t seed = 0;

  GbdtParams params() const {
    GbdtParams p;
    p.n_estimators = n_estimators;
    p.learning_rate = learning_rate;
    p.cart.max_depth = max_depth;
    p.cart.min_samples_leaf = min_samples_leaf;
    p.cart.min_samples_split = min_samples_split;
    p.seed = seed;
    return p;
  }
};

const auto kLearningRate = CLI::Validator(
    [](const std::string& text) -> std::string {
      double v = 0.0;
      try {
        v = std::stod(text);
      } catch (...) {
        return "learning rate must be a number";
      }
      return v > 0.0 && v <= 1.0 ? std::string() : "learning rate must lie in (0, 1]";
    },
    "(0,1]");

const auto kOpenFraction = CLI::Validator(
    [](const std::string& text) -> std::string {
      double v = 0.0;
      try {
        v = std::stod(text);
      } catch (...) {
        return "fraction must be a number";
      }
      return v > 0.0 && v < 1.0 ? std::string() : "fraction must lie in (0, 1)";
    },
    "(0,1)");

void add_model_flags(CLI::App* cmd, ModelFlags& flags, bool with_seed = true) {
  cmd->add_option("--n-estimators", flags.n_estimators, "Number of boosting stages")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--max-depth", flags.max_depth, "Maximum tree depth")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--learning-rate", flags.learning_rate, "Shrinkage applied to every tree")
      ->check(kLearningRate)
      ->capture_default_str();
  cmd->add_option("--min-samples-leaf", flags.min_samples_leaf)
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--min-samples-split", flags.min_samples_split)
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  if (with_seed) cmd->add_option("--seed", flags.seed, "Random seed")->capture_default_str();
}

// Writes through `fn` to `path`, or to stdout when path is empty or "-".
void with_output(const std::string& path, const std::function<void(std::ostream&)>& fn) {
  if (path.empty() || path == "-") {
    fn(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path + "'");
  fn(out);
  if (!out) throw Error("failed writing '" + path + "'");
}

// Feature matrix of a CSV, matched to the model's columns. The target column,
// when named, is dropped first.
FeatureMatrix load_features(const std::string& path, const std::string& target,
                            const Ensemble& ens) {
  CsvTable table = read_csv(path);
  std::vector<std::string> names = table.header;
  std::optional<std::size_t> drop;
  if (!target.empty()) {
    const auto it = std::find(names.begin(), names.end(), target);
    if (it == names.end()) throw DataError("target column not found: '" + target + "'");
    drop = static_cast<std::size_t>(it - names.begin());
    names.erase(it);
  }
  if (names.size() != ens.n_features()) {
    throw DimensionError("data has " + std::to_string(names.size()) +
                         " feature columns, model expects " + std::to_string(ens.n_features()));
  }
  if (names != ens.feature_names()) {
    throw DataError("data feature columns do not match the model's feature names");
  }
  if (!drop) return std::move(table.cells);
  std::vector<double> values;
  values.reserve(table.cells.rows() * names.size());
  for (std::size_t r = 0; r < table.cells.rows(); ++r) {
    for (std::size_t c = 0; c < table.cells.cols(); ++c) {
      if (c != *drop) values.push_back(table.cells.at(r, c));
    }
  }
  return FeatureMatrix(table.cells.rows(), names.size(), std::move(values));
}

struct TrainArgs {
  std::string data, target, model_out;
  ModelFlags model{100, 3};
  double test_fraction = 0.1;
  bool no_split = false;
};

void run_train(const TrainArgs& a) {
  const Dataset ds = load_csv(a.data, a.target);
  const GbdtParams params = a.model.params();
  if (a.no_split) {
    const Ensemble ens = fit_gbdt(ds, params);
    save_model(ens, a.model_out);
    std::cout << "train_mse=" << format_real(mean_squared_error(gbdt_predict(ens, ds.features()), ds.target()))
              << " train_rows=" << ds.rows() << '\n';
    return;
  }
  const TrainTestSplit split = train_test_split(ds, a.test_fraction, a.model.seed);
  const Ensemble ens = fit_gbdt(split.train, params);
  save_model(ens, a.model_out);
  std::cout << "train_mse="
            << format_real(mean_squared_error(gbdt_predict(ens, split.train.features()), split.train.target()))
            << " test_mse="
            << format_real(mean_squared_error(gbdt_predict(ens, split.test.features()), split.test.target()))
            << " train_rows=" << split.train.rows() << " test_rows=" << split.test.rows() << '\n';
}

struct ExplainArgs {
  std::string model, data, target, out, records, decision_space;
  bool check = false;
};

void run_explain(const ExplainArgs& a) {
  const Ensemble ens = load_model(a.model);
  const FeatureMatrix x = load_features(a.data, a.target, ens);
  const std::vector<Explanation> explanations = batch_explain(ens, x);
  with_output(a.out, [&](std::ostream& o) { write_explanations_csv(o, ens, explanations); });
  if (!a.records.empty()) {
    with_output(a.records, [&](std::ostream& o) { write_records_csv(o, ens, explanations); });
  }
  if (!a.decision_space.empty()) {
    std::vector<DecisionSpace> spaces;
    spaces.reserve(x.rows());
    for (std::size_t r = 0; r < x.rows(); ++r) spaces.push_back(decision_space(ens, x.row(r)));
    with_output(a.decision_space, [&](std::ostream& o) { write_decision_space_csv(o, ens, spaces); });
  }
  if (a.check) {
    for (std::size_t r = 0; r < explanations.size(); ++r) {
      if (!satisfies_local_accuracy(explanations[r])) {
        throw VerificationFailure("local accuracy violated at sample " + std::to_string(r));
      }
    }
    std::cerr << "local accuracy holds for " << explanations.size() << " samples\n";
  }
}

struct VerifyArgs {
  std::string model, data, target;
  std::size_t probes = 1000;
  std::uint64_t seed = 0;
};

void run_verify(const VerifyArgs& a) {
  const Ensemble ens = load_model(a.model);
  const FeatureMatrix x = load_features(a.data, a.target, ens);

  struct Check {
    std::string name;
    std::function<std::string()> run;  // empty string = pass, else the reason
  };
  const std::vector<Check> checks = {
      {"node-consistency",
       [&]() -> std::string {
         for (std::size_t l = 0; l < ens.trees().size(); ++l) {
           if (auto bad = oracle::find_inconsistent_node(ens.trees()[l])) {
             return "tree " + std::to_string(l) + " node " + std::to_string(*bad) +
                    ": value is not the sample-weighted mean of its children";
           }
         }
         return {};
       }},
      {"telescoping",
       [&]() -> std::string {
         for (std::size_t r = 0; r < x.rows(); ++r) {
           const Explanation e = feature_contributions(ens, x.row(r));
           std::vector<double> residues(ens.trees().size(), 0.0);
           for (const auto& rec : e.records) residues[rec.tree_index] += rec.residue;
           for (std::size_t l = 0; l < ens.trees().size(); ++l) {
             const Tree& t = ens.trees()[l];
             const double leaf = tree_predict(t, x.row(r));
             const double via_records = t.node(t.root()).value + residues[l];
             const double via_oracle = oracle::telescoped_value(t, x.row(r));
             if (std::abs(via_records - leaf) > 1e-12 || std::abs(via_oracle - leaf) > 1e-12) {
               return "sample " + std::to_string(r) + " tree " + std::to_string(l);
             }
           }
         }
         return {};
       }},
      {"local-accuracy",
       [&]() -> std::string {
         for (std::size_t r = 0; r < x.rows(); ++r) {
           if (!satisfies_local_accuracy(feature_contributions(ens, x.row(r)))) {
             return "sample " + std::to_string(r);
           }
         }
         return {};
       }},
      {"oracle-equivalence",
       [&]() -> std::string {
         for (std::size_t r = 0; r < x.rows(); ++r) {
           const Explanation e = feature_contributions(ens, x.row(r));
           const auto naive = oracle::naive_contributions(ens, x.row(r));
           if (naive.bias != e.bias || naive.contributions != e.contributions) {
             return "sample " + std::to_string(r);
           }
         }
         return {};
       }},
      {"leaf-partition",
       [&]() -> std::string {
         Rng rng(a.seed);
         for (std::size_t l = 0; l < ens.trees().size(); ++l) {
           const Tree& t = ens.trees()[l];
           const auto regions = oracle::enumerate_leaf_regions(t);
           const FeatureMatrix probes = oracle::sample_probes(x, a.probes, rng);
           if (!oracle::check_partition(std::span<const oracle::LeafRegion>(regions), probes)) {
             return "tree " + std::to_string(l) + ": leaf boxes do not partition the probes";
           }
           for (std::size_t p = 0; p < probes.rows(); ++p) {
             for (const auto& region : regions) {
               if (region.box.contains(probes.row(p)) &&
                   region.value != tree_predict(t, probes.row(p))) {
                 return "tree " + std::to_string(l) + ": region value differs from prediction";
               }
             }
           }
         }
         return {};
       }},
  };

  std::optional<std::string> first_failure;
  for (const Check& c : checks) {
    const std::string reason = c.run();
    if (reason.empty()) {
      std::cout << "PASS " << c.name << '\n';
    } else {
      std::cout << "FAIL " << c.name << ": " << reason << '\n';
      if (!first_failure) first_failure = c.name;
    }
  }
  std::cout << "checked " << ens.trees().size() << " trees on " << x.rows() << " samples\n";
  if (first_failure) throw VerificationFailure("verification failed: " + *first_failure);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gradient-boosted regression trees with per-decision and per-feature contributions"};
  app.require_subcommand(1);

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Fit a model and write it as JSON");
  train_cmd->add_option("--data", train.data, "Input CSV")->required();
  train_cmd->add_option("--target", train.target, "Target column")->required();
  train_cmd->add_option("--model-out", train.model_out, "Model JSON to write")->required();
  add_model_flags(train_cmd, train.model);
  train_cmd->add_option("--test-fraction", train.test_fraction)->check(kOpenFraction)->capture_default_str();
  train_cmd->add_flag("--no-split", train.no_split, "Train on every row");

  std::string predict_model, predict_data, predict_target, predict_out;
  auto* predict_cmd = app.add_subcommand("predict", "Write predictions for a CSV");
  predict_cmd->add_option("--model", predict_model)->required();
  predict_cmd->add_option("--data", predict_data)->required();
  predict_cmd->add_option("--target", predict_target, "Column to ignore, if present");
  predict_cmd->add_option("--out", predict_out, "Output CSV (stdout if omitted)");

  ExplainArgs explain;
  auto* explain_cmd = app.add_subcommand("explain", "Write per-feature contributions for a CSV");
  explain_cmd->add_option("--model", explain.model)->required();
  explain_cmd->add_option("--data", explain.data)->required();
  explain_cmd->add_option("--target", explain.target, "Column to ignore, if present");
  explain_cmd->add_option("--out", explain.out, "Explanation CSV (stdout if omitted)");
  explain_cmd->add_option("--records", explain.records, "Also write every decision record");
  explain_cmd->add_option("--decision-space", explain.decision_space,
                          "Also write per-feature decision intervals");
  explain_cmd->add_flag("--check", explain.check, "Fail unless bias + contributions = prediction");

  std::string importance_model, importance_out;
  auto* importance_cmd = app.add_subcommand("importance", "Write global split-gain importance");
  importance_cmd->add_option("--model", importance_model)->required();
  importance_cmd->add_option("--out", importance_out, "Output CSV (stdout if omitted)");

  VerifyArgs verify;
  auto* verify_cmd = app.add_subcommand("verify", "Cross-check a model against the brute-force oracles");
  verify_cmd->add_option("--model", verify.model)->required();
  verify_cmd->add_option("--data", verify.data)->required();
  verify_cmd->add_option("--target", verify.target, "Column to ignore, if present");
  verify_cmd->add_option("--probes", verify.probes, "Random probes per tree")->capture_default_str();
  verify_cmd->add_option("--seed", verify.seed)->capture_default_str();

  auto* experiment_cmd = app.add_subcommand("experiment", "Run a consistency or outlier protocol");
  experiment_cmd->require_subcommand(1);

  struct CommonExperiment {
    std::string data, target, out_dir;
    double test_fraction = 0.1;
  };
  const auto add_common = [](CLI::App* cmd, CommonExperiment& c) {
    cmd->add_option("--data", c.data)->required();
    cmd->add_option("--target", c.target)->required();
    cmd->add_option("--out-dir,--out", c.out_dir, "Directory for the CSV and metadata")->required();
    cmd->add_option("--test-fraction", c.test_fraction)->check(kOpenFraction)->capture_default_str();
  };

  CommonExperiment corr_common;
  ModelFlags corr_model{10, 3};
  std::string corr_base = ex::kAutoFeature;
  std::string corr_name = "correlated";
  std::vector<std::uint64_t> corr_seeds = ex::kDefaultSeeds;
  std::optional<double> corr_factor, corr_offset;
  auto* corr_cmd = experiment_cmd->add_subcommand("correlation", "Add a correlated copy of a feature");
  add_common(corr_cmd, corr_common);
  add_model_flags(corr_cmd, corr_model, false);
  corr_cmd->add_option("--base-feature", corr_base, "Feature to copy, or 'auto'")->capture_default_str();
  corr_cmd->add_option("--new-feature", corr_name)->capture_default_str();
  corr_cmd->add_option("--seeds", corr_seeds)->delimiter(',')->capture_default_str();
  corr_cmd->add_option("--factor", corr_factor, "Fixed multiplier (default: drawn per seed)");
  corr_cmd->add_option("--offset", corr_offset, "Fixed offset (default: drawn per seed)");

  CommonExperiment noise_common;
  ModelFlags noise_model{10, 2};
  std::string noise_feature = ex::kAutoFeature;
  std::vector<double> noise_levels = {0, 100, 200, 300, 400};
  auto* noise_cmd = experiment_cmd->add_subcommand("noise", "Add Gaussian noise to a feature");
  add_common(noise_cmd, noise_common);
  add_model_flags(noise_cmd, noise_model);
  noise_cmd->add_option("--feature", noise_feature, "Feature to perturb, or 'auto'")->capture_default_str();
  noise_cmd->add_option("--levels", noise_levels, "Noise variance as % of the feature variance")
      ->delimiter(',')
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();

  CommonExperiment outlier_common;
  ModelFlags outlier_model{10, 15};
  std::string outlier_feature;
  std::vector<std::uint64_t> outlier_seeds = ex::kDefaultSeeds;
  auto* outlier_cmd = experiment_cmd->add_subcommand("outlier", "Explain a constructed outlier");
  add_common(outlier_cmd, outlier_common);
  add_model_flags(outlier_cmd, outlier_model, false);
  outlier_cmd->add_option("--feature", outlier_feature, "Feature to manipulate (default: first)");
  outlier_cmd->add_option("--seeds", outlier_seeds)->delimiter(',')->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*train_cmd) {
      run_train(train);
    } else if (*predict_cmd) {
      const Ensemble ens = load_model(predict_model);
      const FeatureMatrix x = load_features(predict_data, predict_target, ens);
      const auto predictions = gbdt_predict(ens, x);
      with_output(predict_out, [&](std::ostream& o) { write_predictions_csv(o, predictions); });
    } else if (*explain_cmd) {
      run_explain(explain);
    } else if (*importance_cmd) {
      const Ensemble ens = load_model(importance_model);
      const auto importance = feature_importance(ens);
      with_output(importance_out, [&](std::ostream& o) { write_importance_csv(o, ens, importance); });
    } else if (*verify_cmd) {
      run_verify(verify);
    } else if (*corr_cmd) {
      const Dataset ds = load_csv(corr_common.data, corr_common.target);
      ex::CorrelationOptions opts;
      opts.base_feature = corr_base;
      opts.new_feature = corr_name;
      opts.seeds = corr_seeds;
      opts.model = corr_model.params();
      opts.test_fraction = corr_common.test_fraction;
      opts.factor = corr_factor;
      opts.offset = corr_offset;
      const auto result = ex::run_correlation_experiment(ds, opts);
      std::cout << ex::write_report_files(corr_common.out_dir, result.report).string() << '\n';
    } else if (*noise_cmd) {
      const Dataset ds = load_csv(noise_common.data, noise_common.target);
      ex::NoiseOptions opts;
      opts.feature = noise_feature;
      opts.levels = noise_levels;
      opts.seed = noise_model.seed;
      opts.model = noise_model.params();
      opts.test_fraction = noise_common.test_fraction;
      const auto result = ex::run_noise_experiment(ds, opts);
      std::cout << ex::write_report_files(noise_common.out_dir, result.report).string() << '\n';
    } else if (*outlier_cmd) {
      const Dataset ds = load_csv(outlier_common.data, outlier_common.target);
      ex::OutlierOptions opts;
      opts.feature = outlier_feature;
      opts.seeds = outlier_seeds;
      opts.model = outlier_model.params();
      opts.test_fraction = outlier_common.test_fraction;
      const auto result = ex::run_outlier_experiment(ds, opts);
      std::cout << ex::write_outlier_files(outlier_common.out_dir, result, ds.feature_names()).string()
                << '\n';
    }
  } catch (const VerificationFailure& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitVerify;
  } catch (const InvalidArgument& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return 0;
}
