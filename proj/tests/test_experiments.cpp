#include <doctest.h>

#include <cmath>
#include <sstream>

#include "gbcontrib/error.hpp"
#include "gbcontrib/experiments.hpp"
#include "gbcontrib/report.hpp"
#include "test_support.hpp"

using namespace gbcontrib;
using namespace gbcontrib::experiments;
using gbcontrib::testing::TempDir;
using gbcontrib::testing::read_file;

namespace {

std::string report_csv(const ExperimentReport& r) {
  std::ostringstream out;
  write_report_csv(out, r);
  return out.str();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

}  // namespace

TEST_CASE("exact duplicate feature splits the original attribution") {
  const Dataset ds = make_synthetic_regression(300, 5, 11);
  CorrelationOptions opts;
  opts.base_feature = "x0";
  opts.factor = 1.0;
  opts.offset = 0.0;
  opts.seeds = {0, 1, 2};
  const CorrelationResult res = run_correlation_experiment(ds, opts);
  REQUIRE(res.runs.size() == 3);
  CHECK(res.base_index == 0);
  CHECK(res.new_index == 5);
  for (const CorrelationRun& run : res.runs) {
    CHECK(run.factor == 1.0);
    CHECK(run.offset == 0.0);
    REQUIRE(run.original.size() == run.augmented.size());
    for (std::size_t i = 0; i < run.original.size(); ++i) {
      const Explanation& o = run.original[i];
      const Explanation& a = run.augmented[i];
      CHECK(std::abs(o.prediction - a.prediction) <= 1e-8);
      CHECK(std::abs(o.contributions[0] - (a.contributions[0] + a.contributions[5])) <= 1e-8);
      for (std::size_t f = 1; f < 5; ++f) {
        CHECK(std::abs(o.contributions[f] - a.contributions[f]) <= 1e-8);
      }
    }
  }
}

TEST_CASE("correlation report layout") {
  const Dataset ds = make_synthetic_regression(120, 3, 2);
  CorrelationOptions opts;
  opts.seeds = {4, 7};
  const CorrelationResult res = run_correlation_experiment(ds, opts);
  const auto lines = lines_of(report_csv(res.report));
  REQUIRE_FALSE(lines.empty());
  CHECK(lines[0] == "experiment,seed,variant,feature,mean_contribution,mean_abs_contribution");
  // per seed: 3 original rows, 4 augmented + 1 combined row
  CHECK(lines.size() == 1 + 2 * (3 + 5));
  CHECK(res.base_feature == most_important_feature(ds, opts.model));
  const std::string combined = res.base_feature + "+correlated";
  CHECK(std::count_if(lines.begin(), lines.end(), [&](const std::string& l) {
          return l.find("," + combined + ",") != std::string::npos;
        }) == 2);
  for (const CorrelationRun& run : res.runs) {
    CHECK(run.factor >= 0.5);
    CHECK(run.factor <= 2.0);
    CHECK(run.offset >= -1.0);
    CHECK(run.offset <= 1.0);
  }
}

TEST_CASE("experiments are byte-for-byte reproducible") {
  const Dataset ds = make_synthetic_regression(150, 4, 5);
  CorrelationOptions c;
  c.seeds = {0, 1};
  CHECK(report_csv(run_correlation_experiment(ds, c).report) ==
        report_csv(run_correlation_experiment(ds, c).report));
  NoiseOptions n;
  n.seed = 9;
  CHECK(report_csv(run_noise_experiment(ds, n).report) == report_csv(run_noise_experiment(ds, n).report));

  TempDir a, b;
  OutlierOptions o;
  const auto ra = run_outlier_experiment(ds, o);
  const auto rb = run_outlier_experiment(ds, o);
  const auto pa = write_outlier_files(a.path(), ra, ds.feature_names());
  const auto pb = write_outlier_files(b.path(), rb, ds.feature_names());
  CHECK(read_file(pa) == read_file(pb));
  CHECK(read_file(a / "outlier_meta.json") == read_file(b / "outlier_meta.json"));
}

TEST_CASE("noise level zero reproduces the clean model") {
  const Dataset ds = make_synthetic_regression(200, 4, 3);
  NoiseOptions opts;
  opts.feature = "x1";
  opts.levels = {0, 250};
  opts.seed = 6;
  const NoiseResult res = run_noise_experiment(ds, opts);
  REQUIRE(res.summaries.size() == 2);
  CHECK(res.feature_index == 1);

  const TrainTestSplit split = train_test_split(ds, opts.test_fraction, opts.seed);
  GbdtParams p = opts.model;
  p.seed = opts.seed;
  const auto clean = summarize(ds.feature_names(), batch_explain(fit_gbdt(split.train, p), split.test));
  REQUIRE(clean.size() == res.summaries[0].size());
  for (std::size_t f = 0; f < clean.size(); ++f) {
    CHECK(clean[f].mean_contribution == res.summaries[0][f].mean_contribution);
    CHECK(clean[f].mean_abs_contribution == res.summaries[0][f].mean_abs_contribution);
  }
  CHECK(res.report.runs[0].variant == "0");
  CHECK(res.report.runs[1].variant == "250");
}

TEST_CASE("noise options are validated") {
  const Dataset ds = make_synthetic_regression(60, 2, 1);
  NoiseOptions opts;
  opts.levels = {-1};
  CHECK_THROWS_AS(run_noise_experiment(ds, opts), InvalidArgument);
  opts.levels = {};
  CHECK_THROWS_AS(run_noise_experiment(ds, opts), InvalidArgument);
  opts.levels = {0};
  opts.feature = "nope";
  CHECK_THROWS_AS(run_noise_experiment(ds, opts), DataError);
}

TEST_CASE("outlier experiment explains the fake register") {
  const Dataset ds = make_synthetic_regression(200, 4, 8);
  OutlierOptions opts;
  opts.feature = "x2";
  const OutlierResult res = run_outlier_experiment(ds, opts);
  REQUIRE(res.runs.size() == kDefaultSeeds.size());
  for (const OutlierRun& run : res.runs) {
    CHECK(satisfies_local_accuracy(run.explanation));
    CHECK(run.rank >= 1);
    CHECK(run.rank <= 4);
    CHECK(run.rank == abs_contribution_rank(run.explanation, 2));
    CHECK(run.sample.x_fake.size() == 4);
  }
  std::ostringstream out;
  write_outlier_csv(out, res, ds.feature_names());
  const auto lines = lines_of(out.str());
  CHECK(lines[0] == "seed,bias,x0,x1,x2,x3,prediction,y_fake,manipulated_feature,manipulated_rank");
  CHECK(lines.size() == 1 + kDefaultSeeds.size());
}

TEST_CASE("abs contribution rank counts strictly larger magnitudes") {
  Explanation e;
  e.contributions = {0.5, -2.0, 2.0, 0.1};
  CHECK(abs_contribution_rank(e, 1) == 1);
  CHECK(abs_contribution_rank(e, 2) == 1);
  CHECK(abs_contribution_rank(e, 0) == 3);
  CHECK(abs_contribution_rank(e, 3) == 4);
}

TEST_CASE("metadata json records the configuration") {
  const Dataset ds = make_synthetic_regression(80, 3, 4);
  NoiseOptions opts;
  opts.levels = {0, 100};
  const NoiseResult res = run_noise_experiment(ds, opts);
  std::ostringstream out;
  write_metadata_json(out, res.report);
  const std::string json = out.str();
  CHECK(json.find("\"experiment\": \"noise\"") != std::string::npos);
  CHECK(json.find(fingerprint(ds)) != std::string::npos);
  CHECK(json.find("\"levels\": \"0,100\"") != std::string::npos);
}
