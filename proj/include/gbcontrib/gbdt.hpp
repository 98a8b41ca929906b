#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gbcontrib/cart.hpp"
#include "gbcontrib/dataset.hpp"

namespace gbcontrib {

struct GbdtParams {
  std::size_t n_estimators = 100;
  double learning_rate = 0.1;
  CartParams cart;
  std::uint64_t seed = 0;

  void validate() const;

  friend bool operator==(const GbdtParams&, const GbdtParams&) = default;
};

/// Boosted ensemble F(x) = f0 + learning_rate * sum_l h_l(x).
class Ensemble {
 public:
  /// Throws ModelFormatError if a tree's feature count differs from the
  /// number of names or params.n_estimators differs from the tree count.
  Ensemble(double f0, double learning_rate, std::vector<Tree> trees,
           std::vector<std::string> feature_names, GbdtParams params);

  double f0() const { return f0_; }
  double learning_rate() const { return learning_rate_; }
  const std::vector<Tree>& trees() const { return trees_; }
  const std::vector<std::string>& feature_names() const { return feature_names_; }
  std::size_t n_features() const { return feature_names_.size(); }
  const GbdtParams& params() const { return params_; }

  friend bool operator==(const Ensemble&, const Ensemble&) = default;

 private:
  double f0_;
  double learning_rate_;
  std::vector<Tree> trees_;
  std::vector<std::string> feature_names_;
  GbdtParams params_;
};

/// Squared-loss boosting. Tree l is fit on the current residuals with an Rng
/// seeded by derive_seed(params.seed, l).
Ensemble fit_gbdt(const Dataset& ds, const GbdtParams& params);

double gbdt_predict(const Ensemble& ens, std::span<const double> x);
std::vector<double> gbdt_predict(const Ensemble& ens, const FeatureMatrix& x);

/// Mean squared error of F^0, F^1, ..., F^T on `ds`, evaluated stage by stage.
std::vector<double> staged_mse(const Ensemble& ens, const Dataset& ds);

double mean_squared_error(std::span<const double> predicted, std::span<const double> actual);

/// Split gain summed per feature over every internal node, normalized to 1.
/// Throws DataError("no splits; importance undefined") without splits.
std::vector<double> feature_importance(const Ensemble& ens);
std::vector<double> feature_importance(std::span<const Tree> trees, std::size_t n_features);

inline constexpr int kModelFormatVersion = 1;

std::string to_json(const Ensemble& ens);
Ensemble from_json(std::string_view text);
void save_model(const Ensemble& ens, const std::filesystem::path& path);
Ensemble load_model(const std::filesystem::path& path);

}  // namespace gbcontrib
