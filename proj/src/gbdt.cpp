#include "gbcontrib/gbdt.hpp"

#include <cmath>
#include <string>

#include "gbcontrib/error.hpp"
#include "gbcontrib/random.hpp"

namespace gbcontrib {

void GbdtParams::validate() const {
  if (n_estimators < 1) throw InvalidArgument("n_estimators must be positive");
  if (!(learning_rate > 0.0 && learning_rate <= 1.0)) {
    throw InvalidArgument("learning_rate must lie in (0, 1]");
  }
  cart.validate();
}

Ensemble::Ensemble(double f0, double learning_rate, std::vector<Tree> trees,
                   std::vector<std::string> feature_names, GbdtParams params)
    : f0_(f0),
      learning_rate_(learning_rate),
      trees_(std::move(trees)),
      feature_names_(std::move(feature_names)),
      params_(params) {
  if (!std::isfinite(f0_)) throw ModelFormatError("f0 must be finite");
  if (!std::isfinite(learning_rate_)) throw ModelFormatError("learning rate must be finite");
  if (params_.n_estimators != trees_.size()) {
    throw ModelFormatError("ensemble has " + std::to_string(trees_.size()) +
                           " trees but n_estimators is " + std::to_string(params_.n_estimators));
  }
  for (std::size_t l = 0; l < trees_.size(); ++l) {
    if (trees_[l].n_features() != feature_names_.size()) {
      throw ModelFormatError("tree " + std::to_string(l) + " expects " +
                             std::to_string(trees_[l].n_features()) + " features, ensemble has " +
                             std::to_string(feature_names_.size()));
    }
  }
}

Ensemble fit_gbdt(const Dataset& ds, const GbdtParams& params) {
  params.validate();
  const std::size_t n = ds.rows();
  const FeatureMatrix& x = ds.features();
  const std::vector<double>& y = ds.target();

  const double f0 = mean(y);
  std::vector<double> fitted(n, f0);
  std::vector<double> residual(n);
  std::vector<Tree> trees;
  trees.reserve(params.n_estimators);
  for (std::size_t l = 0; l < params.n_estimators; ++l) {
    for (std::size_t i = 0; i < n; ++i) residual[i] = y[i] - fitted[i];
    Rng rng(derive_seed(params.seed, l));
    Tree tree = fit_cart(x, residual, params.cart, rng);
    for (std::size_t i = 0; i < n; ++i) {
      fitted[i] += params.learning_rate * tree_predict(tree, x.row(i));
    }
    trees.push_back(std::move(tree));
  }
  return Ensemble(f0, params.learning_rate, std::move(trees), ds.feature_names(), params);
}

double gbdt_predict(const Ensemble& ens, std::span<const double> x) {
  if (x.size() != ens.n_features()) {
    throw DimensionError("feature vector has " + std::to_string(x.size()) +
                         " values, model expects " + std::to_string(ens.n_features()));
  }
  double sum = 0.0;
  for (const Tree& tree : ens.trees()) sum += tree_predict(tree, x);
  return ens.f0() + ens.learning_rate() * sum;
}

std::vector<double> gbdt_predict(const Ensemble& ens, const FeatureMatrix& x) {
  if (x.cols() != ens.n_features()) {
    throw DimensionError("data has " + std::to_string(x.cols()) + " features, model expects " +
                         std::to_string(ens.n_features()));
  }
  std::vector<double> out(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) out[r] = gbdt_predict(ens, x.row(r));
  return out;
}

double mean_squared_error(std::span<const double> predicted, std::span<const double> actual) {
  if (predicted.size() != actual.size()) throw DimensionError("length mismatch in MSE");
  if (predicted.empty()) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double d = predicted[i] - actual[i];
    acc += d * d;
  }
  return acc / static_cast<double>(predicted.size());
}

std::vector<double> staged_mse(const Ensemble& ens, const Dataset& ds) {
  if (ds.cols() != ens.n_features()) throw DimensionError("dataset width differs from model");
  std::vector<double> running(ds.rows(), ens.f0());
  std::vector<double> out;
  out.reserve(ens.trees().size() + 1);
  out.push_back(mean_squared_error(running, ds.target()));
  for (const Tree& tree : ens.trees()) {
    for (std::size_t i = 0; i < ds.rows(); ++i) {
      running[i] += ens.learning_rate() * tree_predict(tree, ds.features().row(i));
    }
    out.push_back(mean_squared_error(running, ds.target()));
  }
  return out;
}

std::vector<double> feature_importance(std::span<const Tree> trees, std::size_t n_features) {
  std::vector<double> importance(n_features, 0.0);
  bool any_split = false;
  for (const Tree& tree : trees) {
    for (const TreeNode& node : tree.nodes()) {
      if (!node.split) continue;
      any_split = true;
      importance.at(node.split->feature) += node.gain;
    }
  }
  if (!any_split) throw DataError("no splits; importance undefined");
  double total = 0.0;
  for (double v : importance) total += v;
  if (!(total > 0.0)) throw DataError("no split gain recorded; importance undefined");
  for (double& v : importance) v /= total;
  return importance;
}

std::vector<double> feature_importance(const Ensemble& ens) {
  return feature_importance(ens.trees(), ens.n_features());
}

}  // namespace gbcontrib
