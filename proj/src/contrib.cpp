#include "gbcontrib/contrib.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gbcontrib/error.hpp"

namespace gbcontrib {

namespace {

void check_width(const Ensemble& ens, std::size_t width) {
  if (width != ens.n_features()) {
    throw DimensionError("feature vector has " + std::to_string(width) +
                         " values, model expects " + std::to_string(ens.n_features()));
  }
}

}  // namespace

double Explanation::contribution_sum() const {
  double sum = 0.0;
  for (double c : contributions) sum += c;
  return sum;
}

bool DecisionSpace::contains(std::span<const double> x) const {
  if (x.size() != intervals.size()) return false;
  for (std::size_t f = 0; f < x.size(); ++f) {
    if (!intervals[f].contains(x[f])) return false;
  }
  return true;
}

std::vector<DecisionRecord> decision_contributions(const Ensemble& ens,
                                                   std::span<const double> x) {
  check_width(ens, x.size());
  std::vector<DecisionRecord> records;
  const double alpha = ens.learning_rate();
  for (std::size_t l = 0; l < ens.trees().size(); ++l) {
    const Tree& tree = ens.trees()[l];
    const std::vector<NodeId> path = decision_path(tree, x);
    // Edge j joins path[j] (whose split is the decision) and path[j + 1].
    for (std::size_t j = 0; j + 1 < path.size(); ++j) {
      const TreeNode& parent = tree.node(path[j]);
      const TreeNode& child = tree.node(path[j + 1]);
      DecisionRecord rec;
      rec.tree_index = l;
      rec.step = j;
      rec.feature = parent.split->feature;
      rec.threshold = parent.split->threshold;
      rec.direction = path[j + 1] == *parent.left ? Direction::kLeft : Direction::kRight;
      rec.residue = child.value - parent.value;
      rec.scaled_residue = alpha * rec.residue;
      records.push_back(rec);
    }
  }
  return records;
}

Explanation feature_contributions(const Ensemble& ens, std::span<const double> x) {
  Explanation e;
  e.records = decision_contributions(ens, x);
  e.contributions.assign(ens.n_features(), 0.0);
  for (const DecisionRecord& rec : e.records) e.contributions[rec.feature] += rec.scaled_residue;

  double root_sum = 0.0;
  for (const Tree& tree : ens.trees()) root_sum += tree.node(tree.root()).value;
  e.bias = ens.f0() + ens.learning_rate() * root_sum;
  e.prediction = gbdt_predict(ens, x);
  return e;
}

DecisionSpace decision_space(const Ensemble& ens, std::span<const double> x) {
  check_width(ens, x.size());
  DecisionSpace space;
  space.intervals.resize(ens.n_features());
  for (const Tree& tree : ens.trees()) {
    NodeId id = tree.root();
    while (!tree.node(id).is_leaf()) {
      const SplitDecision& split = *tree.node(id).split;
      Interval& iv = space.intervals[split.feature];
      if (split.route(x) == Direction::kLeft) {
        iv.upper = std::min(iv.upper, split.threshold);
      } else {
        iv.lower = std::max(iv.lower, split.threshold);
      }
      id = tree.child(id, x);
    }
  }
  return space;
}

std::vector<Explanation> batch_explain(const Ensemble& ens, const FeatureMatrix& x) {
  check_width(ens, x.cols());
  std::vector<Explanation> out;
  out.reserve(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) out.push_back(feature_contributions(ens, x.row(r)));
  return out;
}

std::vector<Explanation> batch_explain(const Ensemble& ens, const Dataset& ds) {
  return batch_explain(ens, ds.features());
}

bool satisfies_local_accuracy(const Explanation& e, double tolerance) {
  const double reconstructed = e.bias + e.contribution_sum();
  return std::abs(e.prediction - reconstructed) <= tolerance * std::max(1.0, std::abs(e.prediction));
}

}  // namespace gbcontrib
