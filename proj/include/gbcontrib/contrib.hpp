#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string_view>
#include <vector>

#include "gbcontrib/cart.hpp"
#include "gbcontrib/dataset.hpp"
#include "gbcontrib/gbdt.hpp"

namespace gbcontrib {

/// One edge parent -> child of a decision path. The decision is the parent's
/// split and the residue is child.value - parent.value.
struct DecisionRecord {
  std::size_t tree_index = 0;
  std::size_t step = 0;
  std::size_t feature = 0;
  double threshold = 0.0;
  Direction direction = Direction::kLeft;
  double residue = 0.0;
  double scaled_residue = 0.0;  // learning_rate * residue

  friend bool operator==(const DecisionRecord&, const DecisionRecord&) = default;
};

/// prediction == bias + sum(contributions) up to rounding.
///
/// `contributions` is indexed like the ensemble's feature_names. The bias
/// collects f0 and the scaled root value of every tree, which no decision
/// accounts for.
struct Explanation {
  double bias = 0.0;
  std::vector<double> contributions;
  double prediction = 0.0;
  std::vector<DecisionRecord> records;

  double contribution_sum() const;

  friend bool operator==(const Explanation&, const Explanation&) = default;
};

/// (lower, upper]; an unconstrained side is infinite.
struct Interval {
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();

  bool contains(double v) const { return lower < v && v <= upper; }
  bool bounded() const { return lower > -std::numeric_limits<double>::infinity() ||
                                upper < std::numeric_limits<double>::infinity(); }

  friend bool operator==(const Interval&, const Interval&) = default;
};

struct DecisionSpace {
  std::vector<Interval> intervals;  // one per feature

  bool contains(std::span<const double> x) const;

  friend bool operator==(const DecisionSpace&, const DecisionSpace&) = default;
};

/// Records ordered by (tree_index, step); leaf edges included.
std::vector<DecisionRecord> decision_contributions(const Ensemble& ens,
                                                   std::span<const double> x);

Explanation feature_contributions(const Ensemble& ens, std::span<const double> x);

/// Intersection of every traversed half-line across all trees.
DecisionSpace decision_space(const Ensemble& ens, std::span<const double> x);

std::vector<Explanation> batch_explain(const Ensemble& ens, const FeatureMatrix& x);
std::vector<Explanation> batch_explain(const Ensemble& ens, const Dataset& ds);

/// |prediction - (bias + sum)| <= tolerance * max(1, |prediction|).
bool satisfies_local_accuracy(const Explanation& e, double tolerance = 1e-9);

}  // namespace gbcontrib
