#pragma once

// Brute-force recomputations used to cross-check the contrib module. Nothing
// here calls into contrib or the cart traversal helpers; trees are read only
// through their node arrays.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "gbcontrib/cart.hpp"
#include "gbcontrib/dataset.hpp"
#include "gbcontrib/gbdt.hpp"
#include "gbcontrib/random.hpp"

namespace gbcontrib::oracle {

struct NaiveContributions {
  double bias = 0.0;
  std::vector<double> contributions;
};

/// Recursive descent accumulating parent values. Summation order is tree
/// major, path minor, matching feature_contributions bit for bit.
NaiveContributions naive_contributions(const Ensemble& ens, std::span<const double> x);

/// Per-feature (lower, upper] box.
struct RegionBox {
  std::vector<double> lower;
  std::vector<double> upper;

  explicit RegionBox(std::size_t n_features);
  bool contains(std::span<const double> x) const;
};

struct LeafRegion {
  RegionBox box;
  double value = 0.0;
  NodeId leaf = 0;
};

std::vector<LeafRegion> enumerate_leaf_regions(const Tree& tree);

/// True iff every probe lies in exactly one box.
bool check_partition(std::span<const RegionBox> regions, const FeatureMatrix& probes);
bool check_partition(std::span<const LeafRegion> regions, const FeatureMatrix& probes);

/// Uniform probes over the bounding box of `reference` widened by one range
/// on each side, so the unbounded end intervals get exercised.
FeatureMatrix sample_probes(const FeatureMatrix& reference, std::size_t count, Rng& rng);

/// root value + sum of path residues for x, accumulated by recursion.
double telescoped_value(const Tree& tree, std::span<const double> x);

/// Sample-count weighted mean of the children, per internal node, compared
/// with the stored value. Returns the first offending node id, if any.
std::optional<NodeId> find_inconsistent_node(const Tree& tree, double rel_tolerance = 1e-9);

}  // namespace gbcontrib::oracle
