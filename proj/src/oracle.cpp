#include "gbcontrib/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "gbcontrib/error.hpp"

namespace gbcontrib::oracle {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_width(std::size_t got, std::size_t want) {
  if (got != want) {
    throw DimensionError("oracle: feature vector has " + std::to_string(got) +
                         " values, model expects " + std::to_string(want));
  }
}

// Returns the child of `node` chosen for x, reading the raw node fields.
NodeId choose_child(const TreeNode& node, std::span<const double> x) {
  const double v = x[node.split->feature];
  return v > node.split->threshold ? *node.right : *node.left;
}

void descend(const Tree& tree, NodeId id, double alpha, std::span<const double> x,
             std::vector<double>& contributions) {
  const TreeNode& node = tree.nodes()[id];
  if (node.is_leaf()) return;
  const NodeId next = choose_child(node, x);
  const double child_value = tree.nodes()[next].value;
  contributions[node.split->feature] += alpha * (child_value - node.value);
  descend(tree, next, alpha, x, contributions);
}

double telescope(const Tree& tree, NodeId id, double accumulated, std::span<const double> x) {
  const TreeNode& node = tree.nodes()[id];
  if (node.is_leaf()) return accumulated;
  const NodeId next = choose_child(node, x);
  return telescope(tree, next, accumulated + (tree.nodes()[next].value - node.value), x);
}

void collect_regions(const Tree& tree, NodeId id, RegionBox box, std::vector<LeafRegion>& out) {
  const TreeNode& node = tree.nodes()[id];
  if (node.is_leaf()) {
    out.push_back({std::move(box), node.value, id});
    return;
  }
  const std::size_t f = node.split->feature;
  const double t = node.split->threshold;
  RegionBox left = box;
  left.upper[f] = std::min(left.upper[f], t);
  RegionBox right = std::move(box);
  right.lower[f] = std::max(right.lower[f], t);
  collect_regions(tree, *node.left, std::move(left), out);
  collect_regions(tree, *node.right, std::move(right), out);
}

}  // namespace

NaiveContributions naive_contributions(const Ensemble& ens, std::span<const double> x) {
  require_width(x.size(), ens.n_features());
  NaiveContributions out;
  out.contributions.assign(ens.n_features(), 0.0);
  double root_sum = 0.0;
  for (const Tree& tree : ens.trees()) {
    descend(tree, tree.root(), ens.learning_rate(), x, out.contributions);
    root_sum += tree.nodes()[tree.root()].value;
  }
  out.bias = ens.f0() + ens.learning_rate() * root_sum;
  return out;
}

RegionBox::RegionBox(std::size_t n_features)
    : lower(n_features, -kInf), upper(n_features, kInf) {}

bool RegionBox::contains(std::span<const double> x) const {
  if (x.size() != lower.size()) return false;
  for (std::size_t f = 0; f < x.size(); ++f) {
    if (!(lower[f] < x[f] && x[f] <= upper[f])) return false;
  }
  return true;
}

std::vector<LeafRegion> enumerate_leaf_regions(const Tree& tree) {
  std::vector<LeafRegion> out;
  collect_regions(tree, tree.root(), RegionBox(tree.n_features()), out);
  return out;
}

bool check_partition(std::span<const RegionBox> regions, const FeatureMatrix& probes) {
  for (std::size_t p = 0; p < probes.rows(); ++p) {
    const auto x = probes.row(p);
    std::size_t hits = 0;
    for (const RegionBox& box : regions) {
      if (box.contains(x) && ++hits > 1) return false;
    }
    if (hits != 1) return false;
  }
  return true;
}

bool check_partition(std::span<const LeafRegion> regions, const FeatureMatrix& probes) {
  std::vector<RegionBox> boxes;
  boxes.reserve(regions.size());
  for (const LeafRegion& r : regions) boxes.push_back(r.box);
  return check_partition(std::span<const RegionBox>(boxes), probes);
}

FeatureMatrix sample_probes(const FeatureMatrix& reference, std::size_t count, Rng& rng) {
  const std::size_t d = reference.cols();
  std::vector<double> lo(d, 0.0);
  std::vector<double> hi(d, 0.0);
  for (std::size_t f = 0; f < d; ++f) {
    if (reference.rows() == 0) break;
    lo[f] = hi[f] = reference.at(0, f);
    for (std::size_t r = 1; r < reference.rows(); ++r) {
      lo[f] = std::min(lo[f], reference.at(r, f));
      hi[f] = std::max(hi[f], reference.at(r, f));
    }
  }
  std::vector<double> values(count * d);
  for (std::size_t p = 0; p < count; ++p) {
    for (std::size_t f = 0; f < d; ++f) {
      const double width = std::max(hi[f] - lo[f], 1.0);
      values[p * d + f] = rng.uniform(lo[f] - width, hi[f] + width);
    }
  }
  return FeatureMatrix(count, d, std::move(values));
}

double telescoped_value(const Tree& tree, std::span<const double> x) {
  require_width(x.size(), tree.n_features());
  return telescope(tree, tree.root(), tree.nodes()[tree.root()].value, x);
}

std::optional<NodeId> find_inconsistent_node(const Tree& tree, double rel_tolerance) {
  const auto& nodes = tree.nodes();
  for (std::size_t id = 0; id < nodes.size(); ++id) {
    const TreeNode& node = nodes[id];
    if (node.is_leaf()) continue;
    const TreeNode& left = nodes[*node.left];
    const TreeNode& right = nodes[*node.right];
    if (left.n_samples + right.n_samples != node.n_samples) return static_cast<NodeId>(id);
    const double weighted = (static_cast<double>(left.n_samples) * left.value +
                             static_cast<double>(right.n_samples) * right.value) /
                            static_cast<double>(node.n_samples);
    const double scale = std::max({1.0, std::abs(node.value), std::abs(weighted)});
    if (std::abs(weighted - node.value) > rel_tolerance * scale) return static_cast<NodeId>(id);
  }
  return std::nullopt;
}

}  // namespace gbcontrib::oracle
