#include "gbcontrib/cart.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "gbcontrib/error.hpp"

namespace gbcontrib {

namespace {

// Gains that small relative to the node's SSE are rounding residue, e.g. a
// split of a constant-target node whose mean is not exactly representable.
constexpr double kGainNoiseFloor = 1e-12;
constexpr double kTieTolerance = 1e-12;

}  // namespace

void CartParams::validate() const {
  if (max_depth < 1) throw InvalidArgument("max_depth must be positive");
  if (min_samples_leaf < 1) throw InvalidArgument("min_samples_leaf must be positive");
  if (min_samples_split < 1) throw InvalidArgument("min_samples_split must be positive");
  if (!(min_gain >= 0.0) || !std::isfinite(min_gain)) {
    throw InvalidArgument("min_gain must be a nonnegative real");
  }
}

Tree::Tree(std::vector<TreeNode> nodes, NodeId root, std::size_t n_features)
    : nodes_(std::move(nodes)), root_(root), n_features_(n_features) {
  const auto fail = [](const std::string& what) {
    throw ModelFormatError("invalid tree: " + what);
  };
  const std::size_t n = nodes_.size();
  if (n == 0) fail("no nodes");
  if (root_ >= n) fail("root id out of range");

  std::vector<int> parents(n, 0);
  for (std::size_t id = 0; id < n; ++id) {
    const TreeNode& node = nodes_[id];
    if (!std::isfinite(node.value)) fail("node " + std::to_string(id) + " has a non-finite value");
    if (node.n_samples == 0) fail("node " + std::to_string(id) + " has no samples");
    if (node.split.has_value() != node.left.has_value() ||
        node.split.has_value() != node.right.has_value()) {
      fail("node " + std::to_string(id) + " must have both children iff it has a split");
    }
    if (!node.split) continue;
    if (node.split->feature >= n_features_) {
      fail("node " + std::to_string(id) + " splits on feature " +
           std::to_string(node.split->feature) + " of " + std::to_string(n_features_));
    }
    if (!std::isfinite(node.split->threshold)) {
      fail("node " + std::to_string(id) + " has a non-finite threshold");
    }
    for (NodeId child : {*node.left, *node.right}) {
      if (child >= n) fail("node " + std::to_string(id) + " has a child out of range");
      ++parents[child];
    }
  }
  for (std::size_t id = 0; id < n; ++id) {
    const int expected = id == root_ ? 0 : 1;
    if (parents[id] != expected) {
      fail("node " + std::to_string(id) + " has " + std::to_string(parents[id]) + " parents");
    }
  }
  // One parent per non-root node rules out sharing; reachability rules out
  // detached cycles.
  std::vector<NodeId> stack{root_};
  std::size_t reached = 0;
  while (!stack.empty()) {
    const NodeId id = stack.back();
    stack.pop_back();
    ++reached;
    if (reached > n) fail("cycle detected");
    if (const TreeNode& node = nodes_[id]; node.split) {
      stack.push_back(*node.left);
      stack.push_back(*node.right);
    }
  }
  if (reached != n) fail("unreachable nodes");
}

Tree Tree::leaf(double value, std::size_t n_samples, std::size_t n_features) {
  TreeNode node;
  node.value = value;
  node.n_samples = n_samples;
  return Tree({node}, 0, n_features);
}

NodeId Tree::child(NodeId id, std::span<const double> x) const {
  const TreeNode& node = nodes_[id];
  return node.split->route(x) == Direction::kLeft ? *node.left : *node.right;
}

std::optional<SplitCandidate> best_split(const FeatureMatrix& x, std::span<const double> y,
                                         std::span<const std::size_t> rows,
                                         const CartParams& params, Rng& rng) {
  const std::size_t n = rows.size();
  if (n < 2) return std::nullopt;

  // Centering on the node mean keeps the gain formula well conditioned.
  double sum = 0.0;
  for (std::size_t r : rows) sum += y[r];
  const double node_mean = sum / static_cast<double>(n);
  std::vector<double> centered(n);
  double total = 0.0;
  double node_sse = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    centered[i] = y[rows[i]] - node_mean;
    total += centered[i];
    node_sse += centered[i] * centered[i];
  }
  if (!(node_sse > 0.0)) return std::nullopt;
  const double parent_term = total * total / static_cast<double>(n);

  struct Scored {
    std::size_t feature;
    double lo;
    double hi;
    double gain;
  };
  std::vector<Scored> scored;
  double best = -std::numeric_limits<double>::infinity();

  std::vector<std::size_t> order(n);
  for (std::size_t f = 0; f < x.cols(); ++f) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return x.at(rows[a], f) < x.at(rows[b], f);
    });
    double left_sum = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      left_sum += centered[order[i]];
      const double lo = x.at(rows[order[i]], f);
      const double hi = x.at(rows[order[i + 1]], f);
      if (!(lo < hi)) continue;
      const std::size_t n_left = i + 1;
      const std::size_t n_right = n - n_left;
      if (n_left < params.min_samples_leaf || n_right < params.min_samples_leaf) continue;
      const double right_sum = total - left_sum;
      const double gain = left_sum * left_sum / static_cast<double>(n_left) +
                          right_sum * right_sum / static_cast<double>(n_right) - parent_term;
      best = std::max(best, gain);
      scored.push_back({f, lo, hi, gain});
    }
  }
  if (scored.empty()) return std::nullopt;
  if (!(best > params.min_gain) || !(best > kGainNoiseFloor * node_sse)) return std::nullopt;

  const double band = best - kTieTolerance * std::abs(best);
  std::vector<const Scored*> tied;
  for (const auto& s : scored) {
    if (s.gain >= band) tied.push_back(&s);
  }
  const Scored& pick = *tied[tied.size() == 1 ? 0 : rng.index(tied.size())];

  double threshold = std::midpoint(pick.lo, pick.hi);
  // Adjacent doubles: the midpoint can round up to hi, which would send hi left.
  if (!(threshold < pick.hi)) threshold = pick.lo;
  return SplitCandidate{pick.feature, threshold, std::max(pick.gain, 0.0)};
}

namespace {

class TreeBuilder {
 public:
  TreeBuilder(const FeatureMatrix& x, std::span<const double> y, const CartParams& params,
              Rng& rng)
      : x_(x), y_(y), params_(params), rng_(rng) {}

  NodeId grow(std::vector<std::size_t> rows, int depth) {
    const auto id = static_cast<NodeId>(nodes_.size());
    nodes_.emplace_back();

    const std::size_t n = rows.size();
    double sum = 0.0;
    for (std::size_t r : rows) sum += y_[r];
    const double value = sum / static_cast<double>(n);
    double sse = 0.0;
    for (std::size_t r : rows) sse += (y_[r] - value) * (y_[r] - value);
    nodes_[id].value = value;
    nodes_[id].n_samples = n;
    nodes_[id].sse = sse;

    if (depth >= params_.max_depth || n < params_.min_samples_split) return id;
    const auto split = best_split(x_, y_, rows, params_, rng_);
    if (!split) return id;

    std::vector<std::size_t> left_rows;
    std::vector<std::size_t> right_rows;
    for (std::size_t r : rows) {
      (x_.at(r, split->feature) <= split->threshold ? left_rows : right_rows).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();

    const NodeId left = grow(std::move(left_rows), depth + 1);
    const NodeId right = grow(std::move(right_rows), depth + 1);
    TreeNode& node = nodes_[id];
    node.split = SplitDecision{split->feature, split->threshold};
    node.left = left;
    node.right = right;
    node.gain = split->gain;
    return id;
  }

  std::vector<TreeNode> take() { return std::move(nodes_); }

 private:
  const FeatureMatrix& x_;
  std::span<const double> y_;
  const CartParams& params_;
  Rng& rng_;
  std::vector<TreeNode> nodes_;
};

}  // namespace

Tree fit_cart(const FeatureMatrix& x, std::span<const double> y,
              std::span<const std::size_t> rows, const CartParams& params, Rng& rng) {
  params.validate();
  if (rows.empty()) throw DataError("cannot fit a tree on zero rows");
  if (y.size() != x.rows()) throw DimensionError("target length differs from row count");
  TreeBuilder builder(x, y, params, rng);
  const NodeId root = builder.grow(std::vector<std::size_t>(rows.begin(), rows.end()), 0);
  return Tree(builder.take(), root, x.cols());
}

Tree fit_cart(const FeatureMatrix& x, std::span<const double> y, const CartParams& params,
              Rng& rng) {
  std::vector<std::size_t> rows(x.rows());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return fit_cart(x, y, rows, params, rng);
}

namespace {

void check_width(const Tree& tree, std::span<const double> x) {
  if (x.size() != tree.n_features()) {
    throw DimensionError("feature vector has " + std::to_string(x.size()) +
                         " values, tree expects " + std::to_string(tree.n_features()));
  }
}

}  // namespace

double tree_predict(const Tree& tree, std::span<const double> x) {
  check_width(tree, x);
  NodeId id = tree.root();
  while (!tree.node(id).is_leaf()) id = tree.child(id, x);
  return tree.node(id).value;
}

std::vector<NodeId> decision_path(const Tree& tree, std::span<const double> x) {
  check_width(tree, x);
  std::vector<NodeId> path{tree.root()};
  while (!tree.node(path.back()).is_leaf()) path.push_back(tree.child(path.back(), x));
  return path;
}

}  // namespace gbcontrib
