#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "gbcontrib/dataset.hpp"
#include "gbcontrib/random.hpp"

namespace gbcontrib {

using NodeId = std::uint32_t;

enum class Direction { kLeft, kRight };

/// x goes LEFT iff x[feature] <= threshold.
struct SplitDecision {
  std::size_t feature = 0;
  double threshold = 0.0;

  Direction route(std::span<const double> x) const {
    return x[feature] <= threshold ? Direction::kLeft : Direction::kRight;
  }

  friend bool operator==(const SplitDecision&, const SplitDecision&) = default;
};

struct TreeNode {
  double value = 0.0;  // mean of the training targets routed here
  std::optional<SplitDecision> split;
  std::optional<NodeId> left;
  std::optional<NodeId> right;
  std::size_t n_samples = 0;
  double sse = 0.0;   // squared error of those targets around `value`
  double gain = 0.0;  // sse reduction of the split, 0 for leaves

  bool is_leaf() const { return !split.has_value(); }

  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct CartParams {
  int max_depth = 3;
  std::size_t min_samples_leaf = 1;
  std::size_t min_samples_split = 2;
  double min_gain = 0.0;

  /// Throws InvalidArgument on nonpositive sizes or a negative min_gain.
  void validate() const;

  friend bool operator==(const CartParams&, const CartParams&) = default;
};

/// Binary regression tree stored as a node arena.
///
/// The constructor checks that the nodes form a single rooted binary tree
/// (every node reachable, one parent per non-root node, children present iff
/// a split is present, split features below n_features) and throws
/// ModelFormatError otherwise.
class Tree {
 public:
  Tree(std::vector<TreeNode> nodes, NodeId root, std::size_t n_features);

  static Tree leaf(double value, std::size_t n_samples, std::size_t n_features);

  const TreeNode& node(NodeId id) const { return nodes_[id]; }
  const std::vector<TreeNode>& nodes() const { return nodes_; }
  NodeId root() const { return root_; }
  std::size_t size() const { return nodes_.size(); }
  std::size_t n_features() const { return n_features_; }

  /// Child of internal node `id` selected by x.
  NodeId child(NodeId id, std::span<const double> x) const;

  friend bool operator==(const Tree&, const Tree&) = default;

 private:
  std::vector<TreeNode> nodes_;
  NodeId root_ = 0;
  std::size_t n_features_ = 0;
};

struct SplitCandidate {
  std::size_t feature = 0;
  double threshold = 0.0;
  double gain = 0.0;
};

/// Best squared-error split of `rows`.
///
/// Thresholds are midpoints between consecutive distinct sorted values of a
/// feature. Candidates leaving fewer than min_samples_leaf rows on a side are
/// skipped. Candidates whose gain lies within 1e-12 (relative) of the maximum
/// are tied and one is drawn uniformly from `rng`; the rng is only consumed
/// when more than one candidate is tied. Returns nullopt when no gain exceeds
/// params.min_gain (gains at floating-point noise level count as zero).
std::optional<SplitCandidate> best_split(const FeatureMatrix& x, std::span<const double> y,
                                         std::span<const std::size_t> rows,
                                         const CartParams& params, Rng& rng);

Tree fit_cart(const FeatureMatrix& x, std::span<const double> y,
              std::span<const std::size_t> rows, const CartParams& params, Rng& rng);
Tree fit_cart(const FeatureMatrix& x, std::span<const double> y, const CartParams& params,
              Rng& rng);

double tree_predict(const Tree& tree, std::span<const double> x);

/// Node ids from the root to the leaf reached by x.
std::vector<NodeId> decision_path(const Tree& tree, std::span<const double> x);

}  // namespace gbcontrib
