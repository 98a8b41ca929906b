#include <cmath>
#include <limits>

#include "doctest.h"
#include "gbcontrib/contrib.hpp"
#include "gbcontrib/error.hpp"
#include "gbcontrib/oracle.hpp"
#include "test_support.hpp"

using namespace gbcontrib;
using namespace gbcontrib::oracle;
using gbcontrib::testing::d0;
using gbcontrib::testing::d0_params;
using gbcontrib::testing::random_problem;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Tree d0_tree(int depth) {
  const Dataset ds = d0();
  Rng rng(0);
  CartParams p;
  p.max_depth = depth;
  return fit_cart(ds.features(), ds.target(), p, rng);
}

}  // namespace

TEST_CASE("naive_contributions on D0 and trivial ensembles") {
  const Ensemble ens = fit_gbdt(d0(), d0_params(1, 1.0));
  const std::vector<double> x{1, 1};
  const auto naive = naive_contributions(ens, x);
  CHECK(naive.bias == 7.5);
  CHECK(naive.contributions == std::vector<double>{7.5, 5.0});

  const Dataset flat(FeatureMatrix(2, 2, {0, 1, 2, 3}), {6, 6}, {"a", "b"});
  const auto leaf_only = naive_contributions(fit_gbdt(flat, d0_params(2, 0.1)), x);
  CHECK(leaf_only.bias == 6.0);
  CHECK(leaf_only.contributions == std::vector<double>{0.0, 0.0});

  const std::vector<double> wrong{1, 2, 3};
  CHECK_THROWS_AS(naive_contributions(ens, wrong), DimensionError);
}

TEST_CASE("naive_contributions equals feature_contributions bit for bit") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto problem = random_problem(seed, 120);
    const Ensemble ens = fit_gbdt(problem.data, problem.params);
    Rng rng(seed);
    const FeatureMatrix probes = sample_probes(problem.data.features(), 10, rng);
    for (std::size_t p = 0; p < probes.rows(); ++p) {
      const auto naive = naive_contributions(ens, probes.row(p));
      const Explanation e = feature_contributions(ens, probes.row(p));
      CHECK(naive.bias == e.bias);
      CHECK(naive.contributions == e.contributions);
    }
  }
}

TEST_CASE("enumerate_leaf_regions") {
  SUBCASE("single leaf") {
    const auto regions = enumerate_leaf_regions(Tree::leaf(1.0, 3, 2));
    REQUIRE(regions.size() == 1);
    CHECK(regions[0].box.lower == std::vector<double>{-kInf, -kInf});
    CHECK(regions[0].box.upper == std::vector<double>{kInf, kInf});
  }
  SUBCASE("depth 1 on feature 0") {
    const auto regions = enumerate_leaf_regions(d0_tree(1));
    REQUIRE(regions.size() == 2);
    CHECK(regions[0].box.upper[0] == 0.5);
    CHECK(regions[0].box.lower[0] == -kInf);
    CHECK(regions[1].box.lower[0] == 0.5);
    CHECK(regions[1].box.upper[0] == kInf);
  }
  SUBCASE("D0 depth 2") {
    const auto regions = enumerate_leaf_regions(d0_tree(2));
    REQUIRE(regions.size() == 3);
    CHECK(regions[0].box.upper == std::vector<double>{0.5, kInf});
    CHECK(regions[0].value == 0.0);
    CHECK(regions[1].box.lower == std::vector<double>{0.5, -kInf});
    CHECK(regions[1].box.upper == std::vector<double>{kInf, 0.5});
    CHECK(regions[1].value == 10.0);
    CHECK(regions[2].box.lower == std::vector<double>{0.5, 0.5});
    CHECK(regions[2].value == 20.0);
  }
}

TEST_CASE("check_partition") {
  const Tree tree = d0_tree(2);
  const auto regions = enumerate_leaf_regions(tree);
  Rng rng(3);
  std::vector<double> values(2000);
  for (double& v : values) v = rng.uniform(-1.0, 2.0);
  const FeatureMatrix probes(1000, 2, values);
  CHECK(check_partition(std::span<const LeafRegion>(regions), probes));

  for (std::size_t p = 0; p < probes.rows(); ++p) {
    std::size_t hits = 0;
    for (const auto& r : regions) {
      if (r.box.contains(probes.row(p))) {
        ++hits;
        CHECK(r.value == tree_predict(tree, probes.row(p)));
      }
    }
    CHECK(hits == 1);
  }

  RegionBox a(2), b(2);
  a.upper[0] = 1.0;
  b.upper[0] = 2.0;  // overlaps a on (-inf, 1]
  const std::vector<RegionBox> overlapping{a, b};
  const FeatureMatrix one(1, 2, {0.0, 0.0});
  CHECK_FALSE(check_partition(std::span<const RegionBox>(overlapping), one));
  CHECK_FALSE(check_partition(std::span<const RegionBox>{}, one));
}

TEST_CASE("leaf regions partition space and carry the prediction") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto problem = random_problem(seed, 150);
    const Ensemble ens = fit_gbdt(problem.data, problem.params);
    Rng rng(seed);
    for (const Tree& tree : ens.trees()) {
      const auto regions = enumerate_leaf_regions(tree);
      const FeatureMatrix probes = sample_probes(problem.data.features(), 200, rng);
      CHECK(check_partition(std::span<const LeafRegion>(regions), probes));
      for (std::size_t p = 0; p < probes.rows(); ++p) {
        for (const auto& r : regions) {
          if (r.box.contains(probes.row(p))) CHECK(r.value == tree_predict(tree, probes.row(p)));
        }
        CHECK(std::abs(telescoped_value(tree, probes.row(p)) - tree_predict(tree, probes.row(p))) <=
              1e-12);
      }
      CHECK_FALSE(find_inconsistent_node(tree));
    }
  }
}

TEST_CASE("sample_probes widens the bounding box") {
  const FeatureMatrix ref(2, 1, {0.0, 2.0});
  Rng rng(1);
  const FeatureMatrix probes = sample_probes(ref, 2000, rng);
  double lo = kInf, hi = -kInf;
  for (double v : probes.values()) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  CHECK(lo >= -2.0);
  CHECK(hi <= 4.0);
  CHECK(lo < -1.5);
  CHECK(hi > 3.5);
}

TEST_CASE("find_inconsistent_node flags a corrupted value") {
  Tree tree = d0_tree(2);
  CHECK_FALSE(find_inconsistent_node(tree));
  std::vector<TreeNode> nodes = tree.nodes();
  nodes[*nodes[tree.root()].right].value += 1.0;
  const Tree corrupt(nodes, tree.root(), tree.n_features());
  CHECK(find_inconsistent_node(corrupt).has_value());
}
