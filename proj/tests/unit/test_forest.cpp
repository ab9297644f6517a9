/// @file test_forest.cpp
/// @brief Gini, split search against exhaustive enumeration, tree growth and
/// forest voting.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <numeric>

#include "genreforge/error.hpp"
#include "genreforge/forest.hpp"
#include "genreforge/random.hpp"
#include "oracles.hpp"

using namespace genreforge;
using Catch::Matchers::WithinAbs;

namespace {

forest::TrainingTable random_table(Rng& rng, std::size_t n, std::size_t d, std::size_t classes, bool coarse) {
  forest::TrainingTable t{Matrix(n, d), std::vector<int>(n), classes};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t f = 0; f < d; ++f) {
      t.x(i, f) = coarse ? static_cast<double>(rng.below(5)) : rng.normal();
    }
    t.y[i] = static_cast<int>(rng.below(classes));
  }
  return t;
}

VectorDataset noisy_blobs(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  VectorDataset ds;
  ds.class_names = {"a", "b", "c"};
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % 3);
    ds.items.push_back({{3.0 * label + rng.normal(), rng.normal(), 0.5 * rng.normal()}, label, {}});
  }
  return ds;
}

std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> r(n);
  std::iota(r.begin(), r.end(), std::size_t{0});
  return r;
}

}  // namespace

TEST_CASE("gini impurity examples", "[forest]") {
  CHECK(forest::gini(std::vector<std::size_t>{5, 0}) == 0.0);
  CHECK_THAT(forest::gini(std::vector<std::size_t>{5, 5}), WithinAbs(0.5, 1e-15));
  CHECK_THAT(forest::gini(std::vector<std::size_t>{1, 1, 1, 1}), WithinAbs(0.75, 1e-15));
  CHECK_THAT(forest::gini(std::vector<std::size_t>{3, 1}), WithinAbs(0.375, 1e-15));
  try {
    forest::gini(std::vector<std::size_t>{0, 0});
    FAIL("expected EmptyCounts");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::EmptyCounts);
  }
}

TEST_CASE("best_split on a one-dimensional separable set", "[forest]") {
  forest::TrainingTable t{Matrix(4, 1), {0, 0, 1, 1}, 2};
  t.x.data = {1.0, 2.0, 8.0, 9.0};
  const auto rows = all_rows(4);
  const std::vector<std::size_t> feats = {0};
  const auto s = forest::best_split(t, rows, feats);
  REQUIRE(s.has_value());
  CHECK(s->feature == 0);
  CHECK(s->threshold == 5.0);
  CHECK(s->impurity == 0.0);

  t.y = {1, 1, 1, 1};
  CHECK_FALSE(forest::best_split(t, rows, feats).has_value());
}

TEST_CASE("best_split matches exhaustive enumeration", "[forest]") {
  Rng rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.below(40);
    const std::size_t d = 1 + rng.below(5);
    const std::size_t classes = 2 + rng.below(3);
    const auto t = random_table(rng, n, d, classes, trial % 2 == 0);
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < n; ++i) rows.push_back(rng.below(n));  // duplicates allowed
    std::vector<std::size_t> feats = all_rows(d);
    const auto got = forest::best_split(t, rows, feats);
    const auto want = testing::exhaustive_best_split(t, rows, feats);
    REQUIRE(got.has_value() == want.has_value());
    if (got) {
      CHECK(got->feature == want->feature);
      CHECK_THAT(got->threshold, WithinAbs(want->threshold, 1e-12 * std::max(1.0, std::abs(want->threshold))));
      CHECK_THAT(got->impurity, WithinAbs(want->impurity, 1e-12));
    }
  }
}

TEST_CASE("tree growth respects depth limits and tallies its rows", "[forest]") {
  const auto ds = noisy_blobs(60, 3);
  const auto table = forest::to_table(ds);
  const auto rows = all_rows(table.x.rows);

  Rng stump_rng(1);
  const auto stump = forest::build_tree(table, rows, {0, 2, 0}, stump_rng);
  CHECK(stump.nodes.size() == 1);
  CHECK(stump.nodes[0].is_leaf);
  CHECK(stump.nodes[0].class_counts == std::vector<std::size_t>{20, 20, 20});

  forest::TrainingTable sep{Matrix(6, 1), {0, 0, 0, 1, 1, 1}, 2};
  sep.x.data = {0.0, 0.1, 0.2, 5.0, 5.1, 5.2};
  Rng sep_rng(1);
  CHECK(forest::build_tree(sep, all_rows(6), {25, 2, 0}, sep_rng).depth() == 1);

  Rng rng(9);
  for (std::size_t max_depth : {1, 2, 3, 6}) {
    const auto boot = forest::bootstrap_rows(table.x.rows, 5, max_depth);
    const auto tree = forest::build_tree(table, boot, {max_depth, 2, 0}, rng);
    CHECK(tree.depth() <= max_depth);
    std::map<const forest::TreeNode*, std::vector<std::size_t>> tally;
    for (const std::size_t r : boot) {
      const auto& leaf = tree.leaf_for(table.x.row(r));
      auto& counts = tally[&leaf];
      counts.resize(table.n_classes);
      ++counts[static_cast<std::size_t>(table.y[r])];
    }
    for (const auto& [leaf, counts] : tally) CHECK(leaf->class_counts == counts);
  }
}

TEST_CASE("bootstrap rows are deterministic and full sized", "[forest]") {
  const auto a = forest::bootstrap_rows(50, 7, 3);
  CHECK(a.size() == 50);
  CHECK(a == forest::bootstrap_rows(50, 7, 3));
  CHECK(a != forest::bootstrap_rows(50, 7, 4));
  for (const std::size_t r : a) CHECK(r < 50);
  CHECK(forest::default_max_features(57) == 8);
  CHECK(forest::default_max_features(64) == 8);
  CHECK(forest::default_max_features(1) == 1);
}

TEST_CASE("forest fit: determinism, monotone invariance, training fit", "[forest]") {
  const auto ds = noisy_blobs(90, 4);
  forest::ForestConfig cfg{7, {25, 2, 0}, 13};
  const auto a = forest::fit(ds, cfg);
  const auto b = forest::fit(ds, cfg);
  CHECK(a == b);
  CHECK(a.trees.size() == 7);

  VectorDataset shifted = ds;
  for (auto& item : shifted.items) {
    for (double& v : item.values) v = 2.0 * v + 1.0;
  }
  const auto c = forest::fit(shifted, cfg);
  Rng rng(2);
  for (int i = 0; i < 200; ++i) {
    const std::vector<double> x = {4.0 * rng.normal() + 3.0, rng.normal(), rng.normal()};
    std::vector<double> tx = x;
    for (double& v : tx) v = 2.0 * v + 1.0;
    CHECK(forest::predict(a, x) == forest::predict(c, tx));
  }

  const auto single = forest::fit(noisy_blobs(50, 8), {1, {25, 2, 0}, 3});
  const auto train50 = noisy_blobs(50, 8);
  std::size_t correct = 0;
  for (const auto& item : train50.items) correct += forest::predict(single, item.values) == item.label_index;
  CHECK(static_cast<double>(correct) / 50.0 >= 0.9);

  const auto p = forest::predict_proba(a, ds.items[0].values);
  CHECK_THAT(std::accumulate(p.begin(), p.end(), 0.0), WithinAbs(1.0, 1e-12));
  CHECK_THROWS_AS(forest::predict(a, std::vector<double>{1.0}), Error);
  CHECK_THROWS_AS(forest::fit(VectorDataset{}, cfg), Error);
}
