/// @file forest.hpp
/// @brief Random forest of CART trees: Gini impurity, midpoint thresholds,
/// ceil(sqrt(d)) candidate features per node, bootstrap bagging and
/// majority voting.
///
/// Depth counts edges: the root sits at depth 0, so max_depth 0 is a stump
/// that is a single leaf.

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "genreforge/features.hpp"
#include "genreforge/matrix.hpp"
#include "genreforge/random.hpp"

namespace genreforge::forest {

/// 1 - sum (c_i / N)^2. Throws EmptyCounts when the counts sum to zero.
double gini(std::span<const std::size_t> class_counts);

/// Flat tree node. Leaves carry class counts; splits send value <= threshold left.
struct TreeNode {
  bool is_leaf = true;
  std::size_t feature = 0;
  double threshold = 0.0;
  std::size_t left = 0;   // index into Tree::nodes
  std::size_t right = 0;  // index into Tree::nodes
  std::vector<std::size_t> class_counts;

  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root; children follow their parent (pre-order)

  /// Leaf reached by x.
  const TreeNode& leaf_for(std::span<const double> x) const;
  /// Majority class of the leaf reached by x; ties go to the lower class index.
  int vote(std::span<const double> x) const;
  /// Edges on the longest root-to-leaf path.
  std::size_t depth() const;

  friend bool operator==(const Tree&, const Tree&) = default;
};

/// Row-major training table with labels.
struct TrainingTable {
  Matrix x;
  std::vector<int> y;
  std::size_t n_classes = 0;
};

TrainingTable to_table(const VectorDataset& ds);

struct Split {
  std::size_t feature = 0;
  double threshold = 0.0;
  double impurity = 0.0;  // N_L/N gini_L + N_R/N gini_R
};

/// Best split over `candidate_features` for the given rows. Thresholds are
/// midpoints between consecutive distinct sorted values. Ties go to the
/// lower feature index, then the lower threshold. Returns nothing unless
/// the split lowers impurity below the parent's.
std::optional<Split> best_split(const TrainingTable& table, std::span<const std::size_t> rows,
                                std::span<const std::size_t> candidate_features);

struct TreeConfig {
  std::size_t max_depth = 25;
  std::size_t min_split = 2;
  /// Features drawn per node; 0 means ceil(sqrt(d)).
  std::size_t max_features = 0;
};

std::size_t default_max_features(std::size_t n_features);

/// Grows one tree over `rows` (duplicates allowed, as in a bootstrap sample).
Tree build_tree(const TrainingTable& table, std::span<const std::size_t> rows, const TreeConfig& cfg, Rng& rng);

struct ForestConfig {
  std::size_t n_estimators = 35;
  TreeConfig tree;
  std::uint64_t seed = 42;
};

struct ForestModel {
  std::vector<Tree> trees;
  std::size_t n_features = 0;
  std::size_t n_classes = 0;
  ForestConfig config;

  friend bool operator==(const ForestModel& a, const ForestModel& b) {
    return a.trees == b.trees && a.n_features == b.n_features && a.n_classes == b.n_classes;
  }
};

/// Bootstrap sample for tree `index`: |train| draws with replacement from an
/// rng seeded by derive_seed(master, index).
std::vector<std::size_t> bootstrap_rows(std::size_t n_rows, std::uint64_t master_seed, std::size_t index);

/// Trees train in parallel and are stored in index order. Throws EmptyDataset.
ForestModel fit(const VectorDataset& train, const ForestConfig& cfg);

/// Throws DimensionMismatch.
int predict(const ForestModel& model, std::span<const double> x);
std::vector<double> predict_proba(const ForestModel& model, std::span<const double> x);

}  // namespace genreforge::forest
