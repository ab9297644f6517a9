/// @file forest.cpp

#include "genreforge/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "genreforge/error.hpp"
#include "genreforge/parallel.hpp"

namespace genreforge::forest {
namespace {

constexpr double kImprovementTol = 1e-12;

double gini_from(std::span<const std::size_t> counts, std::size_t total) {
  const double n = static_cast<double>(total);
  double sum_sq = 0.0;
  for (const std::size_t c : counts) {
    const double p = static_cast<double>(c) / n;
    sum_sq += p * p;
  }
  return 1.0 - sum_sq;
}

int majority(std::span<const std::size_t> counts) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < counts.size(); ++c) {
    if (counts[c] > counts[best]) best = c;
  }
  return static_cast<int>(best);
}

std::vector<std::size_t> count_classes(const TrainingTable& t, std::span<const std::size_t> rows) {
  std::vector<std::size_t> counts(t.n_classes, 0);
  for (const std::size_t r : rows) ++counts[static_cast<std::size_t>(t.y[r])];
  return counts;
}

struct Builder {
  const TrainingTable& table;
  const TreeConfig& cfg;
  Rng& rng;
  Tree tree;
  std::vector<std::size_t> all_features;

  std::size_t grow(std::vector<std::size_t> rows, std::size_t depth) {
    const std::size_t id = tree.nodes.size();
    tree.nodes.emplace_back();
    std::vector<std::size_t> counts = count_classes(table, rows);
    const bool pure = std::count_if(counts.begin(), counts.end(), [](std::size_t c) { return c > 0; }) <= 1;
    std::optional<Split> split;
    if (depth < cfg.max_depth && !pure && rows.size() >= cfg.min_split) {
      split = best_split(table, rows, draw_features());
    }
    if (!split) {
      tree.nodes[id].is_leaf = true;
      tree.nodes[id].class_counts = std::move(counts);
      return id;
    }
    std::vector<std::size_t> left;
    std::vector<std::size_t> right;
    for (const std::size_t r : rows) {
      (table.x(r, split->feature) <= split->threshold ? left : right).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();
    const std::size_t l = grow(std::move(left), depth + 1);
    const std::size_t rgt = grow(std::move(right), depth + 1);
    TreeNode& node = tree.nodes[id];
    node.is_leaf = false;
    node.feature = split->feature;
    node.threshold = split->threshold;
    node.left = l;
    node.right = rgt;
    return id;
  }

  std::vector<std::size_t> draw_features() {
    const std::size_t d = all_features.size();
    const std::size_t m = std::min(d, cfg.max_features == 0 ? default_max_features(d) : cfg.max_features);
    // Partial Fisher-Yates: the first m entries become a uniform sample without replacement.
    for (std::size_t i = 0; i < m; ++i) {
      std::swap(all_features[i], all_features[i + rng.below(d - i)]);
    }
    std::vector<std::size_t> picked(all_features.begin(), all_features.begin() + static_cast<std::ptrdiff_t>(m));
    std::sort(picked.begin(), picked.end());
    return picked;
  }
};

}  // namespace

double gini(std::span<const std::size_t> class_counts) {
  const std::size_t total = std::accumulate(class_counts.begin(), class_counts.end(), std::size_t{0});
  if (total == 0) throw Error(ErrorKind::EmptyCounts, "gini of an empty node");
  return gini_from(class_counts, total);
}

TrainingTable to_table(const VectorDataset& ds) {
  if (ds.empty()) throw Error(ErrorKind::EmptyDataset, "forest training set is empty");
  const std::size_t dim = ds.items.front().values.size();
  TrainingTable t{Matrix(ds.size(), dim), {}, ds.n_classes()};
  t.y.reserve(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto& v = ds.items[i].values;
    if (v.size() != dim) throw Error(ErrorKind::DimensionMismatch, "ragged training vectors");
    std::copy(v.begin(), v.end(), t.x.row(i).begin());
    t.y.push_back(ds.items[i].label_index);
  }
  return t;
}

std::optional<Split> best_split(const TrainingTable& table, std::span<const std::size_t> rows,
                                std::span<const std::size_t> candidate_features) {
  const std::size_t n = rows.size();
  if (n < 2) return std::nullopt;
  const std::vector<std::size_t> parent_counts = count_classes(table, rows);
  const double parent = gini_from(parent_counts, n);

  std::vector<std::size_t> features(candidate_features.begin(), candidate_features.end());
  std::sort(features.begin(), features.end());

  std::optional<Split> best;
  std::vector<std::pair<double, int>> sorted(n);
  std::vector<std::size_t> left(table.n_classes);
  std::vector<std::size_t> right(table.n_classes);
  for (const std::size_t f : features) {
    for (std::size_t i = 0; i < n; ++i) sorted[i] = {table.x(rows[i], f), table.y[rows[i]]};
    std::sort(sorted.begin(), sorted.end());
    std::fill(left.begin(), left.end(), 0);
    right = parent_counts;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const auto c = static_cast<std::size_t>(sorted[i].second);
      ++left[c];
      --right[c];
      if (sorted[i].first == sorted[i + 1].first) continue;
      const std::size_t n_left = i + 1;
      const std::size_t n_right = n - n_left;
      const double impurity = (static_cast<double>(n_left) * gini_from(left, n_left) +
                               static_cast<double>(n_right) * gini_from(right, n_right)) /
                              static_cast<double>(n);
      // Features and thresholds are visited in ascending order, so a strict
      // improvement test keeps the lowest (feature, threshold) among ties.
      if (!best || impurity < best->impurity - kImprovementTol) {
        double threshold = sorted[i].first + (sorted[i + 1].first - sorted[i].first) / 2.0;
        if (threshold >= sorted[i + 1].first) threshold = sorted[i].first;  // adjacent doubles
        best = Split{f, threshold, impurity};
      }
    }
  }
  if (best && best->impurity < parent - kImprovementTol) return best;
  return std::nullopt;
}

std::size_t default_max_features(std::size_t n_features) {
  std::size_t m = 1;
  while (m * m < n_features) ++m;
  return m;
}

const TreeNode& Tree::leaf_for(std::span<const double> x) const {
  std::size_t i = 0;
  while (!nodes[i].is_leaf) i = x[nodes[i].feature] <= nodes[i].threshold ? nodes[i].left : nodes[i].right;
  return nodes[i];
}

int Tree::vote(std::span<const double> x) const { return majority(leaf_for(x).class_counts); }

std::size_t Tree::depth() const {
  std::vector<std::size_t> d(nodes.size(), 0);
  std::size_t deepest = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    deepest = std::max(deepest, d[i]);
    if (!nodes[i].is_leaf) {
      d[nodes[i].left] = d[i] + 1;
      d[nodes[i].right] = d[i] + 1;
    }
  }
  return deepest;
}

Tree build_tree(const TrainingTable& table, std::span<const std::size_t> rows, const TreeConfig& cfg, Rng& rng) {
  if (rows.empty()) throw Error(ErrorKind::EmptyDataset, "cannot grow a tree from zero rows");
  Builder b{table, cfg, rng, {}, {}};
  b.all_features.resize(table.x.cols);
  std::iota(b.all_features.begin(), b.all_features.end(), std::size_t{0});
  b.grow(std::vector<std::size_t>(rows.begin(), rows.end()), 0);
  return std::move(b.tree);
}

std::vector<std::size_t> bootstrap_rows(std::size_t n_rows, std::uint64_t master_seed, std::size_t index) {
  Rng rng(derive_seed(master_seed, index));
  std::vector<std::size_t> rows(n_rows);
  for (auto& r : rows) r = static_cast<std::size_t>(rng.below(n_rows));
  return rows;
}

ForestModel fit(const VectorDataset& train, const ForestConfig& cfg) {
  const TrainingTable table = to_table(train);
  if (cfg.n_estimators == 0) throw Error(ErrorKind::InvalidArgument, "n_estimators must be >= 1");
  ForestModel model;
  model.n_features = table.x.cols;
  model.n_classes = table.n_classes;
  model.config = cfg;
  model.trees.resize(cfg.n_estimators);
  parallel_for(cfg.n_estimators, [&](std::size_t t) {
    const std::vector<std::size_t> rows = bootstrap_rows(table.x.rows, cfg.seed, t);
    // Feature draws use a stream distinct from the bootstrap stream.
    Rng rng(derive_seed(derive_seed(cfg.seed, t), 1));
    model.trees[t] = build_tree(table, rows, cfg.tree, rng);
  });
  return model;
}

namespace {

std::vector<std::size_t> tally(const ForestModel& model, std::span<const double> x) {
  if (x.size() != model.n_features) {
    throw Error(ErrorKind::DimensionMismatch, "forest expects " + std::to_string(model.n_features) +
                                                  " features, got " + std::to_string(x.size()));
  }
  std::vector<std::size_t> votes(model.n_classes, 0);
  for (const auto& tree : model.trees) ++votes[static_cast<std::size_t>(tree.vote(x))];
  return votes;
}

}  // namespace

int predict(const ForestModel& model, std::span<const double> x) { return majority(tally(model, x)); }

std::vector<double> predict_proba(const ForestModel& model, std::span<const double> x) {
  const auto votes = tally(model, x);
  std::vector<double> p(votes.size());
  for (std::size_t c = 0; c < votes.size(); ++c) {
    p[c] = static_cast<double>(votes[c]) / static_cast<double>(model.trees.size());
  }
  return p;
}

}  // namespace genreforge::forest
