/// @file knn.cpp

#include "genreforge/knn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "genreforge/error.hpp"
#include "genreforge/parallel.hpp"
#include "genreforge/random.hpp"

namespace genreforge::knn {
namespace {

struct Neighbour {
  double dist2;
  std::size_t index;
};

/// All stored points ordered by (squared distance, index).
std::vector<Neighbour> rank_neighbours(const KnnModel& model, std::span<const double> x, std::size_t keep) {
  if (x.size() != model.points.cols) {
    throw Error(ErrorKind::DimensionMismatch, "KNN expects " + std::to_string(model.points.cols) +
                                                  " features, got " + std::to_string(x.size()));
  }
  std::vector<Neighbour> all(model.points.rows);
  for (std::size_t i = 0; i < model.points.rows; ++i) {
    const auto p = model.points.row(i);
    double d2 = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double d = p[j] - x[j];
      d2 += d * d;
    }
    all[i] = {d2, i};
  }
  const auto less = [](const Neighbour& a, const Neighbour& b) {
    return a.dist2 < b.dist2 || (a.dist2 == b.dist2 && a.index < b.index);
  };
  keep = std::min(keep, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep), all.end(), less);
  all.resize(keep);
  return all;
}

struct Tally {
  std::vector<std::size_t> votes;
  std::vector<double> dist_sum;
};

Tally tally(const KnnModel& model, std::span<const Neighbour> nearest) {
  Tally t{std::vector<std::size_t>(model.n_classes, 0), std::vector<double>(model.n_classes, 0.0)};
  for (const auto& n : nearest) {
    const auto c = static_cast<std::size_t>(model.labels[n.index]);
    ++t.votes[c];
    t.dist_sum[c] += std::sqrt(n.dist2);
  }
  return t;
}

int vote(const Tally& t) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < t.votes.size(); ++c) {
    if (t.votes[c] > t.votes[best] || (t.votes[c] == t.votes[best] && t.dist_sum[c] < t.dist_sum[best])) {
      best = c;
    }
  }
  return static_cast<int>(best);
}

}  // namespace

KnnModel fit(const VectorDataset& train, std::size_t k) {
  if (train.empty()) throw Error(ErrorKind::EmptyDataset, "KNN training set is empty");
  if (k == 0 || k > train.size()) {
    throw Error(ErrorKind::KTooLarge, "k=" + std::to_string(k) + " with " + std::to_string(train.size()) +
                                          " stored points");
  }
  const std::size_t dim = train.items.front().values.size();
  KnnModel m{Matrix(train.size(), dim), {}, train.n_classes(), k};
  m.labels.reserve(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) {
    const auto& v = train.items[i].values;
    if (v.size() != dim) throw Error(ErrorKind::DimensionMismatch, "ragged training vectors");
    std::copy(v.begin(), v.end(), m.points.row(i).begin());
    m.labels.push_back(train.items[i].label_index);
  }
  return m;
}

int predict(const KnnModel& model, std::span<const double> x) {
  const auto nearest = rank_neighbours(model, x, model.k);
  return vote(tally(model, nearest));
}

std::vector<double> predict_proba(const KnnModel& model, std::span<const double> x) {
  const auto nearest = rank_neighbours(model, x, model.k);
  const Tally t = tally(model, nearest);
  std::vector<double> p(model.n_classes, 0.0);
  for (std::size_t c = 0; c < p.size(); ++c) {
    p[c] = static_cast<double>(t.votes[c]) / static_cast<double>(nearest.size());
  }
  return p;
}

SweepResult sweep_k(const VectorDataset& train, const VectorDataset& val, std::vector<std::size_t> k_values) {
  if (val.empty()) throw Error(ErrorKind::EmptyDataset, "validation set is empty");
  std::sort(k_values.begin(), k_values.end());
  k_values.erase(std::unique(k_values.begin(), k_values.end()), k_values.end());
  if (k_values.empty()) throw Error(ErrorKind::InvalidArgument, "no k values to sweep");
  if (k_values.front() == 0) throw Error(ErrorKind::KTooLarge, "k must be >= 1");
  const std::size_t k_max = k_values.back();
  const KnnModel model = fit(train, k_max);  // rejects k_max > |train|

  // One ranking per validation item serves every k.
  std::vector<std::vector<int>> predictions(val.size());
  parallel_for(val.size(), [&](std::size_t i) {
    const auto nearest = rank_neighbours(model, val.items[i].values, k_max);
    predictions[i].reserve(k_values.size());
    for (const std::size_t k : k_values) {
      predictions[i].push_back(vote(tally(model, std::span(nearest).first(k))));
    }
  });

  SweepResult result;
  for (std::size_t j = 0; j < k_values.size(); ++j) {
    std::size_t correct = 0;
    for (std::size_t i = 0; i < val.size(); ++i) {
      if (predictions[i][j] == val.items[i].label_index) ++correct;
    }
    const double acc = static_cast<double>(correct) / static_cast<double>(val.size());
    result.accuracy_by_k.emplace_back(k_values[j], acc);
    if (j == 0 || acc > result.best_accuracy) {
      result.best_k = k_values[j];
      result.best_accuracy = acc;
    }
  }
  return result;
}

std::vector<std::size_t> stratified_folds(const VectorDataset& ds, std::size_t n_folds, std::uint64_t seed) {
  if (n_folds < 2) throw Error(ErrorKind::InvalidArgument, "n_folds must be >= 2");
  if (n_folds > ds.size()) {
    throw Error(ErrorKind::TooFewSamplesPerClass, std::to_string(ds.size()) + " items cannot fill " +
                                                      std::to_string(n_folds) + " folds");
  }
  std::vector<std::vector<std::size_t>> by_class(ds.n_classes());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    by_class[static_cast<std::size_t>(ds.items[i].label_index)].push_back(i);
  }
  // Round-robin continues across classes, so per-class and overall fold
  // sizes both differ by at most one, and n_folds == |ds| is leave-one-out.
  Rng rng(seed);
  std::vector<std::size_t> fold(ds.size(), 0);
  std::size_t cursor = 0;
  for (auto& members : by_class) {
    rng.shuffle(std::span(members));
    for (const std::size_t i : members) fold[i] = cursor++ % n_folds;
  }
  return fold;
}

CvResult kfold_cv(const VectorDataset& ds, std::size_t k, std::size_t n_folds, std::uint64_t seed) {
  const std::vector<std::size_t> fold = stratified_folds(ds, n_folds, seed);
  CvResult out;
  for (std::size_t f = 0; f < n_folds; ++f) {
    VectorDataset train{{}, ds.class_names, std::nullopt};
    VectorDataset val{{}, ds.class_names, std::nullopt};
    for (std::size_t i = 0; i < ds.size(); ++i) (fold[i] == f ? val : train).items.push_back(ds.items[i]);
    const KnnModel model = fit(train, k);
    std::vector<int> preds(val.size());
    parallel_for(val.size(), [&](std::size_t i) { preds[i] = predict(model, val.items[i].values); });
    std::size_t correct = 0;
    for (std::size_t i = 0; i < val.size(); ++i) correct += preds[i] == val.items[i].label_index ? 1 : 0;
    out.fold_accuracy.push_back(static_cast<double>(correct) / static_cast<double>(val.size()));
  }
  out.mean_accuracy = std::accumulate(out.fold_accuracy.begin(), out.fold_accuracy.end(), 0.0) /
                      static_cast<double>(n_folds);
  return out;
}

}  // namespace genreforge::knn
