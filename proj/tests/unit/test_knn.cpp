/// @file test_knn.cpp
/// @brief KNN against brute-force oracles; sweeps and cross-validation.

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <set>

#include "genreforge/error.hpp"
#include "genreforge/knn.hpp"
#include "genreforge/random.hpp"
#include "oracles.hpp"

using namespace genreforge;

namespace {

VectorDataset make_ds(const std::vector<std::vector<double>>& pts, const std::vector<int>& labels, std::size_t classes) {
  VectorDataset ds;
  for (std::size_t c = 0; c < classes; ++c) ds.class_names.push_back(std::string(1, static_cast<char>('a' + c)));
  for (std::size_t i = 0; i < pts.size(); ++i) ds.items.push_back({pts[i], labels[i], std::to_string(i)});
  return ds;
}

/// Small random instance; integer coordinates when `ties` so exact distance ties occur.
VectorDataset random_ds(Rng& rng, std::size_t n, std::size_t dim, std::size_t classes, bool ties) {
  std::vector<std::vector<double>> pts(n, std::vector<double>(dim));
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (auto& v : pts[i]) v = ties ? static_cast<double>(rng.below(4)) : rng.normal();
    labels[i] = static_cast<int>(rng.below(classes));
  }
  return make_ds(pts, labels, classes);
}

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::Io;
}

}  // namespace

TEST_CASE("knn basic examples", "[knn]") {
  const auto ds = make_ds({{0, 0}, {10, 10}}, {0, 1}, 2);
  const auto m = knn::fit(ds, 1);
  CHECK(m.points.rows == 2);
  CHECK(knn::predict(m, std::vector<double>{1, 1}) == 0);
  for (const auto& item : ds.items) CHECK(knn::predict(m, item.values) == item.label_index);

  // Vote tie 1-1: class with the smaller summed distance wins.
  const auto tie = make_ds({{2}, {1}}, {1, 0}, 2);
  CHECK(knn::predict(knn::fit(tie, 2), std::vector<double>{0}) == 0);
  const auto tie2 = make_ds({{1}, {2}}, {1, 0}, 2);
  CHECK(knn::predict(knn::fit(tie2, 2), std::vector<double>{0}) == 1);

  // k = |train| -> global majority.
  const auto maj = make_ds({{0}, {100}, {200}, {300}, {-50}}, {2, 1, 1, 0, 1}, 3);
  for (double q : {-1000.0, 0.0, 1000.0}) CHECK(knn::predict(knn::fit(maj, 5), std::vector<double>{q}) == 1);

  const auto proba = knn::predict_proba(knn::fit(maj, 5), std::vector<double>{0});
  CHECK(proba == std::vector<double>{0.2, 0.6, 0.2});
}

TEST_CASE("knn errors", "[knn]") {
  const auto ds = make_ds({{0}, {1}}, {0, 1}, 2);
  CHECK(kind_of([&] { knn::fit(ds, 3); }) == ErrorKind::KTooLarge);
  CHECK(kind_of([&] { knn::fit(VectorDataset{}, 1); }) == ErrorKind::EmptyDataset);
  CHECK(kind_of([&] { knn::predict(knn::fit(ds, 1), std::vector<double>{1, 2}); }) == ErrorKind::DimensionMismatch);
}

TEST_CASE("knn equals the brute-force oracle", "[knn]") {
  Rng rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 3 + rng.below(25);
    const std::size_t dim = 1 + rng.below(4);
    const std::size_t classes = 2 + rng.below(3);
    const bool ties = trial % 2 == 0;
    const auto ds = random_ds(rng, n, dim, classes, ties);
    const std::size_t k = 1 + rng.below(n);
    const auto m = knn::fit(ds, k);
    for (int q = 0; q < 5; ++q) {
      std::vector<double> x(dim);
      for (auto& v : x) v = ties ? static_cast<double>(rng.below(4)) : rng.normal();
      REQUIRE(knn::predict(m, x) == testing::brute_knn(m.points, m.labels, classes, k, x));
    }
  }
}

TEST_CASE("knn: duplicate of the query decides k=1; permutation invariance in general position", "[knn]") {
  Rng rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    auto ds = random_ds(rng, 15, 3, 3, false);
    std::vector<double> q = {rng.normal(), rng.normal(), rng.normal()};
    const int label = static_cast<int>(rng.below(3));
    auto with_dup = ds;
    with_dup.items.push_back({q, label, "dup"});
    CHECK(knn::predict(knn::fit(with_dup, 1), q) == label);

    auto shuffled = ds;
    rng.shuffle(std::span(shuffled.items));
    for (std::size_t k : {1u, 3u, 5u}) CHECK(knn::predict(knn::fit(ds, k), q) == knn::predict(knn::fit(shuffled, k), q));
  }
}

TEST_CASE("knn handles large magnitudes", "[knn]") {
  const auto ds = make_ds({{1e6, -1e6}, {-1e6, 1e6}}, {0, 1}, 2);
  CHECK(knn::predict(knn::fit(ds, 1), std::vector<double>{9e5, -9e5}) == 0);
}

TEST_CASE("sweep_k dedupes and matches per-k evaluation", "[knn]") {
  const auto train = make_ds({{0}, {1}, {5}}, {0, 0, 1}, 2);
  const auto val = make_ds({{0.2}, {4.0}, {2.9}}, {0, 1, 1}, 2);
  const auto r = knn::sweep_k(train, val, {3, 1, 2, 1, 3});
  REQUIRE(r.accuracy_by_k.size() == 3);
  for (const auto& [k, acc] : r.accuracy_by_k) {
    const auto m = knn::fit(train, k);
    std::size_t hit = 0;
    for (const auto& item : val.items) {
      hit += testing::brute_knn(m.points, m.labels, 2, k, item.values) == item.label_index;
    }
    CHECK(acc == static_cast<double>(hit) / 3.0);
  }
  CHECK(r.accuracy_by_k[0].first == 1);
  CHECK(r.best_k == 1);

  const auto self = knn::sweep_k(train, train, {1});
  CHECK(self.accuracy_by_k[0].second == 1.0);
  CHECK(kind_of([&] { knn::sweep_k(train, val, {4}); }) == ErrorKind::KTooLarge);
}

TEST_CASE("stratified folds are balanced and seeded", "[knn]") {
  Rng rng(3);
  const auto ds = random_ds(rng, 47, 2, 4, false);
  const auto folds = knn::stratified_folds(ds, 5, 9);
  CHECK(folds == knn::stratified_folds(ds, 5, 9));
  for (std::size_t c = 0; c < 4; ++c) {
    std::vector<std::size_t> per_fold(5, 0);
    for (std::size_t i = 0; i < ds.size(); ++i) {
      if (ds.items[i].label_index == static_cast<int>(c)) ++per_fold[folds[i]];
    }
    const auto [lo, hi] = std::minmax_element(per_fold.begin(), per_fold.end());
    CHECK(*hi - *lo <= 1);
  }
  CHECK(kind_of([&] { knn::stratified_folds(ds, 48, 1); }) == ErrorKind::TooFewSamplesPerClass);
}

TEST_CASE("kfold_cv with one fold per item is leave-one-out", "[knn]") {
  Rng rng(14);
  const auto ds = random_ds(rng, 12, 2, 3, false);
  const auto cv = knn::kfold_cv(ds, 1, ds.size(), 4);
  std::size_t hit = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    VectorDataset rest = ds;
    rest.items.erase(rest.items.begin() + static_cast<std::ptrdiff_t>(i));
    const auto m = knn::fit(rest, 1);
    hit += testing::brute_knn(m.points, m.labels, 3, 1, ds.items[i].values) == ds.items[i].label_index;
  }
  CHECK(cv.fold_accuracy.size() == 12);
  CHECK(cv.mean_accuracy == Catch::Approx(static_cast<double>(hit) / 12.0).epsilon(1e-12));
}
