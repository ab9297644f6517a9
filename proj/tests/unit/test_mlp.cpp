/// @file test_mlp.cpp
/// @brief MLP forward, loss, gradients (finite differences) and SGD training.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numeric>

#include "genreforge/error.hpp"
#include "genreforge/mlp.hpp"
#include "genreforge/random.hpp"
#include "oracles.hpp"

using namespace genreforge;
using Catch::Matchers::WithinAbs;

namespace {

std::vector<double> random_vector(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal();
  return v;
}

double sum_abs(const mlp::MlpModel& g) {
  double s = 0.0;
  for (const double v : g.w1.data) s += std::abs(v);
  for (const double v : g.b1) s += std::abs(v);
  for (const double v : g.w2.data) s += std::abs(v);
  for (const double v : g.b2) s += std::abs(v);
  return s;
}

/// Two Gaussian blobs in 2D, separated along the diagonal.
VectorDataset blobs(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  VectorDataset ds;
  ds.class_names = {"a", "b"};
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % 2);
    const double c = label == 0 ? -2.0 : 2.0;
    ds.items.push_back({{c + 0.4 * rng.normal(), c + 0.4 * rng.normal()}, label, ""});
  }
  return ds;
}

double dataset_loss(const mlp::MlpModel& m, const VectorDataset& ds) {
  double s = 0.0;
  for (const auto& item : ds.items) s += mlp::loss(mlp::forward(m, item.values), item.label_index);
  return s / static_cast<double>(ds.size());
}

}  // namespace

TEST_CASE("mlp init: determinism, zero biases, He variance", "[mlp]") {
  const auto a = mlp::init(57, 10, 1024, 3);
  CHECK(a == mlp::init(57, 10, 1024, 3));
  CHECK_FALSE(a == mlp::init(57, 10, 1024, 4));
  for (const double b : a.b1) CHECK(b == 0.0);
  for (const double b : a.b2) CHECK(b == 0.0);
  const double n = static_cast<double>(a.w1.data.size());
  const double mean = std::accumulate(a.w1.data.begin(), a.w1.data.end(), 0.0) / n;
  double var = 0.0;
  for (const double w : a.w1.data) var += (w - mean) * (w - mean);
  var /= n;
  CHECK(std::abs(var - 2.0 / 57.0) <= 0.2 * 2.0 / 57.0);
}

TEST_CASE("mlp forward: zero model is uniform; softmax is stable and shift invariant", "[mlp]") {
  mlp::MlpModel zero = mlp::init(4, 10, 8, 1);
  std::fill(zero.w1.data.begin(), zero.w1.data.end(), 0.0);
  std::fill(zero.w2.data.begin(), zero.w2.data.end(), 0.0);
  for (const double p : mlp::forward(zero, std::vector<double>{1, 2, 3, 4})) CHECK_THAT(p, WithinAbs(0.1, 1e-15));
  CHECK(mlp::predict(zero, std::vector<double>{1, 2, 3, 4}) == 0);

  const std::vector<double> logits = {1e4, -1e4, 3.0, 1e4 - 1.0};
  const auto p = softmax(logits);
  double total = 0.0;
  for (const double v : p) {
    CHECK(std::isfinite(v));
    CHECK(v >= 0.0);
    total += v;
  }
  CHECK_THAT(total, WithinAbs(1.0, 1e-12));
  std::vector<double> shifted = {4.0, 1.0, -2.0};
  const auto p1 = softmax(shifted);
  for (double& v : shifted) v += 123.0;
  const auto p2 = softmax(shifted);
  for (std::size_t i = 0; i < 3; ++i) CHECK_THAT(p1[i], WithinAbs(p2[i], 1e-12));
  CHECK(argmax(std::vector<double>{0.1, 0.3, 0.3}) == 1);
  CHECK(argmax(std::vector<double>{0, 0, 0, 0, 0, 0, 0, 0.9}) == 7);
}

TEST_CASE("mlp loss values", "[mlp]") {
  CHECK_THAT(mlp::loss(std::vector<double>{0.0, 1.0}, 1), WithinAbs(0.0, 1e-11));
  CHECK_THAT(mlp::loss(std::vector<double>(10, 0.1), 3), WithinAbs(2.302585, 1e-6));
  CHECK_THAT(mlp::loss(std::vector<double>{0.5, 0.5}, 0), WithinAbs(0.693147, 1e-6));
}

TEST_CASE("mlp forward rejects wrong input length", "[mlp]") {
  const auto m = mlp::init(3, 2, 4, 1);
  try {
    mlp::forward(m, std::vector<double>{1, 2});
    FAIL("expected DimensionMismatch");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DimensionMismatch);
  }
}

TEST_CASE("mlp backward matches central finite differences", "[mlp]") {
  Rng rng(21);
  std::size_t kinks = 0;
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t in = 1 + rng.below(6);
    const std::size_t hidden = 1 + rng.below(12);
    const std::size_t classes = 2 + rng.below(4);
    auto m = mlp::init(in, classes, hidden, rng.next_u64());
    for (double& b : m.b1) b = 0.1 * rng.normal();
    for (double& b : m.b2) b = 0.1 * rng.normal();
    const auto x = random_vector(rng, in);
    const int label = static_cast<int>(rng.below(classes));
    const auto r = testing::mlp_gradient_check(m, x, label);
    kinks += r.skipped_kinks;
    CHECK(r.max_rel_error <= 1e-5);
    CHECK(r.checked > 0);
  }
  CHECK(kinks <= 2);
}

TEST_CASE("mlp backward on the 5-dim, 3-class example", "[mlp]") {
  Rng rng(5);
  const auto m = mlp::init(5, 3, 16, 77);
  const auto r = testing::mlp_gradient_check(m, random_vector(rng, 5), 2);
  CHECK(r.max_rel_error <= 1e-5);
}

TEST_CASE("mlp gradients vanish when the label is certain; dead units get none", "[mlp]") {
  auto m = mlp::init(3, 3, 6, 9);
  std::fill(m.b2.begin(), m.b2.end(), 0.0);
  m.b2[1] = 60.0;
  const std::vector<double> x = {0.3, -0.2, 0.5};
  CHECK(sum_abs(mlp::backward(m, x, 1)) < 1e-20);

  auto dead = mlp::init(3, 3, 6, 9);
  dead.b1[2] = -100.0;
  const auto g = mlp::backward(dead, x, 0);
  for (std::size_t i = 0; i < 3; ++i) CHECK(g.w1(2, i) == 0.0);
  CHECK(g.b1[2] == 0.0);
}

TEST_CASE("mlp training: lr 0, separable blobs, descent step, determinism", "[mlp]") {
  const VectorDataset ds = blobs(20, 4);
  for (const auto& item : ds.items) {
    REQUIRE((item.values[0] + item.values[1] > 0.0) == (item.label_index == 1));  // x + y = 0 separates
  }
  const auto start = mlp::init(2, 2, 16, 5);

  TrainConfig frozen{0.0, 3, 4, 1};
  CHECK(mlp::train(start, ds, frozen).model == start);

  TrainConfig cfg{0.1, 200, 4, 1};
  const auto trained = mlp::train(start, ds, cfg);
  std::size_t correct = 0;
  for (const auto& item : ds.items) correct += mlp::predict(trained.model, item.values) == item.label_index;
  CHECK(correct == ds.size());
  REQUIRE(trained.history.size() == 200);
  for (const auto& rec : trained.history) CHECK(std::isfinite(rec.train_loss));
  CHECK(mlp::train(start, ds, cfg).model == trained.model);

  TrainConfig step{1e-4, 1, ds.size(), 1};
  CHECK(dataset_loss(mlp::train(start, ds, step).model, ds) < dataset_loss(start, ds));

  const auto with_val = mlp::train(start, ds, TrainConfig{0.1, 2, 4, 1}, &ds);
  CHECK(with_val.history.back().val_accuracy.has_value());
  CHECK_THROWS_AS(mlp::train(start, VectorDataset{}, cfg), Error);
}
