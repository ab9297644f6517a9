/// @file test_eval.cpp
/// @brief Splitting, accuracy, confusion matrices, emitters and the
/// comparison runner.

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <set>

#include "genreforge/error.hpp"
#include "genreforge/eval.hpp"
#include "genreforge/features.hpp"
#include "synth.hpp"

using namespace genreforge;
using Catch::Matchers::WithinAbs;

namespace {

ErrorKind kind_of(const auto& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an Error");
  return ErrorKind::Io;
}

std::vector<int> repeated_labels(std::size_t classes, std::size_t per_class) {
  std::vector<int> labels;
  for (std::size_t i = 0; i < per_class; ++i) {
    for (std::size_t c = 0; c < classes; ++c) labels.push_back(static_cast<int>(c));
  }
  return labels;
}

}  // namespace

TEST_CASE("stratified split takes 80 percent of each class", "[eval]") {
  const auto labels = repeated_labels(10, 100);
  const eval::SplitSpec spec{0.8, 42, true};
  const auto s = eval::split_indices(labels, 10, spec);
  CHECK(s.train.size() == 800);
  CHECK(s.test.size() == 200);
  std::vector<std::size_t> per_class(10, 0);
  for (const std::size_t i : s.train) ++per_class[static_cast<std::size_t>(labels[i])];
  for (const std::size_t n : per_class) CHECK(n == 80);

  const auto again = eval::split_indices(labels, 10, spec);
  CHECK(again.train == s.train);
  CHECK(again.test == s.test);
  const auto other = eval::split_indices(labels, 10, {0.8, 43, true});
  CHECK(other.train != s.train);
}

TEST_CASE("splits are disjoint and exhaustive for many seeds", "[eval]") {
  const std::vector<int> labels = {0, 0, 0, 1, 1, 2, 2, 2, 2, 2, 1, 0, 3, 3};
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    for (const bool strat : {true, false}) {
      const auto s = eval::split_indices(labels, 4, {0.7, seed, strat});
      std::set<std::size_t> seen(s.train.begin(), s.train.end());
      for (const std::size_t i : s.test) CHECK(seen.insert(i).second);
      CHECK(seen.size() == labels.size());
      CHECK(std::is_sorted(s.train.begin(), s.train.end()));
    }
  }
}

TEST_CASE("split errors", "[eval]") {
  const std::vector<int> lonely = {0, 0, 1};
  CHECK(kind_of([&] { eval::split_indices(lonely, 2, {}); }) == ErrorKind::TooFewSamples);
  const std::vector<int> ok = {0, 0, 1, 1};
  CHECK(kind_of([&] { eval::split_indices(ok, 2, {1.0, 1, true}); }) == ErrorKind::InvalidArgument);
  CHECK(kind_of([&] { eval::split_indices(ok, 1, {}); }) == ErrorKind::LabelOutOfRange);
}

TEST_CASE("accuracy examples and errors", "[eval]") {
  CHECK(eval::accuracy(std::vector<int>{1, 2, 3, 4}, std::vector<int>{1, 2, 0, 4}) == 0.75);
  CHECK(eval::accuracy(std::vector<int>{0}, std::vector<int>{0}) == 1.0);
  CHECK(eval::accuracy(std::vector<int>{1, 1}, std::vector<int>{0, 0}) == 0.0);
  CHECK(kind_of([] { eval::accuracy(std::vector<int>{1}, std::vector<int>{1, 2}); }) == ErrorKind::LengthMismatch);
  CHECK(kind_of([] { eval::accuracy(std::vector<int>{}, std::vector<int>{}); }) == ErrorKind::EmptyDataset);
}

TEST_CASE("confusion matrix counts and recall", "[eval]") {
  const std::vector<int> truth = {0, 0, 1, 1, 2};
  const std::vector<int> preds = {0, 1, 1, 1, 0};
  const auto m = eval::confusion(preds, truth, 3, {"a", "b", "c"});
  CHECK(m.at(0, 0) == 1);
  CHECK(m.at(0, 1) == 1);
  CHECK(m.at(1, 1) == 2);
  CHECK(m.at(2, 0) == 1);
  CHECK(m.total() == 5);
  CHECK(m.trace() == 3);
  const auto recall = m.per_class_recall();
  CHECK(recall == std::vector<double>{0.5, 1.0, 0.0});
  CHECK(m.empty_rows().empty());

  const auto sparse = eval::confusion(std::vector<int>{0}, std::vector<int>{0}, 2);
  CHECK(sparse.empty_rows() == std::vector<std::size_t>{1});

  CHECK(kind_of([] { eval::confusion(std::vector<int>{3}, std::vector<int>{0}, 3); }) == ErrorKind::LabelOutOfRange);
  CHECK(kind_of([] { eval::confusion(std::vector<int>{0}, std::vector<int>{-1}, 3); }) == ErrorKind::LabelOutOfRange);
  CHECK(kind_of([] { eval::confusion(std::vector<int>{0, 1}, std::vector<int>{0}, 3); }) == ErrorKind::LengthMismatch);
}

TEST_CASE("report text, csv and pgm emitters", "[eval]") {
  const std::vector<int> truth = {0, 1, 1, 0};
  const std::vector<int> preds = {0, 1, 0, 0};
  const auto r = eval::make_report("knn", preds, truth, {"x", "y"});
  CHECK(r.accuracy == 0.75);
  CHECK(r.per_class_recall == std::vector<double>{1.0, 0.5});

  const std::string csv = eval::confusion_csv(r.confusion);
  CHECK(csv.find("x") != std::string::npos);

  const std::string pgm = eval::confusion_pgm(r.confusion, 4);
  const std::string header = "P5\n8 8\n255\n";
  REQUIRE(pgm.substr(0, header.size()) == header);
  CHECK(pgm.size() == header.size() + 64);
  CHECK(static_cast<unsigned char>(pgm[header.size()]) == 255);          // (x, x) = 2 / 2
  CHECK(static_cast<unsigned char>(pgm[header.size() + 4]) == 0);        // (x, y) = 0 / 2
  CHECK(static_cast<unsigned char>(pgm[header.size() + 3 * 8]) == 255);  // pixel row 3 is still class x
  CHECK(static_cast<unsigned char>(pgm[header.size() + 4 * 8]) == 128);  // (y, x) = 1 / 2, rounded

  TrainHistory h(2);
  h[0].epoch = 1;
  h[1].epoch = 2;
  h[1].val_loss = 0.5;
  const std::string hist = eval::history_csv(h);
  CHECK(hist.rfind("epoch,train_loss", 0) == 0);
  CHECK(std::count(hist.begin(), hist.end(), '\n') == 3);
}

TEST_CASE("compare_models shares one split and is deterministic", "[eval]") {
  auto ingest = parse_csv(testing::synth_gtzan_csv(12, 5, 0.6, 4));
  eval::CompareInputs inputs;
  inputs.vectors = ingest.dataset;
  ModelSettings settings;
  settings.forest.n_estimators = 9;
  settings.mlp_train.epochs = 20;
  const std::vector<ModelKind> kinds = {ModelKind::Knn, ModelKind::Forest, ModelKind::Mlp};
  const eval::SplitSpec split{0.75, 3, true};

  const auto a = eval::compare_models(inputs, split, settings, kinds, 17);
  const auto b = eval::compare_models(inputs, split, settings, kinds, 17);
  REQUIRE(a.reports.size() == 3);
  CHECK(a.reports[0].model_name == "forest");
  CHECK(a.reports[1].model_name == "knn");
  CHECK(a.reports[2].model_name == "mlp");
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK_FALSE(a.reports[i].failed);
    CHECK(a.reports[i].accuracy == b.reports[i].accuracy);
    CHECK(a.reports[i].confusion.counts == b.reports[i].confusion.counts);
    CHECK(a.reports[i].confusion.total() == 12);  // 3 test items per class
  }
  CHECK(eval::comparison_csv(a) == eval::comparison_csv(b));
  for (std::size_t i = 1; i < a.rows.size(); ++i) CHECK(a.rows[i - 1].accuracy >= a.rows[i].accuracy);
  CHECK(a.genre_counts.size() == 4);

  const std::vector<ModelKind> one = {ModelKind::Knn};
  const auto single = eval::compare_models(inputs, split, settings, one, 17);
  REQUIRE(single.reports.size() == 1);
  CHECK(single.reports[0].accuracy == a.reports[1].accuracy);

  const std::vector<ModelKind> with_cnn = {ModelKind::Cnn, ModelKind::Knn};
  const auto partial = eval::compare_models(inputs, split, settings, with_cnn, 17);
  CHECK(partial.reports[0].failed);
  CHECK(partial.reports[0].error.find("FeatureTypeMismatch") != std::string::npos);
  CHECK_FALSE(partial.reports[1].failed);
  CHECK(partial.rows.back().failed);

  CHECK(kind_of([&] { eval::compare_models(inputs, split, settings, {}, 1); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("identical predictions give identical reports", "[eval]") {
  const std::vector<int> truth = {0, 1, 2, 2, 1, 0};
  const std::vector<int> preds = {0, 2, 2, 1, 1, 0};
  const auto a = eval::make_report("a", preds, truth, {"p", "q", "r"});
  const auto b = eval::make_report("b", preds, truth, {"p", "q", "r"});
  CHECK(a.accuracy == b.accuracy);
  CHECK(a.confusion.counts == b.confusion.counts);
  CHECK_THAT(a.accuracy, WithinAbs(4.0 / 6.0, 1e-15));
}
