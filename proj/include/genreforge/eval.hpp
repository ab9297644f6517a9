/// @file eval.hpp
/// @brief Train/test splitting, accuracy and confusion matrices, report
/// emitters and the four-model comparison runner.

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "genreforge/audio_io.hpp"
#include "genreforge/classifier.hpp"
#include "genreforge/features.hpp"

namespace genreforge::eval {

struct SplitSpec {
  double train_fraction = 0.8;
  std::uint64_t seed = 42;
  bool stratified = true;
};

struct SplitIndices {
  std::vector<std::size_t> train;  // ascending
  std::vector<std::size_t> test;   // ascending
};

/// Stratified: per class, seeded shuffle then the first floor(fraction * n_c)
/// go to train. Unstratified: the same over the whole set.
/// Throws TooFewSamples (a present class with < 2 members) / InvalidArgument.
SplitIndices split_indices(std::span<const int> labels, std::size_t n_classes, const SplitSpec& spec);

template <typename Item>
std::pair<BasicDataset<Item>, BasicDataset<Item>> stratified_split(const BasicDataset<Item>& ds,
                                                                   const SplitSpec& spec) {
  std::vector<int> labels;
  labels.reserve(ds.size());
  for (const auto& item : ds.items) labels.push_back(item.label_index);
  const SplitIndices idx = split_indices(labels, ds.n_classes(), spec);
  BasicDataset<Item> train{{}, ds.class_names, std::nullopt};
  BasicDataset<Item> test{{}, ds.class_names, std::nullopt};
  for (const std::size_t i : idx.train) train.items.push_back(ds.items[i]);
  for (const std::size_t i : idx.test) test.items.push_back(ds.items[i]);
  return {std::move(train), std::move(test)};
}

/// Throws LengthMismatch / EmptyDataset.
double accuracy(std::span<const int> preds, std::span<const int> labels);

struct ConfusionMatrix {
  std::size_t n_classes = 0;
  std::vector<std::size_t> counts;  // row = true class, column = predicted
  std::vector<std::string> class_names;

  std::size_t at(std::size_t truth, std::size_t pred) const { return counts[truth * n_classes + pred]; }
  std::size_t row_sum(std::size_t truth) const;
  std::size_t total() const;
  std::size_t trace() const;
  /// counts[c][c] / row_sum(c); 0 for an empty row (see empty_rows()).
  std::vector<double> per_class_recall() const;
  std::vector<std::size_t> empty_rows() const;
};

/// Throws LabelOutOfRange / LengthMismatch.
ConfusionMatrix confusion(std::span<const int> preds, std::span<const int> labels, std::size_t n_classes,
                          std::vector<std::string> class_names = {});

struct EvalReport {
  std::string model_name;
  std::string feature_source;
  bool failed = false;
  std::string error;
  double accuracy = 0.0;
  double train_accuracy = 0.0;
  ConfusionMatrix confusion;
  std::vector<double> per_class_recall;
  std::vector<std::pair<std::string, std::string>> config_snapshot;
  std::vector<CorruptFileReport> corrupt_files;
  TrainHistory history;
};

/// Labels, predictions and the model -> report (accuracy = trace / total).
EvalReport make_report(std::string model_name, std::span<const int> preds, std::span<const int> labels,
                       const std::vector<std::string>& class_names);

struct ComparisonRow {
  std::string model;
  double accuracy = 0.0;
  bool failed = false;
};

struct CompareInputs {
  std::optional<VectorDataset> vectors;
  std::string vector_source = "csv";
  std::optional<TensorDataset> tensors;
  std::vector<CorruptFileReport> corrupt;
};

struct Comparison {
  std::vector<ComparisonRow> rows;  // accuracy descending, failed rows last, then by name
  std::vector<EvalReport> reports;  // ordered by model name
  std::vector<std::pair<std::string, std::size_t>> genre_counts;
  std::vector<TrainedModel> models;  // successfully trained, ordered by model name
};

/// One shared split per feature source; each enabled model is trained and
/// scored on it. A failing model is flagged, the rest still run.
/// Throws InvalidArgument when `models` is empty.
Comparison compare_models(const CompareInputs& inputs, const SplitSpec& split, const ModelSettings& settings,
                          std::span<const ModelKind> models, std::uint64_t master_seed,
                          const std::vector<std::pair<std::string, std::string>>& config_snapshot = {});

// ---- text emitters ---------------------------------------------------------

std::string format_real(double v, int digits = 6);
std::string report_text(const EvalReport& report);
std::string confusion_csv(const ConfusionMatrix& m);
/// Binary P5 image, one cell_px x cell_px block per cell, gray level
/// 255 * count / row_sum (0 = black).
std::string confusion_pgm(const ConfusionMatrix& m, std::size_t cell_px = 8);
std::string history_csv(const TrainHistory& history);
std::string comparison_text(const Comparison& c);
std::string comparison_csv(const Comparison& c);
std::string genre_counts_csv(std::span<const std::pair<std::string, std::size_t>> counts);

}  // namespace genreforge::eval
