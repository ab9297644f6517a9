/// @file knn.hpp
/// @brief Exact k-nearest-neighbours classifier (Euclidean, full linear scan),
/// k sweeps and stratified k-fold cross-validation.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "genreforge/features.hpp"
#include "genreforge/matrix.hpp"

namespace genreforge::knn {

struct KnnModel {
  Matrix points;            // one stored training vector per row
  std::vector<int> labels;  // per row
  std::size_t n_classes = 0;
  std::size_t k = 1;

  friend bool operator==(const KnnModel&, const KnnModel&) = default;
};

/// Stores the training set verbatim. Throws EmptyDataset, KTooLarge.
KnnModel fit(const VectorDataset& train, std::size_t k = 1);

/// Majority vote of the k nearest points. Neighbour distance ties go to the
/// lower stored index; vote ties go to the smaller summed distance, then
/// the lower class index. Throws DimensionMismatch.
int predict(const KnnModel& model, std::span<const double> x);

/// Vote fractions over classes.
std::vector<double> predict_proba(const KnnModel& model, std::span<const double> x);

struct SweepResult {
  std::vector<std::pair<std::size_t, double>> accuracy_by_k;  // ascending unique k
  std::size_t best_k = 1;                                     // smallest k on ties
  double best_accuracy = 0.0;
};

/// Throws KTooLarge when any k exceeds |train|, EmptyDataset when val is empty.
SweepResult sweep_k(const VectorDataset& train, const VectorDataset& val, std::vector<std::size_t> k_values);

struct CvResult {
  double mean_accuracy = 0.0;
  std::vector<double> fold_accuracy;
};

/// Fold index for each item: per class (ascending), a seeded shuffle of that
/// class's items, then round-robin assignment continuing across classes.
/// Throws TooFewSamplesPerClass when n_folds > |ds|.
std::vector<std::size_t> stratified_folds(const VectorDataset& ds, std::size_t n_folds, std::uint64_t seed);

CvResult kfold_cv(const VectorDataset& ds, std::size_t k, std::size_t n_folds, std::uint64_t seed);

}  // namespace genreforge::knn
