/// @file classifier.hpp
/// @brief Uniform train/predict surface over the four model families.

#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "genreforge/cnn.hpp"
#include "genreforge/features.hpp"
#include "genreforge/forest.hpp"
#include "genreforge/knn.hpp"
#include "genreforge/mlp.hpp"

namespace genreforge {

enum class ModelKind { Mlp, Knn, Cnn, Forest };

std::string_view to_string(ModelKind kind);
/// Accepts mlp, knn, cnn, forest (also rf). Throws InvalidArgument.
ModelKind parse_model_kind(std::string_view name);
std::vector<ModelKind> parse_model_list(std::string_view comma_separated);

/// Where a model's input features come from; decides what predict() accepts.
enum class FeatureSource { Csv, AudioVector, AudioTensor };
std::string_view to_string(FeatureSource source);
FeatureSource parse_feature_source(std::string_view name);

/// Hyperparameters for every model family.
struct ModelSettings {
  std::size_t mlp_hidden = mlp::kDefaultHidden;
  TrainConfig mlp_train{0.01, 50, 32, 0};
  bool mlp_normalize = true;

  std::size_t knn_k = 1;
  bool knn_normalize = true;

  std::size_t cnn_conv1 = 32;
  std::size_t cnn_conv2 = 64;
  std::vector<std::size_t> cnn_dense = {256, 128};
  double cnn_dropout = 0.3;
  cnn::CnnTrainConfig cnn_train{0.001, 10, 32, 0};
  bool cnn_normalize = true;

  forest::ForestConfig forest{35, {25, 2, 0}, 0};
  bool forest_normalize = false;

  bool normalize(ModelKind kind) const;
};

using ModelVariant = std::variant<mlp::MlpModel, knn::KnnModel, cnn::CnnModel, forest::ForestModel>;

struct TrainedModel {
  ModelKind kind = ModelKind::Forest;
  FeatureSource source = FeatureSource::Csv;
  std::vector<std::string> class_names;
  std::vector<std::string> feature_names;  // CSV column names, empty for audio sources
  FeatureConfig pipeline;                  // meaningful for audio sources
  std::optional<NormStats> normalization;
  ModelVariant model;
  TrainHistory history;
};

/// Fits normalization on `train` when the settings ask for it, then trains.
/// `seed` drives every random choice of the model.
TrainedModel train_vector_model(ModelKind kind, const VectorDataset& train, const ModelSettings& settings,
                                std::uint64_t seed, const VectorDataset* validation = nullptr);
TrainedModel train_tensor_model(const TensorDataset& train, const ModelSettings& settings, std::uint64_t seed,
                                const TensorDataset* validation = nullptr);

/// Raw (un-normalized) input; stored normalization is applied here.
/// MLP/CNN return softmax output, KNN and forest return vote fractions.
std::vector<double> predict_proba(const TrainedModel& model, std::span<const double> raw_vector);
std::vector<double> predict_proba(const TrainedModel& model, const Matrix& raw_grid);

std::vector<int> predict_all(const TrainedModel& model, const VectorDataset& ds);
std::vector<int> predict_all(const TrainedModel& model, const TensorDataset& ds);

}  // namespace genreforge
