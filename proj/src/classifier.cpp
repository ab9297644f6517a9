/// @file classifier.cpp

#include "genreforge/classifier.hpp"

#include <algorithm>

#include "genreforge/error.hpp"
#include "genreforge/parallel.hpp"

namespace genreforge {

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Mlp: return "mlp";
    case ModelKind::Knn: return "knn";
    case ModelKind::Cnn: return "cnn";
    case ModelKind::Forest: return "forest";
  }
  return "unknown";
}

ModelKind parse_model_kind(std::string_view name) {
  if (name == "mlp") return ModelKind::Mlp;
  if (name == "knn") return ModelKind::Knn;
  if (name == "cnn") return ModelKind::Cnn;
  if (name == "forest" || name == "rf") return ModelKind::Forest;
  throw Error(ErrorKind::InvalidArgument, "unknown model '" + std::string(name) + "'");
}

std::vector<ModelKind> parse_model_list(std::string_view list) {
  std::vector<ModelKind> out;
  while (!list.empty()) {
    const std::size_t comma = list.find(',');
    const std::string_view item = list.substr(0, comma);
    if (!item.empty()) {
      const ModelKind k = parse_model_kind(item);
      if (std::find(out.begin(), out.end(), k) == out.end()) out.push_back(k);
    }
    if (comma == std::string_view::npos) break;
    list.remove_prefix(comma + 1);
  }
  if (out.empty()) throw Error(ErrorKind::InvalidArgument, "no models selected");
  return out;
}

std::string_view to_string(FeatureSource source) {
  switch (source) {
    case FeatureSource::Csv: return "csv";
    case FeatureSource::AudioVector: return "audio-vector";
    case FeatureSource::AudioTensor: return "audio-tensor";
  }
  return "unknown";
}

FeatureSource parse_feature_source(std::string_view name) {
  if (name == "csv") return FeatureSource::Csv;
  if (name == "audio-vector") return FeatureSource::AudioVector;
  if (name == "audio-tensor") return FeatureSource::AudioTensor;
  throw Error(ErrorKind::BadFormat, "unknown feature source '" + std::string(name) + "'");
}

bool ModelSettings::normalize(ModelKind kind) const {
  switch (kind) {
    case ModelKind::Mlp: return mlp_normalize;
    case ModelKind::Knn: return knn_normalize;
    case ModelKind::Cnn: return cnn_normalize;
    case ModelKind::Forest: return forest_normalize;
  }
  return false;
}

TrainedModel train_vector_model(ModelKind kind, const VectorDataset& train, const ModelSettings& settings,
                                std::uint64_t seed, const VectorDataset* validation) {
  if (kind == ModelKind::Cnn) {
    throw Error(ErrorKind::FeatureTypeMismatch, "the CNN needs 2D MFCC tensors, not 1D feature vectors");
  }
  if (train.empty()) throw Error(ErrorKind::EmptyDataset, "training split is empty");

  TrainedModel out;
  out.kind = kind;
  out.class_names = train.class_names;
  const VectorDataset* data = &train;
  VectorDataset normalized;
  VectorDataset normalized_val;
  if (settings.normalize(kind)) {
    out.normalization = fit_normalization(train);
    normalized = apply_normalization(train, *out.normalization);
    data = &normalized;
    if (validation) {
      normalized_val = apply_normalization(*validation, *out.normalization);
      validation = &normalized_val;
    }
  }
  const std::size_t dim = data->items.front().values.size();

  switch (kind) {
    case ModelKind::Mlp: {
      TrainConfig cfg = settings.mlp_train;
      cfg.seed = derive_seed(seed, 2);
      auto model = mlp::init(dim, data->n_classes(), settings.mlp_hidden, derive_seed(seed, 1));
      auto result = mlp::train(std::move(model), *data, cfg, validation);
      out.model = std::move(result.model);
      out.history = std::move(result.history);
      break;
    }
    case ModelKind::Knn:
      out.model = knn::fit(*data, settings.knn_k);
      break;
    case ModelKind::Forest: {
      forest::ForestConfig cfg = settings.forest;
      cfg.seed = seed;
      out.model = forest::fit(*data, cfg);
      break;
    }
    case ModelKind::Cnn:
      break;
  }
  return out;
}

TrainedModel train_tensor_model(const TensorDataset& train, const ModelSettings& settings, std::uint64_t seed,
                                const TensorDataset* validation) {
  if (train.empty()) throw Error(ErrorKind::EmptyDataset, "training split is empty");
  TrainedModel out;
  out.kind = ModelKind::Cnn;
  out.source = FeatureSource::AudioTensor;
  out.class_names = train.class_names;

  const TensorDataset* data = &train;
  TensorDataset normalized;
  TensorDataset normalized_val;
  if (settings.cnn_normalize) {
    out.normalization = fit_normalization(train);
    normalized = apply_normalization(train, *out.normalization);
    data = &normalized;
    if (validation) {
      normalized_val = apply_normalization(*validation, *out.normalization);
      validation = &normalized_val;
    }
  }
  const Matrix& first = data->items.front().grid;
  cnn::Architecture arch;
  arch.in_rows = first.cols;
  arch.in_cols = first.rows;
  arch.conv1_filters = settings.cnn_conv1;
  arch.conv2_filters = settings.cnn_conv2;
  arch.dense = settings.cnn_dense;
  arch.dropout = settings.cnn_dropout;
  arch.n_classes = data->n_classes();

  cnn::CnnTrainConfig cfg = settings.cnn_train;
  cfg.seed = derive_seed(seed, 2);
  auto result = cnn::train(cnn::init(arch, derive_seed(seed, 1)), *data, cfg, validation);
  out.model = std::move(result.model);
  out.history = std::move(result.history);
  return out;
}

std::vector<double> predict_proba(const TrainedModel& m, std::span<const double> raw_vector) {
  std::vector<double> x(raw_vector.begin(), raw_vector.end());
  if (m.normalization) normalize_in_place(x, *m.normalization);
  switch (m.kind) {
    case ModelKind::Mlp: return mlp::forward(std::get<mlp::MlpModel>(m.model), x);
    case ModelKind::Knn: return knn::predict_proba(std::get<knn::KnnModel>(m.model), x);
    case ModelKind::Forest: return forest::predict_proba(std::get<forest::ForestModel>(m.model), x);
    case ModelKind::Cnn: break;
  }
  throw Error(ErrorKind::FeatureTypeMismatch, "the CNN needs a 2D MFCC grid");
}

std::vector<double> predict_proba(const TrainedModel& m, const Matrix& raw_grid) {
  if (m.kind != ModelKind::Cnn) {
    throw Error(ErrorKind::FeatureTypeMismatch, std::string(to_string(m.kind)) + " takes 1D feature vectors");
  }
  Matrix grid = raw_grid;
  if (m.normalization) normalize_in_place(grid, *m.normalization);
  return cnn::forward(std::get<cnn::CnnModel>(m.model), grid);
}

std::vector<int> predict_all(const TrainedModel& model, const VectorDataset& ds) {
  std::vector<int> preds(ds.size());
  parallel_for(ds.size(), [&](std::size_t i) {
    std::vector<double> x = ds.items[i].values;
    if (model.normalization) normalize_in_place(x, *model.normalization);
    // KNN's distance tie-break is not visible in its vote fractions, so each
    // family predicts through its own rule.
    switch (model.kind) {
      case ModelKind::Mlp: preds[i] = mlp::predict(std::get<mlp::MlpModel>(model.model), x); break;
      case ModelKind::Knn: preds[i] = knn::predict(std::get<knn::KnnModel>(model.model), x); break;
      case ModelKind::Forest: preds[i] = forest::predict(std::get<forest::ForestModel>(model.model), x); break;
      case ModelKind::Cnn:
        throw Error(ErrorKind::FeatureTypeMismatch, "the CNN needs 2D MFCC tensors");
    }
  });
  return preds;
}

std::vector<int> predict_all(const TrainedModel& model, const TensorDataset& ds) {
  std::vector<int> preds(ds.size());
  parallel_for(ds.size(), [&](std::size_t i) { preds[i] = argmax(predict_proba(model, ds.items[i].grid)); });
  return preds;
}

}  // namespace genreforge
