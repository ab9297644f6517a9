/// @file mlp.hpp
/// @brief Baseline multilayer perceptron: input -> dense(hidden, ReLU) ->
/// dense(n_classes) -> softmax, trained with plain mini-batch SGD on
/// categorical cross-entropy.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "genreforge/features.hpp"
#include "genreforge/matrix.hpp"
#include "genreforge/nn_common.hpp"

namespace genreforge::mlp {

constexpr std::size_t kDefaultHidden = 1024;

struct MlpModel {
  Matrix w1;               // [hidden x in_dim]
  std::vector<double> b1;  // [hidden]
  Matrix w2;               // [n_classes x hidden]
  std::vector<double> b2;  // [n_classes]

  std::size_t in_dim() const { return w1.cols; }
  std::size_t hidden() const { return w1.rows; }
  std::size_t n_classes() const { return w2.rows; }

  friend bool operator==(const MlpModel&, const MlpModel&) = default;
};

/// Same layout as the model; used for gradients.
using MlpGradients = MlpModel;

/// He-normal weights (variance 2 / fan_in), zero biases.
MlpModel init(std::size_t in_dim, std::size_t n_classes, std::size_t hidden = kDefaultHidden,
              std::uint64_t seed = 0);

struct ForwardCache {
  std::vector<double> hidden_pre;
  std::vector<double> hidden;
  std::vector<double> logits;
  std::vector<double> probs;
};

/// Throws DimensionMismatch.
std::vector<double> forward(const MlpModel& model, std::span<const double> x);
ForwardCache forward_cached(const MlpModel& model, std::span<const double> x);

double loss(std::span<const double> probs, int label);

/// Exact gradient of loss(forward(x), label). ReLU'(0) = 0.
MlpGradients backward(const MlpModel& model, std::span<const double> x, int label);

/// Adds the gradient for one sample into `grads` and returns that sample's loss.
double accumulate_gradients(const MlpModel& model, std::span<const double> x, int label, MlpGradients& grads);

MlpGradients zeros_like(const MlpModel& model);

struct TrainResult {
  MlpModel model;
  TrainHistory history;
};

/// Per epoch: seeded shuffle, mini-batches, params -= lr * mean batch gradient.
/// History holds the running mean loss and accuracy seen during each epoch,
/// plus validation metrics when `validation` is non-empty.
/// Throws EmptyDataset.
TrainResult train(MlpModel model, const VectorDataset& train_set, const TrainConfig& cfg,
                  const VectorDataset* validation = nullptr);

int predict(const MlpModel& model, std::span<const double> x);

}  // namespace genreforge::mlp
