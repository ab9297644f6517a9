/// @file cnn.hpp
/// @brief Convolutional classifier over MFCC grids, written from scratch.
///
/// Layer sequence (valid padding, stride 1, cross-correlation):
///
///   conv(F1, 3x3) -> ReLU -> conv(F2, 3x3) -> ReLU -> maxpool(2x2, stride 2)
///   -> flatten (channel, row, column) -> dense(D1) -> ReLU -> dropout
///   -> dense(D2) -> ReLU ... -> dense(n_classes) -> softmax
///
/// The network sees a FeatureTensor grid [frames x n_mfcc] transposed, so
/// input rows are MFCC coefficients and input columns are frames.
/// All parameters live in one flat buffer; `blocks()` names its slices.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "genreforge/features.hpp"
#include "genreforge/matrix.hpp"
#include "genreforge/nn_common.hpp"

namespace genreforge::cnn {

/// Dense [channels x height x width] activation volume.
struct Tensor3 {
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> data;

  Tensor3() = default;
  Tensor3(std::size_t c, std::size_t h, std::size_t w, double fill = 0.0)
      : channels(c), height(h), width(w), data(c * h * w, fill) {}

  double& at(std::size_t c, std::size_t y, std::size_t x) { return data[(c * height + y) * width + x]; }
  double at(std::size_t c, std::size_t y, std::size_t x) const { return data[(c * height + y) * width + x]; }
};

constexpr std::size_t kKernel = 3;

/// Kernels are laid out [c_out][c_in][3][3]. Throws InputTooSmall, ShapeMismatch.
Tensor3 conv2d_forward(const Tensor3& input, std::span<const double> kernels, std::span<const double> biases);

/// Accumulates kernel and bias gradients; fills input_grad when non-null.
void conv2d_backward(const Tensor3& input, std::span<const double> kernels, const Tensor3& output_grad,
                     std::span<double> kernel_grad, std::span<double> bias_grad, Tensor3* input_grad);

struct PoolResult {
  Tensor3 output;
  std::vector<std::size_t> argmax;  // flat input index per output cell
};

/// 2x2 windows, stride 2; a trailing odd row/column is dropped. The first
/// (row-major) maximum in each window wins. Throws InputTooSmall.
PoolResult maxpool_forward(const Tensor3& input);
Tensor3 maxpool_backward(const PoolResult& pool, const Tensor3& input_shape_like, const Tensor3& output_grad);

struct Architecture {
  std::size_t in_rows = 13;   // MFCC coefficients
  std::size_t in_cols = 130;  // frames
  std::size_t conv1_filters = 32;
  std::size_t conv2_filters = 64;
  std::vector<std::size_t> dense = {256, 128};
  double dropout = 0.3;  // applied after the first dense layer
  std::size_t n_classes = 10;

  /// Single dense(128) head without dropout.
  static Architecture baseline(std::size_t rows, std::size_t cols, std::size_t n_classes);

  /// Throws InputTooSmall / InvalidArgument.
  void validate() const;
  std::size_t pooled_rows() const { return (in_rows - 4) / 2; }
  std::size_t pooled_cols() const { return (in_cols - 4) / 2; }
  std::size_t flat_dim() const { return conv2_filters * pooled_rows() * pooled_cols(); }

  friend bool operator==(const Architecture&, const Architecture&) = default;
};

struct ParamBlock {
  std::string name;
  std::size_t offset = 0;
  std::vector<std::size_t> shape;
  std::size_t size() const;
};

/// Named slices of the flat parameter buffer, in storage order:
/// conv1.w conv1.b conv2.w conv2.b dense0.w dense0.b ... out.w out.b
std::vector<ParamBlock> layout(const Architecture& arch);
std::size_t parameter_count(const Architecture& arch);

struct CnnModel {
  Architecture arch;
  std::vector<double> params;

  std::span<double> block(std::size_t i);
  std::span<const double> block(std::size_t i) const;

  friend bool operator==(const CnnModel&, const CnnModel&) = default;
};

/// He-normal weights (final layer scaled by 1/fan_in), zero biases.
CnnModel init(const Architecture& arch, std::uint64_t seed);
CnnModel zeros(const Architecture& arch);

enum class Mode { Train, Infer };

struct ForwardCache {
  Tensor3 input;
  Tensor3 act1;  // ReLU(conv1)
  Tensor3 act2;  // ReLU(conv2)
  PoolResult pool;
  std::vector<std::vector<double>> dense_act;  // post-ReLU (and post-dropout for layer 0)
  std::vector<double> dropout_mask;            // empty when no dropout applied
  std::vector<double> probs;
};

/// `grid` is [cols x rows] (frames x coefficients). Throws ShapeMismatch.
ForwardCache forward_cached(const CnnModel& model, const Matrix& grid, Mode mode, std::uint64_t dropout_seed);
std::vector<double> forward(const CnnModel& model, const Matrix& grid, Mode mode = Mode::Infer,
                            std::uint64_t dropout_seed = 0);

/// Adds d loss / d params for one cached sample into `grads` (size = params).
void backward(const CnnModel& model, const ForwardCache& cache, int label, std::span<double> grads);

int predict(const CnnModel& model, const Matrix& grid);

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double learning_rate = 0.001;

  explicit AdamState(std::size_t n = 0, double lr = 0.001) : m(n, 0.0), v(n, 0.0), learning_rate(lr) {}
};

/// One bias-corrected Adam update. Throws ShapeMismatch.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state);

struct CnnTrainConfig {
  double learning_rate = 0.001;
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  std::uint64_t seed = 42;
};

struct TrainResult {
  CnnModel model;
  TrainHistory history;
};

/// Seeded shuffle per epoch, mean batch gradient, adam_step per batch.
/// Train metrics are running means over the epoch (dropout active);
/// validation metrics use inference mode after the epoch. Throws EmptyDataset.
TrainResult train(CnnModel model, const TensorDataset& train_set, const CnnTrainConfig& cfg,
                  const TensorDataset* validation = nullptr);

}  // namespace genreforge::cnn
