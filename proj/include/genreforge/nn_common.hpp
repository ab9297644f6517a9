/// @file nn_common.hpp
/// @brief Pieces shared by the from-scratch neural models.

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace genreforge {

/// Max-subtracted softmax.
std::vector<double> softmax(std::span<const double> logits);

/// -log(p[label] + 1e-12)
double cross_entropy(std::span<const double> probs, int label);

/// Index of the largest entry; ties go to the lowest index.
int argmax(std::span<const double> values);

struct TrainConfig {
  double learning_rate = 0.01;
  std::size_t epochs = 50;
  std::size_t batch_size = 32;
  std::uint64_t seed = 42;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  std::optional<double> val_loss;
  std::optional<double> val_accuracy;
};

using TrainHistory = std::vector<EpochRecord>;

}  // namespace genreforge
