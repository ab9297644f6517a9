/// @file oracles.hpp
/// @brief Slow, independent reference implementations used to check the
/// library: direct DFT, nested-loop convolution, brute-force KNN,
/// exhaustive split search, and finite-difference gradient checks.

#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "genreforge/cnn.hpp"
#include "genreforge/forest.hpp"
#include "genreforge/matrix.hpp"
#include "genreforge/mlp.hpp"

namespace genreforge::testing {

/// X[k] = sum_n x[n] exp(-2 pi i k n / N), angles reduced exactly via (k n) mod N.
std::vector<std::complex<double>> naive_dft(std::span<const std::complex<double>> x);

/// Direct orthonormal DCT-II formula.
std::vector<double> naive_dct2(std::span<const double> x);

/// Seven nested loops, valid padding, no kernel flip.
cnn::Tensor3 naive_conv2d(const cnn::Tensor3& input, std::span<const double> kernels, std::span<const double> biases);

/// Sorts every (Euclidean distance, index) pair, takes k, votes; vote ties
/// go to the smaller summed distance, then the lower class.
int brute_knn(const Matrix& points, std::span<const int> labels, std::size_t n_classes, std::size_t k,
              std::span<const double> x);

/// Every (feature, midpoint) pair scored by direct counting; minimum weighted
/// Gini, ties to lowest feature then lowest threshold; none unless the
/// parent impurity drops.
std::optional<forest::Split> exhaustive_best_split(const forest::TrainingTable& table, std::span<const std::size_t> rows,
                                                   std::span<const std::size_t> features);

/// |a - n| / max(|a| + |n|, floor).
double relative_error(double analytic, double numeric, double floor = 1e-4);

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  /// Parameters whose +/- h probes change the ReLU / max-pool pattern, where
  /// the loss is not differentiable and central differences are meaningless.
  std::size_t skipped_kinks = 0;
};

/// Central differences of an independent MLP forward (step h) against mlp::backward.
GradCheckResult mlp_gradient_check(const mlp::MlpModel& model, std::span<const double> x, int label, double h = 1e-5);

/// Central differences of an independent CNN forward (train mode, fixed dropout
/// mask taken from the library cache) against cnn::backward.
GradCheckResult cnn_gradient_check(const cnn::CnnModel& model, const Matrix& grid, int label, std::uint64_t dropout_seed,
                                   double h = 1e-5);

}  // namespace genreforge::testing
