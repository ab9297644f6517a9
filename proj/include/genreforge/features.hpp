/// @file features.hpp
/// @brief Labeled feature datasets built from audio (MFCC summaries or
/// padded MFCC grids) or from a GTZAN-style metadata CSV.

#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "genreforge/audio_io.hpp"
#include "genreforge/dsp.hpp"
#include "genreforge/matrix.hpp"

namespace genreforge {

struct FeatureVector {
  std::vector<double> values;
  int label_index = 0;
  std::string source_id;
};

struct FeatureTensor {
  Matrix grid;  // [max_frames x n_mfcc]
  int label_index = 0;
  std::string source_id;
};

/// Per-dimension z-score statistics. std entries are always > 0.
struct NormStats {
  std::vector<double> mean;
  std::vector<double> std;
};

template <typename Item>
struct BasicDataset {
  std::vector<Item> items;
  std::vector<std::string> class_names;
  std::optional<NormStats> normalization;

  std::size_t size() const { return items.size(); }
  bool empty() const { return items.empty(); }
  std::size_t n_classes() const { return class_names.size(); }
};

using VectorDataset = BasicDataset<FeatureVector>;
using TensorDataset = BasicDataset<FeatureTensor>;

/// Pipeline settings shared by vector and tensor extraction.
struct FeatureConfig {
  int sample_rate_hz = 22050;
  StftConfig stft;
  std::size_t n_mels = 40;
  std::size_t n_mfcc = 13;
  std::size_t max_frames = 130;
  double fmin_hz = 0.0;
  std::optional<double> fmax_hz;  // defaults to sr/2

  double resolved_fmax() const { return fmax_hz.value_or(sample_rate_hz / 2.0); }
};

MfccMatrix compute_mfcc(const AudioClip& clip, const FeatureConfig& cfg);

/// Concatenation of per-coefficient mean and population variance over frames.
std::vector<double> summarize_mfcc(const MfccMatrix& m);

/// Throws SampleRateMismatch plus anything dsp throws.
FeatureVector extract_vector(const AudioClip& clip, const FeatureConfig& cfg);
FeatureTensor extract_tensor(const AudioClip& clip, const FeatureConfig& cfg);

/// Sorted unique labels; label_of() maps a name to its index in that vocabulary.
std::vector<std::string> make_vocabulary(std::vector<std::string> labels);
int label_of(std::span<const std::string> vocabulary, const std::string& name);

struct AudioDatasets {
  VectorDataset vectors;
  TensorDataset tensors;
  std::vector<CorruptFileReport> corrupt;
};

/// Decodes and featurizes every scan entry (parallel per file, assembled in scan order).
/// Files that fail at this stage are appended to `corrupt`.
AudioDatasets build_audio_datasets(const DatasetScan& scan, const FeatureConfig& cfg);

struct CsvRejection {
  std::size_t row = 0;  // 1-based data row (header excluded)
  std::string reason;
};

struct CsvIngest {
  VectorDataset dataset;
  std::vector<std::string> feature_names;
  std::vector<CsvRejection> rejected;
  std::size_t data_rows = 0;
};

enum class CsvPolicy { Strict, SkipBadRows };

/// Reads a header-first CSV with `label` and `filename` columns; `filename`
/// and `length` are dropped, all other non-label columns are parsed as reals.
/// Strict throws MissingLabelColumn / NonNumericCell / RaggedRow; SkipBadRows
/// itemizes bad rows in `rejected` instead (a missing label column still throws).
CsvIngest ingest_csv(const std::filesystem::path& path, CsvPolicy policy = CsvPolicy::Strict);
CsvIngest parse_csv(std::string_view text, CsvPolicy policy = CsvPolicy::Strict);

/// Throws EmptyDataset.
NormStats fit_normalization(const VectorDataset& train);
/// Per-MFCC-coefficient statistics pooled over every frame of every tensor.
NormStats fit_normalization(const TensorDataset& train);

/// Applies (x - mean) / std once and records the stats on the result.
VectorDataset apply_normalization(const VectorDataset& ds, const NormStats& stats);
TensorDataset apply_normalization(const TensorDataset& ds, const NormStats& stats);
void normalize_in_place(std::span<double> values, const NormStats& stats);
void normalize_in_place(Matrix& grid, const NormStats& stats);

/// Files per class, in vocabulary order.
template <typename Item>
std::vector<std::size_t> class_counts(const BasicDataset<Item>& ds) {
  std::vector<std::size_t> counts(ds.class_names.size(), 0);
  for (const auto& item : ds.items) ++counts[static_cast<std::size_t>(item.label_index)];
  return counts;
}

}  // namespace genreforge
