/// @file persist.hpp
/// @brief Binary model files ("GFM1") and feature caches ("GFC1").
///
/// Layout conventions: little-endian throughout; u32/u64 integers; f64 for
/// every real; strings are a u64 byte count followed by UTF-8 bytes; each
/// numeric block starts with a u32 rank and u64 extents, then f64 payload
/// in row-major order.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "genreforge/audio_io.hpp"
#include "genreforge/classifier.hpp"
#include "genreforge/features.hpp"

namespace genreforge::persist {

constexpr std::uint32_t kFormatVersion = 1;

class BinaryWriter {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void f64(double v);
  void str(std::string_view s);
  void magic(std::string_view four_chars);
  /// Rank-tagged f64 block.
  void block(std::span<const std::size_t> shape, std::span<const double> values);
  void strings(std::span<const std::string> items);

  const std::vector<unsigned char>& bytes() const { return bytes_; }

 private:
  std::vector<unsigned char> bytes_;
};

class BinaryReader {
 public:
  explicit BinaryReader(std::span<const unsigned char> bytes) : bytes_(bytes) {}

  std::uint8_t u8();
  std::uint32_t u32();
  std::uint64_t u64();
  double f64();
  std::string str();
  void expect_magic(std::string_view four_chars);
  /// Reads a block, checking its shape against `expected_rank` when nonzero.
  std::vector<double> block(std::vector<std::size_t>& shape_out, std::size_t expected_rank = 0);
  std::vector<std::string> strings();
  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const;
  std::span<const unsigned char> bytes_;
  std::size_t pos_ = 0;
};

std::vector<unsigned char> encode_model(const TrainedModel& model);
/// Throws BadFormat on any structural problem.
TrainedModel decode_model(std::span<const unsigned char> bytes);

void save_model(const std::filesystem::path& path, const TrainedModel& model);
TrainedModel load_model(const std::filesystem::path& path);

struct FeatureCache {
  FeatureConfig pipeline;
  std::optional<VectorDataset> vectors;
  std::optional<TensorDataset> tensors;
  std::vector<CorruptFileReport> corrupt;
};

std::vector<unsigned char> encode_cache(const FeatureCache& cache);
FeatureCache decode_cache(std::span<const unsigned char> bytes);

void save_cache(const std::filesystem::path& path, const FeatureCache& cache);
FeatureCache load_cache(const std::filesystem::path& path);

}  // namespace genreforge::persist
