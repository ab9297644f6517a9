/// @file audio_io.hpp
/// @brief 16-bit PCM WAV decoding and GTZAN-style dataset scanning.

#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace genreforge {

/// Decoded mono audio. Samples are in [-1, 1].
struct AudioClip {
  std::vector<double> samples;
  int sample_rate_hz = 0;
  std::string source_path;
};

struct CorruptFileReport {
  std::string path;
  std::string reason;
};

struct DatasetEntry {
  std::string genre;
  std::string path;
};

struct DatasetScan {
  std::vector<DatasetEntry> entries;
  std::vector<CorruptFileReport> corrupt;
};

/// Decodes RIFF/WAVE with PCM format tag 1 and 16 bits per sample.
/// Multichannel input is downmixed by per-frame channel mean.
/// Throws Error{MalformedHeader | TruncatedData | UnsupportedEncoding | Io}.
AudioClip load_wav(const std::filesystem::path& path);

/// Same as load_wav but from an in-memory byte buffer.
AudioClip decode_wav(std::span<const unsigned char> bytes, std::string source_path = {});

/// Encodes mono samples as 16-bit PCM (values clamped to [-1, 1], scaled by 32768).
std::vector<unsigned char> encode_wav(std::span<const double> samples, int sample_rate_hz);
void save_wav(const std::filesystem::path& path, std::span<const double> samples, int sample_rate_hz);

/// Walks <root>/<genre>/*.wav. Every file is decoded once to validate it;
/// failures, and rate mismatches when expected_rate_hz is given, go to
/// `corrupt` instead of `entries`. Both lists are sorted by genre then path.
/// Throws Error{EmptyDataset} when nothing decodable is found.
DatasetScan scan_dataset(const std::filesystem::path& root,
                         std::optional<int> expected_rate_hz = std::nullopt);

}  // namespace genreforge
