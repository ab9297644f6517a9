/// @file audio_io.cpp

#include "genreforge/audio_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>

#include "genreforge/error.hpp"
#include "genreforge/io_util.hpp"
#include "genreforge/parallel.hpp"

namespace genreforge {
namespace {

constexpr std::uint16_t kFormatPcm = 1;

std::uint16_t read_u16(std::span<const unsigned char> b, std::size_t at) {
  return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

std::uint32_t read_u32(std::span<const unsigned char> b, std::size_t at) {
  return static_cast<std::uint32_t>(b[at]) | (static_cast<std::uint32_t>(b[at + 1]) << 8) |
         (static_cast<std::uint32_t>(b[at + 2]) << 16) |
         (static_cast<std::uint32_t>(b[at + 3]) << 24);
}

bool tag_is(std::span<const unsigned char> b, std::size_t at, const char* tag) {
  return std::memcmp(b.data() + at, tag, 4) == 0;
}

struct FmtChunk {
  std::uint16_t format = 0;
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  std::uint16_t block_align = 0;
  std::uint16_t bits = 0;
};

void put_u16(std::vector<unsigned char>& out, std::uint16_t v) {
  out.push_back(static_cast<unsigned char>(v & 0xFF));
  out.push_back(static_cast<unsigned char>(v >> 8));
}

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xFF));
}

bool has_wav_extension(const std::filesystem::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".wav";
}

}  // namespace

AudioClip decode_wav(std::span<const unsigned char> bytes, std::string source_path) {
  if (bytes.size() < 12 || !tag_is(bytes, 0, "RIFF") || !tag_is(bytes, 8, "WAVE")) {
    throw Error(ErrorKind::MalformedHeader, "missing RIFF/WAVE signature in '" + source_path + "'");
  }

  std::optional<FmtChunk> fmt;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint32_t chunk_size = read_u32(bytes, pos + 4);
    const std::size_t body = pos + 8;

    if (tag_is(bytes, pos, "fmt ")) {
      if (chunk_size < 16 || body + 16 > bytes.size()) {
        throw Error(ErrorKind::MalformedHeader, "fmt chunk too short in '" + source_path + "'");
      }
      FmtChunk f;
      f.format = read_u16(bytes, body);
      f.channels = read_u16(bytes, body + 2);
      f.sample_rate = read_u32(bytes, body + 4);
      f.block_align = read_u16(bytes, body + 12);
      f.bits = read_u16(bytes, body + 14);
      if (f.format != kFormatPcm) {
        throw Error(ErrorKind::UnsupportedEncoding,
                    "format tag " + std::to_string(f.format) + " in '" + source_path + "'");
      }
      if (f.bits != 16) {
        throw Error(ErrorKind::UnsupportedEncoding,
                    std::to_string(f.bits) + "-bit samples in '" + source_path + "'");
      }
      if (f.channels == 0 || f.sample_rate == 0 || f.block_align != f.channels * 2) {
        throw Error(ErrorKind::MalformedHeader, "inconsistent fmt fields in '" + source_path + "'");
      }
      fmt = f;
    } else if (tag_is(bytes, pos, "data")) {
      if (!fmt) {
        throw Error(ErrorKind::MalformedHeader, "data chunk before fmt in '" + source_path + "'");
      }
      const std::size_t available = bytes.size() - body;
      if (chunk_size > available) {
        throw Error(ErrorKind::TruncatedData,
                    "data chunk declares " + std::to_string(chunk_size) + " bytes but " +
                        std::to_string(available) + " are present in '" + source_path + "'");
      }
      if (chunk_size % fmt->block_align != 0) {
        throw Error(ErrorKind::TruncatedData, "partial trailing frame in '" + source_path + "'");
      }
      const std::size_t frames = chunk_size / fmt->block_align;
      if (frames == 0) {
        throw Error(ErrorKind::TruncatedData, "no samples in '" + source_path + "'");
      }

      AudioClip clip;
      clip.sample_rate_hz = static_cast<int>(fmt->sample_rate);
      clip.source_path = std::move(source_path);
      clip.samples.resize(frames);
      const std::size_t channels = fmt->channels;
      for (std::size_t f = 0; f < frames; ++f) {
        double acc = 0.0;
        for (std::size_t c = 0; c < channels; ++c) {
          const auto raw = static_cast<std::int16_t>(read_u16(bytes, body + (f * channels + c) * 2));
          acc += static_cast<double>(raw) / 32768.0;
        }
        clip.samples[f] = acc / static_cast<double>(channels);
      }
      return clip;
    }
    // RIFF chunks are padded to even length.
    pos = body + chunk_size + (chunk_size & 1u);
  }
  throw Error(ErrorKind::MalformedHeader, "no data chunk in '" + source_path + "'");
}

AudioClip load_wav(const std::filesystem::path& path) {
  const std::vector<unsigned char> bytes = read_file_bytes(path);
  return decode_wav(bytes, path.generic_string());
}

std::vector<unsigned char> encode_wav(std::span<const double> samples, int sample_rate_hz) {
  const auto data_bytes = static_cast<std::uint32_t>(samples.size() * 2);
  std::vector<unsigned char> out;
  out.reserve(44 + data_bytes);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  put_u32(out, 36 + data_bytes);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  put_u32(out, 16);
  put_u16(out, kFormatPcm);
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(sample_rate_hz));
  put_u32(out, static_cast<std::uint32_t>(sample_rate_hz) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  put_u32(out, data_bytes);
  for (double s : samples) {
    const double scaled = std::round(std::clamp(s, -1.0, 1.0) * 32768.0);
    const auto v = static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
    put_u16(out, static_cast<std::uint16_t>(v));
  }
  return out;
}

void save_wav(const std::filesystem::path& path, std::span<const double> samples, int sample_rate_hz) {
  write_file_atomic(path, encode_wav(samples, sample_rate_hz));
}

DatasetScan scan_dataset(const std::filesystem::path& root, std::optional<int> expected_rate_hz) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(root, ec)) {
    throw Error(ErrorKind::EmptyDataset, "dataset root '" + root.generic_string() + "' is not a directory");
  }

  std::vector<fs::path> genre_dirs;
  for (const auto& e : fs::directory_iterator(root)) {
    if (e.is_directory()) genre_dirs.push_back(e.path());
  }
  std::sort(genre_dirs.begin(), genre_dirs.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });

  std::vector<DatasetEntry> candidates;
  for (const auto& dir : genre_dirs) {
    std::vector<std::string> files;
    for (const auto& e : fs::directory_iterator(dir)) {
      if (e.is_regular_file() && has_wav_extension(e.path())) files.push_back(e.path().generic_string());
    }
    std::sort(files.begin(), files.end());
    for (auto& f : files) candidates.push_back({dir.filename().string(), std::move(f)});
  }

  std::vector<std::optional<std::string>> failure(candidates.size());
  parallel_for(candidates.size(), [&](std::size_t i) {
    try {
      const AudioClip clip = load_wav(candidates[i].path);
      if (expected_rate_hz && clip.sample_rate_hz != *expected_rate_hz) {
        failure[i] = std::string(to_string(ErrorKind::SampleRateMismatch)) + ": " +
                     std::to_string(clip.sample_rate_hz) + " Hz, expected " +
                     std::to_string(*expected_rate_hz) + " Hz";
      }
    } catch (const std::exception& ex) {
      failure[i] = ex.what();
    }
  });

  DatasetScan scan;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (failure[i]) {
      scan.corrupt.push_back({candidates[i].path, *failure[i]});
    } else {
      scan.entries.push_back(std::move(candidates[i]));
    }
  }
  if (scan.entries.empty()) {
    throw Error(ErrorKind::EmptyDataset, "no decodable .wav files under '" + root.generic_string() + "'");
  }
  return scan;
}

}  // namespace genreforge
