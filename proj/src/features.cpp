/// @file features.cpp

#include "genreforge/features.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <string_view>

#include "genreforge/error.hpp"
#include "genreforge/io_util.hpp"
#include "genreforge/parallel.hpp"

namespace genreforge {
namespace {

void check_rate(const AudioClip& clip, const FeatureConfig& cfg) {
  if (clip.sample_rate_hz != cfg.sample_rate_hz) {
    throw Error(ErrorKind::SampleRateMismatch, "'" + clip.source_path + "' is " +
                                                   std::to_string(clip.sample_rate_hz) + " Hz, pipeline expects " +
                                                   std::to_string(cfg.sample_rate_hz) + " Hz");
  }
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cell.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cell.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(std::move(cell));
      cell.clear();
    } else {
      cell.push_back(c);
    }
  }
  cells.push_back(std::move(cell));
  return cells;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::optional<double> parse_real(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

}  // namespace

MfccMatrix compute_mfcc(const AudioClip& clip, const FeatureConfig& cfg) {
  check_rate(clip, cfg);
  const Spectrogram spec = stft(clip, cfg.stft);
  const MelFilterbank bank =
      mel_filterbank(cfg.n_mels, cfg.stft.n_fft, cfg.sample_rate_hz, cfg.fmin_hz, cfg.resolved_fmax());
  return mfcc(spec, bank, cfg.n_mfcc);
}

std::vector<double> summarize_mfcc(const MfccMatrix& m) {
  const std::size_t n = m.coeffs.cols;
  const std::size_t frames = m.coeffs.rows;
  std::vector<double> out(2 * n, 0.0);
  if (frames == 0) return out;
  for (std::size_t t = 0; t < frames; ++t) {
    const auto row = m.coeffs.row(t);
    for (std::size_t c = 0; c < n; ++c) out[c] += row[c];
  }
  for (std::size_t c = 0; c < n; ++c) out[c] /= static_cast<double>(frames);
  for (std::size_t t = 0; t < frames; ++t) {
    const auto row = m.coeffs.row(t);
    for (std::size_t c = 0; c < n; ++c) {
      const double d = row[c] - out[c];
      out[n + c] += d * d;
    }
  }
  for (std::size_t c = 0; c < n; ++c) out[n + c] /= static_cast<double>(frames);
  return out;
}

FeatureVector extract_vector(const AudioClip& clip, const FeatureConfig& cfg) {
  return {summarize_mfcc(compute_mfcc(clip, cfg)), 0, clip.source_path};
}

FeatureTensor extract_tensor(const AudioClip& clip, const FeatureConfig& cfg) {
  return {pad_or_truncate(compute_mfcc(clip, cfg).coeffs, cfg.max_frames), 0, clip.source_path};
}

std::vector<std::string> make_vocabulary(std::vector<std::string> labels) {
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  return labels;
}

int label_of(std::span<const std::string> vocabulary, const std::string& name) {
  const auto it = std::lower_bound(vocabulary.begin(), vocabulary.end(), name);
  if (it == vocabulary.end() || *it != name) {
    throw Error(ErrorKind::LabelOutOfRange, "label '" + name + "' not in vocabulary");
  }
  return static_cast<int>(it - vocabulary.begin());
}

AudioDatasets build_audio_datasets(const DatasetScan& scan, const FeatureConfig& cfg) {
  struct Slot {
    std::optional<FeatureVector> vec;
    std::optional<FeatureTensor> tensor;
    std::string error;
  };
  std::vector<Slot> slots(scan.entries.size());
  parallel_for(scan.entries.size(), [&](std::size_t i) {
    try {
      const AudioClip clip = load_wav(scan.entries[i].path);
      const MfccMatrix m = compute_mfcc(clip, cfg);
      slots[i].vec = FeatureVector{summarize_mfcc(m), 0, clip.source_path};
      slots[i].tensor = FeatureTensor{pad_or_truncate(m.coeffs, cfg.max_frames), 0, clip.source_path};
    } catch (const std::exception& ex) {
      slots[i].error = ex.what();
    }
  });

  AudioDatasets out;
  out.corrupt = scan.corrupt;
  std::vector<std::string> genres;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (slots[i].vec) genres.push_back(scan.entries[i].genre);
  }
  const std::vector<std::string> vocab = make_vocabulary(genres);
  out.vectors.class_names = vocab;
  out.tensors.class_names = vocab;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (!slots[i].vec) {
      out.corrupt.push_back({scan.entries[i].path, slots[i].error});
      continue;
    }
    const int label = label_of(vocab, scan.entries[i].genre);
    slots[i].vec->label_index = label;
    slots[i].tensor->label_index = label;
    out.vectors.items.push_back(std::move(*slots[i].vec));
    out.tensors.items.push_back(std::move(*slots[i].tensor));
  }
  if (out.vectors.empty()) throw Error(ErrorKind::EmptyDataset, "no clip survived feature extraction");
  return out;
}

CsvIngest parse_csv(std::string_view text, CsvPolicy policy) {
  std::vector<std::string_view> lines;
  for (std::size_t start = 0; start < text.size();) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  if (lines.empty()) throw Error(ErrorKind::MissingLabelColumn, "CSV has no header row");

  std::string_view header_line = lines.front();
  if (header_line.starts_with("\xEF\xBB\xBF")) header_line.remove_prefix(3);
  const std::vector<std::string> header = split_csv_line(header_line);

  std::optional<std::size_t> label_col;
  std::vector<std::size_t> feature_cols;
  CsvIngest out;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string name(trim(header[c]));
    if (name == "label") {
      label_col = c;
    } else if (name != "filename" && name != "length") {
      feature_cols.push_back(c);
      out.feature_names.push_back(name);
    }
  }
  if (!label_col) throw Error(ErrorKind::MissingLabelColumn, "CSV header has no 'label' column");

  struct Row {
    std::vector<double> values;
    std::string label;
    std::string source;
  };
  std::vector<Row> rows;
  std::optional<std::size_t> filename_col;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (trim(header[c]) == "filename") filename_col = c;
  }

  for (std::size_t r = 1; r < lines.size(); ++r) {
    if (trim(lines[r]).empty()) continue;
    ++out.data_rows;
    const std::size_t data_row = r;
    const std::vector<std::string> cells = split_csv_line(lines[r]);
    std::optional<std::string> problem;
    ErrorKind kind = ErrorKind::RaggedRow;
    Row row;
    if (cells.size() != header.size()) {
      problem = "row " + std::to_string(data_row) + " has " + std::to_string(cells.size()) +
                " cells, header has " + std::to_string(header.size());
    } else {
      for (std::size_t i = 0; i < feature_cols.size() && !problem; ++i) {
        const std::size_t c = feature_cols[i];
        if (const auto v = parse_real(cells[c])) {
          row.values.push_back(*v);
        } else {
          kind = ErrorKind::NonNumericCell;
          problem = "row " + std::to_string(data_row) + ", column '" + out.feature_names[i] + "': '" +
                    cells[c] + "'";
        }
      }
      row.label = std::string(trim(cells[*label_col]));
      if (!problem && row.label.empty()) {
        kind = ErrorKind::NonNumericCell;
        problem = "row " + std::to_string(data_row) + " has an empty label";
      }
      row.source = filename_col ? std::string(trim(cells[*filename_col])) : "row" + std::to_string(data_row);
    }
    if (problem) {
      if (policy == CsvPolicy::Strict) throw Error(kind, *problem);
      out.rejected.push_back({data_row, std::string(to_string(kind)) + ": " + *problem});
      continue;
    }
    rows.push_back(std::move(row));
  }

  std::vector<std::string> labels;
  labels.reserve(rows.size());
  for (const auto& row : rows) labels.push_back(row.label);
  out.dataset.class_names = make_vocabulary(std::move(labels));
  for (auto& row : rows) {
    out.dataset.items.push_back(
        {std::move(row.values), label_of(out.dataset.class_names, row.label), std::move(row.source)});
  }
  return out;
}

CsvIngest ingest_csv(const std::filesystem::path& path, CsvPolicy policy) {
  return parse_csv(read_file_text(path), policy);
}

namespace {

/// Variance -> std; dimensions that are constant up to round-off get std 1.
void finalize_std(NormStats& s) {
  for (std::size_t d = 0; d < s.std.size(); ++d) {
    double& v = s.std[d];
    v = std::sqrt(v);
    if (!std::isfinite(v) || v <= 1e-12 * std::max(1.0, std::abs(s.mean[d]))) v = 1.0;
  }
}

}  // namespace

NormStats fit_normalization(const VectorDataset& train) {
  if (train.empty()) throw Error(ErrorKind::EmptyDataset, "cannot fit normalization on an empty dataset");
  const std::size_t dim = train.items.front().values.size();
  NormStats s{std::vector<double>(dim, 0.0), std::vector<double>(dim, 0.0)};
  for (const auto& item : train.items) {
    if (item.values.size() != dim) throw Error(ErrorKind::DimensionMismatch, "ragged feature vectors");
    for (std::size_t d = 0; d < dim; ++d) s.mean[d] += item.values[d];
  }
  const double n = static_cast<double>(train.size());
  for (double& m : s.mean) m /= n;
  for (const auto& item : train.items) {
    for (std::size_t d = 0; d < dim; ++d) {
      const double diff = item.values[d] - s.mean[d];
      s.std[d] += diff * diff;
    }
  }
  for (double& v : s.std) v /= n;
  finalize_std(s);
  return s;
}

NormStats fit_normalization(const TensorDataset& train) {
  if (train.empty()) throw Error(ErrorKind::EmptyDataset, "cannot fit normalization on an empty dataset");
  const std::size_t cols = train.items.front().grid.cols;
  NormStats s{std::vector<double>(cols, 0.0), std::vector<double>(cols, 0.0)};
  double count = 0.0;
  for (const auto& item : train.items) {
    if (item.grid.cols != cols) throw Error(ErrorKind::ShapeMismatch, "tensors differ in column count");
    for (std::size_t r = 0; r < item.grid.rows; ++r) {
      const auto row = item.grid.row(r);
      for (std::size_t c = 0; c < cols; ++c) s.mean[c] += row[c];
    }
    count += static_cast<double>(item.grid.rows);
  }
  for (double& m : s.mean) m /= count;
  for (const auto& item : train.items) {
    for (std::size_t r = 0; r < item.grid.rows; ++r) {
      const auto row = item.grid.row(r);
      for (std::size_t c = 0; c < cols; ++c) {
        const double diff = row[c] - s.mean[c];
        s.std[c] += diff * diff;
      }
    }
  }
  for (double& v : s.std) v /= count;
  finalize_std(s);
  return s;
}

void normalize_in_place(std::span<double> values, const NormStats& stats) {
  if (values.size() != stats.mean.size()) {
    throw Error(ErrorKind::DimensionMismatch, "normalization stats have " + std::to_string(stats.mean.size()) +
                                                  " dims, vector has " + std::to_string(values.size()));
  }
  for (std::size_t d = 0; d < values.size(); ++d) values[d] = (values[d] - stats.mean[d]) / stats.std[d];
}

void normalize_in_place(Matrix& grid, const NormStats& stats) {
  for (std::size_t r = 0; r < grid.rows; ++r) normalize_in_place(grid.row(r), stats);
}

VectorDataset apply_normalization(const VectorDataset& ds, const NormStats& stats) {
  VectorDataset out = ds;
  for (auto& item : out.items) normalize_in_place(item.values, stats);
  out.normalization = stats;
  return out;
}

TensorDataset apply_normalization(const TensorDataset& ds, const NormStats& stats) {
  TensorDataset out = ds;
  for (auto& item : out.items) normalize_in_place(item.grid, stats);
  out.normalization = stats;
  return out;
}

}  // namespace genreforge
