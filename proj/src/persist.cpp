/// @file persist.cpp

#include "genreforge/persist.hpp"

#include <bit>
#include <cstring>

#include "genreforge/error.hpp"
#include "genreforge/io_util.hpp"

namespace genreforge::persist {
namespace {

template <typename T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    T out;
    auto* src = reinterpret_cast<const unsigned char*>(&v);
    auto* dst = reinterpret_cast<unsigned char*>(&out);
    for (std::size_t i = 0; i < sizeof(T); ++i) dst[i] = src[sizeof(T) - 1 - i];
    return out;
  }
  return v;
}

template <typename T>
void put(std::vector<unsigned char>& out, T v) {
  v = to_little(v);
  const auto* p = reinterpret_cast<const unsigned char*>(&v);
  out.insert(out.end(), p, p + sizeof(T));
}

void write_pipeline(BinaryWriter& w, const FeatureConfig& p) {
  w.u64(static_cast<std::uint64_t>(p.sample_rate_hz));
  w.u64(p.stft.n_fft);
  w.u64(p.stft.hop);
  w.u64(p.n_mels);
  w.u64(p.n_mfcc);
  w.u64(p.max_frames);
  w.f64(p.fmin_hz);
  w.f64(p.resolved_fmax());
}

FeatureConfig read_pipeline(BinaryReader& r) {
  FeatureConfig p;
  p.sample_rate_hz = static_cast<int>(r.u64());
  p.stft.n_fft = r.u64();
  p.stft.hop = r.u64();
  p.n_mels = r.u64();
  p.n_mfcc = r.u64();
  p.max_frames = r.u64();
  p.fmin_hz = r.f64();
  p.fmax_hz = r.f64();
  return p;
}

void write_vector(BinaryWriter& w, const std::vector<double>& v) {
  const std::size_t shape[] = {v.size()};
  w.block(shape, v);
}

std::vector<double> read_vector(BinaryReader& r) {
  std::vector<std::size_t> shape;
  return r.block(shape, 1);
}

void write_matrix(BinaryWriter& w, const Matrix& m) {
  const std::size_t shape[] = {m.rows, m.cols};
  w.block(shape, m.data);
}

Matrix read_matrix(BinaryReader& r) {
  std::vector<std::size_t> shape;
  Matrix m;
  m.data = r.block(shape, 2);
  m.rows = shape[0];
  m.cols = shape[1];
  return m;
}

void write_history(BinaryWriter& w, const TrainHistory& h) {
  w.u64(h.size());
  for (const auto& e : h) {
    w.u64(e.epoch);
    w.f64(e.train_loss);
    w.f64(e.train_accuracy);
    w.u8(e.val_loss.has_value() ? 1 : 0);
    w.f64(e.val_loss.value_or(0.0));
    w.f64(e.val_accuracy.value_or(0.0));
  }
}

TrainHistory read_history(BinaryReader& r) {
  TrainHistory h(r.u64());
  for (auto& e : h) {
    e.epoch = r.u64();
    e.train_loss = r.f64();
    e.train_accuracy = r.f64();
    const bool has_val = r.u8() != 0;
    const double vl = r.f64();
    const double va = r.f64();
    if (has_val) {
      e.val_loss = vl;
      e.val_accuracy = va;
    }
  }
  return h;
}

void write_sizes(BinaryWriter& w, const std::vector<std::size_t>& v) {
  w.u64(v.size());
  for (const auto x : v) w.u64(x);
}

std::vector<std::size_t> read_sizes(BinaryReader& r) {
  std::vector<std::size_t> v(r.u64());
  for (auto& x : v) x = r.u64();
  return v;
}

void write_forest(BinaryWriter& w, const forest::ForestModel& f) {
  w.u64(f.n_features);
  w.u64(f.n_classes);
  w.u64(f.config.n_estimators);
  w.u64(f.config.tree.max_depth);
  w.u64(f.config.tree.min_split);
  w.u64(f.config.tree.max_features);
  w.u64(f.config.seed);
  w.u64(f.trees.size());
  for (const auto& tree : f.trees) {
    w.u64(tree.nodes.size());
    // Pre-order: children of a split follow it, left subtree first.
    const auto emit = [&](auto&& self, std::size_t i) -> void {
      const auto& n = tree.nodes[i];
      if (n.is_leaf) {
        w.u8(1);
        write_sizes(w, n.class_counts);
      } else {
        w.u8(0);
        w.u64(n.feature);
        w.f64(n.threshold);
        self(self, n.left);
        self(self, n.right);
      }
    };
    emit(emit, 0);
  }
}

forest::ForestModel read_forest(BinaryReader& r) {
  forest::ForestModel f;
  f.n_features = r.u64();
  f.n_classes = r.u64();
  f.config.n_estimators = r.u64();
  f.config.tree.max_depth = r.u64();
  f.config.tree.min_split = r.u64();
  f.config.tree.max_features = r.u64();
  f.config.seed = r.u64();
  f.trees.resize(r.u64());
  for (auto& tree : f.trees) {
    const std::uint64_t count = r.u64();
    tree.nodes.reserve(count);
    const auto parse = [&](auto&& self, std::size_t depth) -> std::size_t {
      if (depth > 100000 || tree.nodes.size() >= count) throw Error(ErrorKind::BadFormat, "corrupt tree");
      const std::size_t id = tree.nodes.size();
      tree.nodes.emplace_back();
      const std::uint8_t tag = r.u8();
      if (tag == 1) {
        tree.nodes[id].is_leaf = true;
        tree.nodes[id].class_counts = read_sizes(r);
        if (tree.nodes[id].class_counts.size() != f.n_classes) throw Error(ErrorKind::BadFormat, "leaf class count");
      } else if (tag == 0) {
        const std::size_t feature = r.u64();
        const double threshold = r.f64();
        if (feature >= f.n_features) throw Error(ErrorKind::BadFormat, "split feature out of range");
        const std::size_t l = self(self, depth + 1);
        const std::size_t rt = self(self, depth + 1);
        auto& n = tree.nodes[id];
        n.is_leaf = false;
        n.feature = feature;
        n.threshold = threshold;
        n.left = l;
        n.right = rt;
      } else {
        throw Error(ErrorKind::BadFormat, "unknown node tag");
      }
      return id;
    };
    parse(parse, 0);
    if (tree.nodes.size() != count) throw Error(ErrorKind::BadFormat, "tree node count mismatch");
  }
  return f;
}

void write_cnn(BinaryWriter& w, const cnn::CnnModel& m) {
  const auto& a = m.arch;
  w.u64(a.in_rows);
  w.u64(a.in_cols);
  w.u64(a.conv1_filters);
  w.u64(a.conv2_filters);
  write_sizes(w, a.dense);
  w.f64(a.dropout);
  w.u64(a.n_classes);
  const auto blocks = cnn::layout(a);
  w.u64(blocks.size());
  for (const auto& b : blocks) {
    w.str(b.name);
    w.block(b.shape, std::span(m.params).subspan(b.offset, b.size()));
  }
}

cnn::CnnModel read_cnn(BinaryReader& r) {
  cnn::Architecture a;
  a.in_rows = r.u64();
  a.in_cols = r.u64();
  a.conv1_filters = r.u64();
  a.conv2_filters = r.u64();
  a.dense = read_sizes(r);
  a.dropout = r.f64();
  a.n_classes = r.u64();
  cnn::CnnModel m = cnn::zeros(a);
  const auto blocks = cnn::layout(a);
  if (r.u64() != blocks.size()) throw Error(ErrorKind::BadFormat, "CNN block count");
  for (const auto& b : blocks) {
    if (r.str() != b.name) throw Error(ErrorKind::BadFormat, "CNN block name");
    std::vector<std::size_t> shape;
    const auto values = r.block(shape);
    if (shape != b.shape) throw Error(ErrorKind::BadFormat, "CNN block shape for " + b.name);
    std::copy(values.begin(), values.end(), m.params.begin() + static_cast<std::ptrdiff_t>(b.offset));
  }
  return m;
}

}  // namespace

void BinaryWriter::u32(std::uint32_t v) { put(bytes_, v); }
void BinaryWriter::u64(std::uint64_t v) { put(bytes_, v); }
void BinaryWriter::f64(double v) { put(bytes_, std::bit_cast<std::uint64_t>(v)); }

void BinaryWriter::str(std::string_view s) {
  u64(s.size());
  bytes_.insert(bytes_.end(), s.begin(), s.end());
}

void BinaryWriter::magic(std::string_view four) { bytes_.insert(bytes_.end(), four.begin(), four.end()); }

void BinaryWriter::block(std::span<const std::size_t> shape, std::span<const double> values) {
  u32(static_cast<std::uint32_t>(shape.size()));
  for (const auto d : shape) u64(d);
  for (const double v : values) f64(v);
}

void BinaryWriter::strings(std::span<const std::string> items) {
  u64(items.size());
  for (const auto& s : items) str(s);
}

void BinaryReader::need(std::size_t n) const {
  if (bytes_.size() - pos_ < n) throw Error(ErrorKind::BadFormat, "unexpected end of file");
}

std::uint8_t BinaryReader::u8() {
  need(1);
  return bytes_[pos_++];
}

std::uint32_t BinaryReader::u32() {
  need(4);
  std::uint32_t v;
  std::memcpy(&v, bytes_.data() + pos_, 4);
  pos_ += 4;
  return to_little(v);
}

std::uint64_t BinaryReader::u64() {
  need(8);
  std::uint64_t v;
  std::memcpy(&v, bytes_.data() + pos_, 8);
  pos_ += 8;
  return to_little(v);
}

double BinaryReader::f64() { return std::bit_cast<double>(u64()); }

std::string BinaryReader::str() {
  const std::uint64_t n = u64();
  need(n);
  std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
  pos_ += n;
  return s;
}

void BinaryReader::expect_magic(std::string_view four) {
  need(four.size());
  if (std::memcmp(bytes_.data() + pos_, four.data(), four.size()) != 0) {
    throw Error(ErrorKind::BadFormat, "bad magic, expected '" + std::string(four) + "'");
  }
  pos_ += four.size();
}

std::vector<double> BinaryReader::block(std::vector<std::size_t>& shape_out, std::size_t expected_rank) {
  const std::uint32_t rank = u32();
  if (expected_rank != 0 && rank != expected_rank) throw Error(ErrorKind::BadFormat, "unexpected block rank");
  shape_out.assign(rank, 0);
  std::size_t count = 1;
  for (auto& d : shape_out) {
    d = u64();
    if (d != 0 && count > (bytes_.size() / 8) / d) throw Error(ErrorKind::BadFormat, "block too large");
    count *= d;
  }
  need(count * 8);
  std::vector<double> values(count);
  for (auto& v : values) v = f64();
  return values;
}

std::vector<std::string> BinaryReader::strings() {
  const std::uint64_t n = u64();
  if (n > bytes_.size()) throw Error(ErrorKind::BadFormat, "string list too long");
  std::vector<std::string> out;
  out.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) out.push_back(str());
  return out;
}

std::vector<unsigned char> encode_model(const TrainedModel& m) {
  BinaryWriter w;
  w.magic("GFM1");
  w.u32(kFormatVersion);
  w.str(to_string(m.kind));
  w.str(to_string(m.source));
  w.strings(m.class_names);
  w.strings(m.feature_names);
  write_pipeline(w, m.pipeline);
  w.u8(m.normalization ? 1 : 0);
  if (m.normalization) {
    write_vector(w, m.normalization->mean);
    write_vector(w, m.normalization->std);
  }
  switch (m.kind) {
    case ModelKind::Mlp: {
      const auto& p = std::get<mlp::MlpModel>(m.model);
      write_matrix(w, p.w1);
      write_vector(w, p.b1);
      write_matrix(w, p.w2);
      write_vector(w, p.b2);
      break;
    }
    case ModelKind::Knn: {
      const auto& p = std::get<knn::KnnModel>(m.model);
      w.u64(p.k);
      w.u64(p.n_classes);
      write_matrix(w, p.points);
      w.u64(p.labels.size());
      for (const int l : p.labels) w.u32(static_cast<std::uint32_t>(l));
      break;
    }
    case ModelKind::Cnn: write_cnn(w, std::get<cnn::CnnModel>(m.model)); break;
    case ModelKind::Forest: write_forest(w, std::get<forest::ForestModel>(m.model)); break;
  }
  write_history(w, m.history);
  return w.bytes();
}

TrainedModel decode_model(std::span<const unsigned char> bytes) {
  BinaryReader r(bytes);
  r.expect_magic("GFM1");
  if (const auto v = r.u32(); v != kFormatVersion) {
    throw Error(ErrorKind::BadFormat, "unsupported model format version " + std::to_string(v));
  }
  TrainedModel m;
  try {
    m.kind = parse_model_kind(r.str());
  } catch (const Error&) {
    throw Error(ErrorKind::BadFormat, "unknown model type tag");
  }
  m.source = parse_feature_source(r.str());
  m.class_names = r.strings();
  m.feature_names = r.strings();
  m.pipeline = read_pipeline(r);
  if (r.u8() != 0) {
    NormStats s;
    s.mean = read_vector(r);
    s.std = read_vector(r);
    if (s.mean.size() != s.std.size()) throw Error(ErrorKind::BadFormat, "normalization size mismatch");
    m.normalization = std::move(s);
  }
  switch (m.kind) {
    case ModelKind::Mlp: {
      mlp::MlpModel p;
      p.w1 = read_matrix(r);
      p.b1 = read_vector(r);
      p.w2 = read_matrix(r);
      p.b2 = read_vector(r);
      if (p.b1.size() != p.w1.rows || p.w2.cols != p.w1.rows || p.b2.size() != p.w2.rows) {
        throw Error(ErrorKind::BadFormat, "MLP shapes are inconsistent");
      }
      m.model = std::move(p);
      break;
    }
    case ModelKind::Knn: {
      knn::KnnModel p;
      p.k = r.u64();
      p.n_classes = r.u64();
      p.points = read_matrix(r);
      const std::uint64_t n = r.u64();
      if (n != p.points.rows) throw Error(ErrorKind::BadFormat, "KNN label count");
      for (std::uint64_t i = 0; i < n; ++i) p.labels.push_back(static_cast<int>(r.u32()));
      m.model = std::move(p);
      break;
    }
    case ModelKind::Cnn: m.model = read_cnn(r); break;
    case ModelKind::Forest: m.model = read_forest(r); break;
  }
  m.history = read_history(r);
  if (!r.at_end()) throw Error(ErrorKind::BadFormat, "trailing bytes after model");
  return m;
}

void save_model(const std::filesystem::path& path, const TrainedModel& model) {
  write_file_atomic(path, encode_model(model));
}

TrainedModel load_model(const std::filesystem::path& path) { return decode_model(read_file_bytes(path)); }

std::vector<unsigned char> encode_cache(const FeatureCache& c) {
  BinaryWriter w;
  w.magic("GFC1");
  w.u32(kFormatVersion);
  write_pipeline(w, c.pipeline);
  w.u8(c.vectors ? 1 : 0);
  if (c.vectors) {
    w.strings(c.vectors->class_names);
    w.u64(c.vectors->size());
    for (const auto& item : c.vectors->items) {
      w.str(item.source_id);
      w.u32(static_cast<std::uint32_t>(item.label_index));
      write_vector(w, item.values);
    }
  }
  w.u8(c.tensors ? 1 : 0);
  if (c.tensors) {
    w.strings(c.tensors->class_names);
    w.u64(c.tensors->size());
    for (const auto& item : c.tensors->items) {
      w.str(item.source_id);
      w.u32(static_cast<std::uint32_t>(item.label_index));
      write_matrix(w, item.grid);
    }
  }
  w.u64(c.corrupt.size());
  for (const auto& cf : c.corrupt) {
    w.str(cf.path);
    w.str(cf.reason);
  }
  return w.bytes();
}

FeatureCache decode_cache(std::span<const unsigned char> bytes) {
  BinaryReader r(bytes);
  r.expect_magic("GFC1");
  if (const auto v = r.u32(); v != kFormatVersion) {
    throw Error(ErrorKind::BadFormat, "unsupported feature cache version " + std::to_string(v));
  }
  FeatureCache c;
  c.pipeline = read_pipeline(r);
  if (r.u8() != 0) {
    VectorDataset ds;
    ds.class_names = r.strings();
    const std::uint64_t n = r.u64();
    for (std::uint64_t i = 0; i < n; ++i) {
      FeatureVector v;
      v.source_id = r.str();
      v.label_index = static_cast<int>(r.u32());
      v.values = read_vector(r);
      if (static_cast<std::size_t>(v.label_index) >= ds.class_names.size()) throw Error(ErrorKind::BadFormat, "label");
      ds.items.push_back(std::move(v));
    }
    c.vectors = std::move(ds);
  }
  if (r.u8() != 0) {
    TensorDataset ds;
    ds.class_names = r.strings();
    const std::uint64_t n = r.u64();
    for (std::uint64_t i = 0; i < n; ++i) {
      FeatureTensor t;
      t.source_id = r.str();
      t.label_index = static_cast<int>(r.u32());
      t.grid = read_matrix(r);
      if (static_cast<std::size_t>(t.label_index) >= ds.class_names.size()) throw Error(ErrorKind::BadFormat, "label");
      ds.items.push_back(std::move(t));
    }
    c.tensors = std::move(ds);
  }
  const std::uint64_t n_corrupt = r.u64();
  for (std::uint64_t i = 0; i < n_corrupt; ++i) {
    CorruptFileReport cf;
    cf.path = r.str();
    cf.reason = r.str();
    c.corrupt.push_back(std::move(cf));
  }
  if (!r.at_end()) throw Error(ErrorKind::BadFormat, "trailing bytes after feature cache");
  return c;
}

void save_cache(const std::filesystem::path& path, const FeatureCache& cache) {
  write_file_atomic(path, encode_cache(cache));
}

FeatureCache load_cache(const std::filesystem::path& path) { return decode_cache(read_file_bytes(path)); }

}  // namespace genreforge::persist
