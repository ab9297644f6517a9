/// @file config.cpp

#include "genreforge/config.hpp"

#include <algorithm>
#include <charconv>
#include <functional>
#include <sstream>

#include "genreforge/error.hpp"
#include "genreforge/eval.hpp"

namespace genreforge {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value) {
  throw Error(ErrorKind::InvalidArgument, "invalid value '" + std::string(value) + "' for " + std::string(key));
}

std::uint64_t to_u64(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || v.empty()) bad_value(key, v);
  return out;
}

double to_real(std::string_view key, std::string_view v) {
  double out = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || v.empty()) bad_value(key, v);
  return out;
}

bool to_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  bad_value(key, v);
}

std::vector<std::size_t> to_sizes(std::string_view key, std::string_view v) {
  std::vector<std::size_t> out;
  std::size_t start = 0;
  while (start <= v.size()) {
    const auto comma = v.find(',', start);
    const auto piece = trim(v.substr(start, comma == std::string_view::npos ? v.npos : comma - start));
    if (!piece.empty()) out.push_back(to_u64(key, piece));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string join_sizes(const std::vector<std::size_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(v[i]);
  }
  return out;
}

std::string real_text(double v) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

using Setter = std::function<void(RunConfig&, std::string_view, std::string_view)>;
using Getter = std::function<std::string(const RunConfig&)>;

struct Field {
  Setter set;
  Getter get;
};

const std::map<std::string, Field, std::less<>>& fields() {
  static const std::map<std::string, Field, std::less<>> table = {
      {"dataset_dir", {[](RunConfig& c, auto, auto v) { c.dataset_dir = v; }, [](const RunConfig& c) { return c.dataset_dir; }}},
      {"csv", {[](RunConfig& c, auto, auto v) { c.csv = v; }, [](const RunConfig& c) { return c.csv; }}},
      {"features", {[](RunConfig& c, auto, auto v) { c.features = v; }, [](const RunConfig& c) { return c.features; }}},
      {"out", {[](RunConfig& c, auto, auto v) { c.out = v; }, [](const RunConfig& c) { return c.out; }}},
      {"seed", {[](RunConfig& c, auto k, auto v) { c.seed = to_u64(k, v); }, [](const RunConfig& c) { return std::to_string(c.seed); }}},
      {"models",
       {[](RunConfig& c, auto, auto v) { c.models = parse_model_list(v); },
        [](const RunConfig& c) {
          std::string out;
          for (std::size_t i = 0; i < c.models.size(); ++i) {
            if (i) out += ',';
            out += to_string(c.models[i]);
          }
          return out;
        }}},
      {"split.train_fraction",
       {[](RunConfig& c, auto k, auto v) { c.split.train_fraction = to_real(k, v); },
        [](const RunConfig& c) { return real_text(c.split.train_fraction); }}},
      {"split.stratified",
       {[](RunConfig& c, auto k, auto v) { c.split.stratified = to_bool(k, v); },
        [](const RunConfig& c) { return std::string(c.split.stratified ? "true" : "false"); }}},
      {"audio.sample_rate",
       {[](RunConfig& c, auto k, auto v) { c.pipeline.sample_rate_hz = static_cast<int>(to_u64(k, v)); },
        [](const RunConfig& c) { return std::to_string(c.pipeline.sample_rate_hz); }}},
      {"audio.n_fft",
       {[](RunConfig& c, auto k, auto v) { c.pipeline.stft.n_fft = to_u64(k, v); },
        [](const RunConfig& c) { return std::to_string(c.pipeline.stft.n_fft); }}},
      {"audio.hop",
       {[](RunConfig& c, auto k, auto v) { c.pipeline.stft.hop = to_u64(k, v); },
        [](const RunConfig& c) { return std::to_string(c.pipeline.stft.hop); }}},
      {"audio.n_mels",
       {[](RunConfig& c, auto k, auto v) { c.pipeline.n_mels = to_u64(k, v); },
        [](const RunConfig& c) { return std::to_string(c.pipeline.n_mels); }}},
      {"audio.n_mfcc",
       {[](RunConfig& c, auto k, auto v) { c.pipeline.n_mfcc = to_u64(k, v); },
        [](const RunConfig& c) { return std::to_string(c.pipeline.n_mfcc); }}},
      {"audio.max_frames",
       {[](RunConfig& c, auto k, auto v) { c.pipeline.max_frames = to_u64(k, v); },
        [](const RunConfig& c) { return std::to_string(c.pipeline.max_frames); }}},
      {"audio.fmin",
       {[](RunConfig& c, auto k, auto v) { c.pipeline.fmin_hz = to_real(k, v); },
        [](const RunConfig& c) { return real_text(c.pipeline.fmin_hz); }}},
      {"audio.fmax",
       {[](RunConfig& c, auto k, auto v) {
          if (v.empty() || v == "auto") c.pipeline.fmax_hz.reset();
          else c.pipeline.fmax_hz = to_real(k, v);
        },
        [](const RunConfig& c) { return c.pipeline.fmax_hz ? real_text(*c.pipeline.fmax_hz) : std::string("auto"); }}},
      {"mlp.hidden",
       {[](RunConfig& c, auto k, auto v) { c.settings.mlp_hidden = to_u64(k, v); },
        [](const RunConfig& c) { return std::to_string(c.settings.mlp_hidden); }}},
      {"mlp.learning_rate",
       {[](RunConfig& c, auto k, auto v) { c.settings.mlp_train.learning_rate = to_real(k, v); },
        [](const RunConfig& c) { return real_text(c.settings.mlp_train.learning_rate); }}},
      {"mlp.epochs",
       {[](RunConfig& c, auto k, auto v) { c.settings.mlp_train.epochs = to_u64(k, v); },
        [](const RunConfig& c) { return std::to_string(c.settings.mlp_train.epochs); }}},
      {"mlp.batch_size",
       {[](RunConfig& c, auto k, auto v) { c.settings.mlp_train.batch_size = to_u64(k, v); },
        [](const RunConfig& c) { return std::to_string(c.settings.mlp_train.batch_size); }}},
      {"mlp.normalize",
       {[](RunConfig& c, auto k, auto v) { c.settings.mlp_normalize = to_bool(k, v); },
        [](const RunConfig& c) { return std::string(c.settings.mlp_normalize ? "true" : "false"); }}},
      {"knn.k",
       {[](RunConfig& c, auto k, auto v) { c.settings.knn_k = to_u64(k, v); },
        [](const RunConfig& c) { return std::to_string(c.settings.knn_k); }}},
      {"knn.normalize",
       {[](RunConfig& c, auto k, auto v) { c.settings.knn_normalize = to_bool(k, v); },
        [](const RunConfig& c) { return std::string(c.settings.knn_normalize ? "true" : "false"); }}},
      {"knn.k_values",
       {[](RunConfig& c, auto k, auto v) { c.k_values = to_sizes(k, v); },
        [](const RunConfig& c) { return join_sizes(c.k_values); }}},
      {"knn.folds",
       {[](RunConfig& c, auto k, auto v) { c.folds = to_u64(k, v); },
        [](const RunConfig& c) { return std::to_string(c.folds); }}},
      {"cnn.conv1",
       {[](RunConfig& c, auto k, auto v) { c.settings.cnn_conv1 = to_u64(k, v); },
        [](const RunConfig& c) { return std::to_string(c.settings.cnn_conv1); }}},
      {"cnn.conv2",
       {[](RunConfig& c, auto k, auto v) { c.settings.cnn_conv2 = to_u64(k, v); },
        [](const RunConfig& c) { return std::to_string(c.settings.cnn_conv2); }}},
      {"cnn.dense",
       {[](RunConfig& c, auto k, auto v) { c.settings.cnn_dense = to_sizes(k, v); },
        [](const RunConfig& c) { return join_sizes(c.settings.cnn_dense); }}},
      {"cnn.dropout",
       {[](RunConfig& c, auto k, auto v) { c.settings.cnn_dropout = to_real(k, v); },
        [](const RunConfig& c) { return real_text(c.settings.cnn_dropout); }}},
      {"cnn.learning_rate",
       {[](RunConfig& c, auto k, auto v) { c.settings.cnn_train.learning_rate = to_real(k, v); },
        [](const RunConfig& c) { return real_text(c.settings.cnn_train.learning_rate); }}},
      {"cnn.epochs",
       {[](RunConfig& c, auto k, auto v) { c.settings.cnn_train.epochs = to_u64(k, v); },
        [](const RunConfig& c) { return std::to_string(c.settings.cnn_train.epochs); }}},
      {"cnn.batch_size",
       {[](RunConfig& c, auto k, auto v) { c.settings.cnn_train.batch_size = to_u64(k, v); },
        [](const RunConfig& c) { return std::to_string(c.settings.cnn_train.batch_size); }}},
      {"cnn.normalize",
       {[](RunConfig& c, auto k, auto v) { c.settings.cnn_normalize = to_bool(k, v); },
        [](const RunConfig& c) { return std::string(c.settings.cnn_normalize ? "true" : "false"); }}},
      {"forest.trees",
       {[](RunConfig& c, auto k, auto v) { c.settings.forest.n_estimators = to_u64(k, v); },
        [](const RunConfig& c) { return std::to_string(c.settings.forest.n_estimators); }}},
      {"forest.max_depth",
       {[](RunConfig& c, auto k, auto v) { c.settings.forest.tree.max_depth = to_u64(k, v); },
        [](const RunConfig& c) { return std::to_string(c.settings.forest.tree.max_depth); }}},
      {"forest.min_split",
       {[](RunConfig& c, auto k, auto v) { c.settings.forest.tree.min_split = to_u64(k, v); },
        [](const RunConfig& c) { return std::to_string(c.settings.forest.tree.min_split); }}},
      {"forest.max_features",
       {[](RunConfig& c, auto k, auto v) { c.settings.forest.tree.max_features = to_u64(k, v); },
        [](const RunConfig& c) { return std::to_string(c.settings.forest.tree.max_features); }}},
      {"forest.normalize",
       {[](RunConfig& c, auto k, auto v) { c.settings.forest_normalize = to_bool(k, v); },
        [](const RunConfig& c) { return std::string(c.settings.forest_normalize ? "true" : "false"); }}},
      {"predict.top",
       {[](RunConfig& c, auto k, auto v) { c.top = to_u64(k, v); },
        [](const RunConfig& c) { return std::to_string(c.top); }}},
  };
  return table;
}

void require_positive(std::size_t v, const char* what) {
  if (v == 0) throw Error(ErrorKind::InvalidArgument, std::string(what) + " must be positive");
}

}  // namespace

void RunConfig::validate() const {
  if (!(split.train_fraction > 0.0 && split.train_fraction < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "split.train_fraction must be in (0, 1)");
  }
  if (pipeline.sample_rate_hz <= 0) throw Error(ErrorKind::InvalidArgument, "audio.sample_rate must be positive");
  pipeline.stft.validate();
  require_positive(pipeline.n_mels, "audio.n_mels");
  require_positive(pipeline.n_mfcc, "audio.n_mfcc");
  require_positive(pipeline.max_frames, "audio.max_frames");
  if (pipeline.n_mfcc > pipeline.n_mels) throw Error(ErrorKind::InvalidArgument, "audio.n_mfcc exceeds audio.n_mels");
  require_positive(settings.mlp_hidden, "mlp.hidden");
  require_positive(settings.mlp_train.epochs, "mlp.epochs");
  require_positive(settings.mlp_train.batch_size, "mlp.batch_size");
  require_positive(settings.knn_k, "knn.k");
  require_positive(settings.cnn_conv1, "cnn.conv1");
  require_positive(settings.cnn_conv2, "cnn.conv2");
  require_positive(settings.cnn_train.epochs, "cnn.epochs");
  require_positive(settings.cnn_train.batch_size, "cnn.batch_size");
  if (settings.cnn_dense.empty()) throw Error(ErrorKind::InvalidArgument, "cnn.dense needs at least one layer");
  for (const auto d : settings.cnn_dense) require_positive(d, "cnn.dense entries");
  if (!(settings.cnn_dropout >= 0.0 && settings.cnn_dropout < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "cnn.dropout must be in [0, 1)");
  }
  require_positive(settings.forest.n_estimators, "forest.trees");
  require_positive(settings.forest.tree.min_split, "forest.min_split");
  require_positive(top, "predict.top");
  for (const auto k : k_values) require_positive(k, "knn.k_values entries");
}

std::map<std::string, std::string> parse_key_values(std::string_view text) {
  std::map<std::string, std::string> out;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorKind::InvalidArgument, "config line " + std::to_string(line_no) + ": expected key=value");
    }
    out[std::string(trim(line.substr(0, eq)))] = std::string(trim(line.substr(eq + 1)));
  }
  return out;
}

void apply_setting(RunConfig& cfg, std::string_view key, std::string_view value) {
  const auto& table = fields();
  const auto it = table.find(key);
  if (it == table.end()) throw Error(ErrorKind::InvalidArgument, "unknown config key '" + std::string(key) + "'");
  it->second.set(cfg, key, trim(value));
}

std::vector<std::pair<std::string, std::string>> snapshot(const RunConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& [key, field] : fields()) out.emplace_back(key, field.get(cfg));
  return out;
}

std::string snapshot_text(const RunConfig& cfg) {
  std::string out;
  for (const auto& [k, v] : snapshot(cfg)) out += k + " = " + v + "\n";
  return out;
}

std::vector<std::string> known_keys() {
  std::vector<std::string> out;
  for (const auto& [key, field] : fields()) out.push_back(key);
  return out;
}

}  // namespace genreforge
