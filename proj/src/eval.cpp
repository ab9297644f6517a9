/// @file eval.cpp

#include "genreforge/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "genreforge/error.hpp"
#include "genreforge/random.hpp"

namespace genreforge::eval {

SplitIndices split_indices(std::span<const int> labels, std::size_t n_classes, const SplitSpec& spec) {
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "train_fraction must be in (0, 1)");
  }
  Rng rng(spec.seed);
  SplitIndices out;
  const auto take = [&](std::vector<std::size_t>& members) {
    rng.shuffle(std::span(members));
    const auto n_train = static_cast<std::size_t>(
        std::floor(spec.train_fraction * static_cast<double>(members.size()) + 1e-9));
    out.train.insert(out.train.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_train));
    out.test.insert(out.test.end(), members.begin() + static_cast<std::ptrdiff_t>(n_train), members.end());
  };

  if (spec.stratified) {
    std::vector<std::vector<std::size_t>> by_class(n_classes);
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= n_classes) {
        throw Error(ErrorKind::LabelOutOfRange, "label " + std::to_string(labels[i]));
      }
      by_class[static_cast<std::size_t>(labels[i])].push_back(i);
    }
    for (std::size_t c = 0; c < n_classes; ++c) {
      if (by_class[c].size() == 1) {
        throw Error(ErrorKind::TooFewSamples, "class " + std::to_string(c) + " has a single member");
      }
    }
    for (auto& members : by_class) take(members);
  } else {
    if (labels.size() < 2) throw Error(ErrorKind::TooFewSamples, "need at least two items to split");
    std::vector<std::size_t> all(labels.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    take(all);
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

double accuracy(std::span<const int> preds, std::span<const int> labels) {
  if (preds.size() != labels.size()) {
    throw Error(ErrorKind::LengthMismatch, std::to_string(preds.size()) + " predictions for " +
                                               std::to_string(labels.size()) + " labels");
  }
  if (preds.empty()) throw Error(ErrorKind::EmptyDataset, "accuracy of zero predictions");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) hits += preds[i] == labels[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

std::size_t ConfusionMatrix::row_sum(std::size_t truth) const {
  std::size_t s = 0;
  for (std::size_t p = 0; p < n_classes; ++p) s += at(truth, p);
  return s;
}

std::size_t ConfusionMatrix::total() const {
  std::size_t s = 0;
  for (const std::size_t c : counts) s += c;
  return s;
}

std::size_t ConfusionMatrix::trace() const {
  std::size_t s = 0;
  for (std::size_t c = 0; c < n_classes; ++c) s += at(c, c);
  return s;
}

std::vector<double> ConfusionMatrix::per_class_recall() const {
  std::vector<double> r(n_classes, 0.0);
  for (std::size_t c = 0; c < n_classes; ++c) {
    const std::size_t row = row_sum(c);
    if (row > 0) r[c] = static_cast<double>(at(c, c)) / static_cast<double>(row);
  }
  return r;
}

std::vector<std::size_t> ConfusionMatrix::empty_rows() const {
  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < n_classes; ++c) {
    if (row_sum(c) == 0) out.push_back(c);
  }
  return out;
}

ConfusionMatrix confusion(std::span<const int> preds, std::span<const int> labels, std::size_t n_classes,
                          std::vector<std::string> class_names) {
  if (preds.size() != labels.size()) throw Error(ErrorKind::LengthMismatch, "predictions and labels differ in length");
  ConfusionMatrix m{n_classes, std::vector<std::size_t>(n_classes * n_classes, 0), std::move(class_names)};
  if (m.class_names.empty()) {
    for (std::size_t c = 0; c < n_classes; ++c) m.class_names.push_back(std::to_string(c));
  }
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const int t = labels[i];
    const int p = preds[i];
    if (t < 0 || p < 0 || static_cast<std::size_t>(t) >= n_classes || static_cast<std::size_t>(p) >= n_classes) {
      throw Error(ErrorKind::LabelOutOfRange, "pair (" + std::to_string(t) + ", " + std::to_string(p) + ")");
    }
    ++m.counts[static_cast<std::size_t>(t) * n_classes + static_cast<std::size_t>(p)];
  }
  return m;
}

EvalReport make_report(std::string model_name, std::span<const int> preds, std::span<const int> labels,
                       const std::vector<std::string>& class_names) {
  EvalReport r;
  r.model_name = std::move(model_name);
  r.confusion = confusion(preds, labels, class_names.size(), class_names);
  r.per_class_recall = r.confusion.per_class_recall();
  r.accuracy = r.confusion.total() == 0
                   ? 0.0
                   : static_cast<double>(r.confusion.trace()) / static_cast<double>(r.confusion.total());
  return r;
}

namespace {

template <typename Item>
std::vector<int> labels_of(const BasicDataset<Item>& ds) {
  std::vector<int> out;
  out.reserve(ds.size());
  for (const auto& item : ds.items) out.push_back(item.label_index);
  return out;
}

std::uint64_t model_seed(std::uint64_t master, ModelKind kind) {
  return derive_seed(master, 100 + static_cast<std::uint64_t>(kind));
}

}  // namespace

Comparison compare_models(const CompareInputs& inputs, const SplitSpec& split, const ModelSettings& settings,
                          std::span<const ModelKind> models, std::uint64_t master_seed,
                          const std::vector<std::pair<std::string, std::string>>& config_snapshot) {
  if (models.empty()) throw Error(ErrorKind::InvalidArgument, "no models enabled");

  std::optional<std::pair<VectorDataset, VectorDataset>> vec_split;
  std::optional<std::pair<TensorDataset, TensorDataset>> ten_split;
  std::string vec_split_error;
  std::string ten_split_error;
  try {
    if (inputs.vectors) vec_split = stratified_split(*inputs.vectors, split);
  } catch (const std::exception& ex) {
    vec_split_error = ex.what();
  }
  try {
    if (inputs.tensors) ten_split = stratified_split(*inputs.tensors, split);
  } catch (const std::exception& ex) {
    ten_split_error = ex.what();
  }

  Comparison out;
  if (inputs.vectors) {
    const auto counts = class_counts(*inputs.vectors);
    for (std::size_t c = 0; c < counts.size(); ++c) out.genre_counts.emplace_back(inputs.vectors->class_names[c], counts[c]);
  } else if (inputs.tensors) {
    const auto counts = class_counts(*inputs.tensors);
    for (std::size_t c = 0; c < counts.size(); ++c) out.genre_counts.emplace_back(inputs.tensors->class_names[c], counts[c]);
  }

  std::vector<ModelKind> ordered(models.begin(), models.end());
  std::sort(ordered.begin(), ordered.end(), [](ModelKind a, ModelKind b) { return to_string(a) < to_string(b); });
  ordered.erase(std::unique(ordered.begin(), ordered.end()), ordered.end());

  for (const ModelKind kind : ordered) {
    EvalReport report;
    report.model_name = std::string(to_string(kind));
    try {
      TrainedModel trained;
      std::vector<int> test_labels;
      std::vector<int> test_preds;
      std::vector<int> train_labels;
      std::vector<int> train_preds;
      std::vector<std::string> names;
      if (kind == ModelKind::Cnn) {
        if (!inputs.tensors) throw Error(ErrorKind::FeatureTypeMismatch, "no 2D MFCC tensors available for the CNN");
        if (!ten_split) throw Error(ErrorKind::TooFewSamples, ten_split_error);
        const auto& [train, test] = *ten_split;
        trained = train_tensor_model(train, settings, model_seed(master_seed, kind), &test);
        test_labels = labels_of(test);
        test_preds = predict_all(trained, test);
        train_labels = labels_of(train);
        train_preds = predict_all(trained, train);
        names = train.class_names;
        report.feature_source = "audio-tensor";
      } else {
        if (!inputs.vectors) throw Error(ErrorKind::FeatureTypeMismatch, "no 1D feature vectors available");
        if (!vec_split) throw Error(ErrorKind::TooFewSamples, vec_split_error);
        const auto& [train, test] = *vec_split;
        trained = train_vector_model(kind, train, settings, model_seed(master_seed, kind), &test);
        trained.source = inputs.vector_source == "csv" ? FeatureSource::Csv : FeatureSource::AudioVector;
        test_labels = labels_of(test);
        test_preds = predict_all(trained, test);
        train_labels = labels_of(train);
        train_preds = predict_all(trained, train);
        names = train.class_names;
        report.feature_source = inputs.vector_source;
      }
      EvalReport scored = make_report(report.model_name, test_preds, test_labels, names);
      scored.feature_source = report.feature_source;
      scored.train_accuracy = accuracy(train_preds, train_labels);
      scored.history = trained.history;
      report = std::move(scored);
      out.models.push_back(std::move(trained));
    } catch (const std::exception& ex) {
      report.failed = true;
      report.error = ex.what();
    }
    report.config_snapshot = config_snapshot;
    report.corrupt_files = inputs.corrupt;
    out.rows.push_back({report.model_name, report.accuracy, report.failed});
    out.reports.push_back(std::move(report));
  }

  std::sort(out.rows.begin(), out.rows.end(), [](const ComparisonRow& a, const ComparisonRow& b) {
    if (a.failed != b.failed) return !a.failed;
    if (a.accuracy != b.accuracy) return a.accuracy > b.accuracy;
    return a.model < b.model;
  });
  return out;
}

std::string format_real(double v, int digits) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, digits);
  return std::string(buf, res.ptr);
}

std::string report_text(const EvalReport& r) {
  std::ostringstream os;
  os << "model: " << r.model_name << "\n";
  os << "features: " << r.feature_source << "\n";
  if (r.failed) {
    os << "status: FAILED\nerror: " << r.error << "\n";
  } else {
    os << "status: ok\n";
    os << "test_accuracy: " << format_real(r.accuracy) << "\n";
    os << "train_accuracy: " << format_real(r.train_accuracy) << "\n";
    os << "test_items: " << r.confusion.total() << "\n";
    os << "\nper-class recall:\n";
    for (std::size_t c = 0; c < r.per_class_recall.size(); ++c) {
      os << "  " << r.confusion.class_names[c] << ": " << format_real(r.per_class_recall[c]);
      if (r.confusion.row_sum(c) == 0) os << " (no test items)";
      os << "\n";
    }
    os << "\nconfusion (rows = true, columns = predicted):\n";
    for (std::size_t t = 0; t < r.confusion.n_classes; ++t) {
      os << "  " << r.confusion.class_names[t] << ":";
      for (std::size_t p = 0; p < r.confusion.n_classes; ++p) os << " " << r.confusion.at(t, p);
      os << "\n";
    }
  }
  if (!r.history.empty()) {
    os << "\nhistory:\n" << history_csv(r.history);
  }
  os << "\nconfig:\n";
  for (const auto& [k, v] : r.config_snapshot) os << "  " << k << "=" << v << "\n";
  os << "\ncorrupt_files: " << r.corrupt_files.size() << "\n";
  for (const auto& c : r.corrupt_files) os << "  " << c.path << ": " << c.reason << "\n";
  return os.str();
}

std::string confusion_csv(const ConfusionMatrix& m) {
  std::ostringstream os;
  os << "true\\predicted";
  for (const auto& n : m.class_names) os << "," << n;
  os << "\n";
  for (std::size_t t = 0; t < m.n_classes; ++t) {
    os << m.class_names[t];
    for (std::size_t p = 0; p < m.n_classes; ++p) os << "," << m.at(t, p);
    os << "\n";
  }
  return os.str();
}

std::string confusion_pgm(const ConfusionMatrix& m, std::size_t cell_px) {
  cell_px = std::max<std::size_t>(1, cell_px);
  const std::size_t side = m.n_classes * cell_px;
  std::string out = "P5\n" + std::to_string(side) + " " + std::to_string(side) + "\n255\n";
  out.reserve(out.size() + side * side);
  for (std::size_t y = 0; y < side; ++y) {
    const std::size_t t = y / cell_px;
    const std::size_t row = m.row_sum(t);
    for (std::size_t x = 0; x < side; ++x) {
      const std::size_t p = x / cell_px;
      const std::size_t level = row == 0 ? 0 : (255 * m.at(t, p) + row / 2) / row;
      out.push_back(static_cast<char>(static_cast<unsigned char>(level)));
    }
  }
  return out;
}

std::string history_csv(const TrainHistory& history) {
  std::ostringstream os;
  os << "epoch,train_loss,train_acc,val_loss,val_acc\n";
  for (const auto& h : history) {
    os << h.epoch << "," << format_real(h.train_loss, 8) << "," << format_real(h.train_accuracy, 8) << ","
       << (h.val_loss ? format_real(*h.val_loss, 8) : "") << ","
       << (h.val_accuracy ? format_real(*h.val_accuracy, 8) : "") << "\n";
  }
  return os.str();
}

std::string comparison_text(const Comparison& c) {
  std::ostringstream os;
  os << "model     accuracy  status\n";
  os << "--------  --------  ------\n";
  for (const auto& r : c.rows) {
    std::string name = r.model;
    name.resize(std::max<std::size_t>(8, name.size()), ' ');
    os << name << "  " << (r.failed ? std::string("   -    ") : format_real(r.accuracy, 4) + "  ")
       << (r.failed ? "  FAILED" : "ok") << "\n";
  }
  return os.str();
}

std::string comparison_csv(const Comparison& c) {
  std::ostringstream os;
  os << "model,accuracy,status\n";
  for (const auto& r : c.rows) {
    os << r.model << "," << (r.failed ? "" : format_real(r.accuracy, 6)) << "," << (r.failed ? "failed" : "ok")
       << "\n";
  }
  return os.str();
}

std::string genre_counts_csv(std::span<const std::pair<std::string, std::size_t>> counts) {
  std::ostringstream os;
  os << "genre,files\n";
  for (const auto& [g, n] : counts) os << g << "," << n << "\n";
  return os.str();
}

}  // namespace genreforge::eval
