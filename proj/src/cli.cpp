/// @file cli.cpp
/// @brief extract / train / predict / compare / sweep-k.

#include "genreforge/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>

#include "genreforge/audio_io.hpp"
#include "genreforge/classifier.hpp"
#include "genreforge/config.hpp"
#include "genreforge/error.hpp"
#include "genreforge/eval.hpp"
#include "genreforge/features.hpp"
#include "genreforge/io_util.hpp"
#include "genreforge/knn.hpp"
#include "genreforge/persist.hpp"
#include "genreforge/random.hpp"

namespace genreforge {
namespace {

namespace fs = std::filesystem;

/// Raised for training failures so they map to exit code 3.
struct TrainingFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Raw flag values; empty/unset means "not given".
struct Flags {
  std::string config_file;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string models;
  std::string csv;
  std::string dataset_dir;
  std::string features;
  std::string model;
  std::string model_file;
  std::string wav;
  std::optional<std::size_t> top;
  std::string k_values;
  std::optional<std::size_t> folds;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config_file, "key=value config file");
  cmd->add_option("--set", f.sets, "override a config key (key=value), repeatable");
  cmd->add_option("--seed", f.seed, "master seed");
  cmd->add_option("--out", f.out, "output directory");
}

void add_data(CLI::App* cmd, Flags& f) {
  cmd->add_option("--csv", f.csv, "feature CSV (GTZAN metadata layout)");
  cmd->add_option("--dataset-dir", f.dataset_dir, "audio root: <root>/<genre>/*.wav");
  cmd->add_option("--features", f.features, "feature cache written by extract");
}

/// Defaults, then the config file, then --set, then dedicated flags.
RunConfig resolve(const Flags& f) {
  RunConfig cfg;
  if (!f.config_file.empty()) {
    for (const auto& [k, v] : parse_key_values(read_file_text(f.config_file))) apply_setting(cfg, k, v);
  }
  for (const auto& s : f.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw Error(ErrorKind::InvalidArgument, "--set expects key=value, got '" + s + "'");
    apply_setting(cfg, s.substr(0, eq), s.substr(eq + 1));
  }
  if (f.seed) cfg.seed = *f.seed;
  if (!f.out.empty()) cfg.out = f.out;
  if (!f.models.empty()) cfg.models = parse_model_list(f.models);
  if (!f.csv.empty()) cfg.csv = f.csv;
  if (!f.dataset_dir.empty()) cfg.dataset_dir = f.dataset_dir;
  if (!f.features.empty()) cfg.features = f.features;
  if (f.top) cfg.top = *f.top;
  if (!f.k_values.empty()) apply_setting(cfg, "knn.k_values", f.k_values);
  if (f.folds) cfg.folds = *f.folds;
  cfg.split.seed = cfg.seed;
  cfg.validate();
  return cfg;
}

/// Snapshot without the output directory so identical runs into different
/// directories produce identical reports.
std::vector<std::pair<std::string, std::string>> report_snapshot(const RunConfig& cfg) {
  auto snap = snapshot(cfg);
  std::erase_if(snap, [](const auto& kv) { return kv.first == "out"; });
  return snap;
}

std::string snapshot_text_for_files(const RunConfig& cfg) {
  std::string out;
  for (const auto& [k, v] : report_snapshot(cfg)) out += k + " = " + v + "\n";
  return out;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Manifest: the only file carrying a timestamp, in its `created` line.
void write_manifest(const fs::path& dir, std::string_view command, const std::vector<std::string>& files,
                    std::span<const std::pair<std::string, std::size_t>> genre_counts,
                    std::span<const CorruptFileReport> corrupt) {
  std::ostringstream os;
  os << "command: " << command << "\n";
  os << "created: " << utc_timestamp() << "\n";
  for (const auto& file : files) os << "file: " << file << "\n";
  for (const auto& [genre, n] : genre_counts) os << "genre_count: " << genre << " " << n << "\n";
  for (const auto& c : corrupt) os << "corrupt: " << c.path << " (" << c.reason << ")\n";
  write_file_atomic(dir / "manifest.txt", os.str());
}

std::string corrupt_csv(std::span<const CorruptFileReport> corrupt) {
  std::string out = "path,reason\n";
  for (const auto& c : corrupt) {
    std::string reason = c.reason;
    std::replace(reason.begin(), reason.end(), ',', ';');
    out += c.path + "," + reason + "\n";
  }
  return out;
}

template <typename Item>
std::vector<std::pair<std::string, std::size_t>> genre_counts_of(const BasicDataset<Item>& ds) {
  std::vector<std::pair<std::string, std::size_t>> out;
  const auto counts = class_counts(ds);
  for (std::size_t c = 0; c < counts.size(); ++c) out.emplace_back(ds.class_names[c], counts[c]);
  return out;
}

/// Everything a command may train or evaluate on.
struct Data {
  std::optional<VectorDataset> vectors;
  FeatureSource vector_source = FeatureSource::Csv;
  std::vector<std::string> feature_names;
  std::optional<TensorDataset> tensors;
  FeatureConfig pipeline;
  std::vector<CorruptFileReport> corrupt;
};

persist::FeatureCache extract_cache(const RunConfig& cfg) {
  const DatasetScan scan = scan_dataset(cfg.dataset_dir, cfg.pipeline.sample_rate_hz);
  AudioDatasets built = build_audio_datasets(scan, cfg.pipeline);
  persist::FeatureCache cache;
  cache.pipeline = cfg.pipeline;
  cache.corrupt = std::move(built.corrupt);  // includes the scan's reports
  if (built.vectors.empty()) throw Error(ErrorKind::EmptyDataset, "no clip could be featurized");
  cache.vectors = std::move(built.vectors);
  cache.tensors = std::move(built.tensors);
  return cache;
}

/// CSV supplies vectors when given; audio (cache or directory) supplies
/// tensors, and vectors too when no CSV is given.
Data load_data(const RunConfig& cfg, bool want_tensors, bool want_vectors) {
  Data d;
  d.pipeline = cfg.pipeline;
  if (want_vectors && !cfg.csv.empty()) {
    CsvIngest ingest = ingest_csv(cfg.csv, CsvPolicy::SkipBadRows);
    for (const auto& r : ingest.rejected) {
      d.corrupt.push_back({cfg.csv + ":row" + std::to_string(r.row), r.reason});
    }
    if (ingest.dataset.empty()) throw Error(ErrorKind::EmptyDataset, "CSV has no usable rows");
    d.vectors = std::move(ingest.dataset);
    d.feature_names = std::move(ingest.feature_names);
    d.vector_source = FeatureSource::Csv;
  }
  const bool need_audio = (want_tensors) || (want_vectors && !d.vectors);
  if (need_audio && (!cfg.features.empty() || !cfg.dataset_dir.empty())) {
    persist::FeatureCache cache = !cfg.features.empty() ? persist::load_cache(cfg.features) : extract_cache(cfg);
    d.pipeline = cache.pipeline;
    d.corrupt.insert(d.corrupt.end(), cache.corrupt.begin(), cache.corrupt.end());
    if (want_tensors) d.tensors = std::move(cache.tensors);
    if (want_vectors && !d.vectors && cache.vectors) {
      d.vectors = std::move(cache.vectors);
      d.vector_source = FeatureSource::AudioVector;
    }
  }
  if (!d.vectors && !d.tensors) {
    if (cfg.csv.empty() && cfg.features.empty() && cfg.dataset_dir.empty()) {
      throw Error(ErrorKind::InvalidArgument, "no data source: give --csv, --features or --dataset-dir");
    }
  }
  return d;
}

std::vector<int> labels_of_vectors(const VectorDataset& ds) {
  std::vector<int> out;
  for (const auto& item : ds.items) out.push_back(item.label_index);
  return out;
}

std::vector<int> labels_of_tensors(const TensorDataset& ds) {
  std::vector<int> out;
  for (const auto& item : ds.items) out.push_back(item.label_index);
  return out;
}

void stamp(TrainedModel& m, const Data& d) {
  if (m.source == FeatureSource::Csv) {
    m.feature_names = d.feature_names;
  } else {
    m.pipeline = d.pipeline;
  }
}

/// Report, confusion (CSV + PGM) and history for one model under `prefix`.
std::vector<std::string> write_report_files(const fs::path& dir, const std::string& prefix,
                                            const eval::EvalReport& r) {
  std::vector<std::string> files;
  const auto put = [&](const std::string& name, const std::string& text) {
    write_file_atomic(dir / name, text);
    files.push_back(name);
  };
  put(prefix + "_report.txt", eval::report_text(r));
  if (!r.failed) {
    put(prefix + "_confusion.csv", eval::confusion_csv(r.confusion));
    put(prefix + "_confusion.pgm", eval::confusion_pgm(r.confusion));
    put(prefix + "_history.csv", eval::history_csv(r.history));
  }
  return files;
}

int cmd_extract(const RunConfig& cfg, std::ostream& out) {
  if (cfg.dataset_dir.empty()) throw Error(ErrorKind::InvalidArgument, "extract needs --dataset-dir");
  const persist::FeatureCache cache = extract_cache(cfg);
  const fs::path dir = cfg.out;
  persist::save_cache(dir / "features.gfc", cache);
  const auto counts = genre_counts_of(*cache.vectors);
  write_file_atomic(dir / "genre_counts.csv", eval::genre_counts_csv(counts));
  write_file_atomic(dir / "corrupt_files.csv", corrupt_csv(cache.corrupt));
  write_file_atomic(dir / "config.txt", snapshot_text_for_files(cfg));
  write_manifest(dir, "extract", {"features.gfc", "genre_counts.csv", "corrupt_files.csv", "config.txt"}, counts,
                 cache.corrupt);
  out << "extracted " << cache.vectors->size() << " clips into " << (dir / "features.gfc").string() << "\n";
  for (const auto& [genre, n] : counts) out << "  " << genre << ": " << n << "\n";
  if (!cache.corrupt.empty()) out << "skipped " << cache.corrupt.size() << " corrupt file(s)\n";
  return kExitOk;
}

int cmd_train(const RunConfig& cfg, const std::string& model_name, std::ostream& out) {
  if (model_name.empty()) throw Error(ErrorKind::InvalidArgument, "train needs --model");
  const ModelKind kind = parse_model_kind(model_name);
  const bool tensors = kind == ModelKind::Cnn;
  Data d = load_data(cfg, tensors, !tensors);
  const std::uint64_t seed = derive_seed(cfg.seed, 100 + static_cast<std::uint64_t>(kind));

  TrainedModel model;
  eval::EvalReport report;
  std::vector<int> train_preds;
  std::vector<int> train_labels;
  if (tensors) {
    if (!d.tensors || d.tensors->empty()) {
      throw Error(ErrorKind::FeatureTypeMismatch, "the CNN needs 2D MFCC tensors; give --dataset-dir or a cache with tensors");
    }
    const auto [train, test] = eval::stratified_split(*d.tensors, cfg.split);
    try {
      model = train_tensor_model(train, cfg.settings, seed, &test);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::FeatureTypeMismatch) throw;
      throw TrainingFailure(e.what());
    }
    report = eval::make_report(model_name, predict_all(model, test), labels_of_tensors(test), train.class_names);
    train_preds = predict_all(model, train);
    train_labels = labels_of_tensors(train);
    report.feature_source = "audio-tensor";
  } else {
    if (!d.vectors || d.vectors->empty()) throw Error(ErrorKind::FeatureTypeMismatch, "no 1D feature vectors available");
    const auto [train, test] = eval::stratified_split(*d.vectors, cfg.split);
    try {
      model = train_vector_model(kind, train, cfg.settings, seed, &test);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::FeatureTypeMismatch) throw;
      throw TrainingFailure(e.what());
    }
    model.source = d.vector_source;
    report = eval::make_report(model_name, predict_all(model, test), labels_of_vectors(test), train.class_names);
    train_preds = predict_all(model, train);
    train_labels = labels_of_vectors(train);
    report.feature_source = std::string(to_string(d.vector_source));
  }
  report.model_name = std::string(to_string(kind));
  stamp(model, d);
  report.train_accuracy = eval::accuracy(train_preds, train_labels);
  report.history = model.history;
  report.config_snapshot = report_snapshot(cfg);
  report.corrupt_files = d.corrupt;

  const fs::path dir = cfg.out;
  const std::string prefix(to_string(kind));
  persist::save_model(dir / (prefix + ".gfm"), model);
  std::vector<std::string> files = {prefix + ".gfm"};
  const auto more = write_report_files(dir, prefix, report);
  files.insert(files.end(), more.begin(), more.end());
  write_file_atomic(dir / "config.txt", snapshot_text_for_files(cfg));
  files.push_back("config.txt");
  const auto counts = tensors ? genre_counts_of(*d.tensors) : genre_counts_of(*d.vectors);
  write_manifest(dir, "train", files, counts, d.corrupt);

  out << prefix << " test accuracy " << eval::format_real(report.accuracy, 4) << " (train "
      << eval::format_real(report.train_accuracy, 4) << ")\n";
  out << "model written to " << (dir / (prefix + ".gfm")).string() << "\n";
  return kExitOk;
}

std::vector<std::pair<std::size_t, double>> ranked(std::span<const double> proba) {
  std::vector<std::pair<std::size_t, double>> r;
  for (std::size_t i = 0; i < proba.size(); ++i) r.emplace_back(i, proba[i]);
  std::stable_sort(r.begin(), r.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  return r;
}

int cmd_predict(const RunConfig& cfg, const std::string& model_file, const std::string& wav, std::ostream& out) {
  if (model_file.empty()) throw Error(ErrorKind::InvalidArgument, "predict needs --model-file");
  if (wav.empty() == cfg.csv.empty()) throw Error(ErrorKind::InvalidArgument, "predict needs exactly one of --wav or --csv");
  const TrainedModel model = persist::load_model(model_file);
  const std::size_t top = std::min(cfg.top, model.class_names.size());

  if (!wav.empty()) {
    if (model.source == FeatureSource::Csv) {
      throw Error(ErrorKind::FeatureTypeMismatch,
                  "model was trained on CSV features; predict with --csv rows instead of a WAV file");
    }
    const AudioClip clip = load_wav(wav);
    std::vector<double> proba;
    if (model.source == FeatureSource::AudioTensor) {
      proba = predict_proba(model, extract_tensor(clip, model.pipeline).grid);
    } else {
      proba = predict_proba(model, extract_vector(clip, model.pipeline).values);
    }
    const auto r = ranked(proba);
    for (std::size_t i = 0; i < top; ++i) {
      out << (i + 1) << " " << model.class_names[r[i].first] << " " << eval::format_real(r[i].second, 6) << "\n";
    }
    return kExitOk;
  }

  if (model.source != FeatureSource::Csv) {
    throw Error(ErrorKind::FeatureTypeMismatch, "model was trained on audio features; predict with --wav");
  }
  const CsvIngest ingest = ingest_csv(cfg.csv, CsvPolicy::Strict);
  if (ingest.feature_names != model.feature_names) {
    throw Error(ErrorKind::DimensionMismatch, "CSV feature columns differ from the model's");
  }
  std::size_t correct = 0;
  for (const auto& item : ingest.dataset.items) {
    const auto r = ranked(predict_proba(model, item.values));
    const std::string& truth = ingest.dataset.class_names[static_cast<std::size_t>(item.label_index)];
    if (model.class_names[r[0].first] == truth) ++correct;
    out << item.source_id;
    for (std::size_t i = 0; i < top; ++i) {
      out << " " << model.class_names[r[i].first] << ":" << eval::format_real(r[i].second, 6);
    }
    out << "\n";
  }
  if (!ingest.dataset.empty()) {
    out << "accuracy " << eval::format_real(static_cast<double>(correct) / ingest.dataset.size(), 4) << "\n";
  }
  return kExitOk;
}

int cmd_compare(const RunConfig& cfg, std::ostream& out) {
  const bool has_cnn = std::find(cfg.models.begin(), cfg.models.end(), ModelKind::Cnn) != cfg.models.end();
  const bool has_vec = std::any_of(cfg.models.begin(), cfg.models.end(), [](ModelKind k) { return k != ModelKind::Cnn; });
  Data d = load_data(cfg, has_cnn, has_vec);

  eval::CompareInputs inputs;
  inputs.vectors = d.vectors;
  inputs.vector_source = std::string(to_string(d.vector_source));
  inputs.tensors = d.tensors;
  inputs.corrupt = d.corrupt;
  eval::Comparison cmp = eval::compare_models(inputs, cfg.split, cfg.settings, cfg.models, cfg.seed, report_snapshot(cfg));

  const fs::path dir = cfg.out;
  std::vector<std::string> files;
  const auto put = [&](const std::string& name, const std::string& text) {
    write_file_atomic(dir / name, text);
    files.push_back(name);
  };
  put("comparison.txt", eval::comparison_text(cmp));
  put("comparison.csv", eval::comparison_csv(cmp));
  put("genre_counts.csv", eval::genre_counts_csv(cmp.genre_counts));
  put("config.txt", snapshot_text_for_files(cfg));
  for (const auto& r : cmp.reports) {
    const auto more = write_report_files(dir, r.model_name, r);
    files.insert(files.end(), more.begin(), more.end());
  }
  for (auto& m : cmp.models) {
    stamp(m, d);
    const std::string name = std::string(to_string(m.kind)) + ".gfm";
    persist::save_model(dir / name, m);
    files.push_back(name);
  }
  write_manifest(dir, "compare", files, cmp.genre_counts, d.corrupt);

  out << eval::comparison_text(cmp);
  const bool all_ok = std::none_of(cmp.rows.begin(), cmp.rows.end(), [](const auto& r) { return r.failed; });
  if (!all_ok) {
    for (const auto& r : cmp.reports) {
      if (r.failed) out << r.model_name << " failed: " << r.error << "\n";
    }
  }
  return all_ok ? kExitOk : kExitTraining;
}

int cmd_sweep_k(const RunConfig& cfg, std::ostream& out) {
  Data d = load_data(cfg, false, true);
  if (!d.vectors) throw Error(ErrorKind::FeatureTypeMismatch, "sweep-k needs 1D feature vectors");
  auto [train, test] = eval::stratified_split(*d.vectors, cfg.split);
  VectorDataset full = *d.vectors;
  if (cfg.settings.knn_normalize) {
    const NormStats stats = fit_normalization(train);
    train = apply_normalization(train, stats);
    test = apply_normalization(test, stats);
    // Cross-validation z-scores with whole-set statistics.
    full = apply_normalization(full, fit_normalization(full));
  }
  const knn::SweepResult sweep = knn::sweep_k(train, test, cfg.k_values);

  std::string csv = "k,holdout_accuracy,cv_mean_accuracy\n";
  out << "k     holdout   cv-mean\n";
  for (const auto& [k, acc] : sweep.accuracy_by_k) {
    std::string cv_text = "";
    if (cfg.folds >= 2 && k < full.size()) {
      const knn::CvResult cv = knn::kfold_cv(full, k, cfg.folds, cfg.seed);
      cv_text = eval::format_real(cv.mean_accuracy, 6);
    }
    csv += std::to_string(k) + "," + eval::format_real(acc, 6) + "," + cv_text + "\n";
    std::string k_col = std::to_string(k);
    k_col.resize(6, ' ');
    out << k_col << eval::format_real(acc, 4) << "    " << (cv_text.empty() ? "-" : cv_text.substr(0, 6)) << "\n";
  }
  out << "best k " << sweep.best_k << " (holdout accuracy " << eval::format_real(sweep.best_accuracy, 4) << ")\n";

  const fs::path dir = cfg.out;
  write_file_atomic(dir / "sweep_k.csv", csv);
  write_file_atomic(dir / "config.txt", snapshot_text_for_files(cfg));
  write_manifest(dir, "sweep-k", {"sweep_k.csv", "config.txt"}, genre_counts_of(*d.vectors), d.corrupt);
  return kExitOk;
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return kExitUsage;
    default: return kExitData;
  }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"genreforge: music genre classification toolkit", "genreforge"};
  app.require_subcommand(1);
  Flags f;

  auto* extract = app.add_subcommand("extract", "decode a dataset and cache MFCC features");
  add_common(extract, f);
  extract->add_option("--dataset-dir", f.dataset_dir, "audio root: <root>/<genre>/*.wav");

  auto* train = app.add_subcommand("train", "train one model and report held-out accuracy");
  add_common(train, f);
  add_data(train, f);
  train->add_option("--model", f.model, "mlp | knn | cnn | forest");

  auto* predict = app.add_subcommand("predict", "rank genres for a WAV file or CSV rows");
  add_common(predict, f);
  predict->add_option("--model-file", f.model_file, "model written by train or compare");
  predict->add_option("--wav", f.wav, "WAV file to classify");
  predict->add_option("--csv", f.csv, "CSV rows to classify (CSV-trained models)");
  predict->add_option("--top", f.top, "number of genres to print");

  auto* compare = app.add_subcommand("compare", "train and score several models on a shared split");
  add_common(compare, f);
  add_data(compare, f);
  compare->add_option("--models", f.models, "comma-separated model list");

  auto* sweep = app.add_subcommand("sweep-k", "KNN accuracy over a list of k values");
  add_common(sweep, f);
  add_data(sweep, f);
  sweep->add_option("--k-values", f.k_values, "comma-separated k values");
  sweep->add_option("--folds", f.folds, "cross-validation folds (0 or 1 disables)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  }

  try {
    const RunConfig cfg = resolve(f);
    if (extract->parsed()) return cmd_extract(cfg, out);
    if (train->parsed()) return cmd_train(cfg, f.model, out);
    if (predict->parsed()) return cmd_predict(cfg, f.model_file, f.wav, out);
    if (compare->parsed()) return cmd_compare(cfg, out);
    if (sweep->parsed()) return cmd_sweep_k(cfg, out);
  } catch (const TrainingFailure& e) {
    err << "training failed: " << e.what() << "\n";
    return kExitTraining;
  } catch (const Error& e) {
    err << "error [" << to_string(e.kind()) << "]: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace genreforge
