/// @file _core.cpp
/// @brief Python bindings: audio I/O, spectral transforms, feature
/// extraction, model training/prediction, evaluation helpers and the CLI.

#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <map>
#include <sstream>

#include "genreforge/audio_io.hpp"
#include "genreforge/classifier.hpp"
#include "genreforge/cli.hpp"
#include "genreforge/config.hpp"
#include "genreforge/dsp.hpp"
#include "genreforge/error.hpp"
#include "genreforge/eval.hpp"
#include "genreforge/features.hpp"
#include "genreforge/persist.hpp"

namespace py = pybind11;
using namespace genreforge;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Array to_array(const std::vector<double>& v) {
  Array out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

Array to_array(const Matrix& m) {
  Array out({static_cast<py::ssize_t>(m.rows), static_cast<py::ssize_t>(m.cols)});
  std::copy(m.data.begin(), m.data.end(), out.mutable_data());
  return out;
}

std::vector<double> to_vector(const Array& a) { return {a.data(), a.data() + a.size()}; }

Matrix to_matrix(const Array& a) {
  if (a.ndim() != 2) throw Error(ErrorKind::DimensionMismatch, "expected a 2-D array");
  Matrix m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
  std::copy(a.data(), a.data() + a.size(), m.data.begin());
  return m;
}

/// Pipeline and model settings from flat config keys (the CLI's --set keys).
RunConfig config_from(const std::map<std::string, std::string>& settings) {
  RunConfig cfg;
  for (const auto& [k, v] : settings) apply_setting(cfg, k, v);
  cfg.validate();
  return cfg;
}

AudioClip clip_of(const Array& samples, int sample_rate_hz) { return {to_vector(samples), sample_rate_hz, {}}; }

VectorDataset vector_dataset(const Array& x, const std::vector<int>& y, const std::vector<std::string>& class_names) {
  const Matrix m = to_matrix(x);
  if (m.rows != y.size()) throw Error(ErrorKind::LengthMismatch, "X rows and y differ in length");
  VectorDataset ds;
  ds.class_names = class_names;
  for (std::size_t i = 0; i < m.rows; ++i) {
    if (y[i] < 0 || static_cast<std::size_t>(y[i]) >= class_names.size()) {
      throw Error(ErrorKind::LabelOutOfRange, "label " + std::to_string(y[i]));
    }
    ds.items.push_back({{m.row(i).begin(), m.row(i).end()}, y[i], {}});
  }
  return ds;
}

TensorDataset tensor_dataset(const py::array_t<double, py::array::c_style | py::array::forcecast>& x,
                             const std::vector<int>& y, const std::vector<std::string>& class_names) {
  if (x.ndim() != 3) throw Error(ErrorKind::DimensionMismatch, "expected an (n, frames, n_mfcc) array");
  const auto n = static_cast<std::size_t>(x.shape(0));
  const auto rows = static_cast<std::size_t>(x.shape(1));
  const auto cols = static_cast<std::size_t>(x.shape(2));
  if (n != y.size()) throw Error(ErrorKind::LengthMismatch, "X and y differ in length");
  TensorDataset ds;
  ds.class_names = class_names;
  for (std::size_t i = 0; i < n; ++i) {
    FeatureTensor t;
    t.grid = Matrix(rows, cols);
    const double* src = x.data() + i * rows * cols;
    std::copy(src, src + rows * cols, t.grid.data.begin());
    t.label_index = y[i];
    ds.items.push_back(std::move(t));
  }
  return ds;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "genreforge: music genre classification toolkit";

  static py::handle error_type = PyErr_NewException("genreforge._core.GenreforgeError", PyExc_RuntimeError, nullptr);
  m.attr("GenreforgeError") = error_type;
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object err = py::reinterpret_borrow<py::object>(error_type)(e.what());
      err.attr("kind") = std::string(to_string(e.kind()));
      PyErr_SetObject(error_type.ptr(), err.ptr());
    }
  });

  // ---- audio ----
  m.def(
      "load_wav",
      [](const std::filesystem::path& path) {
        const AudioClip clip = load_wav(path);
        return py::make_tuple(to_array(clip.samples), clip.sample_rate_hz);
      },
      py::arg("path"), "Decode a 16-bit PCM WAV file to (mono samples in [-1, 1], sample rate).");
  m.def(
      "save_wav",
      [](const std::filesystem::path& path, const Array& samples, int sample_rate_hz) {
        save_wav(path, to_vector(samples), sample_rate_hz);
      },
      py::arg("path"), py::arg("samples"), py::arg("sample_rate"));

  // ---- dsp ----
  m.def(
      "fft", [](const std::vector<Complex>& x) { return fft(x); }, py::arg("signal"),
      "Unnormalized forward DFT of a power-of-two length sequence.");
  m.def(
      "stft_power",
      [](const Array& samples, int sample_rate_hz, std::size_t n_fft, std::size_t hop) {
        return to_array(stft(clip_of(samples, sample_rate_hz), StftConfig{n_fft, hop}).bins);
      },
      py::arg("samples"), py::arg("sample_rate"), py::arg("n_fft") = 2048, py::arg("hop") = 512,
      "Hann-windowed power spectrogram, shape (frames, n_fft // 2 + 1).");
  m.def(
      "mel_filterbank",
      [](std::size_t n_mels, std::size_t n_fft, int sample_rate_hz, double fmin, std::optional<double> fmax) {
        return to_array(mel_filterbank(n_mels, n_fft, sample_rate_hz, fmin, fmax.value_or(sample_rate_hz / 2.0)).weights);
      },
      py::arg("n_mels"), py::arg("n_fft"), py::arg("sample_rate"), py::arg("fmin") = 0.0,
      py::arg("fmax") = py::none());
  m.def(
      "dct2", [](const Array& x) { return to_array(dct2_orthonormal(to_vector(x))); }, py::arg("x"));
  m.def(
      "idct2", [](const Array& y) { return to_array(idct2_orthonormal(to_vector(y))); }, py::arg("y"));
  m.def("hz_to_mel", &hz_to_mel, py::arg("hz"));
  m.def("mel_to_hz", &mel_to_hz, py::arg("mel"));

  // ---- features ----
  m.def(
      "mfcc",
      [](const Array& samples, int sample_rate_hz, const std::map<std::string, std::string>& settings) {
        const RunConfig cfg = config_from(settings);
        return to_array(compute_mfcc(clip_of(samples, sample_rate_hz), cfg.pipeline).coeffs);
      },
      py::arg("samples"), py::arg("sample_rate"), py::arg("settings") = std::map<std::string, std::string>{},
      "Unpadded MFCC matrix, shape (frames, n_mfcc). Settings use audio.* keys.");
  m.def(
      "extract_vector",
      [](const Array& samples, int sample_rate_hz, const std::map<std::string, std::string>& settings) {
        const RunConfig cfg = config_from(settings);
        return to_array(extract_vector(clip_of(samples, sample_rate_hz), cfg.pipeline).values);
      },
      py::arg("samples"), py::arg("sample_rate"), py::arg("settings") = std::map<std::string, std::string>{},
      "Per-coefficient MFCC mean and variance, length 2 * n_mfcc.");
  m.def(
      "extract_tensor",
      [](const Array& samples, int sample_rate_hz, const std::map<std::string, std::string>& settings) {
        const RunConfig cfg = config_from(settings);
        return to_array(extract_tensor(clip_of(samples, sample_rate_hz), cfg.pipeline).grid);
      },
      py::arg("samples"), py::arg("sample_rate"), py::arg("settings") = std::map<std::string, std::string>{},
      "MFCC grid padded or truncated to (max_frames, n_mfcc).");
  m.def(
      "read_csv",
      [](const std::filesystem::path& path, bool skip_bad_rows) {
        const CsvIngest ingest = ingest_csv(path, skip_bad_rows ? CsvPolicy::SkipBadRows : CsvPolicy::Strict);
        const auto& ds = ingest.dataset;
        const std::size_t dim = ingest.feature_names.size();
        Matrix x(ds.size(), dim);
        std::vector<int> y;
        std::vector<std::string> ids;
        for (std::size_t i = 0; i < ds.size(); ++i) {
          std::copy(ds.items[i].values.begin(), ds.items[i].values.end(), x.row(i).begin());
          y.push_back(ds.items[i].label_index);
          ids.push_back(ds.items[i].source_id);
        }
        std::vector<std::pair<std::size_t, std::string>> rejected;
        for (const auto& r : ingest.rejected) rejected.emplace_back(r.row, r.reason);
        py::dict out;
        out["X"] = to_array(x);
        out["y"] = y;
        out["class_names"] = ds.class_names;
        out["feature_names"] = ingest.feature_names;
        out["ids"] = ids;
        out["rejected"] = rejected;
        return out;
      },
      py::arg("path"), py::arg("skip_bad_rows") = false);

  // ---- models ----
  py::class_<TrainedModel>(m, "Model")
      .def_property_readonly("kind", [](const TrainedModel& t) { return std::string(to_string(t.kind)); })
      .def_property_readonly("class_names", [](const TrainedModel& t) { return t.class_names; })
      .def_property_readonly("history",
                             [](const TrainedModel& t) {
                               py::list out;
                               for (const auto& h : t.history) {
                                 py::dict d;
                                 d["epoch"] = h.epoch;
                                 d["train_loss"] = h.train_loss;
                                 d["train_accuracy"] = h.train_accuracy;
                                 d["val_loss"] = h.val_loss;
                                 d["val_accuracy"] = h.val_accuracy;
                                 out.append(d);
                               }
                               return out;
                             })
      .def(
          "predict_proba",
          [](const TrainedModel& t, const Array& x) {
            if (t.kind == ModelKind::Cnn) return to_array(predict_proba(t, to_matrix(x)));
            return to_array(predict_proba(t, to_vector(x)));
          },
          py::arg("x"), "Class probabilities for one raw feature vector (or one MFCC grid for the CNN).")
      .def(
          "predict",
          [](const TrainedModel& t, const Array& x) {
            std::vector<double> p = t.kind == ModelKind::Cnn ? predict_proba(t, to_matrix(x)) : predict_proba(t, to_vector(x));
            return argmax(p);
          },
          py::arg("x"))
      .def(
          "save", [](const TrainedModel& t, const std::filesystem::path& path) { persist::save_model(path, t); },
          py::arg("path"))
      .def_static(
          "load", [](const std::filesystem::path& path) { return persist::load_model(path); }, py::arg("path"));

  m.def(
      "train",
      [](const std::string& kind_name, const Array& x, const std::vector<int>& y,
         const std::vector<std::string>& class_names, std::uint64_t seed,
         const std::map<std::string, std::string>& settings) {
        const ModelKind kind = parse_model_kind(kind_name);
        const RunConfig cfg = config_from(settings);
        if (kind == ModelKind::Cnn) {
          const TensorDataset ds = tensor_dataset(x, y, class_names);
          py::gil_scoped_release release;
          TrainedModel t = train_tensor_model(ds, cfg.settings, seed);
          t.pipeline = cfg.pipeline;
          return t;
        }
        const VectorDataset ds = vector_dataset(x, y, class_names);
        py::gil_scoped_release release;
        return train_vector_model(kind, ds, cfg.settings, seed);
      },
      py::arg("kind"), py::arg("X"), py::arg("y"), py::arg("class_names"), py::arg("seed") = 42,
      py::arg("settings") = std::map<std::string, std::string>{},
      "Train mlp/knn/forest on X (n, d) or the cnn on X (n, frames, n_mfcc). Settings use the config keys.");

  // ---- evaluation ----
  m.def(
      "split_indices",
      [](const std::vector<int>& labels, std::size_t n_classes, double train_fraction, std::uint64_t seed,
         bool stratified) {
        const auto s = eval::split_indices(labels, n_classes, {train_fraction, seed, stratified});
        return py::make_tuple(s.train, s.test);
      },
      py::arg("labels"), py::arg("n_classes"), py::arg("train_fraction") = 0.8, py::arg("seed") = 42,
      py::arg("stratified") = true);
  m.def(
      "accuracy", [](const std::vector<int>& preds, const std::vector<int>& labels) { return eval::accuracy(preds, labels); },
      py::arg("preds"), py::arg("labels"));
  m.def(
      "confusion",
      [](const std::vector<int>& preds, const std::vector<int>& labels, std::size_t n_classes) {
        const auto c = eval::confusion(preds, labels, n_classes);
        py::array_t<std::int64_t> out({static_cast<py::ssize_t>(n_classes), static_cast<py::ssize_t>(n_classes)});
        std::copy(c.counts.begin(), c.counts.end(), out.mutable_data());
        return out;
      },
      py::arg("preds"), py::arg("labels"), py::arg("n_classes"), "Counts with rows = true class, columns = predicted.");

  // ---- cli ----
  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out;
        std::ostringstream err;
        int code = 0;
        {
          py::gil_scoped_release release;
          code = run_cli(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Run a genreforge subcommand in-process; returns (exit code, stdout, stderr).");
}
