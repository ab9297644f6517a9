/// @file dsp.cpp

#include "genreforge/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "genreforge/error.hpp"

namespace genreforge {

void StftConfig::validate() const {
  if (!is_power_of_two(n_fft)) {
    throw Error(ErrorKind::InvalidArgument, "n_fft must be a power of two, got " + std::to_string(n_fft));
  }
  if (hop == 0 || hop > n_fft) {
    throw Error(ErrorKind::InvalidArgument, "hop must satisfy 0 < hop <= n_fft");
  }
}

FftPlan::FftPlan(std::size_t n) : n_(n) {
  if (!is_power_of_two(n)) {
    throw Error(ErrorKind::NonPowerOfTwoLength, "FFT length " + std::to_string(n));
  }
  std::size_t bits = 0;
  while ((std::size_t{1} << bits) < n) ++bits;
  bitrev_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t r = 0;
    for (std::size_t b = 0; b < bits; ++b) r |= ((i >> b) & 1u) << (bits - 1 - b);
    bitrev_[i] = r;
  }
  twiddles_.resize(n / 2);
  for (std::size_t k = 0; k < n / 2; ++k) {
    const double angle = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
    twiddles_[k] = {std::cos(angle), std::sin(angle)};
  }
}

void FftPlan::forward(std::span<Complex> data) const {
  if (data.size() != n_) {
    throw Error(ErrorKind::DimensionMismatch, "FFT plan size " + std::to_string(n_) +
                                                  " applied to " + std::to_string(data.size()));
  }
  for (std::size_t i = 0; i < n_; ++i) {
    if (i < bitrev_[i]) std::swap(data[i], data[bitrev_[i]]);
  }
  for (std::size_t len = 2; len <= n_; len <<= 1) {
    const std::size_t half = len / 2;
    const std::size_t stride = n_ / len;
    for (std::size_t start = 0; start < n_; start += len) {
      for (std::size_t j = 0; j < half; ++j) {
        const Complex t = twiddles_[j * stride] * data[start + j + half];
        const Complex u = data[start + j];
        data[start + j] = u + t;
        data[start + j + half] = u - t;
      }
    }
  }
}

std::vector<Complex> fft(std::span<const Complex> signal) {
  const FftPlan plan(signal.size());
  std::vector<Complex> out(signal.begin(), signal.end());
  plan.forward(out);
  return out;
}

std::vector<double> hann_window(std::size_t n) {
  if (n == 1) return {1.0};
  std::vector<double> w(n);
  const double denom = static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / denom));
  }
  return w;
}

std::size_t stft_frame_count(std::size_t n_samples, const StftConfig& cfg) {
  if (n_samples < cfg.n_fft) return 0;
  return 1 + (n_samples - cfg.n_fft) / cfg.hop;
}

Spectrogram stft(const AudioClip& clip, const StftConfig& cfg) {
  cfg.validate();
  const std::size_t n_frames = stft_frame_count(clip.samples.size(), cfg);
  if (n_frames == 0) {
    throw Error(ErrorKind::SignalTooShort, std::to_string(clip.samples.size()) +
                                               " samples < n_fft " + std::to_string(cfg.n_fft));
  }
  const std::size_t n_bins = cfg.n_fft / 2 + 1;
  const FftPlan plan(cfg.n_fft);
  const std::vector<double> window = hann_window(cfg.n_fft);

  Spectrogram spec{Matrix(n_frames, n_bins), cfg, clip.sample_rate_hz};
  std::vector<Complex> frame(cfg.n_fft);
  for (std::size_t t = 0; t < n_frames; ++t) {
    const double* src = clip.samples.data() + t * cfg.hop;
    for (std::size_t n = 0; n < cfg.n_fft; ++n) frame[n] = {src[n] * window[n], 0.0};
    plan.forward(frame);
    auto out = spec.bins.row(t);
    for (std::size_t k = 0; k < n_bins; ++k) out[k] = std::norm(frame[k]);
  }
  return spec;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

MelFilterbank mel_filterbank(std::size_t n_mels, std::size_t n_fft, int sample_rate_hz,
                             double fmin_hz, double fmax_hz) {
  if (n_mels == 0 || n_fft == 0 || sample_rate_hz <= 0) {
    throw Error(ErrorKind::InvalidFrequencyRange, "n_mels, n_fft and sample rate must be positive");
  }
  const double nyquist = sample_rate_hz / 2.0;
  if (!(fmin_hz >= 0.0 && fmin_hz < fmax_hz && fmax_hz <= nyquist)) {
    throw Error(ErrorKind::InvalidFrequencyRange,
                "need 0 <= fmin < fmax <= sr/2, got fmin=" + std::to_string(fmin_hz) +
                    " fmax=" + std::to_string(fmax_hz));
  }

  const double mel_lo = hz_to_mel(fmin_hz);
  const double mel_hi = hz_to_mel(fmax_hz);
  std::vector<double> edges(n_mels + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const double mel = mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) / static_cast<double>(n_mels + 1);
    edges[i] = mel_to_hz(mel);
  }
  // Pin the end points so round-off cannot move them outside the requested range.
  edges.front() = fmin_hz;
  edges.back() = fmax_hz;

  const std::size_t n_bins = n_fft / 2 + 1;
  MelFilterbank bank{Matrix(n_mels, n_bins), fmin_hz, fmax_hz, {}};
  bank.center_hz.assign(edges.begin() + 1, edges.end() - 1);
  const double bin_hz = static_cast<double>(sample_rate_hz) / static_cast<double>(n_fft);

  for (std::size_t m = 0; m < n_mels; ++m) {
    const double left = edges[m];
    const double center = edges[m + 1];
    const double right = edges[m + 2];
    auto row = bank.weights.row(m);
    double peak = 0.0;
    for (std::size_t k = 0; k < n_bins; ++k) {
      const double f = static_cast<double>(k) * bin_hz;
      double w = 0.0;
      if (f > left && f <= center) {
        w = (f - left) / (center - left);
      } else if (f > center && f < right) {
        w = (right - f) / (right - center);
      }
      row[k] = w;
      peak = std::max(peak, w);
    }
    if (peak <= 0.0) {
      throw Error(ErrorKind::InvalidFrequencyRange,
                  "mel filter " + std::to_string(m) + " covers no FFT bin; lower n_mels or raise n_fft");
    }
    for (double& w : row) w /= peak;
  }
  return bank;
}

std::vector<double> dct2_orthonormal(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<double> y(n, 0.0);
  if (n == 0) return y;
  const double nd = static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      acc += x[i] * std::cos(std::numbers::pi * static_cast<double>(k) * (2.0 * static_cast<double>(i) + 1.0) / (2.0 * nd));
    }
    y[k] = acc * (k == 0 ? std::sqrt(1.0 / nd) : std::sqrt(2.0 / nd));
  }
  return y;
}

std::vector<double> idct2_orthonormal(std::span<const double> y) {
  const std::size_t n = y.size();
  std::vector<double> x(n, 0.0);
  if (n == 0) return x;
  const double nd = static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = y[0] * std::sqrt(1.0 / nd);
    for (std::size_t k = 1; k < n; ++k) {
      acc += y[k] * std::sqrt(2.0 / nd) *
             std::cos(std::numbers::pi * static_cast<double>(k) * (2.0 * static_cast<double>(i) + 1.0) / (2.0 * nd));
    }
    x[i] = acc;
  }
  return x;
}

MfccMatrix mfcc(const Spectrogram& spec, const MelFilterbank& bank, std::size_t n_mfcc) {
  const std::size_t n_mels = bank.weights.rows;
  if (bank.weights.cols != spec.bins.cols) {
    throw Error(ErrorKind::DimensionMismatch, "filterbank has " + std::to_string(bank.weights.cols) +
                                                  " bins, spectrogram has " + std::to_string(spec.bins.cols));
  }
  if (n_mfcc == 0 || n_mfcc > n_mels) {
    throw Error(ErrorKind::DimensionMismatch, "n_mfcc must be in [1, n_mels]");
  }

  // DCT-II basis restricted to the kept coefficients.
  Matrix basis(n_mfcc, n_mels);
  const double nd = static_cast<double>(n_mels);
  for (std::size_t k = 0; k < n_mfcc; ++k) {
    const double scale = k == 0 ? std::sqrt(1.0 / nd) : std::sqrt(2.0 / nd);
    for (std::size_t i = 0; i < n_mels; ++i) {
      basis(k, i) = scale * std::cos(std::numbers::pi * static_cast<double>(k) *
                                     (2.0 * static_cast<double>(i) + 1.0) / (2.0 * nd));
    }
  }

  MfccMatrix out{Matrix(spec.bins.rows, n_mfcc)};
  std::vector<double> log_mel(n_mels);
  for (std::size_t t = 0; t < spec.bins.rows; ++t) {
    const auto power = spec.bins.row(t);
    for (std::size_t m = 0; m < n_mels; ++m) {
      const auto w = bank.weights.row(m);
      double e = 0.0;
      for (std::size_t k = 0; k < w.size(); ++k) e += w[k] * power[k];
      log_mel[m] = std::log(e + kLogFloor);
    }
    auto dst = out.coeffs.row(t);
    for (std::size_t k = 0; k < n_mfcc; ++k) {
      const auto b = basis.row(k);
      double acc = 0.0;
      for (std::size_t m = 0; m < n_mels; ++m) acc += b[m] * log_mel[m];
      dst[k] = acc;
    }
  }
  return out;
}

Matrix pad_or_truncate(const Matrix& m, std::size_t max_frames) {
  if (max_frames == 0) throw Error(ErrorKind::InvalidArgument, "max_frames must be >= 1");
  Matrix out(max_frames, m.cols);
  const std::size_t keep = std::min(max_frames, m.rows);
  std::copy_n(m.data.begin(), keep * m.cols, out.data.begin());
  return out;
}

MfccMatrix pad_or_truncate(const MfccMatrix& m, std::size_t max_frames) {
  return {pad_or_truncate(m.coeffs, max_frames)};
}

Spectrogram pad_or_truncate(const Spectrogram& s, std::size_t max_frames) {
  return {pad_or_truncate(s.bins, max_frames), s.config, s.sample_rate_hz};
}

}  // namespace genreforge
