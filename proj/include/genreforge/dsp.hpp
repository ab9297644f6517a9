/// @file dsp.hpp
/// @brief Spectral transforms: radix-2 FFT, Hann-windowed STFT power
/// spectrogram, mel filterbank, orthonormal DCT-II and MFCCs.
///
/// Everything here is pure and deterministic. Frames are not centered:
/// frame t covers samples [t*hop, t*hop + n_fft).

#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "genreforge/audio_io.hpp"
#include "genreforge/matrix.hpp"

namespace genreforge {

using Complex = std::complex<double>;

enum class WindowKind { Hann };

struct StftConfig {
  std::size_t n_fft = 2048;
  std::size_t hop = 512;
  WindowKind window = WindowKind::Hann;

  /// Throws InvalidArgument unless n_fft is a power of two and 0 < hop <= n_fft.
  void validate() const;
};

/// Power spectrogram, one row per frame and n_fft/2 + 1 columns.
struct Spectrogram {
  Matrix bins;
  StftConfig config;
  int sample_rate_hz = 0;
};

struct MelFilterbank {
  Matrix weights;  // [n_mels x (n_fft/2 + 1)]
  double fmin_hz = 0.0;
  double fmax_hz = 0.0;
  std::vector<double> center_hz;
};

/// MFCCs, one row per frame.
struct MfccMatrix {
  Matrix coeffs;
};

constexpr bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

/// Precomputed twiddles and bit-reversal table for one transform length.
class FftPlan {
 public:
  explicit FftPlan(std::size_t n);

  std::size_t size() const { return n_; }

  /// In-place unnormalized forward DFT; data.size() must equal size().
  void forward(std::span<Complex> data) const;

 private:
  std::size_t n_;
  std::vector<std::size_t> bitrev_;
  std::vector<Complex> twiddles_;
};

/// X[k] = sum_n x[n] exp(-2 pi i k n / N). Throws NonPowerOfTwoLength.
std::vector<Complex> fft(std::span<const Complex> signal);

/// Symmetric Hann taper 0.5 (1 - cos(2 pi n / (N - 1))); N == 1 yields {1}.
std::vector<double> hann_window(std::size_t n);

std::size_t stft_frame_count(std::size_t n_samples, const StftConfig& cfg);

/// Throws SignalTooShort when the clip is shorter than one frame.
Spectrogram stft(const AudioClip& clip, const StftConfig& cfg);

double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// Triangular filters over n_mels + 2 mel-equispaced edges, each row scaled
/// so its peak is 1. Throws InvalidFrequencyRange.
MelFilterbank mel_filterbank(std::size_t n_mels, std::size_t n_fft, int sample_rate_hz,
                             double fmin_hz, double fmax_hz);

constexpr double kLogFloor = 1e-10;

/// Orthonormal DCT-II / its inverse (DCT-III), same length in and out.
std::vector<double> dct2_orthonormal(std::span<const double> x);
std::vector<double> idct2_orthonormal(std::span<const double> y);

/// Per frame: mel energies, natural log with kLogFloor, DCT-II, keep first n_mfcc.
/// Throws DimensionMismatch.
MfccMatrix mfcc(const Spectrogram& spec, const MelFilterbank& bank, std::size_t n_mfcc);

/// Keeps the first max_frames rows or appends zero rows to reach max_frames.
Matrix pad_or_truncate(const Matrix& m, std::size_t max_frames);
MfccMatrix pad_or_truncate(const MfccMatrix& m, std::size_t max_frames);
Spectrogram pad_or_truncate(const Spectrogram& s, std::size_t max_frames);

}  // namespace genreforge
