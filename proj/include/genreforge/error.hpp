/// @file error.hpp
/// @brief Error kinds shared by every genreforge module.

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace genreforge {

enum class ErrorKind {
  // audio-io
  MalformedHeader,
  TruncatedData,
  UnsupportedEncoding,
  SampleRateMismatch,
  EmptyDataset,
  // dsp
  NonPowerOfTwoLength,
  SignalTooShort,
  InvalidFrequencyRange,
  DimensionMismatch,
  // features
  MissingLabelColumn,
  NonNumericCell,
  RaggedRow,
  // models
  KTooLarge,
  TooFewSamplesPerClass,
  InputTooSmall,
  ShapeMismatch,
  EmptyCounts,
  // eval
  TooFewSamples,
  LengthMismatch,
  LabelOutOfRange,
  // cli / persistence
  FeatureTypeMismatch,
  InvalidArgument,
  BadFormat,
  Io,
};

std::string_view to_string(ErrorKind kind);

/// Exception carrying a machine-readable kind alongside the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace genreforge
