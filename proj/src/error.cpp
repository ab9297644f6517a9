/// @file error.cpp

#include "genreforge/error.hpp"

namespace genreforge {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::MalformedHeader: return "MalformedHeader";
    case ErrorKind::TruncatedData: return "TruncatedData";
    case ErrorKind::UnsupportedEncoding: return "UnsupportedEncoding";
    case ErrorKind::SampleRateMismatch: return "SampleRateMismatch";
    case ErrorKind::EmptyDataset: return "EmptyDataset";
    case ErrorKind::NonPowerOfTwoLength: return "NonPowerOfTwoLength";
    case ErrorKind::SignalTooShort: return "SignalTooShort";
    case ErrorKind::InvalidFrequencyRange: return "InvalidFrequencyRange";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::MissingLabelColumn: return "MissingLabelColumn";
    case ErrorKind::NonNumericCell: return "NonNumericCell";
    case ErrorKind::RaggedRow: return "RaggedRow";
    case ErrorKind::KTooLarge: return "KTooLarge";
    case ErrorKind::TooFewSamplesPerClass: return "TooFewSamplesPerClass";
    case ErrorKind::InputTooSmall: return "InputTooSmall";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::EmptyCounts: return "EmptyCounts";
    case ErrorKind::TooFewSamples: return "TooFewSamples";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::LabelOutOfRange: return "LabelOutOfRange";
    case ErrorKind::FeatureTypeMismatch: return "FeatureTypeMismatch";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::BadFormat: return "BadFormat";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace genreforge
