#include "cgt/errors.hpp"

namespace cgt {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DuplicateDegree: return "DuplicateDegree";
    case ErrorCode::InvalidMultiplicity: return "InvalidMultiplicity";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IndexError: return "IndexError";
    case ErrorCode::DegreeNotPresent: return "DegreeNotPresent";
    case ErrorCode::DegreeTooLarge: return "DegreeTooLarge";
    case ErrorCode::NotARotation: return "NotARotation";
    case ErrorCode::HeadMismatch: return "HeadMismatch";
    case ErrorCode::ChannelMismatch: return "ChannelMismatch";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::SignatureMismatch: return "SignatureMismatch";
    case ErrorCode::NumericalConsistency: return "NumericalConsistency";
    case ErrorCode::NotSymmetric: return "NotSymmetric";
    case ErrorCode::IsolatedNode: return "IsolatedNode";
    case ErrorCode::SizeMismatch: return "SizeMismatch";
    case ErrorCode::DegenerateSpectrum: return "DegenerateSpectrum";
    case ErrorCode::GridTooCoarse: return "GridTooCoarse";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

}  // namespace cgt
