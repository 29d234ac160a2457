#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cgt {

enum class ErrorCode {
  DuplicateDegree,
  InvalidMultiplicity,
  InvalidArgument,
  IndexError,
  DegreeNotPresent,
  DegreeTooLarge,
  NotARotation,
  HeadMismatch,
  ChannelMismatch,
  ShapeMismatch,
  SignatureMismatch,
  NumericalConsistency,
  NotSymmetric,
  IsolatedNode,
  SizeMismatch,
  DegenerateSpectrum,
  GridTooCoarse,
  ParseError,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace cgt
