#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace jpegiv {

enum class ErrorCode {
  NonMonotonicGrid,
  LengthMismatch,
  NonFiniteValue,
  TooShort,
  GridTooShort,
  ZeroGridSpacing,
  LevelOutOfRange,
  TooLarge,
  DomainError,
  RankDeficient,
  ZeroTruth,
  SingularCovariance,
  GammaEstimationFailed,
  InvalidArgument,
  Io,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries a machine-checkable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace jpegiv
