#include "jpegiv/error.hpp"

namespace jpegiv {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::NonMonotonicGrid: return "NonMonotonicGrid";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::TooShort: return "TooShort";
    case ErrorCode::GridTooShort: return "GridTooShort";
    case ErrorCode::ZeroGridSpacing: return "ZeroGridSpacing";
    case ErrorCode::LevelOutOfRange: return "LevelOutOfRange";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::ZeroTruth: return "ZeroTruth";
    case ErrorCode::SingularCovariance: return "SingularCovariance";
    case ErrorCode::GammaEstimationFailed: return "GammaEstimationFailed";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace jpegiv
