#include "toptag/error.hpp"

namespace toptag {

std::string_view error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotARotation: return "NotARotation";
    case ErrorCode::BehindCamera: return "BehindCamera";
    case ErrorCode::DegenerateConfiguration: return "DegenerateConfiguration";
    case ErrorCode::RayParallelToPlane: return "RayParallelToPlane";
    case ErrorCode::NegativeDepth: return "NegativeDepth";
    case ErrorCode::TagBehindCamera: return "TagBehindCamera";
    case ErrorCode::ImageTooSmall: return "ImageTooSmall";
    case ErrorCode::NonFiniteResidual: return "NonFiniteResidual";
    case ErrorCode::EmptySector: return "EmptySector";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoFailure: return "IoFailure";
  }
  return "Unknown";
}

}  // namespace toptag
