#include "maskbot/error.hpp"

namespace maskbot {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDegenerateAim: return "DegenerateAim";
    case ErrorCode::kBehindCamera: return "BehindCamera";
    case ErrorCode::kNonPositiveDepth: return "NonPositiveDepth";
    case ErrorCode::kDegenerateConfiguration: return "DegenerateConfiguration";
    case ErrorCode::kInsufficientPairs: return "InsufficientPairs";
    case ErrorCode::kPointAtInfinity: return "PointAtInfinity";
    case ErrorCode::kNonPositiveWidth: return "NonPositiveWidth";
    case ErrorCode::kNotConverged: return "NotConverged";
    case ErrorCode::kUnreachable: return "Unreachable";
    case ErrorCode::kInvalidDetection: return "InvalidDetection";
    case ErrorCode::kDegeneratePoints: return "DegeneratePoints";
    case ErrorCode::kOutsideHull: return "OutsideHull";
    case ErrorCode::kFaceBehindProjector: return "FaceBehindProjector";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kValidationError: return "ValidationError";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace maskbot
