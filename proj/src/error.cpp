#include "nsreg/error.hpp"

namespace nsreg {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIo: return "io";
    case ErrorCode::kFormat: return "format";
    case ErrorCode::kSizeMismatch: return "size-mismatch";
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kEmptyForeground: return "empty-foreground";
    case ErrorCode::kDegenerateLandmarks: return "degenerate-landmarks";
    case ErrorCode::kDegenerateFit: return "degenerate-fit";
    case ErrorCode::kProtocolMismatch: return "protocol-mismatch";
    case ErrorCode::kDimsMismatch: return "dims-mismatch";
    case ErrorCode::kSingularTransform: return "singular-transform";
    case ErrorCode::kNumericalFailure: return "numerical-failure";
  }
  return "unknown";
}

}  // namespace nsreg
