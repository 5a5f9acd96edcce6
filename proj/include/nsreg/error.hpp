#pragma once

#include <stdexcept>
#include <string>

namespace nsreg {

enum class ErrorCode {
  kIo,
  kFormat,
  kSizeMismatch,
  kInvalidArgument,
  kEmptyForeground,
  kDegenerateLandmarks,
  kDegenerateFit,
  kProtocolMismatch,
  kDimsMismatch,
  kSingularTransform,
  kNumericalFailure,
};

const char* to_string(ErrorCode code);

// All failures raised by the library carry a code so callers (the CLI in
// particular) can map them onto exit statuses without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  // Numerical failures (as opposed to bad input data).
  bool is_numerical() const noexcept {
    return code_ == ErrorCode::kNumericalFailure ||
           code_ == ErrorCode::kSingularTransform ||
           code_ == ErrorCode::kDegenerateFit;
  }

 private:
  ErrorCode code_;
};

}  // namespace nsreg
