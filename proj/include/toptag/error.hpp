#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace toptag {

enum class ErrorCode {
  NotARotation,
  BehindCamera,
  DegenerateConfiguration,
  RayParallelToPlane,
  NegativeDepth,
  TagBehindCamera,
  ImageTooSmall,
  NonFiniteResidual,
  EmptySector,
  InvalidArgument,
  ConfigError,
  IoFailure,
};

std::string_view error_name(ErrorCode code);

// Single exception type for the library; the code identifies the failure.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_name(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace toptag
