#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace probfuse {

enum class ErrorCode {
  kInvalidRange,
  kBehindCamera,
  kDimensionMismatch,
  kOutOfRange,
  kNonFiniteCost,
  kMissingFile,
  kEmptyAssociation,
  kBadMagic,
  kSizeMismatch,
  kNonFiniteValues,
  kUnnormalizedRay,
  kNonUnitNormal,
  kIoFailure,
  kEmptyValidSet,
  kInvalidConfig,
};

/// Stable snake-case name, used in machine-parsable CLI errors.
std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace probfuse
