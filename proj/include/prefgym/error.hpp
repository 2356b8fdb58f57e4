#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace prefgym {

enum class ErrorCode {
  kMalformedCatalog,
  kInvariantViolation,
  kUnsupportedComposition,
  kCatalogTooSmall,
  kInvalidScenario,
  kInvalidConfig,
  kEpisodeDone,
  kMalformedCall,
  kBackendUnavailable,
  kAdapterFailure,
  kUnsupportedFormat,
  kNotFound,
  kConflict,
  kAuthFailed,
  kMalformedRequest,
  kIoError,
};

// Stable upper-snake names used on the wire and in CLI output.
std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::vector<std::string> details = {})
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        details_(std::move(details)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::vector<std::string>& details() const noexcept { return details_; }

 private:
  ErrorCode code_;
  std::vector<std::string> details_;
};

}  // namespace prefgym
