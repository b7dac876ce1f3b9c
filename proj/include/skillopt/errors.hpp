#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace skillopt {

/// Base for every error this library throws on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad or inconsistent input data: malformed TSV rows, out-of-scale scores,
/// splits that cannot be formed, unpaired score records.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration or CLI usage.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Violated precondition on a library call (length mismatch, empty input).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Both raters constant: quadratic weighted kappa is undefined.
class DegenerateError : public Error {
 public:
  using Error::Error;
};

/// Missing, corrupt, or drifted run directory state.
class CheckpointError : public Error {
 public:
  using Error::Error;
};

/// Provider call failed after retries, or returned nothing usable.
class ProviderError : public Error {
 public:
  explicit ProviderError(const std::string& what, std::optional<int> last_status = std::nullopt)
      : Error(what), last_status_(last_status) {}

  /// HTTP status of the final attempt, if the server answered at all.
  [[nodiscard]] std::optional<int> last_status() const { return last_status_; }

 private:
  std::optional<int> last_status_;
};

}  // namespace skillopt
