#pragma once

#include <stdexcept>
#include <string>

namespace tmis {

/// Base class for every error raised by the library. `kind()` is a stable
/// machine-readable tag used in the CLI's error JSON.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

/// Invalid model, policy, dataset or run configuration.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& message) : Error("config", message) {}
};

/// The target policy reaches a state (or takes an action) the logging
/// policy never does.
class CoverageError : public Error {
 public:
  explicit CoverageError(const std::string& message) : Error("coverage", message) {}
};

/// The logging policy assigns zero probability to an action observed in
/// the data, so the importance ratio is undefined.
class InvalidLoggingPolicyError : public Error {
 public:
  explicit InvalidLoggingPolicyError(const std::string& message)
      : Error("invalid_logging_policy", message) {}
};

/// An enumeration would exceed its configured cap.
class SizeError : public Error {
 public:
  explicit SizeError(const std::string& message) : Error("size", message) {}
};

/// Malformed input file or I/O failure.
class FormatError : public Error {
 public:
  explicit FormatError(const std::string& message) : Error("format", message) {}
};

}  // namespace tmis
