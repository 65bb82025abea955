#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace stylectl {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Inconsistent shapes, unknown layer names, invalid parameters.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values, degenerate statistics, singular matrices.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what, std::optional<int> iteration = std::nullopt)
      : Error(what), iteration_(iteration) {}

  /// Optimiser iteration at which the failure was detected, if any.
  std::optional<int> iteration() const noexcept { return iteration_; }

 private:
  std::optional<int> iteration_;
};

/// File system and image decoding failures.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Malformed SFW1 weight files.
class FormatError : public Error {
 public:
  enum class Kind { bad_magic, bad_version, truncated, checksum, shape_mismatch };

  FormatError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

}  // namespace stylectl
