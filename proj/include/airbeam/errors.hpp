#pragma once

#include <stdexcept>
#include <string>

namespace airbeam {

/// A precondition on an argument or configuration value was violated.
class InvalidArgument : public std::invalid_argument {
 public:
  explicit InvalidArgument(const std::string& what) : std::invalid_argument(what) {}
};

/// A configuration file or override is malformed, unknown or out of range.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Reading or writing a file failed, or a file did not parse.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

/// A computation produced a non-finite value or an unusable result.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace airbeam
