#pragma once

#include <stdexcept>
#include <string>

namespace otclab {

// Exit-code taxonomy used by the CLI: usage/config -> 1, data -> 2, numeric -> 3.

struct UsageError : std::runtime_error {
  explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ConfigError : UsageError {
  explicit ConfigError(const std::string& msg) : UsageError(msg) {}
};

struct DataError : std::runtime_error {
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ShapeError : std::runtime_error {
  explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace otclab
