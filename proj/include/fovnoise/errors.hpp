#pragma once

#include <stdexcept>
#include <string>

namespace fovnoise {

/// Invalid parameters, out-of-range values, malformed configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// File or stream failures.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fovnoise
