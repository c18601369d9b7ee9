#pragma once

#include <stdexcept>
#include <string>

namespace wi2vi {

// Invalid or unknown configuration. The CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed, truncated or missing data files. The CLI maps this to exit code 3.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace wi2vi
