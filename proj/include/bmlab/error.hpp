#pragma once

#include <stdexcept>
#include <string>

namespace bm {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration or parameters: the request itself is malformed.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A well-posed computation that failed numerically (singular point, non-convergence).
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace bm
