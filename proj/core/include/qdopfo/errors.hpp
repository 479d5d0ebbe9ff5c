#pragma once

#include <stdexcept>
#include <string>

namespace qdopfo {

// configuration rejected before anything runs (CLI exit code 2)
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// a validated model assumption does not hold (CLI exit code 3)
class AssumptionError : public std::runtime_error {
 public:
  explicit AssumptionError(const std::string& what)
      : std::runtime_error(what) {}
};

// failure during execution, e.g. non-finite values (CLI exit code 4)
class RuntimeFailure : public std::runtime_error {
 public:
  explicit RuntimeFailure(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace qdopfo
