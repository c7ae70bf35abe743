#pragma once

#include <stdexcept>
#include <string>

namespace mcpm {

// Invalid user-supplied configuration: bad keys, impossible scheme parameters,
// malformed bit streams. The CLI maps this to its own exit code.
class ConfigError : public std::invalid_argument {
public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

// A request that would blow past an enumeration or memory guard.
class GuardError : public std::length_error {
public:
  explicit GuardError(const std::string& what) : std::length_error(what) {}
};

}  // namespace mcpm
