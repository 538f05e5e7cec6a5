#pragma once

#include <stdexcept>
#include <string>

namespace toggle {

/// Invalid parameter, configuration or argument. Maps to CLI exit code 1.
class ValidationError : public std::invalid_argument {
 public:
  ValidationError(std::string key, const std::string& what)
      : std::invalid_argument(key.empty() ? what : key + ": " + what), key_(std::move(key)) {}

  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

/// Integration, root-finding or SSA failure. Maps to CLI exit code 2.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace toggle
