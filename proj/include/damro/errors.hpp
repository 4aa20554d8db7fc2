#pragma once

#include <stdexcept>
#include <string>

namespace damro {

// Base for every error raised by the library. The CLI maps InputError and
// ConfigError to exit status 2; anything else is exit status 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad configuration value. field() names the offending field.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

// Bad caller-supplied data: shapes, ranges, malformed files.
class InputError : public Error {
 public:
  using Error::Error;
};

}  // namespace damro
