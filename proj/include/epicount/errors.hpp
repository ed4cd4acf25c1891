#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace epicount {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on the arguments was violated (e.g. B is not below A).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// The request is outside what the implemented reductions support.
class ScopeError : public Error {
 public:
  using Error::Error;
};

/// An enumeration or integer width limit was exceeded.
class CapacityError : public Error {
 public:
  CapacityError(const std::string& what, std::uint64_t bound)
      : Error(what + " (bound " + std::to_string(bound) + ")"), bound_(bound) {}

  std::uint64_t bound() const noexcept { return bound_; }

 private:
  std::uint64_t bound_;
};

/// A truncated sample was asked about an object beyond its horizon.
class HorizonError : public CapacityError {
 public:
  using CapacityError::CapacityError;
};

/// Malformed configuration; carries the offending line (0 if none).
class ConfigError : public Error {
 public:
  ConfigError(const std::string& what, std::size_t line = 0)
      : Error(what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace epicount
