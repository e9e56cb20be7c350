#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ksnarmax {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A spectral state violates its invariants (non-finite or gauge-breaking coefficients).
class InvalidStateError : public Error {
 public:
  using Error::Error;
};

/// A caller passed an argument outside the documented domain.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// A parameter value makes the requested quantity undefined (e.g. a non-positive variance).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// An experiment or run configuration is inconsistent.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A persisted file has the wrong magic, version, or length.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// A validation run could not produce a meaningful report (too many ensemble blow-ups).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// The full-model integration produced a non-finite state.
class IntegrationError : public Error {
 public:
  IntegrationError(const std::string& what, double time) : Error(what), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

}  // namespace ksnarmax
