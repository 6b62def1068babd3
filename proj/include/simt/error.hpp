#pragma once

#include <stdexcept>
#include <string>

namespace simt {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Invalid user-supplied configuration (flags, config files, specs).
class ConfigError : public Error {
  public:
    using Error::Error;
};

/// A value violates a domain invariant (sentence pairs, distributions, state).
class ValidationError : public Error {
  public:
    using Error::Error;
};

/// Input exceeds a fixed model capacity such as max_len.
class CapacityError : public Error {
  public:
    using Error::Error;
};

/// Non-finite value in a forward pass, gradient, or parameter.
class NumericError : public Error {
  public:
    using Error::Error;
};

/// Training regime is incompatible with the model configuration.
class RegimeError : public Error {
  public:
    using Error::Error;
};

/// Unreadable, truncated, or version-mismatched file.
class FormatError : public Error {
  public:
    using Error::Error;
};

class IoError : public Error {
  public:
    using Error::Error;
};

} // namespace simt
