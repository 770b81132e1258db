#pragma once

#include <stdexcept>
#include <string>

namespace synesthesia {

/// Base of every error thrown by the library. The CLI maps the concrete
/// subclasses onto its exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid argument values or inconsistent shapes.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Malformed or unsupported file contents (PNG, WAV, SYNW1, JSON).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Filesystem failures: missing files, unwritable paths.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values or degenerate vectors encountered in numerics.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Unknown (dataset, label) pair in emotion label harmonization.
class MappingError : public Error {
 public:
  using Error::Error;
};

/// Invalid paint configuration (unknown keys, missing referenced files).
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace synesthesia
