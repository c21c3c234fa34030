#pragma once

#include <stdexcept>
#include <string>

namespace dolrel {

/// A distribution or model parameter outside its domain.
class InvalidParameter : public std::invalid_argument
{
  public:
    using std::invalid_argument::invalid_argument;
};

/// Input data (draw files, evidence files, traces) failed validation.
class ValidationError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

/// Run configuration is malformed or inconsistent.
class ConfigError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

/// A file could not be read or written.
class IoError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

} // namespace dolrel
