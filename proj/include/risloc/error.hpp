#pragma once

#include <stdexcept>
#include <string>

namespace risloc {

// Exception hierarchy; the CLI maps each category onto a process exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class GeometryError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class FormatError : public IoError {
 public:
  using IoError::IoError;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class ArtifactMismatch : public Error {
 public:
  using Error::Error;
};

}  // namespace risloc
