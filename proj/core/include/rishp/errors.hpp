#pragma once

#include <stdexcept>
#include <string>

namespace rishp {

// Base for every error the library throws on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand dimensions do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Gram matrix not positive definite or too badly conditioned to invert.
class SingularityError : public Error {
 public:
  using Error::Error;
};

// A configuration value is outside its documented range.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A guarded operation was asked to do something it refuses to (e.g. 2^N enumeration for large N).
class RefusalError : public Error {
 public:
  using Error::Error;
};

class LoadError : public Error {
 public:
  using Error::Error;
};

class VersionError : public LoadError {
 public:
  using LoadError::LoadError;
};

class TruncationError : public LoadError {
 public:
  using LoadError::LoadError;
};

class ChecksumError : public LoadError {
 public:
  using LoadError::LoadError;
};

// The file decoded but its content violates a type invariant.
class FormatError : public LoadError {
 public:
  using LoadError::LoadError;
};

}  // namespace rishp
