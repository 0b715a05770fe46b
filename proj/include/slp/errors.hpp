#pragma once

#include <stdexcept>
#include <string>

namespace slp {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A sample, patch or warp footprint left the image (or bounding box).
class OutOfBounds : public Error {
 public:
  using Error::Error;
};

/// The 2x2 linear part of a warp, or a 6x6 normal-equation system, is singular.
class SingularWarp : public Error {
 public:
  using Error::Error;
};

/// A learner's (regularized) Gram matrix is not numerically positive definite.
class SingularSystem : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Bad magic, version, checksum or truncated model file.
class FormatError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace slp
