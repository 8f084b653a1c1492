#pragma once

#include <stdexcept>
#include <string>

namespace fedzge {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Mismatched tensor shapes or batch sizes.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A NaN or Inf escaped a public operation.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// A caller asked a black-box client for something only a white-box client can give.
class CapabilityError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class UnsupportedMethod : public Error {
 public:
  using Error::Error;
};

}  // namespace fedzge
