#pragma once

#include <stdexcept>
#include <string>

namespace wnet {

// Base error for everything the library throws deliberately.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidParameter : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Caller handed us a value that breaks a documented contract
// (e.g. a non-unit vector where a hypersphere point is required).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

}  // namespace wnet
