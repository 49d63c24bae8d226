#pragma once

#include <stdexcept>
#include <string>

namespace skd {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor shapes or spatial sizes violate an operation's contract.
class ShapeError : public Error {
 public:
  using Error::Error;
};

class MissingParameterError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Unreadable, empty or inconsistent datasets and image files.
class DataError : public Error {
 public:
  using Error::Error;
};

class CheckpointError : public Error {
 public:
  using Error::Error;
};

// Non-finite losses or activations.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace skd
