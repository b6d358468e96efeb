#pragma once

#include <stdexcept>
#include <string>

namespace featurescope {

// Base of every library error. The CLI maps ValidationError/FormatError to
// exit code 1 and IoError to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// rows < 2 and similar shape problems that make an estimator undefined.
class DegenerateInputError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Zero variance, zero-norm rows, equidistant stimuli.
class DegenerateGeometryError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

}  // namespace featurescope
