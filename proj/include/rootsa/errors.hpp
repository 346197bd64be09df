#pragma once

#include <stdexcept>
#include <string>

namespace rootsa {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

// A linear system that should be invertible (I - A with A contractive) is not.
class NotContractiveError : public Error {
 public:
  using Error::Error;
};

// An iterative procedure hit its iteration cap.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

class InvalidProblemError : public Error {
 public:
  using Error::Error;
};

class InvalidArgumentError : public Error {
 public:
  using Error::Error;
};

}  // namespace rootsa
