#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ldvae {

// Base class for everything thrown by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Tensor/vector dimensions do not agree.
class ShapeError : public Error {
public:
  using Error::Error;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
  using Error::Error;
};

// Operation called in an invalid sequence (e.g. backward on a spent tape).
class StateError : public Error {
public:
  using Error::Error;
};

// Malformed text input; message carries the offending line number.
class ParseError : public Error {
public:
  ParseError(const std::string& what, std::size_t line)
      : Error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  std::size_t line() const { return line_; }

private:
  std::size_t line_;
};

// File could not be read/written or its binary layout is invalid.
class IoError : public Error {
public:
  using Error::Error;
};

// Input file parsed but its contents are unusable.
class DataError : public Error {
public:
  using Error::Error;
};

// Invalid run/training configuration.
class ConfigError : public Error {
public:
  using Error::Error;
};

// Training produced a non-finite loss.
class DivergenceError : public Error {
public:
  DivergenceError(std::size_t epoch, std::size_t batch)
      : Error("training diverged: non-finite loss at epoch " +
              std::to_string(epoch) + ", batch " + std::to_string(batch)),
        epoch_(epoch), batch_(batch) {}
  std::size_t epoch() const { return epoch_; }
  std::size_t batch() const { return batch_; }

private:
  std::size_t epoch_;
  std::size_t batch_;
};

// Every unnormalized Gamma draw underflowed to zero.
class DegenerateSampleError : public DomainError {
public:
  using DomainError::DomainError;
};

} // namespace ldvae
