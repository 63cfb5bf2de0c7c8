#pragma once

#include <stdexcept>
#include <string>

namespace caradj {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input file does not match the requested column roles.
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// A cell could not be parsed; `row` is the 1-based data row (header excluded).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t row) : Error(what), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A stratum/arm cell has too few units for the requested operation.
class DegenerateStratumError : public Error {
 public:
  DegenerateStratumError(const std::string& what, int stratum, int arm)
      : Error(what), stratum_(stratum), arm_(arm) {}
  int stratum() const noexcept { return stratum_; }
  int arm() const noexcept { return arm_; }

 private:
  int stratum_;
  int arm_;
};

class SingularDesignError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

/// Degrees-of-freedom correction has a non-positive denominator.
class DfExhaustedError : public Error {
 public:
  DfExhaustedError(const std::string& what, int stratum, int arm)
      : Error(what), stratum_(stratum), arm_(arm) {}
  int stratum() const noexcept { return stratum_; }
  int arm() const noexcept { return arm_; }

 private:
  int stratum_;
  int arm_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace caradj
