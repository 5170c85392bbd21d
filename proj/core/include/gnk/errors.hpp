#pragma once

#include <stdexcept>
#include <string>

namespace gnk {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

// Request would exceed a fixed memory/work budget.
class CapacityError : public Error {
 public:
  using Error::Error;
};

// Metric is undefined on the given subset (e.g. zero target variance).
class DegenerateError : public Error {
 public:
  using Error::Error;
};

class DivergedError : public Error {
 public:
  DivergedError(const std::string& msg, int epoch) : Error(msg), epoch_(epoch) {}
  int epoch() const { return epoch_; }

 private:
  int epoch_;
};

}  // namespace gnk
