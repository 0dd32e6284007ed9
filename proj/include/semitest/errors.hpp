#pragma once

#include <stdexcept>
#include <string>

namespace semitest {

/// Base of every error raised by the library. The CLI maps subclasses onto
/// process exit codes (config 2, data 3, degenerate 4).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid parameters or a violated precondition.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed or unusable input data.
class DataError : public Error {
 public:
  using Error::Error;
};

/// A ratio statistic whose denominator (or variance) vanished.
class DegenerateStatistic : public Error {
 public:
  using Error::Error;
};

/// A cutoff could not be calibrated because a span had no usable increments.
class DegenerateCutoff : public DegenerateStatistic {
 public:
  using DegenerateStatistic::DegenerateStatistic;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

class CalibrationError : public Error {
 public:
  using Error::Error;
};

}  // namespace semitest
