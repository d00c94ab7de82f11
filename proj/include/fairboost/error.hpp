#ifndef FAIRBOOST_ERROR_HPP_
#define FAIRBOOST_ERROR_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fairboost {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Problems with user-supplied input (files, configs, arguments). The CLI maps
// these to exit code 1; every other Error maps to 2.
class InputError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public InputError {
 public:
  using InputError::InputError;
};

class IngestionError : public InputError {
 public:
  IngestionError(const std::string& source, std::size_t line, const std::string& what)
      : InputError(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class SchemaError : public InputError {
 public:
  using InputError::InputError;
};

class SplitError : public InputError {
 public:
  using InputError::InputError;
};

class UndefinedMetricError : public Error {
 public:
  using Error::Error;
};

class DegenerateWeightsError : public Error {
 public:
  using Error::Error;
};

class DivergenceError : public Error {
 public:
  DivergenceError(std::size_t epoch, const std::string& what)
      : Error("training diverged at epoch " + std::to_string(epoch) + ": " + what), epoch_(epoch) {}

  std::size_t epoch() const noexcept { return epoch_; }

 private:
  std::size_t epoch_;
};

class EstimationError : public Error {
 public:
  using Error::Error;
};

class DegenerateUpdateError : public Error {
 public:
  using Error::Error;
};

}  // namespace fairboost

#endif  // FAIRBOOST_ERROR_HPP_
