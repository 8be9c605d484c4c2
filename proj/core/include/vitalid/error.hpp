#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace vitalid {

// Failure category; the CLI maps each one to a distinct exit code.
enum class ErrorKind { input, extraction, training };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what);
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class InputError : public Error {
 public:
  explicit InputError(const std::string& what) : Error(ErrorKind::input, what) {}
};

class ExtractionError : public Error {
 public:
  explicit ExtractionError(const std::string& what) : Error(ErrorKind::extraction, what) {}
};

class TrainingError : public Error {
 public:
  explicit TrainingError(const std::string& what) : Error(ErrorKind::training, what) {}
};

// A binary cube whose size disagrees with its declared dimensions.
class DimensionMismatchError : public InputError {
 public:
  DimensionMismatchError(std::size_t expected_bytes, std::size_t actual_bytes);
  std::size_t expected_bytes() const noexcept { return expected_; }
  std::size_t actual_bytes() const noexcept { return actual_; }

 private:
  std::size_t expected_;
  std::size_t actual_;
};

// First NaN/Inf found while loading; index is (slow, channel, fast) for cubes
// and (sample, 0, 0) for records.
class NonFiniteSampleError : public InputError {
 public:
  NonFiniteSampleError(std::size_t slow, std::size_t channel, std::size_t fast);
  std::size_t slow() const noexcept { return slow_; }
  std::size_t channel() const noexcept { return channel_; }
  std::size_t fast() const noexcept { return fast_; }

 private:
  std::size_t slow_, channel_, fast_;
};

class ZeroMagnitudeError : public ExtractionError {
 public:
  explicit ZeroMagnitudeError(std::size_t index);
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

class NoTargetError : public ExtractionError {
 public:
  using ExtractionError::ExtractionError;
};

class NoRespirationError : public ExtractionError {
 public:
  using ExtractionError::ExtractionError;
};

class DegenerateSupportError : public ExtractionError {
 public:
  using ExtractionError::ExtractionError;
};

class PhaseStepError : public ExtractionError {
 public:
  PhaseStepError(std::size_t index, double step);
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

class ConvergenceError : public TrainingError {
 public:
  ConvergenceError(const std::string& what, long iterations);
  long iterations() const noexcept { return iterations_; }

 private:
  long iterations_;
};

class DivergenceError : public TrainingError {
 public:
  DivergenceError(int epoch, double loss);
  int epoch() const noexcept { return epoch_; }

 private:
  int epoch_;
};

}  // namespace vitalid
