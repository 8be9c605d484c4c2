#include "vitalid/error.hpp"

#include <sstream>

namespace vitalid {

Error::Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

namespace {

std::string mismatch_message(std::size_t expected, std::size_t actual) {
  std::ostringstream os;
  os << "cube dimension mismatch: expected " << expected << " bytes, file has " << actual << " bytes";
  return os.str();
}

std::string non_finite_message(std::size_t s, std::size_t c, std::size_t f) {
  std::ostringstream os;
  os << "non-finite sample at index (" << s << ", " << c << ", " << f << ")";
  return os.str();
}

}  // namespace

DimensionMismatchError::DimensionMismatchError(std::size_t expected_bytes, std::size_t actual_bytes)
    : InputError(mismatch_message(expected_bytes, actual_bytes)),
      expected_(expected_bytes),
      actual_(actual_bytes) {}

NonFiniteSampleError::NonFiniteSampleError(std::size_t slow, std::size_t channel, std::size_t fast)
    : InputError(non_finite_message(slow, channel, fast)), slow_(slow), channel_(channel), fast_(fast) {}

ZeroMagnitudeError::ZeroMagnitudeError(std::size_t index)
    : ExtractionError("zero-magnitude sample at index " + std::to_string(index)), index_(index) {}

PhaseStepError::PhaseStepError(std::size_t index, double step)
    : ExtractionError("phase step of " + std::to_string(step) + " rad at sample " + std::to_string(index) +
                      " exceeds pi; lower the displacement amplitudes or raise the sample rate"),
      index_(index) {}

ConvergenceError::ConvergenceError(const std::string& what, long iterations)
    : TrainingError(what + " (after " + std::to_string(iterations) + " iterations)"), iterations_(iterations) {}

DivergenceError::DivergenceError(int epoch, double loss)
    : TrainingError("training diverged at epoch " + std::to_string(epoch) + " (loss " + std::to_string(loss) +
                    ")"),
      epoch_(epoch) {}

}  // namespace vitalid
