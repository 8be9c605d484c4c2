#pragma once

#include <iosfwd>

namespace vitalid::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kUnexpected = 1;
inline constexpr int kInputFailure = 2;
inline constexpr int kExtractionFailure = 3;
inline constexpr int kTrainingFailure = 4;

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace vitalid::cli
