#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "vitalid/types.hpp"

namespace vitalid::fft {

std::size_t next_pow2(std::size_t n);

// Unnormalized forward DFT, X[k] = sum_n x[n] exp(-j 2 pi k n / N), with the
// input zero-padded (or truncated) to n_fft points.
std::vector<cdouble> forward(std::span<const cdouble> in, std::size_t n_fft);
inline std::vector<cdouble> forward(std::span<const cdouble> in) { return forward(in, in.size()); }

// Reorders a length-N spectrum so that bin k = -N/2 ... N/2-1 runs ascending.
std::vector<cdouble> shift(std::span<const cdouble> spectrum);

}  // namespace vitalid::fft
