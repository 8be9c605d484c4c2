#include "vitalid/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>

namespace vitalid::fft {

namespace {

// FFTW planning is not thread-safe; execution through the new-array
// interface is. Plans are created once per size and kept for the process.
class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [n, plan] : plans_) fftw_destroy_plan(plan);
  }

  fftw_plan get(std::size_t n) {
    std::lock_guard lock(mutex_);
    auto it = plans_.find(n);
    if (it != plans_.end()) return it->second;
    std::vector<cdouble> in(n), out(n);
    fftw_plan plan = fftw_plan_dft_1d(static_cast<int>(n), reinterpret_cast<fftw_complex*>(in.data()),
                                      reinterpret_cast<fftw_complex*>(out.data()), FFTW_FORWARD,
                                      FFTW_ESTIMATE | FFTW_UNALIGNED);
    plans_.emplace(n, plan);
    return plan;
  }

 private:
  std::mutex mutex_;
  std::map<std::size_t, fftw_plan> plans_;
};

PlanCache& cache() {
  static PlanCache instance;
  return instance;
}

}  // namespace

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

std::vector<cdouble> forward(std::span<const cdouble> in, std::size_t n_fft) {
  std::vector<cdouble> buffer(n_fft, cdouble{});
  std::copy_n(in.begin(), std::min(in.size(), n_fft), buffer.begin());
  if (n_fft == 0) return buffer;
  std::vector<cdouble> out(n_fft);
  fftw_execute_dft(cache().get(n_fft), reinterpret_cast<fftw_complex*>(buffer.data()),
                   reinterpret_cast<fftw_complex*>(out.data()));
  return out;
}

std::vector<cdouble> shift(std::span<const cdouble> spectrum) {
  const std::size_t n = spectrum.size();
  const std::size_t half = n / 2;
  std::vector<cdouble> out(n);
  // bin k >= 0 goes to position k + n/2; negative bins n-half..n-1 go first.
  for (std::size_t i = 0; i < n; ++i) out[(i + half) % n] = spectrum[i];
  return out;
}

}  // namespace vitalid::fft
