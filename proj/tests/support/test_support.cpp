#include "test_support.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <unistd.h>

#include "vitalid/signal.hpp"

namespace vitalid::testing {

namespace fs = std::filesystem;

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  path_ = fs::temp_directory_path() /
          ("vitalid_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  fs::remove_all(path_);
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

ComplexSeries complex_tone(double freq, double rate, std::size_t n, double amplitude) {
  std::vector<cdouble> s(n);
  for (std::size_t i = 0; i < n; ++i) s[i] = std::polar(amplitude, 2.0 * kPi * freq * static_cast<double>(i) / rate);
  return ComplexSeries(std::move(s), rate);
}

ComplexSeries real_tone(double freq, double rate, std::size_t n, double amplitude) {
  std::vector<cdouble> s(n);
  for (std::size_t i = 0; i < n; ++i)
    s[i] = amplitude * std::cos(2.0 * kPi * freq * static_cast<double>(i) / rate);
  return ComplexSeries(std::move(s), rate);
}

ComplexSeries echo_of(const std::vector<double>& d, double rate, double wavelength) {
  std::vector<cdouble> s(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) s[i] = std::polar(1.0, 4.0 * kPi * d[i] / wavelength);
  return ComplexSeries(std::move(s), rate);
}

double tone_amplitude(const ComplexSeries& s, double freq, std::size_t skip) {
  cdouble acc{};
  std::size_t n = 0;
  for (std::size_t i = skip; i + skip < s.size(); ++i, ++n)
    acc += s.samples[i] * std::polar(1.0, -2.0 * kPi * freq * static_cast<double>(i) / s.rate);
  return std::abs(acc) / static_cast<double>(n);
}

double max_abs_diff_mean_aligned(const std::vector<double>& a, const std::vector<double>& b) {
  double ma = 0.0, mb = 0.0;
  for (double v : a) ma += v;
  for (double v : b) mb += v;
  ma /= static_cast<double>(a.size());
  mb /= static_cast<double>(b.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs((a[i] - ma) - (b[i] - mb)));
  return worst;
}

DataCube simulate_scene(const RadarParams& params, std::size_t n_slow, std::size_t n_fast,
                        const std::vector<SceneTarget>& targets, double noise_std, std::uint64_t seed) {
  DataCube cube;
  cube.params = params;
  cube.dims = {n_slow, static_cast<std::size_t>(params.n_virtual()), n_fast};
  cube.samples.assign(cube.dims.count(), cdouble{});
  const std::vector<double> x = virtual_positions(params);
  Rng rng(seed);
  for (std::size_t s = 0; s < n_slow; ++s) {
    const double t = static_cast<double>(s) / params.slow_time_rate;
    for (const auto& tg : targets) {
      const double d = tg.displacement ? tg.displacement(t) : 0.0;
      const cdouble carrier = std::polar(tg.amplitude, 4.0 * kPi * (tg.range + d) / params.wavelength);
      const double beat = tg.range / params.range_resolution;
      const double sin_theta = std::sin(tg.angle_deg * kPi / 180.0);
      for (std::size_t m = 0; m < x.size(); ++m) {
        const cdouble steer = std::polar(1.0, 2.0 * kPi * x[m] * sin_theta / params.wavelength);
        for (std::size_t n = 0; n < n_fast; ++n)
          cube.at(s, m, n) +=
              carrier * steer * std::polar(1.0, 2.0 * kPi * beat * static_cast<double>(n) / static_cast<double>(n_fast));
      }
    }
    if (noise_std > 0.0)
      for (std::size_t m = 0; m < x.size(); ++m)
        for (std::size_t n = 0; n < n_fast; ++n) cube.at(s, m, n) += cdouble(noise_std * rng.normal(), noise_std * rng.normal());
  }
  return cube;
}

std::function<double(double)> breathing(double amplitude, double freq) {
  return [=](double t) { return amplitude * std::sin(2.0 * kPi * freq * t); };
}

}  // namespace vitalid::testing
