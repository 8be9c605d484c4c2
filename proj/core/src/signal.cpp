#include "vitalid/signal.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "vitalid/error.hpp"
#include "vitalid/fft.hpp"

namespace vitalid {

namespace {
constexpr double kPi = std::numbers::pi;
}

DisplacementSeries phase_demodulate(const ComplexSeries& s, double wavelength, bool remove_mean) {
  if (!(wavelength > 0.0)) throw InputError("wavelength must be positive");
  const std::size_t n = s.size();
  for (std::size_t i = 0; i < n; ++i)
    if (s.samples[i] == cdouble{}) throw ZeroMagnitudeError(i);

  DisplacementSeries d;
  d.rate = s.rate;
  d.t0 = s.t0;
  d.values.resize(n);
  const double scale = wavelength / (4.0 * kPi);
  double phase = std::arg(s.samples[0]);
  d.values[0] = phase;
  for (std::size_t i = 1; i < n; ++i) {
    // arg of the lag-one product is the wrapped difference in (-pi, pi].
    phase += std::arg(s.samples[i] * std::conj(s.samples[i - 1]));
    d.values[i] = phase;
  }
  double mean = 0.0;
  if (remove_mean) {
    for (double v : d.values) mean += v;
    mean /= static_cast<double>(n);
  }
  for (double& v : d.values) v = (v - mean) * scale;
  return d;
}

ComplexSeries second_difference(const ComplexSeries& s) {
  if (s.size() < 3) throw InputError("second difference needs at least three samples");
  const double r2 = s.rate * s.rate;
  std::vector<cdouble> out(s.size() - 2);
  for (std::size_t i = 1; i + 1 < s.size(); ++i)
    out[i - 1] = (s.samples[i + 1] - 2.0 * s.samples[i] + s.samples[i - 1]) * r2;
  return ComplexSeries(std::move(out), s.rate, s.t0 + 1.0 / s.rate);
}

Spectrogram stft(const ComplexSeries& s, double window, double hop) {
  if (!(hop > 0.0)) throw InputError("STFT hop must be positive");
  if (!(window > 0.0)) throw InputError("STFT window must be positive");
  const auto n_win = static_cast<std::size_t>(std::llround(window * s.rate));
  const auto n_hop = static_cast<std::size_t>(std::max<long long>(1, std::llround(hop * s.rate)));
  if (n_win > s.size()) throw InputError("STFT window longer than the signal");

  Spectrogram spec;
  spec.rate = s.rate;
  spec.window_length = window;
  spec.hop = static_cast<double>(n_hop) / s.rate;
  const std::size_t n_fft = fft::next_pow2(n_win);
  spec.n_freqs = n_fft;
  spec.df = s.rate / static_cast<double>(n_fft);
  spec.n_frames = (s.size() - n_win) / n_hop + 1;
  spec.freqs.resize(n_fft);
  const auto half = static_cast<std::ptrdiff_t>(n_fft / 2);
  for (std::size_t p = 0; p < n_fft; ++p) spec.freqs[p] = static_cast<double>(static_cast<std::ptrdiff_t>(p) - half) * spec.df;
  spec.frame_times.resize(spec.n_frames);
  spec.magnitudes.resize(spec.n_frames * n_fft);

  const double dt = 1.0 / s.rate;
  for (std::size_t f = 0; f < spec.n_frames; ++f) {
    const std::size_t start = f * n_hop;
    spec.frame_times[f] = s.t0 + (static_cast<double>(start) + 0.5 * static_cast<double>(n_win)) * dt;
    auto frame = fft::shift(fft::forward(std::span(s.samples).subspan(start, n_win), n_fft));
    for (std::size_t p = 0; p < n_fft; ++p) spec.magnitudes[f * n_fft + p] = std::abs(frame[p]) * dt;
  }
  return spec;
}

RangeProfiles range_fft(const DataCube& cube) {
  const std::size_t n_fast = cube.dims.n_fast;
  if (n_fast < 2) throw InputError("range FFT needs at least two fast-time samples");
  if (cube.samples.size() != cube.dims.count()) throw InputError("cube sample count does not match its dimensions");

  std::vector<double> window(n_fast);
  for (std::size_t n = 0; n < n_fast; ++n)
    window[n] = 0.54 - 0.46 * std::cos(2.0 * kPi * static_cast<double>(n) / static_cast<double>(n_fast));

  RangeProfiles out;
  out.dims = cube.dims;
  out.range_resolution = cube.params.range_resolution;
  out.slow_time_rate = cube.params.slow_time_rate;
  out.data.resize(cube.samples.size());
  std::vector<cdouble> buffer(n_fast);
  for (std::size_t row = 0; row < cube.dims.n_slow * cube.dims.n_virtual; ++row) {
    const std::size_t base = row * n_fast;
    for (std::size_t n = 0; n < n_fast; ++n) buffer[n] = cube.samples[base + n] * window[n];
    auto spectrum = fft::forward(buffer);
    std::copy(spectrum.begin(), spectrum.end(), out.data.begin() + static_cast<std::ptrdiff_t>(base));
  }
  return out;
}

std::vector<double> virtual_positions(const RadarParams& params) {
  std::vector<double> x;
  x.reserve(static_cast<std::size_t>(params.n_virtual()));
  for (int tx = 0; tx < params.n_tx; ++tx)
    for (int rx = 0; rx < params.n_rx; ++rx) x.push_back(tx * params.tx_spacing + rx * params.rx_spacing);
  return x;
}

std::vector<double> default_angle_grid() {
  std::vector<double> grid;
  for (int a = -45; a <= 45; ++a) grid.push_back(a);
  return grid;
}

namespace {

std::vector<cdouble> steering(const RadarParams& params, double angle_deg) {
  const auto x = virtual_positions(params);
  const double s = std::sin(angle_deg * kPi / 180.0);
  std::vector<cdouble> w(x.size());
  for (std::size_t m = 0; m < x.size(); ++m) w[m] = std::polar(1.0, -2.0 * kPi * x[m] * s / params.wavelength);
  return w;
}

void check_geometry(const RangeProfiles& profiles, const RadarParams& params) {
  if (profiles.dims.n_virtual != static_cast<std::size_t>(params.n_virtual()))
    throw InputError("profile channel count does not match the virtual array");
}

cdouble beam_sample(const RangeProfiles& p, std::span<const cdouble> w, std::size_t slow, std::size_t bin) {
  cdouble acc{};
  for (std::size_t m = 0; m < w.size(); ++m) acc += w[m] * p.at(slow, m, bin);
  return acc;
}

}  // namespace

BeamMap beamform(const RangeProfiles& profiles, const RadarParams& params, std::span<const double> angles_deg) {
  if (angles_deg.empty()) throw InputError("beamformer angle grid is empty");
  check_geometry(profiles, params);
  BeamMap map;
  map.n_range = profiles.n_range();
  map.angles_deg.assign(angles_deg.begin(), angles_deg.end());
  map.power.assign(map.n_range * angles_deg.size(), 0.0);
  const std::size_t n_slow = profiles.dims.n_slow;
  for (std::size_t a = 0; a < angles_deg.size(); ++a) {
    const auto w = steering(params, angles_deg[a]);
    for (std::size_t r = 0; r < map.n_range; ++r) {
      double acc = 0.0;
      for (std::size_t s = 0; s < n_slow; ++s) acc += std::norm(beam_sample(profiles, w, s, r));
      map.power[r * angles_deg.size() + a] = acc / static_cast<double>(n_slow);
    }
  }
  return map;
}

ComplexSeries beam_series(const RangeProfiles& profiles, const RadarParams& params, std::size_t range_bin,
                          double angle_deg) {
  check_geometry(profiles, params);
  if (range_bin >= profiles.n_range()) throw InputError("range bin out of bounds");
  const auto w = steering(params, angle_deg);
  std::vector<cdouble> y(profiles.dims.n_slow);
  for (std::size_t s = 0; s < y.size(); ++s) y[s] = beam_sample(profiles, w, s, range_bin);
  return ComplexSeries(std::move(y), profiles.slow_time_rate);
}

double respiration_band_fraction(const DisplacementSeries& d, double band_low, double band_high) {
  std::vector<cdouble> x(d.values.begin(), d.values.end());
  cdouble mean{};
  for (const auto& v : x) mean += v;
  mean /= static_cast<double>(x.size());
  for (auto& v : x) v -= mean;
  const std::size_t n_fft = fft::next_pow2(x.size());
  const auto spectrum = fft::forward(x, n_fft);
  const double df = d.rate / static_cast<double>(n_fft);
  double band = 0.0, total = 0.0;
  for (std::size_t k = 1; k <= n_fft / 2; ++k) {
    const double f = static_cast<double>(k) * df;
    if (f < 0.5 * band_low) continue;
    const double p = std::norm(spectrum[k]);
    total += p;
    if (f >= band_low && f <= band_high) band += p;
  }
  return total > 0.0 ? band / total : 0.0;
}

TargetBin select_target_bin(const RangeProfiles& profiles, const RadarParams& params, const TargetSearch& search) {
  check_geometry(profiles, params);
  if (search.angles_deg.empty()) throw InputError("target search angle grid is empty");
  const double duration = static_cast<double>(profiles.dims.n_slow) / profiles.slow_time_rate;
  if (duration < search.min_duration) throw InputError("target selection needs at least 10 s of slow time");

  const BeamMap map = beamform(profiles, params, search.angles_deg);
  std::vector<double> scores;
  TargetBin best;
  bool found = false;
  for (std::size_t r = 0; r < profiles.n_range(); ++r) {
    const double range = profiles.range_of(r);
    if (range < search.min_range || range > search.max_range) continue;
    for (std::size_t a = 0; a < search.angles_deg.size(); ++a) {
      const double power = map.at(r, a);
      double score = 0.0;
      if (power > 0.0) {
        try {
          const auto d = phase_demodulate(beam_series(profiles, params, r, search.angles_deg[a]), params.wavelength);
          score = power * respiration_band_fraction(d, search.band_low, search.band_high);
        } catch (const ZeroMagnitudeError&) {
          score = 0.0;
        }
      }
      scores.push_back(score);
      if (!found || score > best.selection_score) {
        best = {r, range, a, search.angles_deg[a], score};
        found = true;
      }
    }
  }
  if (!found) throw NoTargetError("no range bins inside the search window");
  std::vector<double> sorted = scores;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2), sorted.end());
  const double median = sorted[sorted.size() / 2];
  if (!(best.selection_score >= search.floor_ratio * median) || best.selection_score <= 0.0)
    throw NoTargetError("no target: best bin score does not exceed " + std::to_string(search.floor_ratio) +
                        "x the median score");
  return best;
}

}  // namespace vitalid
