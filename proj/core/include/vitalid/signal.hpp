#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "vitalid/radar_io.hpp"
#include "vitalid/types.hpp"

namespace vitalid {

// Chest displacement d(t) in metres.
struct DisplacementSeries {
  std::vector<double> values;
  double rate = 0.0;
  double t0 = 0.0;

  std::size_t size() const noexcept { return values.size(); }
  double duration() const noexcept { return static_cast<double>(values.size()) / rate; }
};

// |S(t, f)| on a two-sided, strictly increasing frequency axis.
struct Spectrogram {
  std::size_t n_frames = 0;
  std::size_t n_freqs = 0;
  std::vector<double> magnitudes;  // n_frames x n_freqs, row-major
  std::vector<double> frame_times;  // s, frame centres
  std::vector<double> freqs;        // Hz, -rate/2 ... +rate/2 - df
  double window_length = 0.0;       // s
  double hop = 0.0;                 // s
  double df = 0.0;                  // Hz
  double rate = 0.0;                // Hz, of the analysed signal

  double at(std::size_t frame, std::size_t bin) const { return magnitudes[frame * n_freqs + bin]; }
};

// d = lambda / (4 pi) * unwrap(arg s); each successive phase difference is
// taken in (-pi, pi]. The additive constant is removed by subtracting the
// mean when `remove_mean` is set. Throws ZeroMagnitudeError on |s| == 0.
DisplacementSeries phase_demodulate(const ComplexSeries& s, double wavelength, bool remove_mean = true);

// s''[i] = (s[i+1] - 2 s[i] + s[i-1]) * rate^2, length n - 2.
ComplexSeries second_difference(const ComplexSeries& s);

// Rectangular-window STFT of complex samples; FFT length is the next power
// of two >= window samples. Magnitudes carry the dt = 1/rate factor of the
// continuous transform.
Spectrogram stft(const ComplexSeries& s, double window = 2.0, double hop = 0.1);

// Range-compressed cube: complex[n_slow][n_virtual][n_range].
struct RangeProfiles {
  CubeDims dims;  // n_fast holds n_range
  double range_resolution = 0.0;
  double slow_time_rate = 0.0;
  std::vector<cdouble> data;

  std::size_t n_range() const noexcept { return dims.n_fast; }
  const cdouble& at(std::size_t slow, std::size_t channel, std::size_t bin) const {
    return data[(slow * dims.n_virtual + channel) * dims.n_fast + bin];
  }
  double range_of(std::size_t bin) const noexcept { return static_cast<double>(bin) * range_resolution; }
};

// Hamming-windowed FFT over fast time for every (chirp, channel).
RangeProfiles range_fft(const DataCube& cube);

// Virtual element positions along the array axis, channel v = tx * n_rx + rx.
std::vector<double> virtual_positions(const RadarParams& params);

std::vector<double> default_angle_grid();  // -45 ... +45 deg, 1 deg steps

// Delay-and-sum power, averaged over slow time: power[range][angle].
struct BeamMap {
  std::size_t n_range = 0;
  std::vector<double> angles_deg;
  std::vector<double> power;

  double at(std::size_t range_bin, std::size_t angle) const { return power[range_bin * angles_deg.size() + angle]; }
};

BeamMap beamform(const RangeProfiles& profiles, const RadarParams& params, std::span<const double> angles_deg);

// Slow-time series y[s] = sum_m exp(-j 2 pi x_m sin(theta) / lambda) X[s][m][bin].
ComplexSeries beam_series(const RangeProfiles& profiles, const RadarParams& params, std::size_t range_bin,
                          double angle_deg);

struct TargetBin {
  std::size_t range_index = 0;
  double range_m = 0.0;
  std::size_t angle_index = 0;
  double angle_deg = 0.0;
  double selection_score = 0.0;
};

struct TargetSearch {
  double min_range = 0.3;  // m
  double max_range = 3.0;  // m
  double band_low = 0.1;   // Hz
  double band_high = 0.5;  // Hz
  double min_duration = 10.0;  // s
  double floor_ratio = 10.0;   // best score must exceed floor_ratio * median
  std::vector<double> angles_deg = default_angle_grid();
};

// Fraction of displacement spectral power inside [band_low, band_high],
// relative to everything above half of band_low (drift excluded).
double respiration_band_fraction(const DisplacementSeries& d, double band_low, double band_high);

// Scores every (range, angle) cell in the range window as
//   beam power * respiration_band_fraction(phase_demodulate(beam series))
// and returns the best one. Throws NoTargetError when the best score is
// below floor_ratio times the median score.
TargetBin select_target_bin(const RangeProfiles& profiles, const RadarParams& params, const TargetSearch& search = {});

}  // namespace vitalid
