#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vitalid/types.hpp"

namespace vitalid {

inline constexpr double kSpeedOfLight = 299792458.0;

struct RadarParams {
  double center_frequency = 79.0e9;  // Hz
  double wavelength = 3.8e-3;        // m
  double bandwidth = 3.6e9;          // Hz
  int n_tx = 3;
  int n_rx = 4;
  double tx_spacing = 7.6e-3;         // m
  double rx_spacing = 1.9e-3;         // m
  double range_resolution = 44.7e-3;  // m, as declared by the sensor
  double slow_time_rate = 100.0;      // Hz

  int n_virtual() const noexcept { return n_tx * n_rx; }
  // Throws InputError when the wavelength disagrees with c / f_c by more
  // than 0.5% or a count/spacing is non-positive.
  void validate() const;
};

// The 79 GHz MIMO sensor used for the six-subject recordings.
RadarParams table2_radar_params();

struct CubeDims {
  std::size_t n_slow = 0;
  std::size_t n_virtual = 0;
  std::size_t n_fast = 0;

  std::size_t count() const noexcept { return n_slow * n_virtual * n_fast; }
};

struct CubeHeader {
  RadarParams params;
  CubeDims dims;
  double t0 = 0.0;  // s
};

// FMCW sample block, slow-time major, fast time innermost.
struct DataCube {
  RadarParams params;
  CubeDims dims;
  double t0 = 0.0;
  std::vector<cdouble> samples;

  std::size_t index(std::size_t slow, std::size_t channel, std::size_t fast) const noexcept {
    return (slow * dims.n_virtual + channel) * dims.n_fast + fast;
  }
  cdouble& at(std::size_t slow, std::size_t channel, std::size_t fast) { return samples[index(slow, channel, fast)]; }
  const cdouble& at(std::size_t slow, std::size_t channel, std::size_t fast) const {
    return samples[index(slow, channel, fast)];
  }
  double duration() const noexcept { return static_cast<double>(dims.n_slow) / params.slow_time_rate; }
};

// "<cube>.meta" next to the binary cube.
std::filesystem::path sidecar_path(const std::filesystem::path& cube_path);

// Sidecar is UTF-8 `key = value` lines, '#' starts a comment. Required keys:
// center_frequency_hz bandwidth_hz n_tx n_rx tx_spacing_m rx_spacing_m
// slow_time_rate_hz n_slow n_virtual n_fast. Optional: wavelength_m
// (default c/f_c), range_resolution_m (default c/2B), t0_s.
CubeHeader read_cube_sidecar(const std::filesystem::path& sidecar);
void write_cube_sidecar(const std::filesystem::path& sidecar, const CubeHeader& header);

// Cube body: little-endian float32 pairs (re, im), n_slow*n_virtual*n_fast of them.
DataCube load_fmcw_cube(const std::filesystem::path& path, const CubeHeader& header);
DataCube load_fmcw_cube(const std::filesystem::path& path);
void write_fmcw_cube(const std::filesystem::path& path, const DataCube& cube);

enum class CwFormat { csv, f32 };

// ".csv" -> csv (header `i,q`), anything else -> interleaved float32 (I, Q).
CwFormat cw_format_for(const std::filesystem::path& path);

ComplexSeries make_cw_series(std::span<const double> in_phase, std::span<const double> quadrature, double rate);
ComplexSeries load_cw_record(const std::filesystem::path& path, double rate);
// CSV output starts with the given lines prefixed by "# ".
void write_cw_record(const std::filesystem::path& path, const ComplexSeries& series, CwFormat format,
                     std::span<const std::string> header_lines = {});

// Anti-alias FIR used by resample(), normalized to unit DC gain.
std::vector<double> decimation_filter(int factor);

// Integer-factor decimation, filtered before downsampling. A target equal to
// the input rate returns the input unchanged.
ComplexSeries resample(const ComplexSeries& series, double target_rate);

struct Segmentation {
  std::vector<std::pair<ComplexSeries, SegmentMeta>> segments;
  bool too_short = false;  // T0 exceeded the record duration
};

// Cuts round(T0*rate)-sample segments starting every `hop` seconds; a
// trailing partial segment is dropped. Labels are copied from `base`.
Segmentation segment(const ComplexSeries& series, double seg_length, double hop, const SegmentMeta& base = {});

}  // namespace vitalid
