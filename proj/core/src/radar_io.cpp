#include "vitalid/radar_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <map>
#include <numbers>
#include <sstream>

#include "vitalid/error.hpp"

namespace vitalid {

namespace fs = std::filesystem;

void RadarParams::validate() const {
  if (!(center_frequency > 0.0) || !(bandwidth > 0.0)) throw InputError("radar frequencies must be positive");
  if (n_tx < 1 || n_rx < 1) throw InputError("radar needs at least one Tx and one Rx element");
  if (!(tx_spacing >= 0.0) || !(rx_spacing >= 0.0)) throw InputError("element spacings must be non-negative");
  if (!(range_resolution > 0.0) || !(slow_time_rate > 0.0))
    throw InputError("range resolution and slow-time rate must be positive");
  const double expected = kSpeedOfLight / center_frequency;
  if (std::abs(wavelength - expected) > 0.005 * expected) {
    std::ostringstream os;
    os << "wavelength " << wavelength << " m inconsistent with c/f_c = " << expected << " m";
    throw InputError(os.str());
  }
}

RadarParams table2_radar_params() { return RadarParams{}; }

fs::path sidecar_path(const fs::path& cube_path) {
  fs::path p = cube_path;
  p += ".meta";
  return p;
}

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

double parse_double(const std::map<std::string, std::string>& kv, const std::string& key) {
  auto it = kv.find(key);
  if (it == kv.end()) throw InputError("sidecar missing required key '" + key + "'");
  try {
    std::size_t used = 0;
    double v = std::stod(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw InputError("sidecar key '" + key + "' is not a number: " + it->second);
  }
}

std::size_t parse_count(const std::map<std::string, std::string>& kv, const std::string& key) {
  double v = parse_double(kv, key);
  if (v < 0 || v != std::floor(v)) throw InputError("sidecar key '" + key + "' must be a non-negative integer");
  return static_cast<std::size_t>(v);
}

float read_le_float(const unsigned char* p) {
  std::uint32_t bits;
  std::memcpy(&bits, p, 4);
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
  float f;
  std::memcpy(&f, &bits, 4);
  return f;
}

void append_le_float(std::string& out, float f) {
  std::uint32_t bits;
  std::memcpy(&bits, &f, 4);
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
  char buf[4];
  std::memcpy(buf, &bits, 4);
  out.append(buf, 4);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

CubeHeader read_cube_sidecar(const fs::path& sidecar) {
  std::ifstream in(sidecar);
  if (!in) throw InputError("cannot open cube sidecar " + sidecar.string());
  std::map<std::string, std::string> kv;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw InputError(sidecar.string() + ":" + std::to_string(line_no) + ": expected `key = value`");
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }

  CubeHeader h;
  RadarParams& p = h.params;
  p.center_frequency = parse_double(kv, "center_frequency_hz");
  p.bandwidth = parse_double(kv, "bandwidth_hz");
  p.n_tx = static_cast<int>(parse_count(kv, "n_tx"));
  p.n_rx = static_cast<int>(parse_count(kv, "n_rx"));
  p.tx_spacing = parse_double(kv, "tx_spacing_m");
  p.rx_spacing = parse_double(kv, "rx_spacing_m");
  p.slow_time_rate = parse_double(kv, "slow_time_rate_hz");
  p.wavelength = kv.contains("wavelength_m") ? parse_double(kv, "wavelength_m") : kSpeedOfLight / p.center_frequency;
  p.range_resolution =
      kv.contains("range_resolution_m") ? parse_double(kv, "range_resolution_m") : kSpeedOfLight / (2.0 * p.bandwidth);
  h.dims.n_slow = parse_count(kv, "n_slow");
  h.dims.n_virtual = parse_count(kv, "n_virtual");
  h.dims.n_fast = parse_count(kv, "n_fast");
  if (kv.contains("t0_s")) h.t0 = parse_double(kv, "t0_s");
  p.validate();
  if (h.dims.n_virtual != static_cast<std::size_t>(p.n_virtual()))
    throw InputError("sidecar n_virtual (" + std::to_string(h.dims.n_virtual) + ") != n_tx * n_rx (" +
                     std::to_string(p.n_virtual()) + ")");
  return h;
}

void write_cube_sidecar(const fs::path& sidecar, const CubeHeader& h) {
  std::ofstream out(sidecar);
  if (!out) throw InputError("cannot write " + sidecar.string());
  out << std::setprecision(17);
  const RadarParams& p = h.params;
  out << "center_frequency_hz = " << p.center_frequency << '\n'
      << "bandwidth_hz = " << p.bandwidth << '\n'
      << "wavelength_m = " << p.wavelength << '\n'
      << "range_resolution_m = " << p.range_resolution << '\n'
      << "n_tx = " << p.n_tx << '\n'
      << "n_rx = " << p.n_rx << '\n'
      << "tx_spacing_m = " << p.tx_spacing << '\n'
      << "rx_spacing_m = " << p.rx_spacing << '\n'
      << "slow_time_rate_hz = " << p.slow_time_rate << '\n'
      << "n_slow = " << h.dims.n_slow << '\n'
      << "n_virtual = " << h.dims.n_virtual << '\n'
      << "n_fast = " << h.dims.n_fast << '\n'
      << "t0_s = " << h.t0 << '\n';
}

DataCube load_fmcw_cube(const fs::path& path, const CubeHeader& header) {
  header.params.validate();
  if (header.dims.n_virtual != static_cast<std::size_t>(header.params.n_virtual()))
    throw InputError("cube n_virtual does not equal n_tx * n_rx");
  const std::string bytes = read_file(path);
  const std::size_t expected = header.dims.count() * 8;
  if (bytes.size() != expected) throw DimensionMismatchError(expected, bytes.size());

  DataCube cube;
  cube.params = header.params;
  cube.dims = header.dims;
  cube.t0 = header.t0;
  cube.samples.resize(header.dims.count());
  const auto* raw = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::size_t per_slow = header.dims.n_virtual * header.dims.n_fast;
  for (std::size_t i = 0; i < cube.samples.size(); ++i) {
    const float re = read_le_float(raw + 8 * i);
    const float im = read_le_float(raw + 8 * i + 4);
    if (!std::isfinite(re) || !std::isfinite(im))
      throw NonFiniteSampleError(i / per_slow, (i % per_slow) / header.dims.n_fast, i % header.dims.n_fast);
    cube.samples[i] = {re, im};
  }
  return cube;
}

DataCube load_fmcw_cube(const fs::path& path) { return load_fmcw_cube(path, read_cube_sidecar(sidecar_path(path))); }

void write_fmcw_cube(const fs::path& path, const DataCube& cube) {
  if (cube.samples.size() != cube.dims.count()) throw InputError("cube sample count does not match its dimensions");
  std::string body;
  body.reserve(cube.samples.size() * 8);
  for (const cdouble& v : cube.samples) {
    append_le_float(body, static_cast<float>(v.real()));
    append_le_float(body, static_cast<float>(v.imag()));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out.write(body.data(), static_cast<std::streamsize>(body.size()));
  write_cube_sidecar(sidecar_path(path), CubeHeader{cube.params, cube.dims, cube.t0});
}

CwFormat cw_format_for(const fs::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".csv" ? CwFormat::csv : CwFormat::f32;
}

ComplexSeries make_cw_series(std::span<const double> in_phase, std::span<const double> quadrature, double rate) {
  if (in_phase.size() != quadrature.size())
    throw InputError("I/Q channel lengths differ (" + std::to_string(in_phase.size()) + " vs " +
                     std::to_string(quadrature.size()) + ")");
  if (in_phase.empty()) throw InputError("empty CW record");
  std::vector<cdouble> samples(in_phase.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!std::isfinite(in_phase[i]) || !std::isfinite(quadrature[i])) throw NonFiniteSampleError(i, 0, 0);
    samples[i] = {in_phase[i], quadrature[i]};
  }
  return ComplexSeries(std::move(samples), rate);
}

ComplexSeries load_cw_record(const fs::path& path, double rate) {
  std::vector<double> i_ch, q_ch;
  if (cw_format_for(path) == CwFormat::csv) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path.string());
    std::string line;
    bool header_seen = false;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      line = trim(line);
      if (line.empty() || line[0] == '#') continue;
      if (!header_seen) {
        std::string lower = line;
        std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
        lower.erase(std::remove(lower.begin(), lower.end(), ' '), lower.end());
        if (lower != "i,q") throw InputError(path.string() + ": expected header `i,q`");
        header_seen = true;
        continue;
      }
      auto comma = line.find(',');
      try {
        if (comma == std::string::npos) {
          i_ch.push_back(std::stod(line));  // Q missing on this row
          continue;
        }
        i_ch.push_back(std::stod(line.substr(0, comma)));
        q_ch.push_back(std::stod(line.substr(comma + 1)));
      } catch (const std::invalid_argument&) {
        throw InputError(path.string() + ":" + std::to_string(line_no) + ": malformed sample row");
      }
    }
  } else {
    const std::string bytes = read_file(path);
    if (bytes.size() % 4 != 0) throw InputError(path.string() + ": size is not a multiple of float32");
    const std::size_t n_floats = bytes.size() / 4;
    const auto* raw = reinterpret_cast<const unsigned char*>(bytes.data());
    for (std::size_t k = 0; k < n_floats; ++k) {
      const double v = read_le_float(raw + 4 * k);
      (k % 2 == 0 ? i_ch : q_ch).push_back(v);
    }
  }
  return make_cw_series(i_ch, q_ch, rate);
}

void write_cw_record(const fs::path& path, const ComplexSeries& series, CwFormat format,
                     std::span<const std::string> header_lines) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  if (format == CwFormat::csv) {
    for (const auto& h : header_lines) out << "# " << h << '\n';
    out << "i,q\n";
    char buf[64];
    for (const cdouble& v : series.samples) {
      const int n = std::snprintf(buf, sizeof buf, "%.9g,%.9g\n", static_cast<double>(static_cast<float>(v.real())),
                                  static_cast<double>(static_cast<float>(v.imag())));
      out.write(buf, n);
    }
  } else {
    std::string body;
    body.reserve(series.size() * 8);
    for (const cdouble& v : series.samples) {
      append_le_float(body, static_cast<float>(v.real()));
      append_le_float(body, static_cast<float>(v.imag()));
    }
    out.write(body.data(), static_cast<std::streamsize>(body.size()));
  }
}

// Hamming-windowed sinc. The pass edge sits at 0.45 and the stop edge at
// 0.60 of the output rate; the cutoff is their midpoint and the length is
// chosen so the Hamming transition (~3.6 / N cycles/sample) fits between
// them, with 127 taps as the floor.
std::vector<double> decimation_filter(int factor) {
  if (factor < 1) throw InputError("decimation factor must be >= 1");
  constexpr double kPassEdge = 0.45;
  constexpr double kStopEdge = 0.60;
  const double transition = (kStopEdge - kPassEdge) / factor;  // cycles per input sample
  int half = static_cast<int>(std::ceil(1.8 / transition));
  half = std::max(half, 63);
  const int taps = 2 * half + 1;
  const double cutoff = 0.5 * (kPassEdge + kStopEdge) / factor;
  std::vector<double> h(taps);
  double sum = 0.0;
  for (int n = 0; n < taps; ++n) {
    const double m = n - half;
    const double sinc = m == 0 ? 2.0 * cutoff : std::sin(2.0 * std::numbers::pi * cutoff * m) / (std::numbers::pi * m);
    const double window = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * n / (taps - 1));
    h[n] = sinc * window;
    sum += h[n];
  }
  for (double& v : h) v /= sum;
  return h;
}

ComplexSeries resample(const ComplexSeries& series, double target_rate) {
  if (!(target_rate > 0.0)) throw InputError("target rate must be positive");
  const double ratio = series.rate / target_rate;
  const double factor_d = std::round(ratio);
  if (factor_d < 1.0 || std::abs(ratio - factor_d) > 1e-9 * ratio)
    throw InputError("resample needs an integer decimation factor (got " + std::to_string(ratio) + ")");
  const auto factor = static_cast<std::size_t>(factor_d);
  if (factor == 1) return series;

  const std::vector<double> h = decimation_filter(static_cast<int>(factor));
  const auto half = static_cast<std::ptrdiff_t>(h.size() / 2);
  const auto n = static_cast<std::ptrdiff_t>(series.size());
  const std::size_t n_out = series.size() / factor;
  if (n_out < 2) throw InputError("record too short to decimate by " + std::to_string(factor));

  // Edge samples are replicated so constants pass through unchanged.
  auto sample = [&](std::ptrdiff_t i) { return series.samples[std::clamp<std::ptrdiff_t>(i, 0, n - 1)]; };
  std::vector<cdouble> out(n_out);
  for (std::size_t k = 0; k < n_out; ++k) {
    const auto center = static_cast<std::ptrdiff_t>(k * factor);
    cdouble acc{};
    for (std::ptrdiff_t t = 0; t < static_cast<std::ptrdiff_t>(h.size()); ++t) acc += h[t] * sample(center + half - t);
    out[k] = acc;
  }
  return ComplexSeries(std::move(out), target_rate, series.t0);
}

Segmentation segment(const ComplexSeries& series, double seg_length, double hop, const SegmentMeta& base) {
  if (!(seg_length > 0.0)) throw InputError("segment length must be positive");
  if (!(hop > 0.0)) throw InputError("segment hop must be positive");
  Segmentation result;
  const auto len = static_cast<std::size_t>(std::llround(seg_length * series.rate));
  if (len > series.size() || len < 2) {
    result.too_short = len > series.size();
    return result;
  }
  for (std::size_t k = 0;; ++k) {
    const auto start = static_cast<std::size_t>(std::llround(static_cast<double>(k) * hop * series.rate));
    if (start + len > series.size()) break;
    std::vector<cdouble> samples(series.samples.begin() + static_cast<std::ptrdiff_t>(start),
                                 series.samples.begin() + static_cast<std::ptrdiff_t>(start + len));
    SegmentMeta meta = base;
    if (meta.subject_id.empty()) meta.subject_id = "unknown";
    if (meta.session_id.empty()) meta.session_id = "s0";
    meta.segment_index = base.segment_index + static_cast<int>(k);
    meta.duration = seg_length;
    result.segments.emplace_back(
        ComplexSeries(std::move(samples), series.rate, series.t0 + static_cast<double>(start) / series.rate), meta);
  }
  return result;
}

}  // namespace vitalid
