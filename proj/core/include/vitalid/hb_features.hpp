#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "vitalid/signal.hpp"
#include "vitalid/types.hpp"

namespace vitalid {

// Triangular filters on a log-warped axis over [0, fs/2].
//   m~ = f' / ln(f'/f~ + 1)
//   m_l = m~ (l / (L+1)) ln(1 + fs / (2 f~)),   f_l = f~ (exp(m_l / m~) - 1),  l = 0 ... L+1
// Filter l rises from f_l to f_{l+1} and falls to f_{l+2}, peak 2/(f_{l+2} - f_l).
struct MelFilterBank {
  int n_filters = 0;            // L
  std::vector<double> centers;  // f_0 ... f_{L+1}, Hz
  double f_tilde = 0.0;
  double f_prime = 0.0;
  double fs = 0.0;
  double m_tilde = 0.0;

  double weight(int filter, double freq) const;
  double peak_height(int filter) const { return 2.0 / (centers[filter + 2] - centers[filter]); }
};

MelFilterBank build_mel_bank(double fs, double f_tilde = 5.0, double f_prime = 1000.0, int n_filters = 64);

struct MelEnergies {
  std::vector<double> pos;  // S_l, bins with f >= 0
  std::vector<double> neg;  // S_-l, bins with f < 0 weighted by H_l(-f)
};

// Rectangle-rule integration of |S(t, f)| H_l(+-f) over every frame and bin
// (df = rate / n_fft, dt = hop). Throws InputError when the bank's fs does
// not match the spectrogram within one bin.
MelEnergies mel_energies(const Spectrogram& spec, const MelFilterBank& bank);

struct LogMel {
  std::vector<double> pos;
  std::vector<double> neg;
  bool floored = false;
};

// Energies are floored at rel_floor * max over both sides before the log.
LogMel log_mel(const MelEnergies& energies, double rel_floor = 1e-12);

// C_k = 2 / (L + delta_k0) * sum_{l<L} x_l cos((2l + 1) k pi / K), k = 0 ... K-1.
std::vector<double> cepstrum(std::span<const double> log_energies, int n_coeffs);

struct Mfcc {
  std::vector<double> pos;  // C_{+0} ... C_{+(K-1)}
  std::vector<double> neg;  // C_{-0} ... C_{-(K-1)}
  bool floored = false;
};

// Both sides of the complex cepstrum; requires K == L.
Mfcc mfcc(const MelEnergies& energies, int n_coeffs);

struct HbConfig {
  double stft_window = 2.0;  // s
  double stft_hop = 0.1;     // s
  double f_tilde = 5.0;      // Hz
  double f_prime = 1000.0;   // Hz
  int n_filters = 64;        // L
  int n_coeffs = 64;         // K
  int n_keep = 24;           // K'

  std::size_t dimension() const noexcept { return 2 * static_cast<std::size_t>(n_keep); }
};

struct HbFeature {
  std::vector<double> r;  // [C_{-(K'-1)} ... C_{-0}, C_{+0} ... C_{+(K'-1)}]
  SegmentMeta meta;
  bool floored = false;
};

// second_difference -> stft -> mel_energies -> log -> cepstrum, truncated.
HbFeature hb_feature(const ComplexSeries& s, const SegmentMeta& meta, const HbConfig& config = {});

// "hb_cm23" ... "hb_cm0", "hb_cp0" ... "hb_cp23" for n_keep = 24.
std::vector<std::string> hb_feature_names(int n_keep = 24);

}  // namespace vitalid
