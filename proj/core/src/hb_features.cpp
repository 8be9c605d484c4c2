#include "vitalid/hb_features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "vitalid/error.hpp"

namespace vitalid {

double MelFilterBank::weight(int l, double f) const {
  const double lo = centers[l], mid = centers[l + 1], hi = centers[l + 2];
  if (f >= lo && f < mid) return peak_height(l) * ((f - lo) / (mid - lo));
  if (f >= mid && f < hi) return peak_height(l) * ((hi - f) / (hi - mid));
  return 0.0;
}

MelFilterBank build_mel_bank(double fs, double f_tilde, double f_prime, int n_filters) {
  if (!(fs > 0.0) || !(f_tilde > 0.0) || !(f_prime > 0.0)) throw InputError("mel bank frequencies must be positive");
  if (n_filters < 1) throw InputError("mel bank needs at least one filter");
  MelFilterBank bank;
  bank.n_filters = n_filters;
  bank.fs = fs;
  bank.f_tilde = f_tilde;
  bank.f_prime = f_prime;
  bank.m_tilde = f_prime / std::log(f_prime / f_tilde + 1.0);
  bank.centers.resize(static_cast<std::size_t>(n_filters) + 2);
  const double span = std::log(1.0 + fs / (2.0 * f_tilde));
  for (int l = 0; l <= n_filters + 1; ++l) {
    const double m = bank.m_tilde * (static_cast<double>(l) / (n_filters + 1)) * span;
    bank.centers[l] = f_tilde * (std::exp(m / bank.m_tilde) - 1.0);
  }
  return bank;
}

MelEnergies mel_energies(const Spectrogram& spec, const MelFilterBank& bank) {
  double max_pos = 0.0;
  for (double f : spec.freqs) max_pos = std::max(max_pos, f);
  if (std::abs(bank.fs / 2.0 - max_pos) > spec.df * (1.0 + 1e-9))
    throw InputError("mel bank fs does not match the spectrogram frequency axis");

  const auto L = static_cast<std::size_t>(bank.n_filters);
  MelEnergies e{std::vector<double>(L, 0.0), std::vector<double>(L, 0.0)};
  // Integrate over time first; the filter weights do not depend on t.
  std::vector<double> column(spec.n_freqs, 0.0);
  for (std::size_t t = 0; t < spec.n_frames; ++t)
    for (std::size_t k = 0; k < spec.n_freqs; ++k) column[k] += spec.at(t, k);
  const double cell = spec.df * spec.hop;
  for (std::size_t k = 0; k < spec.n_freqs; ++k) {
    const double f = spec.freqs[k];
    if (column[k] == 0.0) continue;
    auto& side = f >= 0.0 ? e.pos : e.neg;
    const double af = std::abs(f);
    for (std::size_t l = 0; l < L; ++l) {
      const double w = bank.weight(static_cast<int>(l), af);
      if (w != 0.0) side[l] += column[k] * w * cell;
    }
  }
  return e;
}

LogMel log_mel(const MelEnergies& energies, double rel_floor) {
  double peak = 0.0;
  for (double v : energies.pos) peak = std::max(peak, v);
  for (double v : energies.neg) peak = std::max(peak, v);
  const double floor = peak > 0.0 ? rel_floor * peak : std::numeric_limits<double>::min();
  LogMel out;
  auto take = [&](const std::vector<double>& in, std::vector<double>& dst) {
    dst.resize(in.size());
    for (std::size_t i = 0; i < in.size(); ++i) {
      double v = in[i];
      if (v < floor) {
        v = floor;
        out.floored = true;
      }
      dst[i] = std::log(v);
    }
  };
  take(energies.pos, out.pos);
  take(energies.neg, out.neg);
  return out;
}

std::vector<double> cepstrum(std::span<const double> x, int n_coeffs) {
  const auto L = static_cast<double>(x.size());
  std::vector<double> c(static_cast<std::size_t>(n_coeffs));
  for (int k = 0; k < n_coeffs; ++k) {
    double acc = 0.0;
    for (std::size_t l = 0; l < x.size(); ++l)
      acc += x[l] * std::cos((2.0 * static_cast<double>(l) + 1.0) * k * std::numbers::pi / n_coeffs);
    c[k] = 2.0 / (L + (k == 0 ? 1.0 : 0.0)) * acc;
  }
  return c;
}

Mfcc mfcc(const MelEnergies& energies, int n_coeffs) {
  if (static_cast<std::size_t>(n_coeffs) != energies.pos.size())
    throw InputError("cepstrum dimension K must equal the number of mel filters L");
  const LogMel logs = log_mel(energies);
  return {cepstrum(logs.pos, n_coeffs), cepstrum(logs.neg, n_coeffs), logs.floored};
}

HbFeature hb_feature(const ComplexSeries& s, const SegmentMeta& meta, const HbConfig& config) {
  if (config.n_keep < 1 || config.n_keep > config.n_coeffs) throw InputError("K' must lie in [1, K]");
  if (s.duration() < config.stft_window) throw ExtractionError("segment shorter than the STFT window");
  const ComplexSeries accel = second_difference(s);
  const Spectrogram spec = stft(accel, config.stft_window, config.stft_hop);
  const MelFilterBank bank = build_mel_bank(s.rate, config.f_tilde, config.f_prime, config.n_filters);
  const Mfcc c = mfcc(mel_energies(spec, bank), config.n_coeffs);

  HbFeature out;
  out.meta = meta;
  out.floored = c.floored;
  out.r.reserve(config.dimension());
  for (int k = config.n_keep - 1; k >= 0; --k) out.r.push_back(c.neg[k]);
  for (int k = 0; k < config.n_keep; ++k) out.r.push_back(c.pos[k]);
  return out;
}

std::vector<std::string> hb_feature_names(int n_keep) {
  std::vector<std::string> names;
  for (int k = n_keep - 1; k >= 0; --k) names.push_back("hb_cm" + std::to_string(k));
  for (int k = 0; k < n_keep; ++k) names.push_back("hb_cp" + std::to_string(k));
  return names;
}

}  // namespace vitalid
