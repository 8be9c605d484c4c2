#include "vitalid/resp_features.hpp"

#include <cmath>

#include "vitalid/error.hpp"

namespace vitalid {

InstantFeature make_instant_feature(const MrcwParams& p, double c2, double t) {
  InstantFeature f;
  const double sum = p.beta1 + p.beta2;
  f.q = {p.freq, p.duty, sum, std::abs(p.beta1 - p.beta2), sum / p.freq, c2};
  f.t = t;
  return f;
}

InstantFeatures instantaneous_features(const DisplacementSeries& d, const RespConfig& config) {
  if (!(config.hop > 0.0)) throw InputError("instantaneous feature hop must be positive");
  const auto n_win = static_cast<std::size_t>(std::llround(config.window * d.rate));
  const auto n_hop = static_cast<std::size_t>(std::max<long long>(1, std::llround(config.hop * d.rate)));
  if (n_win < 4 || n_win > d.size()) throw InputError("displacement shorter than the MRCW window");

  InstantFeatures out;
  std::vector<double> window(n_win);
  for (std::size_t start = 0; start + n_win <= d.size(); start += n_hop) {
    ++out.n_windows;
    double mean = 0.0;
    for (std::size_t i = 0; i < n_win; ++i) mean += d.values[start + i];
    mean /= static_cast<double>(n_win);
    for (std::size_t i = 0; i < n_win; ++i) window[i] = d.values[start + i] - mean;
    const double t_mid = d.t0 + (static_cast<double>(start) + 0.5 * static_cast<double>(n_win)) / d.rate;
    try {
      const MrcwFit fit = mrcw_fit(window, d.rate, config.fit);
      const PlateauFit plateau = plateau_parabola_fit(window, d.rate, fit.params, config.eps, config.fit.boundary);
      out.features.push_back(make_instant_feature(fit.params, plateau.c2, t_mid));
      out.fits.push_back({t_mid, fit.params, plateau.c2, fit.residual});
    } catch (const NoRespirationError&) {
      ++out.rejected_flat;
    } catch (const DegenerateSupportError&) {
      ++out.rejected_support;
    }
  }
  if (out.features.empty())
    throw ExtractionError("all " + std::to_string(out.n_windows) + " respiration windows rejected (" +
                          std::to_string(out.rejected_flat) + " flat, " + std::to_string(out.rejected_support) +
                          " without plateau support)");
  return out;
}

Moments moments(std::span<const double> values) {
  Moments m;
  const auto n = static_cast<double>(values.size());
  for (double v : values) m.mean += v;
  m.mean /= n;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double v : values) {
    const double c = v - m.mean;
    const double c2 = c * c;
    m2 += c2;
    m3 += c2 * c;
    m4 += c2 * c2;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  m.stddev = std::sqrt(m2);
  if (!(m2 > 0.0) || m.stddev <= 1e-12 * std::abs(m.mean)) {
    m.stddev = 0.0;
    m.degenerate = true;
    return m;
  }
  m.skewness = m3 / (m2 * m.stddev);
  m.kurtosis = m4 / (m2 * m2);
  return m;
}

RespFeature resp_statistics(std::span<const InstantFeature> features, const SegmentMeta& meta) {
  if (features.size() < 4)
    throw ExtractionError("respiratory statistics need at least 4 windows, got " + std::to_string(features.size()));
  RespFeature out;
  out.meta = meta;
  std::vector<double> column(features.size());
  for (std::size_t n = 0; n < 6; ++n) {
    for (std::size_t i = 0; i < features.size(); ++i) column[i] = features[i].q[n];
    const Moments m = moments(column);
    out.r[4 * n + 0] = m.mean;
    out.r[4 * n + 1] = m.stddev;
    out.r[4 * n + 2] = m.skewness;
    out.r[4 * n + 3] = m.kurtosis;
    out.degenerate = out.degenerate || m.degenerate;
  }
  return out;
}

std::vector<std::string> resp_feature_names() {
  static const char* const kElements[] = {"f", "duty", "beta_sum", "beta_diff", "beta_sum_over_f", "c2"};
  static const char* const kStats[] = {"mean", "std", "skew", "kurt"};
  std::vector<std::string> names;
  for (const char* e : kElements)
    for (const char* s : kStats) names.push_back(std::string("resp_") + e + "_" + s);
  return names;
}

}  // namespace vitalid
