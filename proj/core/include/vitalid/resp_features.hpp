#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "vitalid/mrcw.hpp"
#include "vitalid/signal.hpp"
#include "vitalid/types.hpp"

namespace vitalid {

inline constexpr std::size_t kRespDim = 24;

// q = (f, D, beta1 + beta2, |beta1 - beta2|, (beta1 + beta2) / f, c2) at
// window centre t.
struct InstantFeature {
  std::array<double, 6> q{};
  double t = 0.0;
};

InstantFeature make_instant_feature(const MrcwParams& p, double c2, double t);

struct RespConfig {
  double window = 8.0;  // s
  double hop = 1.0;     // s
  double eps = 0.6;     // plateau threshold relative to A
  MrcwFitOptions fit;
};

// Per-window diagnostics row.
struct WindowFit {
  double t = 0.0;
  MrcwParams params;
  double c2 = 0.0;
  double residual = 0.0;
};

struct InstantFeatures {
  std::vector<InstantFeature> features;
  std::vector<WindowFit> fits;
  std::size_t n_windows = 0;
  std::size_t rejected_flat = 0;
  std::size_t rejected_support = 0;
};

// Slides a centred `window`-second fit along d every `hop` seconds. Each
// window is mean-removed before fitting. Failed windows are counted and
// skipped; throws ExtractionError if none survive.
InstantFeatures instantaneous_features(const DisplacementSeries& d, const RespConfig& config = {});

struct Moments {
  double mean = 0.0;
  double stddev = 0.0;    // population (divisor N)
  double skewness = 0.0;  // standardized third central moment
  double kurtosis = 3.0;  // standardized fourth central moment, non-excess
  bool degenerate = false;  // stddev == 0; skewness 0 and kurtosis 3 by convention
};

Moments moments(std::span<const double> values);

struct RespFeature {
  std::array<double, kRespDim> r{};  // [mu, sigma, gamma, kappa] for q1 ... q6
  SegmentMeta meta;
  bool degenerate = false;
};

// Needs at least four instantaneous features.
RespFeature resp_statistics(std::span<const InstantFeature> features, const SegmentMeta& meta);

// Column names in r order, e.g. "resp_f_mean".
std::vector<std::string> resp_feature_names();

}  // namespace vitalid
