#include "vitalid/mrcw.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include "vitalid/error.hpp"

namespace vitalid {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kMinAmplitude = 1e-15;
constexpr double kMinBeta = 0.01;
constexpr double kMinDuty = 0.01;
constexpr double kMaxDuty = 0.99;

double frac(double x) {
  double r = x - std::floor(x);
  return r >= 1.0 ? 0.0 : r;
}

}  // namespace

bool is_valid(const MrcwParams& p) {
  return p.amplitude > 0.0 && p.freq >= kMinRespFreq && p.freq <= kMaxRespFreq && p.beta1 > 0.0 && p.beta1 <= 1.0 &&
         p.beta2 > 0.0 && p.beta2 <= 1.0 && p.duty > 0.0 && p.duty < 1.0 && p.shift >= 0.0 &&
         p.shift < 1.0 / p.freq;
}

void validate(const MrcwParams& p) {
  if (!is_valid(p)) throw InputError("MRCW parameters outside their valid ranges");
}

MrcwTimings mrcw_timings(const MrcwParams& p) {
  const double two_f = 2.0 * p.freq;
  return {p.duty * (1.0 - p.beta1) / two_f, (1.0 - p.duty) * (1.0 - p.beta1) / two_f,
          p.duty * (1.0 - p.beta2) / two_f, (1.0 - p.duty) * (1.0 - p.beta2) / two_f};
}

double mrcw_shape(double t, double beta1, double beta2, double duty, MrcwBoundary boundary) {
  // One cycle with T = 1.
  const double ta1 = 0.5 * duty * (1.0 - beta1);
  const double tb1 = 0.5 * (1.0 - duty) * (1.0 - beta1);
  const double ta2 = 0.5 * duty * (1.0 - beta2);
  const double tb2 = 0.5 * (1.0 - duty) * (1.0 - beta2);
  if (t > 0.5 - ta1 && t <= 0.5 + ta2) return 1.0;
  if (t > tb1 && t <= 0.5 - ta1) return std::cos(kTwoPi / beta1 * (std::abs(t - 0.5) - ta1));
  const double end = boundary == MrcwBoundary::continuous ? 1.0 - tb2 : 1.0 - ta1;
  if (t > 0.5 + ta2 && t <= end) return std::cos(kTwoPi / beta2 * (std::abs(t - 0.5) - ta2));
  return -1.0;
}

double mrcw_eval(double t, const MrcwParams& p, MrcwBoundary boundary) {
  return p.amplitude * mrcw_shape(frac(p.freq * (t - p.shift)), p.beta1, p.beta2, p.duty, boundary);
}

std::vector<double> mrcw_unit_samples(std::size_t n, double rate, const MrcwParams& p, MrcwBoundary boundary) {
  std::vector<double> u(n);
  for (std::size_t i = 0; i < n; ++i)
    u[i] = mrcw_shape(frac(p.freq * (static_cast<double>(i) / rate - p.shift)), p.beta1, p.beta2, p.duty, boundary);
  return u;
}

namespace {

struct Projection {
  double num = 0.0;  // <d, u>
  double den = 0.0;  // <u, u>
  double sum_d = 0.0;
  double sum_u = 0.0;
  double n = 0.0;

  // Centre both d and u first, which is the same as fitting a free offset.
  Projection centered() const {
    Projection c = *this;
    c.num = num - sum_d * sum_u / n;
    c.den = den - sum_u * sum_u / n;
    return c;
  }
};

Projection project(std::span<const double> d, double rate, const MrcwParams& p, MrcwBoundary boundary) {
  Projection pr;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double u =
        mrcw_shape(frac(p.freq * (static_cast<double>(i) / rate - p.shift)), p.beta1, p.beta2, p.duty, boundary);
    pr.num += d[i] * u;
    pr.den += u * u;
    pr.sum_d += d[i];
    pr.sum_u += u;
  }
  pr.n = static_cast<double>(d.size());
  return pr;
}

double amplitude_from(const Projection& pr) {
  if (!(pr.den > 0.0)) return kMinAmplitude;
  return std::max(pr.num / pr.den, kMinAmplitude);
}

}  // namespace

double mrcw_optimal_amplitude(std::span<const double> d, double rate, const MrcwParams& p, MrcwBoundary boundary,
                              bool with_offset) {
  const Projection pr = project(d, rate, p, boundary);
  return amplitude_from(with_offset ? pr.centered() : pr);
}

double mrcw_optimal_offset(std::span<const double> d, double rate, const MrcwParams& p, MrcwBoundary boundary) {
  const Projection pr = project(d, rate, p, boundary);
  return (pr.sum_d - p.amplitude * pr.sum_u) / pr.n;
}

double mrcw_residual(std::span<const double> d, double rate, const MrcwParams& p, MrcwBoundary boundary,
                     double offset) {
  double acc = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double e = d[i] - offset - mrcw_eval(static_cast<double>(i) / rate, p, boundary);
    acc += e * e;
  }
  return acc / rate;
}

MrcwGrid MrcwGrid::standard() {
  MrcwGrid g;
  for (int i = 0; i <= 30; ++i) g.freqs.push_back(0.10 + 0.02 * i);
  for (int i = 1; i <= 10; ++i) g.betas.push_back(0.1 * i);
  for (int i = 1; i <= 9; ++i) g.duties.push_back(0.1 * i);
  return g;
}

namespace {

// Refined coordinates: f, beta1, beta2, D, tau.
using Point = std::array<double, 5>;

MrcwParams clamp_params(const Point& x) {
  MrcwParams p;
  p.freq = std::clamp(x[0], kMinRespFreq, kMaxRespFreq);
  p.beta1 = std::clamp(x[1], kMinBeta, 1.0);
  p.beta2 = std::clamp(x[2], kMinBeta, 1.0);
  p.duty = std::clamp(x[3], kMinDuty, kMaxDuty);
  p.shift = x[4];
  return p;
}

class Objective {
 public:
  Objective(std::span<const double> d, double rate, MrcwBoundary boundary, bool with_offset)
      : d_(d), rate_(rate), boundary_(boundary), with_offset_(with_offset) {
    double sum = 0.0;
    for (double v : d) {
      energy_ += v * v;
      sum += v;
    }
    if (with_offset_) energy_ -= sum * sum / static_cast<double>(d.size());
  }

  // Residual with amplitude (and offset) eliminated in closed form, in m^2 s.
  double operator()(const Point& x) const {
    Projection pr = project(d_, rate_, clamp_params(x), boundary_);
    if (with_offset_) pr = pr.centered();
    const double a = amplitude_from(pr);
    return std::max(0.0, energy_ - 2.0 * a * pr.num + a * a * pr.den) / rate_;
  }

  bool with_offset() const { return with_offset_; }

  std::span<const double> data() const { return d_; }
  double rate() const { return rate_; }
  MrcwBoundary boundary() const { return boundary_; }
  double energy() const { return energy_; }

 private:
  std::span<const double> d_;
  double rate_;
  MrcwBoundary boundary_;
  bool with_offset_;
  double energy_ = 0.0;
};

struct GridHit {
  double freq, beta1, beta2, duty, shift;
};

// Binned evaluation of every grid cell: the window is folded onto
// `phase_bins` phase bins per candidate f, so each (shape, shift) cell costs
// a few short dot products regardless of the window length. The dot products
// of all shapes against all shifts are one matrix product per f.
GridHit grid_search(const Objective& obj, const MrcwGrid& grid) {
  const int bins = grid.phase_bins;
  const int shifts = grid.n_shifts;
  const int stride = bins / shifts;
  const auto d = obj.data();
  const double rate = obj.rate();
  const double n = static_cast<double>(d.size());

  struct ShapeKey {
    double b1, b2, duty;
  };
  std::vector<ShapeKey> keys;
  for (double b1 : grid.betas)
    for (double b2 : grid.betas)
      for (double duty : grid.duties) keys.push_back({b1, b2, duty});
  const auto n_shapes = static_cast<Eigen::Index>(keys.size());
  Eigen::MatrixXf U(bins, n_shapes), U2(bins, n_shapes);
  for (Eigen::Index s = 0; s < n_shapes; ++s)
    for (int b = 0; b < bins; ++b) {
      const double u = mrcw_shape((b + 0.5) / bins, keys[s].b1, keys[s].b2, keys[s].duty, obj.boundary());
      U(b, s) = static_cast<float>(u);
      U2(b, s) = static_cast<float>(u * u);
    }

  double best_score = -1.0;
  GridHit best{grid.freqs.front(), grid.betas.front(), grid.betas.front(), grid.duties.front(), 0.0};
  std::vector<double> hist(bins), count(bins);
  Eigen::MatrixXf H(shifts, bins), C(shifts, bins);
  Eigen::MatrixXf num, den, sum_u;
  double sum_d = 0.0;
  for (double v : d) sum_d += v;
  for (double f : grid.freqs) {
    std::fill(hist.begin(), hist.end(), 0.0);
    std::fill(count.begin(), count.end(), 0.0);
    for (std::size_t i = 0; i < d.size(); ++i) {
      int b = static_cast<int>(frac(f * static_cast<double>(i) / rate) * bins);
      b = std::min(b, bins - 1);
      hist[b] += d[i];
      count[b] += 1.0;
    }
    // Shift r moves the model by r/n_shifts of a period, i.e. r*stride bins.
    for (int r = 0; r < shifts; ++r)
      for (int b = 0; b < bins; ++b) {
        H(r, b) = static_cast<float>(hist[(b + r * stride) % bins]);
        C(r, b) = static_cast<float>(count[(b + r * stride) % bins]);
      }
    num.noalias() = H * U;
    den.noalias() = C * U2;
    if (obj.with_offset()) sum_u.noalias() = C * U;
    for (Eigen::Index s = 0; s < n_shapes; ++s)
      for (int r = 0; r < shifts; ++r) {
        double nu = num(r, s), de = den(r, s);
        if (obj.with_offset()) {
          const double su = sum_u(r, s);
          nu -= sum_d * su / n;
          de -= su * su / n;
        }
        if (nu <= 0.0 || de <= 1e-9 * n) continue;
        const double score = nu * nu / de;
        if (score > best_score) {
          best_score = score;
          best = {f, keys[s].b1, keys[s].b2, keys[s].duty, static_cast<double>(r) / (shifts * f)};
        }
      }
  }
  return best;
}

// Nelder-Mead on x = origin + z * scale.
struct SimplexResult {
  Point x;
  double value;
  int iterations;
};

SimplexResult nelder_mead(const Objective& obj, const Point& origin, const Point& scale, int max_iterations,
                          double tolerance) {
  constexpr int n = 5;
  auto to_x = [&](const Point& z) {
    Point x;
    for (int i = 0; i < n; ++i) x[i] = origin[i] + z[i] * scale[i];
    return x;
  };
  std::array<Point, n + 1> z{};
  std::array<double, n + 1> fz{};
  for (int v = 1; v <= n; ++v) z[v][v - 1] = 0.5;
  for (int v = 0; v <= n; ++v) fz[v] = obj(to_x(z[v]));

  int iter = 0;
  std::array<int, n + 1> order{};
  for (; iter < max_iterations; ++iter) {
    for (int v = 0; v <= n; ++v) order[v] = v;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return fz[a] < fz[b]; });
    const Point& best = z[order[0]];
    double diameter = 0.0;
    for (int v = 1; v <= n; ++v)
      for (int i = 0; i < n; ++i) diameter = std::max(diameter, std::abs(z[order[v]][i] - best[i]));
    if (diameter < tolerance) break;

    Point centroid{};
    for (int v = 0; v < n; ++v)
      for (int i = 0; i < n; ++i) centroid[i] += z[order[v]][i] / n;
    const int worst = order[n];
    auto along = [&](double t) {
      Point p;
      for (int i = 0; i < n; ++i) p[i] = centroid[i] + t * (z[worst][i] - centroid[i]);
      return p;
    };
    const Point reflected = along(-1.0);
    const double fr = obj(to_x(reflected));
    if (fr < fz[order[0]]) {
      const Point expanded = along(-2.0);
      const double fe = obj(to_x(expanded));
      if (fe < fr) {
        z[worst] = expanded;
        fz[worst] = fe;
      } else {
        z[worst] = reflected;
        fz[worst] = fr;
      }
      continue;
    }
    if (fr < fz[order[n - 1]]) {
      z[worst] = reflected;
      fz[worst] = fr;
      continue;
    }
    const bool outside = fr < fz[worst];
    const Point contracted = along(outside ? -0.5 : 0.5);
    const double fc = obj(to_x(contracted));
    if (fc < (outside ? fr : fz[worst])) {
      z[worst] = contracted;
      fz[worst] = fc;
      continue;
    }
    for (int v = 1; v <= n; ++v) {
      Point& p = z[order[v]];
      for (int i = 0; i < n; ++i) p[i] = best[i] + 0.5 * (p[i] - best[i]);
      fz[order[v]] = obj(to_x(p));
    }
  }
  int arg = 0;
  for (int v = 1; v <= n; ++v)
    if (fz[v] < fz[arg]) arg = v;
  return {to_x(z[arg]), fz[arg], iter};
}

// Coordinate moves of +-step * |x_i|, with the step shrinking from 1%; the
// schedule repeats while the 1% level still finds an improvement.
void polish(const Objective& obj, Point& x, double& value) {
  constexpr std::array<double, 5> kSteps = {1e-2, 3e-3, 1e-3, 3e-4, 1e-4};
  for (int cycle = 0; cycle < 4; ++cycle) {
    bool improved_at_coarsest = false;
    for (double step : kSteps) {
      for (int pass = 0; pass < 20; ++pass) {
        bool improved = false;
        for (int i = 0; i < 5; ++i) {
          for (double sign : {1.0, -1.0}) {
            Point trial = x;
            trial[i] = x[i] * (1.0 + sign * step);
            const double v = obj(trial);
            if (v < value) {
              x = trial;
              value = v;
              improved = true;
            }
          }
        }
        if (!improved) break;
        if (step == kSteps.front()) improved_at_coarsest = true;
      }
    }
    if (!improved_at_coarsest && cycle > 0) break;
  }
}

}  // namespace

MrcwFit mrcw_fit(std::span<const double> d, double rate, const MrcwFitOptions& options) {
  if (d.size() < 4) throw InputError("MRCW fit needs at least four samples");
  if (!(rate > 0.0)) throw InputError("sample rate must be positive");
  const MrcwGrid& grid = options.grid;
  if (grid.freqs.empty() || grid.betas.empty() || grid.duties.empty() || grid.n_shifts < 1 ||
      grid.phase_bins % grid.n_shifts != 0)
    throw InputError("malformed MRCW grid");

  double mean = 0.0;
  for (double v : d) mean += v;
  mean /= static_cast<double>(d.size());
  double var = 0.0;
  for (double v : d) var += (v - mean) * (v - mean);
  var /= static_cast<double>(d.size());
  if (var < 1e-12) throw NoRespirationError("flat displacement window (no respiration)");

  const Objective obj(d, rate, options.boundary, options.fit_offset);
  const GridHit hit = grid_search(obj, grid);

  const Point origin = {hit.freq, hit.beta1, hit.beta2, hit.duty, hit.shift};
  const Point scale = {0.02, 0.1, 0.1, 0.1, 1.0 / (grid.n_shifts * hit.freq)};
  SimplexResult sr = nelder_mead(obj, origin, scale, options.max_iterations, options.simplex_tolerance);
  {
    const MrcwParams c = clamp_params(sr.x);
    sr.x = {c.freq, c.beta1, c.beta2, c.duty, c.shift};
  }
  if (options.polish) polish(obj, sr.x, sr.value);

  MrcwFit fit;
  fit.params = clamp_params(sr.x);
  const double period = fit.params.period();
  fit.params.shift = std::fmod(fit.params.shift, period);
  if (fit.params.shift < 0.0) fit.params.shift += period;
  if (fit.params.shift >= period) fit.params.shift = 0.0;
  fit.params.amplitude = mrcw_optimal_amplitude(d, rate, fit.params, options.boundary, options.fit_offset);
  fit.offset = options.fit_offset ? mrcw_optimal_offset(d, rate, fit.params, options.boundary) : 0.0;
  fit.residual = mrcw_residual(d, rate, fit.params, options.boundary, fit.offset);
  fit.iterations = sr.iterations;
  return fit;
}

std::vector<bool> plateau_mask(std::size_t n, double rate, const MrcwParams& fitted, double eps,
                               MrcwBoundary boundary) {
  std::vector<bool> mask(n);
  const double threshold = eps * fitted.amplitude;
  for (std::size_t i = 0; i < n; ++i) mask[i] = mrcw_eval(static_cast<double>(i) / rate, fitted, boundary) >= threshold;
  return mask;
}

PlateauFit plateau_parabola_fit(std::span<const double> d, double rate, const MrcwParams& fitted, double eps,
                                MrcwBoundary boundary) {
  const auto mask = plateau_mask(d.size(), rate, fitted, eps, boundary);
  PlateauFit out;
  double weighted_c2 = 0.0;
  std::size_t longest = 0;
  std::size_t i = 0;
  while (i < d.size()) {
    if (!mask[i]) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < d.size() && mask[j]) ++j;
    const std::size_t len = j - i;
    if (len >= 3) {
      const double mid = 0.5 * static_cast<double>(i + j - 1) / rate;
      Eigen::Matrix3d normal = Eigen::Matrix3d::Zero();
      Eigen::Vector3d rhs = Eigen::Vector3d::Zero();
      for (std::size_t k = i; k < j; ++k) {
        const double t = static_cast<double>(k) / rate - mid;
        const Eigen::Vector3d basis(1.0, t, t * t);
        normal += basis * basis.transpose();
        rhs += basis * d[k];
      }
      const Eigen::Vector3d c = normal.ldlt().solve(rhs);
      weighted_c2 += c[2] * static_cast<double>(len);
      out.n_support += len;
      ++out.n_runs;
      if (len > longest) {
        longest = len;
        out.c0 = c[0];
        out.c1 = c[1];
      }
    }
    i = j;
  }
  if (out.n_support < 3) throw DegenerateSupportError("plateau support has fewer than three samples");
  out.c2 = weighted_c2 / static_cast<double>(out.n_support);
  return out;
}

}  // namespace vitalid
