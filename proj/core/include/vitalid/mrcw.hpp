#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace vitalid {

// Modified raised-cosine respiration waveform parameters.
struct MrcwParams {
  double amplitude = 1.0;  // A, m
  double freq = 0.3;       // f, Hz
  double beta1 = 0.5;      // expiration roll-off, (0, 1]
  double beta2 = 0.5;      // inspiration roll-off, (0, 1]
  double duty = 0.5;       // D, plateau share, (0, 1)
  double shift = 0.0;      // tau, s, in [0, 1/f)

  double period() const noexcept { return 1.0 / freq; }
};

// Physiological search band for f.
inline constexpr double kMinRespFreq = 0.1;
inline constexpr double kMaxRespFreq = 0.7;

bool is_valid(const MrcwParams& p);
void validate(const MrcwParams& p);  // throws InputError

struct MrcwTimings {
  double ta1, tb1, ta2, tb2;  // s
};
MrcwTimings mrcw_timings(const MrcwParams& p);

// Where the inspiratory cosine hands over to the trough. `continuous` ends it
// at T - T_b2, where the cosine reaches -1; `printed` ends it at T - T_a1,
// which leaves a jump unless D(1 - beta1) == (1 - D)(1 - beta2).
enum class MrcwBoundary { continuous, printed };

// Unit-amplitude waveform over one cycle, phase in [0, 1).
double mrcw_shape(double phase, double beta1, double beta2, double duty,
                  MrcwBoundary boundary = MrcwBoundary::continuous);

// A * shape(frac(f (t - tau))); periodic in t with period 1/f.
double mrcw_eval(double t, const MrcwParams& p, MrcwBoundary boundary = MrcwBoundary::continuous);

// Samples u_i = shape at t_i = i / rate (amplitude 1).
std::vector<double> mrcw_unit_samples(std::size_t n, double rate, const MrcwParams& p,
                                      MrcwBoundary boundary = MrcwBoundary::continuous);

// <d, u> / <u, u> for the unit-amplitude shape u of p, floored at a tiny
// positive value. With an offset, d and u are both centred on their window
// means first.
double mrcw_optimal_amplitude(std::span<const double> d, double rate, const MrcwParams& p,
                              MrcwBoundary boundary = MrcwBoundary::continuous, bool with_offset = false);

// mean(d) - A mean(u), the least-squares offset for p.amplitude.
double mrcw_optimal_offset(std::span<const double> d, double rate, const MrcwParams& p,
                           MrcwBoundary boundary = MrcwBoundary::continuous);

// sum_i (d_i - offset - mrcw_eval(t_i, p))^2 / rate, the discretized fitting
// integral, in m^2 s. Uses p.amplitude as given.
double mrcw_residual(std::span<const double> d, double rate, const MrcwParams& p,
                     MrcwBoundary boundary = MrcwBoundary::continuous, double offset = 0.0);

// Coarse grid searched before simplex refinement.
struct MrcwGrid {
  std::vector<double> freqs;   // Hz
  std::vector<double> betas;   // shared by beta1 and beta2
  std::vector<double> duties;
  int n_shifts = 16;           // tau steps over one period
  int phase_bins = 32;         // resolution of the binned grid evaluation, multiple of n_shifts

  // f 0.10..0.70 step 0.02, beta 0.1..1.0 step 0.1, D 0.1..0.9 step 0.1.
  static MrcwGrid standard();
};

struct MrcwFitOptions {
  MrcwGrid grid = MrcwGrid::standard();
  int max_iterations = 200;        // Nelder-Mead
  double simplex_tolerance = 1e-6;  // in grid-step units
  bool polish = true;               // +-1% coordinate polish after the simplex
  MrcwBoundary boundary = MrcwBoundary::continuous;
  // The waveform is not zero-mean unless beta1 = beta2 and D = 1/2, so a
  // mean-removed window is fitted with a free offset.
  bool fit_offset = true;
};

struct MrcwFit {
  MrcwParams params;
  double offset = 0.0;    // m
  double residual = 0.0;  // m^2 s
  int iterations = 0;
};

// Fits A, f, beta1, beta2, D and tau to a mean-removed window (t = 0 at the
// first sample). Throws NoRespirationError when the window variance is
// below 1e-12 m^2.
MrcwFit mrcw_fit(std::span<const double> d, double rate, const MrcwFitOptions& options = {});

struct PlateauFit {
  double c0 = 0.0;  // m
  double c1 = 0.0;  // m/s
  double c2 = 0.0;  // m/s^2, length-weighted mean over plateau runs
  std::size_t n_support = 0;
  std::size_t n_runs = 0;
};

// Samples where the fitted model is at or above eps * A.
std::vector<bool> plateau_mask(std::size_t n, double rate, const MrcwParams& fitted, double eps = 0.6,
                               MrcwBoundary boundary = MrcwBoundary::continuous);

// Least-squares parabola c2 t^2 + c1 t + c0 on each contiguous run of the
// plateau mask (time centred on the run), runs shorter than three samples
// ignored. c0 and c1 come from the longest run. Throws
// DegenerateSupportError when no run is usable.
PlateauFit plateau_parabola_fit(std::span<const double> d, double rate, const MrcwParams& fitted, double eps = 0.6,
                                MrcwBoundary boundary = MrcwBoundary::continuous);

}  // namespace vitalid
