#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "vitalid/mrcw.hpp"
#include "vitalid/types.hpp"

namespace vitalid {

inline constexpr double kDefaultWavelength = 3.8e-3;  // m

// Generative description of one synthetic subject.
struct SubjectProfile {
  std::string id;
  MrcwParams resp;                  // per-subject means (shift unused)
  double resp_jitter = 0.05;        // per-cycle std, relative to each mean
  double hb_freq = 1.1;             // f_h, Hz
  std::vector<double> hb_amplitudes;  // a_1 ... a_H, m
  std::vector<double> hb_phases;      // phi_1 ... phi_H, rad
  double hb_cycle_jitter = 0.02;    // std of each beat duration, s
  double gain = 1.0;                // echo amplitude g

  void validate() const;  // throws InputError
};

struct SynthSegment {
  ComplexSeries series;
  std::vector<double> displacement;      // clean d(t), m
  std::vector<MrcwParams> resp_cycles;   // per-cycle parameters, shift = cycle start
  std::vector<double> beat_starts;       // s
  std::string subject_id;
  double snr_db = 0.0;
};

// d(t) = sum over cycles A_c (shape_c + 1) + sum_h a_h sin(h theta(t) + phi_h),
// where theta advances 2 pi per jittered beat; then
// s(t) = g exp(j 4 pi d / lambda) + complex white noise at snr_db (infinite
// for none). The first respiratory cycle starts at a random phase.
// Throws InputError for T0 < 8 s or fs < 20 H f_h, and PhaseStepError when a
// clean phase step reaches pi.
SynthSegment synth_segment(const SubjectProfile& profile, double T0, double fs, double snr_db, std::uint64_t seed,
                           double wavelength = kDefaultWavelength);

// Ranges the subject means are drawn from.
struct ProfileRanges {
  double freq_lo = 0.2, freq_hi = 0.4;         // Hz
  double beta_lo = 0.3, beta_hi = 0.8;
  double duty_lo = 0.3, duty_hi = 0.7;
  double amp_lo = 1.5e-3, amp_hi = 3.0e-3;     // m
  double hb_freq_lo = 0.8, hb_freq_hi = 1.25;  // Hz
  int n_harmonics = 4;
  double hb_total_lo = 0.2e-3, hb_total_hi = 0.5e-3;  // sum of a_h, m
  double min_separation = 2.0;  // in units of jitter std
};

struct PopulationSpec {
  int n_subjects = 6;
  int n_segments = 50;
  double T0 = 60.0;
  double fs = 100.0;
  double snr_db = 20.0;
  std::uint64_t seed = 1;
  int segments_per_session = 5;
  bool identical_profiles = false;  // every subject shares subject 0's profile
  double wavelength = kDefaultWavelength;
  ProfileRanges ranges;
};

// Separation of two profiles' respiratory means (f, beta1, beta2, D) in
// units of the per-cycle jitter std, Euclidean.
double profile_separation(const SubjectProfile& a, const SubjectProfile& b);

// Draws subject profiles by rejection so every pair is at least
// ranges.min_separation apart (skipped for identical_profiles).
std::vector<SubjectProfile> synth_profiles(const PopulationSpec& spec);

// Labels segment j of a subject: session j / segments_per_session, day
// session / 2, half-day am/pm.
SegmentMeta population_meta(const PopulationSpec& spec, const SubjectProfile& profile, int segment);
std::uint64_t population_segment_seed(const PopulationSpec& spec, int subject, int segment);

struct PopulationSegment {
  SynthSegment segment;
  SegmentMeta meta;
  std::uint64_t seed = 0;
};

// All n_subjects x n_segments segments, subject-major.
std::vector<PopulationSegment> synth_population(const PopulationSpec& spec);

}  // namespace vitalid
