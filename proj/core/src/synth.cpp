#include "vitalid/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "vitalid/error.hpp"
#include "vitalid/rng.hpp"

namespace vitalid {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kMaxHeartbeat = 0.5e-3;  // m, sum of harmonic amplitudes

MrcwParams jittered_cycle(const MrcwParams& mean, double rel, Rng& rng) {
  MrcwParams c;
  c.amplitude = std::max(0.05 * mean.amplitude, mean.amplitude * (1.0 + rel * rng.normal()));
  c.freq = std::clamp(mean.freq * (1.0 + rel * rng.normal()), kMinRespFreq, kMaxRespFreq);
  c.beta1 = std::clamp(mean.beta1 * (1.0 + rel * rng.normal()), 0.05, 1.0);
  c.beta2 = std::clamp(mean.beta2 * (1.0 + rel * rng.normal()), 0.05, 1.0);
  c.duty = std::clamp(mean.duty * (1.0 + rel * rng.normal()), 0.05, 0.95);
  return c;
}

}  // namespace

void SubjectProfile::validate() const {
  MrcwParams p = resp;
  p.shift = 0.0;
  vitalid::validate(p);
  if (resp_jitter < 0.0 || hb_cycle_jitter < 0.0) throw InputError("jitter must be non-negative");
  if (!(gain > 0.0)) throw InputError("chest gain must be positive");
  if (hb_amplitudes.size() > 8) throw InputError("at most 8 heartbeat harmonics");
  if (hb_phases.size() != hb_amplitudes.size()) throw InputError("one phase per heartbeat harmonic");
  double total = 0.0;
  for (double a : hb_amplitudes) {
    if (a < 0.0) throw InputError("heartbeat amplitudes must be non-negative");
    total += a;
  }
  if (total > kMaxHeartbeat * (1.0 + 1e-12)) throw InputError("heartbeat harmonics exceed 0.5 mm in total");
  if (!hb_amplitudes.empty() && (hb_freq < 0.8 || hb_freq > 2.0))
    throw InputError("heartbeat fundamental must lie in [0.8, 2.0] Hz");
}

SynthSegment synth_segment(const SubjectProfile& profile, double T0, double fs, double snr_db, std::uint64_t seed,
                           double wavelength) {
  profile.validate();
  if (T0 < 8.0) throw InputError("synthetic segments need T0 >= 8 s");
  const double H = static_cast<double>(profile.hb_amplitudes.size());
  if (H > 0.0 && fs < 20.0 * H * profile.hb_freq)
    throw InputError("fs must be at least 20 x H x f_h for the heartbeat harmonics");
  if (!(wavelength > 0.0)) throw InputError("wavelength must be positive");

  Rng rng(seed);
  const auto n = static_cast<std::size_t>(std::llround(T0 * fs));
  SynthSegment seg;
  seg.subject_id = profile.id;
  seg.snr_db = snr_db;
  seg.displacement.assign(n, 0.0);

  // Respiration, cycle by cycle.
  double start = -rng.uniform() / profile.resp.freq;
  std::size_t i = 0;
  while (i < n) {
    MrcwParams c = jittered_cycle(profile.resp, profile.resp_jitter, rng);
    c.shift = start;
    const double end = start + 1.0 / c.freq;
    for (; i < n && static_cast<double>(i) / fs < end; ++i) {
      double phase = (static_cast<double>(i) / fs - start) * c.freq;
      phase = std::clamp(phase, 0.0, std::nextafter(1.0, 0.0));
      seg.displacement[i] = c.amplitude * (mrcw_shape(phase, c.beta1, c.beta2, c.duty) + 1.0);
    }
    seg.resp_cycles.push_back(c);
    start = end;
  }

  // Heartbeat, beat by beat.
  if (H > 0.0) {
    const double period = 1.0 / profile.hb_freq;
    double b0 = -rng.uniform() * period;
    i = 0;
    for (long k = 0; i < n; ++k) {
      const double dur = std::max(0.5 * period, period + profile.hb_cycle_jitter * rng.normal());
      seg.beat_starts.push_back(b0);
      for (; i < n && static_cast<double>(i) / fs < b0 + dur; ++i) {
        const double theta = kTwoPi * (static_cast<double>(k) + (static_cast<double>(i) / fs - b0) / dur);
        double acc = 0.0;
        for (std::size_t h = 0; h < profile.hb_amplitudes.size(); ++h)
          acc += profile.hb_amplitudes[h] * std::sin(static_cast<double>(h + 1) * theta + profile.hb_phases[h]);
        seg.displacement[i] += acc;
      }
      b0 += dur;
    }
  }

  const double k_phase = 4.0 * std::numbers::pi / wavelength;
  for (std::size_t s = 1; s < n; ++s) {
    const double step = k_phase * std::abs(seg.displacement[s] - seg.displacement[s - 1]);
    if (step >= std::numbers::pi) throw PhaseStepError(s, step);
  }

  const bool noisy = std::isfinite(snr_db);
  const double sigma = noisy ? profile.gain * std::sqrt(0.5 / std::pow(10.0, snr_db / 10.0)) : 0.0;
  std::vector<cdouble> samples(n);
  for (std::size_t s = 0; s < n; ++s) {
    samples[s] = profile.gain * std::polar(1.0, k_phase * seg.displacement[s]);
    if (noisy) {
      const double re = rng.normal(), im = rng.normal();
      samples[s] += cdouble(sigma * re, sigma * im);
    }
  }
  seg.series = ComplexSeries(std::move(samples), fs);
  return seg;
}

double profile_separation(const SubjectProfile& a, const SubjectProfile& b) {
  const double ma[] = {a.resp.freq, a.resp.beta1, a.resp.beta2, a.resp.duty};
  const double mb[] = {b.resp.freq, b.resp.beta1, b.resp.beta2, b.resp.duty};
  const double rel = std::max(0.5 * (a.resp_jitter + b.resp_jitter), 1e-12);
  double acc = 0.0;
  for (int p = 0; p < 4; ++p) {
    const double sd = rel * 0.5 * (ma[p] + mb[p]);
    acc += (ma[p] - mb[p]) * (ma[p] - mb[p]) / (sd * sd);
  }
  return std::sqrt(acc);
}

std::vector<SubjectProfile> synth_profiles(const PopulationSpec& spec) {
  if (spec.n_subjects < 2) throw InputError("a population needs at least two subjects");
  const ProfileRanges& r = spec.ranges;
  Rng rng(derive_seed(spec.seed, 0x5eedULL));
  auto draw = [&](int index) {
    SubjectProfile p;
    p.id = "subject" + std::to_string(index);
    p.resp.freq = rng.uniform(r.freq_lo, r.freq_hi);
    p.resp.beta1 = rng.uniform(r.beta_lo, r.beta_hi);
    p.resp.beta2 = rng.uniform(r.beta_lo, r.beta_hi);
    p.resp.duty = rng.uniform(r.duty_lo, r.duty_hi);
    p.resp.amplitude = rng.uniform(r.amp_lo, r.amp_hi);
    p.hb_freq = rng.uniform(r.hb_freq_lo, r.hb_freq_hi);
    std::vector<double> w(static_cast<std::size_t>(r.n_harmonics));
    double sum = 0.0;
    for (std::size_t h = 0; h < w.size(); ++h) {
      w[h] = rng.uniform(0.1, 1.0) / static_cast<double>(h + 1);
      sum += w[h];
    }
    const double total = rng.uniform(r.hb_total_lo, r.hb_total_hi);
    for (std::size_t h = 0; h < w.size(); ++h) {
      p.hb_amplitudes.push_back(total * w[h] / sum);
      p.hb_phases.push_back(rng.uniform(0.0, kTwoPi));
    }
    return p;
  };

  std::vector<SubjectProfile> out;
  if (spec.identical_profiles) {
    const SubjectProfile base = draw(0);
    for (int s = 0; s < spec.n_subjects; ++s) {
      out.push_back(base);
      out.back().id = "subject" + std::to_string(s);
    }
    return out;
  }
  for (int s = 0; s < spec.n_subjects; ++s) {
    for (int attempt = 0;; ++attempt) {
      if (attempt >= 10000) throw InputError("cannot place subjects with the requested separation");
      SubjectProfile p = draw(s);
      bool ok = true;
      for (const auto& q : out) ok = ok && profile_separation(p, q) >= r.min_separation;
      if (ok) {
        out.push_back(std::move(p));
        break;
      }
    }
  }
  return out;
}

SegmentMeta population_meta(const PopulationSpec& spec, const SubjectProfile& profile, int segment) {
  const int per = std::max(1, spec.segments_per_session);
  const int session = segment / per;
  SegmentMeta m;
  m.subject_id = profile.id;
  m.day_index = session / 2;
  m.session_id = "d" + std::to_string(m.day_index) + (session % 2 == 0 ? "am" : "pm");
  m.segment_index = segment;
  m.duration = spec.T0;
  return m;
}

std::uint64_t population_segment_seed(const PopulationSpec& spec, int subject, int segment) {
  return derive_seed(spec.seed, static_cast<std::uint64_t>(subject), static_cast<std::uint64_t>(segment));
}

std::vector<PopulationSegment> synth_population(const PopulationSpec& spec) {
  const auto profiles = synth_profiles(spec);
  std::vector<PopulationSegment> out;
  out.reserve(static_cast<std::size_t>(spec.n_subjects) * static_cast<std::size_t>(spec.n_segments));
  for (int s = 0; s < spec.n_subjects; ++s)
    for (int j = 0; j < spec.n_segments; ++j) {
      const std::uint64_t seed = population_segment_seed(spec, s, j);
      out.push_back({synth_segment(profiles[s], spec.T0, spec.fs, spec.snr_db, seed, spec.wavelength),
                     population_meta(spec, profiles[s], j), seed});
    }
  return out;
}

}  // namespace vitalid
