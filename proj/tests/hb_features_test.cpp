#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "support/test_support.hpp"
#include "vitalid/error.hpp"
#include "vitalid/hb_features.hpp"
#include "vitalid/synth.hpp"

using namespace vitalid;
using vitalid::testing::kPi;

namespace {

Spectrogram single_bin_spectrogram(double rate, std::size_t n_fft, double freq) {
  Spectrogram s;
  s.rate = rate;
  s.n_frames = 3;
  s.n_freqs = n_fft;
  s.df = rate / static_cast<double>(n_fft);
  s.hop = 0.1;
  s.window_length = static_cast<double>(n_fft) / rate;
  for (std::size_t p = 0; p < n_fft; ++p) s.freqs.push_back((static_cast<double>(p) - static_cast<double>(n_fft / 2)) * s.df);
  s.frame_times = {1.0, 1.1, 1.2};
  s.magnitudes.assign(s.n_frames * n_fft, 0.0);
  const auto bin = static_cast<std::size_t>(std::lround(freq / s.df) + static_cast<long>(n_fft / 2));
  for (std::size_t t = 0; t < s.n_frames; ++t) s.magnitudes[t * n_fft + bin] = 1.0;
  return s;
}

SubjectProfile heartbeat_subject(const std::string& id, std::vector<double> amplitudes) {
  SubjectProfile p;
  p.id = id;
  p.resp = {2e-3, 0.3, 0.5, 0.6, 0.5, 0.0};
  p.hb_freq = 1.1;
  p.hb_phases.assign(amplitudes.size(), 0.0);
  for (std::size_t h = 0; h < amplitudes.size(); ++h) p.hb_phases[h] = 0.7 * static_cast<double>(h);
  p.hb_amplitudes = std::move(amplitudes);
  return p;
}

double euclidean(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

double cosine_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return 1.0 - ab / std::sqrt(aa * bb);
}

}  // namespace

TEST_CASE("mel bank endpoints and scale constant") {
  const MelFilterBank bank = build_mel_bank(100.0, 5.0, 1000.0, 64);
  REQUIRE(bank.centers.size() == 66);
  CHECK(bank.centers.front() == 0.0);
  CHECK(std::abs(bank.centers.back() - 50.0) <= 1e-9 * 50.0);
  CHECK(bank.m_tilde == doctest::Approx(1000.0 / std::log(201.0)).epsilon(1e-15));
  CHECK(bank.m_tilde == doctest::Approx(188.54).epsilon(2e-4));
  for (std::size_t l = 1; l < bank.centers.size(); ++l) CHECK(bank.centers[l] > bank.centers[l - 1]);
}

TEST_CASE("mel filters are triangles of height 2/(f_{l+2} - f_l)") {
  const MelFilterBank bank = build_mel_bank(100.0, 5.0, 1000.0, 64);
  for (int l = 0; l < 64; ++l) {
    const double lo = bank.centers[l], mid = bank.centers[l + 1], hi = bank.centers[l + 2];
    CHECK(bank.weight(l, mid) == 2.0 / (hi - lo));
    CHECK(bank.peak_height(l) == 2.0 / (hi - lo));
    CHECK(bank.weight(l, lo) == 0.0);
    CHECK(bank.weight(l, hi) == 0.0);
    CHECK(bank.weight(l, lo - 1e-6) == 0.0);
    CHECK(bank.weight(l, hi + 1e-6) == 0.0);
    for (int i = 1; i < 20; ++i) {
      const double f = lo + (hi - lo) * i / 20.0;
      CHECK(bank.weight(l, f) >= 0.0);
      CHECK(bank.weight(l, f) <= bank.peak_height(l) * (1 + 1e-15));
    }
  }
  // No dead zones between the first and last peaks.
  for (double f = bank.centers[1]; f < bank.centers[64]; f += 0.01) {
    double total = 0.0;
    for (int l = 0; l < 64; ++l) total += bank.weight(l, f);
    CHECK(total > 0.0);
  }
}

TEST_CASE("single-filter bank spans the band") {
  const MelFilterBank bank = build_mel_bank(100.0, 5.0, 1000.0, 1);
  REQUIRE(bank.centers.size() == 3);
  CHECK(bank.centers[0] == 0.0);
  CHECK(bank.centers[2] == doctest::Approx(50.0).epsilon(1e-12));
  CHECK(bank.weight(0, 0.5 * bank.centers[1]) > 0.0);
  CHECK(bank.weight(0, 0.5 * (bank.centers[1] + bank.centers[2])) > 0.0);
}

TEST_CASE("mel energies follow a one-sided tone") {
  const MelFilterBank bank = build_mel_bank(100.0, 5.0, 1000.0, 64);
  const std::size_t n_fft = 4096;
  const int l = 40;
  const Spectrogram spec = single_bin_spectrogram(100.0, n_fft, bank.centers[l + 1]);
  const MelEnergies e = mel_energies(spec, bank);
  CHECK(std::max_element(e.pos.begin(), e.pos.end()) - e.pos.begin() == l);
  CHECK(e.neg[l] == 0.0);
  for (double v : e.pos) CHECK(v >= 0.0);

  Spectrogram zero = spec;
  std::fill(zero.magnitudes.begin(), zero.magnitudes.end(), 0.0);
  const MelEnergies z = mel_energies(zero, bank);
  for (std::size_t i = 0; i < 64; ++i) {
    CHECK(z.pos[i] == 0.0);
    CHECK(z.neg[i] == 0.0);
  }
  CHECK(log_mel(z).floored);

  CHECK_THROWS_AS(mel_energies(spec, build_mel_bank(120.0)), InputError);
}

TEST_CASE("real signals give symmetric energies, conjugation swaps sides") {
  Rng rng(3);
  std::vector<cdouble> x(1000), xc(1000), xr(1000);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = cdouble(rng.normal(), rng.normal());
    xc[i] = std::conj(x[i]);
    xr[i] = x[i].real();
  }
  const MelFilterBank bank = build_mel_bank(100.0);
  const MelEnergies er = mel_energies(stft(ComplexSeries(xr, 100.0)), bank);
  for (std::size_t l = 0; l < 64; ++l) CHECK(er.pos[l] == doctest::Approx(er.neg[l]).epsilon(1e-6));

  const MelEnergies a = mel_energies(stft(ComplexSeries(x, 100.0)), bank);
  const MelEnergies b = mel_energies(stft(ComplexSeries(xc, 100.0)), bank);
  for (std::size_t l = 0; l < 64; ++l) {
    CHECK(a.pos[l] == doctest::Approx(b.neg[l]).epsilon(1e-12));
    CHECK(a.neg[l] == doctest::Approx(b.pos[l]).epsilon(1e-12));
  }
}

TEST_CASE("cepstrum of a constant is C_0 only") {
  const double c = 1.7;
  const std::vector<double> x(64, c);
  const auto C = cepstrum(x, 64);
  CHECK(C[0] == doctest::Approx(2 * c * 64 / 65.0).epsilon(1e-12));
  for (int k = 1; k < 64; ++k) CHECK(std::abs(C[k]) <= 1e-9);
}

TEST_CASE("cepstrum of a single cosine") {
  std::vector<double> x(64);
  for (int l = 0; l < 64; ++l) x[l] = std::cos((2 * l + 1) * kPi / 64);
  const auto C = cepstrum(x, 64);
  CHECK(C[1] == doctest::Approx(1.0).epsilon(1e-9));
  // cos((2l+1)(K-1) pi / K) = -cos((2l+1) pi / K): the K-1 basis aliases the first.
  CHECK(C[63] == doctest::Approx(-1.0).epsilon(1e-9));
  for (int k = 0; k < 64; ++k)
    if (k != 1 && k != 63) CHECK(std::abs(C[k]) <= 1e-9);
}

TEST_CASE("mfcc requires K == L and treats both sides alike") {
  MelEnergies e;
  for (int l = 0; l < 64; ++l) e.pos.push_back(1.0 + l);
  e.neg = e.pos;
  const Mfcc m = mfcc(e, 64);
  CHECK(m.pos == m.neg);
  CHECK(m.pos.size() == 64);
  CHECK_FALSE(m.floored);
  CHECK_THROWS_AS(mfcc(e, 32), InputError);
}

TEST_CASE("hb feature layout and determinism") {
  const SubjectProfile p = heartbeat_subject("a", {2e-4, 1e-4, 5e-5, 2.5e-5});
  const SynthSegment seg = synth_segment(p, 20.0, 100.0, 20.0, 9);
  const HbFeature a = hb_feature(seg.series, {"a", "d0am", 0, 0, 20.0});
  const HbFeature b = hb_feature(seg.series, {"a", "d0am", 0, 0, 20.0});
  CHECK(a.r.size() == 48);
  CHECK(a.r == b.r);
  for (double v : a.r) CHECK(std::isfinite(v));

  const auto names = hb_feature_names();
  REQUIRE(names.size() == 48);
  CHECK(names.front() == "hb_cm23");
  CHECK(names[23] == "hb_cm0");
  CHECK(names[24] == "hb_cp0");
  CHECK(names.back() == "hb_cp23");

  // Entry order: C_-23 ... C_-0, C_+0 ... C_+23.
  const ComplexSeries accel = second_difference(seg.series);
  const Mfcc m = mfcc(mel_energies(stft(accel), build_mel_bank(100.0)), 64);
  CHECK(a.r[0] == m.neg[23]);
  CHECK(a.r[23] == m.neg[0]);
  CHECK(a.r[24] == m.pos[0]);
  CHECK(a.r[47] == m.pos[23]);

  const ComplexSeries short_seg(std::vector<cdouble>(150, cdouble(1.0, 0.0)), 100.0);
  CHECK_THROWS_AS(hb_feature(short_seg, {}), ExtractionError);
}

TEST_CASE("scaling the input changes only the zeroth coefficients") {
  const SubjectProfile p = heartbeat_subject("a", {2e-4, 1e-4, 5e-5, 2.5e-5});
  const SynthSegment seg = synth_segment(p, 20.0, 100.0, 20.0, 10);
  const HbFeature base = hb_feature(seg.series, {});
  for (double alpha : {0.1, 10.0}) {
    ComplexSeries scaled = seg.series;
    for (auto& v : scaled.samples) v *= alpha;
    const HbFeature r = hb_feature(scaled, {});
    for (std::size_t i = 0; i < 48; ++i) {
      if (i == 23 || i == 24) {
        CHECK(r.r[i] - base.r[i] == doctest::Approx(2 * std::log(alpha) * 64 / 65.0).epsilon(1e-9));
      } else {
        CHECK(std::abs(r.r[i] - base.r[i]) <= 1e-9);
      }
    }
  }
}

TEST_CASE("heartbeat profiles are separable") {
  // Five harmonics of 1.1 Hz need fs >= 110 Hz.
  const SubjectProfile a = heartbeat_subject("a", {2.0e-4, 1.0e-4, 5e-5, 3e-5, 2e-5});
  const SubjectProfile b = heartbeat_subject("b", {1.0e-4, 2.0e-4, 3e-5, 6e-5, 1e-5});
  const double T0 = 60.0;
  std::vector<std::vector<double>> fa, fb;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    fa.push_back(hb_feature(synth_segment(a, T0, 120.0, 20.0, 100 + seed).series, {}).r);
    fb.push_back(hb_feature(synth_segment(b, T0, 120.0, 20.0, 200 + seed).series, {}).r);
  }
  double intra = 0.0, inter = 0.0;
  int n_intra = 0, n_inter = 0;
  for (std::size_t i = 0; i < 20; ++i)
    for (std::size_t j = 0; j < 20; ++j) {
      if (i < j) {
        intra += euclidean(fa[i], fa[j]) + euclidean(fb[i], fb[j]);
        n_intra += 2;
      }
      inter += euclidean(fa[i], fb[j]);
      ++n_inter;
    }
  CHECK(inter / n_inter > intra / n_intra);

  int wins = 0;
  for (std::size_t t = 0; t < 100; ++t) {
    const std::size_t i = t % 20, j = (t * 7 + 3) % 20, k = (t * 11 + 5) % 20;
    if (i == j) {
      ++wins;
      continue;
    }
    wins += cosine_distance(fa[i], fa[j]) < cosine_distance(fa[i], fb[k]);
  }
  CHECK(wins >= 95);
}
