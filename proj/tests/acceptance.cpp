// Property-based acceptance suite. Prints one PASS / FAIL / SKIP line per
// criterion and exits non-zero when a required criterion fails.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <limits>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "vitalid/classify.hpp"
#include "vitalid/eval.hpp"
#include "vitalid/hb_features.hpp"
#include "vitalid/mrcw.hpp"
#include "vitalid/pipeline.hpp"
#include "vitalid/rng.hpp"
#include "vitalid/signal.hpp"
#include "vitalid/synth.hpp"

using namespace vitalid;

namespace {

enum class Status { pass, fail, skip };

struct Outcome {
  Status status = Status::fail;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

Outcome verdict(bool ok, std::string detail) { return {ok ? Status::pass : Status::fail, std::move(detail)}; }

// ---- 1: MRCW recovery -----------------------------------------------------

Outcome mrcw_recovery() {
  constexpr int kWindows = 100;
  constexpr double kRate = 100.0, kWindow = 8.0;
  const auto n = static_cast<std::size_t>(kRate * kWindow);
  Rng rng(2024);
  Stopwatch clock;
  int ok = 0;
  for (int w = 0; w < kWindows; ++w) {
    MrcwParams truth;
    truth.amplitude = rng.uniform(1.5e-3, 3.0e-3);
    truth.freq = rng.uniform(0.2, 0.4);
    truth.beta1 = rng.uniform(0.3, 0.8);
    truth.beta2 = rng.uniform(0.3, 0.8);
    truth.duty = rng.uniform(0.3, 0.7);
    truth.shift = rng.uniform(0.0, truth.period());
    std::vector<double> d(n);
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += d[i] = mrcw_eval(static_cast<double>(i) / kRate, truth);
    mean /= static_cast<double>(n);
    double power = 0.0;
    for (double& v : d) {
      v -= mean;
      power += v * v;
    }
    const double sigma = std::sqrt(power / static_cast<double>(n) / 100.0);  // 20 dB
    for (double& v : d) v += sigma * rng.normal();
    const MrcwParams f = mrcw_fit(d, kRate).params;
    ok += std::abs(f.freq - truth.freq) <= 0.02 && std::abs(f.beta1 - truth.beta1) <= 0.1 &&
          std::abs(f.beta2 - truth.beta2) <= 0.1 && std::abs(f.duty - truth.duty) <= 0.05;
  }
  const double t = clock.seconds();
  return verdict(ok >= 90 && t <= 60.0,
                 fmt("MRCW recovery: %d/%d windows within f 0.02 Hz, beta 0.1, D 0.05 (need 90); %.1f s (limit 60 s)", ok,
                     kWindows, t));
}

// ---- 2: demodulation round trip ------------------------------------------

Outcome demodulation_round_trip() {
  constexpr double kRate = 100.0;
  constexpr std::size_t kN = 3000;
  Rng rng(77);
  Stopwatch clock;
  double worst = 0.0, min_peak = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 20; ++k) {
    // A few smooth sinusoids plus a slow drift, peak-to-peak well above one wavelength.
    std::vector<double> d(kN, 0.0);
    const int parts = 1 + static_cast<int>(rng.below(4));
    for (int p = 0; p < parts; ++p) {
      const double a = rng.uniform(1e-3, 4e-3), f = rng.uniform(0.1, 1.5), ph = rng.uniform(0.0, 6.3);
      for (std::size_t i = 0; i < kN; ++i) d[i] += a * std::sin(2 * std::numbers::pi * f * i / kRate + ph);
    }
    const double drift = rng.uniform(-2e-4, 2e-4);
    for (std::size_t i = 0; i < kN; ++i) d[i] += drift * static_cast<double>(i) / kRate;
    const auto [lo, hi] = std::minmax_element(d.begin(), d.end());
    min_peak = std::min(min_peak, 4 * std::numbers::pi * (*hi - *lo) / kDefaultWavelength);

    std::vector<cdouble> s(kN);
    const double gain = rng.uniform(0.1, 10.0);
    for (std::size_t i = 0; i < kN; ++i) s[i] = std::polar(gain, 4 * std::numbers::pi * d[i] / kDefaultWavelength);
    const DisplacementSeries out = phase_demodulate(ComplexSeries(std::move(s), kRate), kDefaultWavelength);
    double mean_diff = 0.0;
    for (std::size_t i = 0; i < kN; ++i) mean_diff += out.values[i] - d[i];
    mean_diff /= static_cast<double>(kN);
    for (std::size_t i = 0; i < kN; ++i) worst = std::max(worst, std::abs(out.values[i] - d[i] - mean_diff));
  }
  const double t = clock.seconds();
  return verdict(worst <= 1e-9 && min_peak > 4 * std::numbers::pi && t <= 5.0,
                 fmt("demodulation round trip: max error %.2e m (limit 1e-9) over 20 records, smallest peak phase %.1f "
                     "rad (need > 4 pi); %.2f s (limit 5 s)",
                     worst, min_peak, t));
}

// ---- 3: mel bank ----------------------------------------------------------

Outcome mel_bank_exactness() {
  const MelFilterBank bank = build_mel_bank(100.0, 5.0, 1000.0, 64);
  const double f0 = bank.centers.front();
  const double rel_top = std::abs(bank.centers.back() - 50.0) / 50.0;
  int exact = 0;
  for (int l = 0; l < bank.n_filters; ++l)
    exact += bank.weight(l, bank.centers[l + 1]) == 2.0 / (bank.centers[l + 2] - bank.centers[l]);
  return verdict(std::abs(f0) <= 1e-9 && rel_top <= 1e-9 && exact == bank.n_filters,
                 fmt("mel bank: f_0 = %.1e Hz, f_65 relative error %.1e (limit 1e-9), %d/%d peaks equal 2/(f_l+2 - f_l)",
                     f0, rel_top, exact, bank.n_filters));
}

// ---- 4: DCT ---------------------------------------------------------------

Outcome dct_orthogonality() {
  constexpr int L = 64, K = 64;
  const std::vector<double> flat(L, -3.7);
  const auto c = cepstrum(flat, K);
  double worst_const = 0.0;
  for (int k = 1; k < K; ++k) worst_const = std::max(worst_const, std::abs(c[k]));

  // x_l = a cos((2l+1) k0 pi / K) puts a on C_k0 (and -a on its alias C_(K-k0)).
  double worst_cos = 0.0;
  for (int k0 : {1, 5, 17, 31}) {
    const double a = 0.25 * k0;
    std::vector<double> x(L);
    for (int l = 0; l < L; ++l) x[l] = a * std::cos((2 * l + 1) * k0 * std::numbers::pi / K);
    const auto ck = cepstrum(x, K);
    for (int k = 0; k < K; ++k) {
      const double want = k == k0 ? a : (k == K - k0 ? -a : 0.0);
      worst_cos = std::max(worst_cos, std::abs(ck[k] - want));
    }
  }
  return verdict(worst_const <= 1e-9 && worst_cos <= 1e-9,
                 fmt("DCT: constant input max |C_k>=1| %.1e, single cosine max error %.1e (limit 1e-9)", worst_const,
                     worst_cos));
}

// ---- 5: scale invariance of r_hb -----------------------------------------

Outcome hb_scale_robustness() {
  SubjectProfile p;
  p.id = "scale";
  p.resp = {2e-3, 0.3, 0.5, 0.6, 0.45, 0.0};
  p.hb_amplitudes = {0.2e-3, 0.1e-3, 0.05e-3, 0.02e-3};
  p.hb_phases = {0.1, 0.9, 2.2, 3.1};
  const SynthSegment seg = synth_segment(p, 60.0, 100.0, 20.0, 5);
  const HbFeature base = hb_feature(seg.series, {});
  const std::size_t n = base.r.size();
  const std::size_t cm0 = n / 2 - 1, cp0 = n / 2;
  double worst_other = 0.0, min_c0_shift = std::numeric_limits<double>::infinity();
  for (double alpha : {0.1, 10.0}) {
    ComplexSeries scaled = seg.series;
    for (auto& v : scaled.samples) v *= alpha;
    const HbFeature r = hb_feature(scaled, {});
    for (std::size_t i = 0; i < n; ++i) {
      const double diff = std::abs(r.r[i] - base.r[i]);
      if (i == cm0 || i == cp0) min_c0_shift = std::min(min_c0_shift, diff);
      else worst_other = std::max(worst_other, diff);
    }
  }
  return verdict(worst_other <= 1e-9 && min_c0_shift > 1e-3,
                 fmt("r_hb scale: alpha in {0.1, 10}, max change of the %zu non-C0 entries %.1e (limit 1e-9), C_+-0 "
                     "move by >= %.3f",
                     n - 2, worst_other, min_c0_shift));
}

// ---- 6: gradient check ----------------------------------------------------

Outcome mlp_gradient_check() {
  Rng rng(606);
  double worst = 0.0;
  std::size_t checked = 0;
  for (Activation act : {Activation::relu, Activation::sigmoid}) {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      const int in = 4 + static_cast<int>(rng.below(5)), h1 = 3 + static_cast<int>(rng.below(8)),
                h2 = 3 + static_cast<int>(rng.below(8)), out = 2 + static_cast<int>(rng.below(5));
      Mlp net = Mlp::init({in, h1, h2, out}, act, seed);
      std::vector<double> theta = net.flatten();
      for (double& v : theta) v += 0.1 * rng.normal();  // moves zero biases off the relu kink
      net.unflatten(theta);
      FeatureMatrix X(0, static_cast<std::size_t>(in));
      std::vector<int> y;
      for (int i = 0; i < 10; ++i) {
        std::vector<double> row(static_cast<std::size_t>(in));
        for (double& v : row) v = rng.normal();
        X.append_row(row);
        y.push_back(static_cast<int>(rng.below(static_cast<std::uint64_t>(out))));
      }
      std::vector<double> grad;
      net.loss_and_gradient(X, y, &grad);
      constexpr double h = 1e-5;
      for (std::size_t p = 0; p < theta.size(); ++p) {
        const double keep = theta[p];
        theta[p] = keep + h;
        net.unflatten(theta);
        const double up = net.loss_and_gradient(X, y, nullptr);
        theta[p] = keep - h;
        net.unflatten(theta);
        const double down = net.loss_and_gradient(X, y, nullptr);
        theta[p] = keep;
        net.unflatten(theta);
        const double numeric = (up - down) / (2 * h);
        worst = std::max(worst, std::abs(numeric - grad[p]) / std::max({std::abs(numeric), std::abs(grad[p]), 1e-6}));
        ++checked;
      }
    }
  }
  return verdict(worst < 1e-5, fmt("MLP gradient: worst relative error %.2e over %zu parameters of 6 nets (limit 1e-5)",
                                   worst, checked));
}

// ---- 7-9: experiment-1 mirror ---------------------------------------------

struct Mirror {
  FeatureTable prop;
  Dataset data;
  double extract_seconds = 0.0;
};

Mirror build_mirror() {
  Stopwatch clock;
  PopulationSpec spec;  // 6 subjects x 50 segments x 60 s at 100 Hz, 20 dB
  const auto profiles = synth_profiles(spec);
  const SegmentSource source = [&](std::size_t k) -> std::pair<ComplexSeries, SegmentMeta> {
    const int s = static_cast<int>(k) / spec.n_segments, j = static_cast<int>(k) % spec.n_segments;
    SynthSegment seg =
        synth_segment(profiles[s], spec.T0, spec.fs, spec.snr_db, population_segment_seed(spec, s, j), spec.wavelength);
    return {std::move(seg.series), population_meta(spec, profiles[s], j)};
  };
  Mirror m;
  const auto n = static_cast<std::size_t>(spec.n_subjects * spec.n_segments);
  m.prop = extract_features(n, source, FeatureKind::prop, {}, 0);
  m.data = to_dataset(m.prop);
  m.extract_seconds = clock.seconds();
  return m;
}

EvalReport evaluate_method(const Mirror& m, const std::string& id, const FoldAssignment& folds) {
  const MethodId method = MethodId::parse(id);
  const Dataset d = method.feature == FeatureKind::prop ? m.data : to_dataset(select_kind(m.prop, method.feature));
  return cross_validate(d, reference_spec(method), folds);
}

Outcome experiment1_mirror(const Mirror& m) {
  Stopwatch clock;
  if (m.prop.failures.size() > 0 && m.data.n_classes() < 6)
    return {Status::fail, fmt("experiment-1 mirror: only %zu classes survived extraction", m.data.n_classes())};
  const FoldAssignment folds = stratified_folds(m.data.y, 10, 1, m.data.class_names);
  const EvalReport c1 = evaluate_method(m, "C1", folds);
  const EvalReport a1 = evaluate_method(m, "A1", folds);
  const EvalReport b1 = evaluate_method(m, "B1", folds);
  const double t = m.extract_seconds + clock.seconds();
  const bool ok = c1.accuracy() >= 0.95 && c1.macro_auc() >= 0.99 && c1.accuracy() >= a1.accuracy() &&
                  c1.accuracy() >= b1.accuracy() && t <= 600.0;
  return verdict(ok, fmt("experiment-1 mirror (%zu segments, %zu failed): C1 accuracy %.4f (need 0.95), macro AUC "
                         "%.4f (need 0.99); A1 %.4f, B1 %.4f (C1 must lead); %.0f s (limit 600 s)",
                         m.data.X.rows(), m.prop.failures.size(), c1.accuracy(), c1.macro_auc(), a1.accuracy(),
                         b1.accuracy(), t));
}

Outcome null_model(const Mirror& m) {
  Dataset permuted = m.data;
  Rng rng(888);
  rng.shuffle(permuted.y);
  const EvalReport r =
      cross_validate(permuted, reference_spec(MethodId::parse("C1")), stratified_folds(permuted.y, 10, 1));
  const double chance = 1.0 / static_cast<double>(permuted.n_classes());
  return verdict(std::abs(r.accuracy() - chance) <= 0.08 && std::abs(r.macro_auc() - 0.5) <= 0.05,
                 fmt("null model: permuted-label C1 accuracy %.4f (need %.3f +- 0.08), macro AUC %.4f (need 0.5 +- 0.05)",
                     r.accuracy(), chance, r.macro_auc()));
}

Outcome stratification(const Mirror& m) {
  const FoldAssignment fa = stratified_folds(m.data.y, 10, 1, m.data.class_names);
  int good = 0;
  std::size_t min_train = std::numeric_limits<std::size_t>::max(), max_train = 0;
  for (int f = 0; f < fa.k; ++f) {
    std::vector<int> per(m.data.n_classes(), 0);
    for (std::size_t i : fa.test_indices(f)) ++per[static_cast<std::size_t>(m.data.y[i])];
    good += std::all_of(per.begin(), per.end(), [](int c) { return c == 5; });
    min_train = std::min(min_train, fa.train_indices(f).size());
    max_train = std::max(max_train, fa.train_indices(f).size());
  }
  return verdict(good == 10 && m.data.X.rows() == 300,
                 fmt("stratification: %d/10 folds hold exactly 5 segments of each of %zu classes; training sets %zu-%zu",
                     good, m.data.n_classes(), min_train, max_train));
}

// ---- 10: public dataset ---------------------------------------------------

Outcome public_dataset() {
  const char* manifest = std::getenv("VITALID_PUBLIC_MANIFEST");
  if (!manifest || !*manifest)
    return {Status::skip, "public dataset: set VITALID_PUBLIC_MANIFEST to a manifest of the 30-subject CW records"};
  const std::filesystem::path tmp = std::filesystem::temp_directory_path() / "vitalid_acceptance_public";
  std::filesystem::create_directories(tmp);
  std::string detail = "public dataset:";
  bool ok = true;
  for (const auto& [t0, need] : {std::pair{5.0, 0.97}, std::pair{60.0, 0.96}}) {
    const std::string out = (tmp / fmt("hb_%g.csv", t0)).string();
    const std::string t0s = fmt("%g", t0);
    const char* argv[] = {"vitalid", "extract", "--manifest", manifest, "--feature", "hb",
                          "--t0",    t0s.c_str(), "--workers", "0",    "--out",     out.c_str()};
    std::ostringstream o, e;
    if (const int code = cli::run(12, argv, o, e); code != cli::kOk)
      return {Status::fail, fmt("public dataset: extract at T0 = %g s exited %d: %s", t0, code, e.str().c_str())};
    const Dataset d = to_dataset(read_feature_csv(out));
    const EvalReport r = cross_validate(d, reference_spec(MethodId::parse("B1")), stratified_folds(d.y, 5, 1));
    ok = ok && r.accuracy() >= need;
    detail += fmt(" T0 %g s: B1 accuracy %.4f over %zu segments of %zu classes (need %.2f);", t0, r.accuracy(),
                  d.X.rows(), d.n_classes(), need);
  }
  return verdict(ok, detail);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vitalid acceptance suite"};
  std::vector<int> only;
  app.add_option("--only", only, "Run just these criteria (1-10)");
  CLI11_PARSE(app, argc, argv);
  const std::set<int> selected(only.begin(), only.end());
  auto wanted = [&](int c) { return selected.empty() || selected.count(c); };

  int required_failures = 0;
  auto report = [&](int criterion, const Outcome& o, bool optional = false) {
    const char* tag = o.status == Status::pass ? "PASS" : (o.status == Status::fail ? "FAIL" : "SKIP");
    std::cout << "criterion " << criterion << ": " << tag << "  " << o.detail << std::endl;
    if (o.status == Status::fail && !optional) ++required_failures;
  };
  auto guarded = [](const std::function<Outcome()>& fn) -> Outcome {
    try {
      return fn();
    } catch (const std::exception& e) {
      return {Status::fail, std::string("threw: ") + e.what()};
    }
  };

  if (wanted(1)) report(1, guarded(mrcw_recovery));
  if (wanted(2)) report(2, guarded(demodulation_round_trip));
  if (wanted(3)) report(3, guarded(mel_bank_exactness));
  if (wanted(4)) report(4, guarded(dct_orthogonality));
  if (wanted(5)) report(5, guarded(hb_scale_robustness));
  if (wanted(6)) report(6, guarded(mlp_gradient_check));
  if (wanted(7) || wanted(8) || wanted(9)) {
    std::optional<Mirror> mirror;
    std::string why;
    try {
      mirror = build_mirror();
    } catch (const std::exception& e) {
      why = std::string("mirror extraction threw: ") + e.what();
    }
    for (int c : {7, 8, 9}) {
      if (!wanted(c)) continue;
      if (!mirror) {
        report(c, {Status::fail, why});
        continue;
      }
      const Mirror& m = *mirror;
      if (c == 7) report(7, guarded([&] { return experiment1_mirror(m); }));
      if (c == 8) report(8, guarded([&] { return null_model(m); }));
      if (c == 9) report(9, guarded([&] { return stratification(m); }));
    }
  }
  if (wanted(10)) report(10, guarded(public_dataset), true);
  std::cout << (required_failures == 0 ? "acceptance: all required criteria passed"
                                       : fmt("acceptance: %d required criteria failed", required_failures))
            << std::endl;
  return required_failures == 0 ? 0 : 1;
}
