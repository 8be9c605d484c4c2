#include <benchmark/benchmark.h>

#include <cmath>
#include <limits>

#include "vitalid/classify.hpp"
#include "vitalid/hb_features.hpp"
#include "vitalid/mrcw.hpp"
#include "vitalid/pipeline.hpp"
#include "vitalid/rng.hpp"
#include "vitalid/synth.hpp"

using namespace vitalid;

namespace {

SubjectProfile bench_profile() {
  SubjectProfile p;
  p.id = "bench";
  p.resp = {2e-3, 0.3, 0.5, 0.6, 0.45, 0.0};
  p.hb_amplitudes = {0.2e-3, 0.1e-3, 0.05e-3, 0.02e-3};
  p.hb_phases = {0.1, 0.9, 2.2, 3.1};
  return p;
}

void BM_MrcwFit(benchmark::State& state) {
  const MrcwParams truth{2e-3, 0.27, 0.45, 0.7, 0.4, 1.3};
  Rng rng(1);
  std::vector<double> d(800);
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = mrcw_eval(static_cast<double>(i) / 100.0, truth) + 1e-4 * rng.normal();
  for (auto _ : state) benchmark::DoNotOptimize(mrcw_fit(d, 100.0));
}
BENCHMARK(BM_MrcwFit)->Unit(benchmark::kMillisecond);

void BM_HbFeature(benchmark::State& state) {
  const SynthSegment seg = synth_segment(bench_profile(), static_cast<double>(state.range(0)), 100.0, 20.0, 3);
  for (auto _ : state) benchmark::DoNotOptimize(hb_feature(seg.series, {}));
}
BENCHMARK(BM_HbFeature)->Arg(10)->Arg(60)->Unit(benchmark::kMillisecond);

void BM_RespFeature(benchmark::State& state) {
  const SynthSegment seg = synth_segment(bench_profile(), 60.0, 100.0, 20.0, 4);
  for (auto _ : state) benchmark::DoNotOptimize(resp_feature(seg.series, {}));
}
BENCHMARK(BM_RespFeature)->Unit(benchmark::kMillisecond);

void BM_SvmTrain(benchmark::State& state) {
  const auto n_per_class = static_cast<int>(state.range(0));
  Rng rng(5);
  FeatureMatrix X(0, 72);
  std::vector<int> y;
  for (int c = 0; c < 6; ++c)
    for (int i = 0; i < n_per_class; ++i) {
      std::vector<double> row(72);
      for (std::size_t k = 0; k < row.size(); ++k) row[k] = rng.normal() + (k % 6 == static_cast<std::size_t>(c) ? 1.5 : 0.0);
      X.append_row(row);
      y.push_back(c);
    }
  ClassifierSpec spec;
  spec.kind = ClassifierKind::svm;
  for (auto _ : state) benchmark::DoNotOptimize(train(X, y, 6, spec));
}
BENCHMARK(BM_SvmTrain)->Arg(45)->Arg(200)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
