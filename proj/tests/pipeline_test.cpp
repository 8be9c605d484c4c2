#include <doctest.h>

#include <cmath>
#include <fstream>
#include <limits>

#include "support/test_support.hpp"
#include "vitalid/pipeline.hpp"
#include "vitalid/radar_io.hpp"

using namespace vitalid;

namespace {

SubjectProfile profile(double freq, double beta1) {
  SubjectProfile p;
  p.id = "p" + std::to_string(static_cast<int>(freq * 100));
  p.resp = {2e-3, freq, beta1, 0.7, 0.45, 0.0};
  p.hb_freq = 1.1;
  p.hb_amplitudes = {0.2e-3, 0.08e-3, 0.04e-3, 0.02e-3};
  p.hb_phases = {0.3, 1.2, 2.0, 4.0};
  return p;
}

// Four subjects x two segments of 20 s; segment 5 is a flat record.
std::pair<ComplexSeries, SegmentMeta> toy_source(std::size_t i) {
  const SubjectProfile p = profile(0.2 + 0.05 * static_cast<double>(i / 2), 0.3 + 0.1 * static_cast<double>(i % 2));
  SegmentMeta m;
  m.subject_id = p.id;
  m.session_id = i % 2 ? "d0pm" : "d0am";
  m.segment_index = static_cast<int>(i % 2);
  m.duration = 20.0;
  if (i == 5) return {ComplexSeries(std::vector<cdouble>(2000, cdouble(1.0, 0.0)), 100.0), m};
  return {synth_segment(p, 20.0, 100.0, 20.0, 100 + i).series, m};
}

}  // namespace

TEST_CASE("feature layout per kind") {
  CHECK(feature_dimension(FeatureKind::resp) == 24);
  CHECK(feature_dimension(FeatureKind::hb) == 48);
  CHECK(feature_dimension(FeatureKind::prop) == 72);
  const auto prop = feature_names(FeatureKind::prop);
  const auto resp = feature_names(FeatureKind::resp);
  const auto hb = feature_names(FeatureKind::hb);
  REQUIRE(prop.size() == 72);
  for (std::size_t i = 0; i < 24; ++i) CHECK(prop[i] == resp[i]);
  for (std::size_t i = 0; i < 48; ++i) CHECK(prop[24 + i] == hb[i]);
  CHECK(parse_feature_kind(to_string(FeatureKind::hb)) == FeatureKind::hb);
  CHECK_THROWS_AS(parse_feature_kind("both"), InputError);
}

TEST_CASE("method ids") {
  for (const char* s : {"A1", "A2", "A3", "B1", "B2", "B3", "C1", "C2", "C3"}) CHECK(MethodId::parse(s).str() == s);
  CHECK(MethodId::parse("b2").feature == FeatureKind::hb);
  CHECK_THROWS_AS(MethodId::parse("D1"), InputError);
  CHECK_THROWS_AS(MethodId::parse("C4"), InputError);
  CHECK_THROWS_AS(MethodId::parse("C"), InputError);

  const ClassifierSpec a2 = reference_spec(MethodId::parse("A2"));
  CHECK(a2.knn.k == 9);
  CHECK(a2.knn.distance == Distance::cityblock);
  const ClassifierSpec c2 = reference_spec(MethodId::parse("C2"));
  CHECK(c2.knn.k == 28);
  CHECK(c2.knn.distance == Distance::cosine);
  CHECK(reference_spec(MethodId::parse("B3")).mlp.sizes == std::vector<int>{47, 49});
  CHECK(reference_spec(MethodId::parse("A3")).mlp.sizes == std::vector<int>{39, 19});
  for (const char* s : {"A1", "B1", "C1"}) CHECK(reference_spec(MethodId::parse(s)).svm.kernel == SvmKernel::gaussian);
  for (const char* s : {"A1", "A2", "A3", "B1", "B2", "B3", "C1", "C2", "C3"})
    CHECK_NOTHROW(reference_spec(MethodId::parse(s)).validate());
}

TEST_CASE("r_prop concatenates r_resp and r_hb") {
  const auto [s, meta] = toy_source(0);
  const auto prop = extract_feature(s, meta, FeatureKind::prop);
  const auto resp = extract_feature(s, meta, FeatureKind::resp);
  const auto hb = extract_feature(s, meta, FeatureKind::hb);
  REQUIRE(prop.size() == 72);
  for (std::size_t i = 0; i < 24; ++i) CHECK(prop[i] == resp[i]);
  for (std::size_t i = 0; i < 48; ++i) CHECK(prop[24 + i] == hb[i]);
  for (double v : prop) CHECK(std::isfinite(v));
}

TEST_CASE("batch extraction records failures and is order-stable") {
  const FeatureTable one = extract_features(8, toy_source, FeatureKind::prop, {}, 1);
  CHECK(one.attempted == 8);
  REQUIRE(one.failures.size() == 1);
  CHECK(one.failures[0].index == 5);
  CHECK(one.failures[0].kind == ErrorKind::extraction);
  CHECK(one.failures[0].meta.subject_id == toy_source(5).second.subject_id);
  CHECK(one.failure_fraction() == doctest::Approx(1.0 / 8.0));
  CHECK(one.X.rows() == 7);
  CHECK(one.meta.size() == 7);
  CHECK(one.meta[5].subject_id == toy_source(6).second.subject_id);

  const FeatureTable three = extract_features(8, toy_source, FeatureKind::prop, {}, 3);
  CHECK(three.X.data() == one.X.data());
  CHECK(three.failures.size() == 1);

  const FeatureTable resp = select_kind(one, FeatureKind::resp);
  const FeatureTable hb = select_kind(one, FeatureKind::hb);
  CHECK(resp.X.cols() == 24);
  CHECK(hb.X.cols() == 48);
  CHECK(hb.names.front().rfind("hb_", 0) == 0);
  const auto [s, meta] = toy_source(2);
  const auto direct = extract_feature(s, meta, FeatureKind::hb);
  for (std::size_t c = 0; c < 48; ++c) CHECK(hb.X(2, c) == direct[c]);
  CHECK_THROWS_AS(select_kind(resp, FeatureKind::hb), InputError);

  const Dataset d = to_dataset(one);
  CHECK(d.n_classes() == 4);
  CHECK(d.class_names[0] == "p20");
  CHECK(d.meta.size() == 7);
}

TEST_CASE("source errors outside the library are not swallowed") {
  const SegmentSource bad = [](std::size_t i) -> std::pair<ComplexSeries, SegmentMeta> {
    if (i == 1) throw std::runtime_error("disk on fire");
    return toy_source(i);
  };
  CHECK_THROWS_AS(extract_features(3, bad, FeatureKind::resp, {}, 2), std::runtime_error);
}

TEST_CASE("parallel_for covers every index once") {
  std::vector<int> hits(1000, 0);
  parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i] += 1; });
  for (int h : hits) CHECK(h == 1);
  CHECK_THROWS_AS(parallel_for(10, 3, [](std::size_t i) {
                    if (i == 7) throw InputError("seven");
                  }),
                  InputError);
  parallel_for(0, 4, [](std::size_t) { FAIL("no work expected"); });
}

TEST_CASE("feature csv round trip") {
  FeatureTable t;
  t.kind = FeatureKind::resp;
  t.names = feature_names(FeatureKind::resp);
  t.X = FeatureMatrix(0, 24);
  Rng rng(3);
  for (int r = 0; r < 5; ++r) {
    std::vector<double> row(24);
    for (double& v : row) v = rng.normal() * std::pow(10.0, rng.uniform(-8, 8));
    t.X.append_row(row);
    SegmentMeta m;
    m.subject_id = "subj" + std::to_string(r % 2);
    m.session_id = "d1pm";
    m.day_index = 1;
    m.segment_index = r;
    m.duration = 60.0;
    t.meta.push_back(m);
  }
  testing::TempDir dir("pipeline");
  const std::vector<std::string> prov{"config_hash 0123", "seed 7"};
  write_feature_csv(dir / "f.csv", t, prov);
  const std::string text = testing::read_text(dir / "f.csv");
  CHECK(text.rfind("# vitalid-features v1\n# config_hash 0123\n# seed 7\nsubject_id,session_id,day_index,segment_index,"
                   "duration_s,",
                   0) == 0);
  const FeatureTable back = read_feature_csv(dir / "f.csv");
  CHECK(back.kind == FeatureKind::resp);
  CHECK(back.names == t.names);
  CHECK(back.X.data() == t.X.data());
  REQUIRE(back.meta.size() == 5);
  CHECK(back.meta[3].subject_id == "subj1");
  CHECK(back.meta[3].session_id == "d1pm");
  CHECK(back.meta[3].day_index == 1);
  CHECK(back.meta[3].segment_index == 3);
  CHECK(back.meta[3].duration == 60.0);

  {
    std::ofstream os(dir / "bad.csv");
    os << "subject_id,session_id\n";
  }
  CHECK_THROWS_AS(read_feature_csv(dir / "bad.csv"), InputError);
  {
    std::ofstream os(dir / "short.csv");
    os << "# vitalid-features v1\nsubject_id,session_id,day_index,segment_index,duration_s,resp_x\na,b,0,0,60\n";
  }
  CHECK_THROWS_AS(read_feature_csv(dir / "short.csv"), InputError);
  CHECK_THROWS_AS(read_feature_csv(dir / "missing.csv"), InputError);
}

TEST_CASE("manifest round trip") {
  std::vector<ManifestRow> rows(3);
  for (int i = 0; i < 3; ++i) {
    rows[i].meta.subject_id = "s" + std::to_string(i);
    rows[i].meta.session_id = "d0am";
    rows[i].meta.segment_index = i;
    rows[i].meta.duration = 650.0;
    rows[i].file = "records/s" + std::to_string(i) + ".f32";
    rows[i].seed = 0xffffffffffffff00ULL + static_cast<unsigned>(i);
    rows[i].rate = 100.0;
  }
  testing::TempDir dir("manifest");
  write_manifest(dir / "manifest.csv", rows, std::vector<std::string>{"format f32"});
  const auto back = read_manifest(dir / "manifest.csv");
  REQUIRE(back.size() == 3);
  for (int i = 0; i < 3; ++i) {
    CHECK(back[i].file == rows[i].file);
    CHECK(back[i].seed == rows[i].seed);
    CHECK(back[i].rate == 100.0);
    CHECK(back[i].meta.subject_id == rows[i].meta.subject_id);
    CHECK(back[i].meta.duration == 650.0);
  }
  {
    std::ofstream os(dir / "nofile.csv");
    os << "subject_id,session_id,day_index,segment_index,duration_s,seed,rate_hz\n";
  }
  CHECK_THROWS_AS(read_manifest(dir / "nofile.csv"), InputError);
  rows[0].file = "a,b.csv";
  CHECK_THROWS_AS(write_manifest(dir / "comma.csv", rows), InputError);
}

TEST_CASE("config hash") {
  // FNV-1a 64 reference values.
  CHECK(config_hash("") == "cbf29ce484222325");
  CHECK(config_hash("a") == "af63dc4c8601ec8c");
  CHECK(config_hash("foobar") == "85944171f73967e8");
  FeatureConfig c;
  const std::string h0 = config_hash(canonical_config(c));
  CHECK(h0 == config_hash(canonical_config(FeatureConfig{})));
  c.resp.eps = 0.5;
  CHECK(config_hash(canonical_config(c)) != h0);
  c = {};
  c.resp.fit.boundary = MrcwBoundary::printed;
  CHECK(config_hash(canonical_config(c)) != h0);
}

TEST_CASE("target series carries the chest motion") {
  const RadarParams params = table2_radar_params();
  const auto motion = testing::breathing(2e-3, 0.25);
  const DataCube cube = testing::simulate_scene(params, 1200, 64, {{1.5, 5.0, 1.0, motion}}, 0.0, 9);
  TargetBin bin;
  const ComplexSeries s = target_series(cube, TargetSearch{}, &bin);
  CHECK(s.size() == 1200);
  CHECK(s.rate == params.slow_time_rate);
  CHECK(std::abs(bin.angle_deg - 5.0) <= 1.0);
  const DisplacementSeries d = phase_demodulate(s, params.wavelength);
  std::vector<double> truth(s.size());
  for (std::size_t i = 0; i < truth.size(); ++i) truth[i] = motion(static_cast<double>(i) / s.rate);
  CHECK(testing::max_abs_diff_mean_aligned(d.values, truth) <= 1e-6);
}
