#include "cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include "vitalid/eval.hpp"
#include "vitalid/pipeline.hpp"
#include "vitalid/radar_io.hpp"
#include "vitalid/synth.hpp"

#ifndef VITALID_VERSION
#define VITALID_VERSION "unknown"
#endif

namespace vitalid::cli {

namespace fs = std::filesystem;

namespace {

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::input: return kInputFailure;
    case ErrorKind::extraction: return kExtractionFailure;
    case ErrorKind::training: return kTrainingFailure;
  }
  return kUnexpected;
}

std::string version_line(const std::string& command) {
  return std::string("vitalid ") + VITALID_VERSION + " " + command;
}

struct FeatureOptions {
  FeatureConfig config;
  std::string boundary = "continuous";

  void add(CLI::App* sub) {
    sub->add_option("--wavelength", config.wavelength, "Carrier wavelength, m")->capture_default_str();
    sub->add_option("--fit-window", config.resp.window, "MRCW fitting window w, s")->capture_default_str();
    sub->add_option("--fit-hop", config.resp.hop, "MRCW window hop, s")->capture_default_str();
    sub->add_option("--eps", config.resp.eps, "Plateau threshold relative to A")->capture_default_str();
    sub->add_option("--boundary", boundary, "MRCW inspiratory boundary")
        ->check(CLI::IsMember({"continuous", "printed"}))
        ->capture_default_str();
    sub->add_option("--stft-window", config.hb.stft_window, "STFT window, s")->capture_default_str();
    sub->add_option("--stft-hop", config.hb.stft_hop, "STFT hop, s")->capture_default_str();
    sub->add_option("--f-tilde", config.hb.f_tilde, "Mel warping corner, Hz")->capture_default_str();
    sub->add_option("--f-prime", config.hb.f_prime, "Mel reference frequency, Hz")->capture_default_str();
    sub->add_option("--filters", config.hb.n_filters, "Number of mel filters L")->capture_default_str();
    sub->add_option("--coeffs", config.hb.n_coeffs, "Cepstral coefficients K")->capture_default_str();
    sub->add_option("--keep", config.hb.n_keep, "Coefficients kept per side K'")->capture_default_str();
  }

  const FeatureConfig& resolved() {
    config.resp.fit.boundary = boundary == "printed" ? MrcwBoundary::printed : MrcwBoundary::continuous;
    return config;
  }
};

// Manifest rows, optionally re-cut into T0-second pieces.
std::vector<std::pair<fs::path, ManifestRow>> manifest_entries(const fs::path& manifest) {
  std::vector<std::pair<fs::path, ManifestRow>> out;
  const fs::path dir = manifest.parent_path();
  for (auto& row : read_manifest(manifest)) out.emplace_back(dir / row.file, row);
  return out;
}

// ---- synth ----------------------------------------------------------------

struct SynthArgs {
  std::string preset;
  PopulationSpec spec;
  std::string format = "csv";
  std::string out;
  int workers = 1;
};

int cmd_synth(SynthArgs& a, const CLI::App& sub, std::ostream& out) {
  PopulationSpec& p = a.spec;
  if (a.preset == "exp1" || a.preset == "exp2") {
    PopulationSpec preset;
    if (a.preset == "exp1") {
      preset.n_subjects = 6;
      preset.n_segments = 50;
      preset.T0 = 60.0;
    } else {
      // One continuous 650 s record per subject; `extract --t0 5` cuts 130 segments.
      preset.n_subjects = 30;
      preset.n_segments = 1;
      preset.T0 = 650.0;
    }
    if (!sub.count("--subjects")) p.n_subjects = preset.n_subjects;
    if (!sub.count("--segments")) p.n_segments = preset.n_segments;
    if (!sub.count("--t0")) p.T0 = preset.T0;
  }
  const CwFormat format = a.format == "f32" ? CwFormat::f32 : CwFormat::csv;
  const auto profiles = synth_profiles(p);

  std::ostringstream canon;
  canon.precision(17);
  canon << "subjects=" << p.n_subjects << ";segments=" << p.n_segments << ";T0=" << p.T0 << ";fs=" << p.fs
        << ";snr=" << p.snr_db << ";seed=" << p.seed << ";per_session=" << p.segments_per_session
        << ";identical=" << p.identical_profiles << ";separation=" << p.ranges.min_separation;
  const std::string hash = config_hash(canon.str());
  const std::vector<std::string> provenance{version_line("synth"), "config_hash " + hash,
                                            "population_seed " + std::to_string(p.seed), "config " + canon.str()};

  const fs::path root(a.out);
  fs::create_directories(root / "records");
  const std::string ext = format == CwFormat::csv ? ".csv" : ".f32";
  const std::size_t n = static_cast<std::size_t>(p.n_subjects) * static_cast<std::size_t>(p.n_segments);
  std::vector<ManifestRow> rows(n);
  parallel_for(n, a.workers, [&](std::size_t k) {
    const int s = static_cast<int>(k / static_cast<std::size_t>(p.n_segments));
    const int j = static_cast<int>(k % static_cast<std::size_t>(p.n_segments));
    const std::uint64_t seed = population_segment_seed(p, s, j);
    const SynthSegment seg = synth_segment(profiles[s], p.T0, p.fs, p.snr_db, seed, p.wavelength);
    std::ostringstream name;
    name << profiles[s].id << "_seg" << std::setw(3) << std::setfill('0') << j << ext;
    std::vector<std::string> header = provenance;
    header.push_back("segment_seed " + std::to_string(seed) + " subject " + profiles[s].id + " segment " +
                     std::to_string(j));
    header.push_back("rate_hz " + std::to_string(p.fs));
    write_cw_record(root / "records" / name.str(), seg.series, format, header);
    rows[k] = {population_meta(p, profiles[s], j), "records/" + name.str(), seed, p.fs};
  });
  write_manifest(root / "manifest.csv", rows, provenance);
  out << "wrote " << rows.size() << " records for " << p.n_subjects << " subjects to " << root.string() << '\n';
  return kOk;
}

// ---- ingest ---------------------------------------------------------------

struct IngestArgs {
  std::string input;
  std::string kind = "auto";
  double rate = 0.0;
  double target_rate = 100.0;
  SegmentMeta base;
  double t0 = 60.0;
  double hop = 0.0;
  std::string format = "csv";
  std::string out;
};

int cmd_ingest(IngestArgs& a, std::ostream& out, std::ostream& err) {
  const fs::path input(a.input);
  const bool fmcw = a.kind == "fmcw" || (a.kind == "auto" && fs::exists(sidecar_path(input)));
  ComplexSeries series;
  if (fmcw) {
    const DataCube cube = load_fmcw_cube(input);
    TargetBin bin;
    series = target_series(cube, TargetSearch{}, &bin);
    out << "target: range " << bin.range_m << " m (bin " << bin.range_index << "), angle " << bin.angle_deg
        << " deg\n";
  } else {
    if (!(a.rate > 0.0)) throw InputError("--rate is required for CW records");
    series = load_cw_record(input, a.rate);
  }
  if (!(a.target_rate > 0.0)) throw InputError("--target-rate must be positive");
  if (std::abs(series.rate - a.target_rate) > 1e-9 * a.target_rate) series = resample(series, a.target_rate);

  const double hop = a.hop > 0.0 ? a.hop : a.t0;
  const Segmentation cut = segment(series, a.t0, hop, a.base);
  if (cut.too_short) err << "warning: record is shorter than T0 = " << a.t0 << " s; no segments written\n";

  const fs::path root(a.out);
  fs::create_directories(root / "records");
  const fs::path manifest = root / "manifest.csv";
  std::vector<ManifestRow> rows;
  if (fs::exists(manifest)) rows = read_manifest(manifest);
  std::ostringstream canon;
  canon.precision(17);
  canon << "input=" << input.filename().string() << ";t0=" << a.t0 << ";hop=" << hop << ";rate=" << series.rate;
  const std::vector<std::string> provenance{version_line("ingest"), "config_hash " + config_hash(canon.str()),
                                            "source " + input.string()};
  const CwFormat format = a.format == "f32" ? CwFormat::f32 : CwFormat::csv;
  for (const auto& [seg, meta] : cut.segments) {
    std::ostringstream name;
    name << meta.subject_id << '_' << meta.session_id << '_' << std::setw(4) << std::setfill('0')
         << meta.segment_index << (format == CwFormat::csv ? ".csv" : ".f32");
    write_cw_record(root / "records" / name.str(), seg, format, provenance);
    rows.push_back({meta, "records/" + name.str(), 0, seg.rate});
  }
  write_manifest(manifest, rows, provenance);
  out << "wrote " << cut.segments.size() << " segments to " << root.string() << '\n';
  return kOk;
}

// ---- extract --------------------------------------------------------------

struct ExtractArgs {
  std::string manifest;
  std::string feature = "prop";
  double t0 = 0.0;
  int workers = 1;
  std::string out = "features.csv";
  FeatureOptions features;
};

int cmd_extract(ExtractArgs& a, std::ostream& out, std::ostream& err) {
  const FeatureKind kind = parse_feature_kind(a.feature);
  const FeatureConfig& config = a.features.resolved();
  const auto entries = manifest_entries(a.manifest);

  // Resolve every (entry, sub-segment) pair up front so rows keep a fixed order.
  struct Job {
    std::size_t entry;
    int piece;
    int index;  // running segment index within the subject
  };
  std::vector<Job> jobs;
  std::map<std::string, int> next_index;
  for (std::size_t e = 0; e < entries.size(); ++e) {
    const auto& row = entries[e].second;
    int pieces = 1;
    if (a.t0 > 0.0) {
      // Records are cut without overlap; duration in the manifest is trusted.
      pieces = static_cast<int>(std::floor(row.meta.duration / a.t0 + 1e-9));
      if (pieces < 1) err << "warning: " << row.file << " is shorter than T0 = " << a.t0 << " s, skipped\n";
    }
    for (int p = 0; p < pieces; ++p) jobs.push_back({e, p, next_index[row.meta.subject_id]++});
  }

  const SegmentSource source = [&](std::size_t i) -> std::pair<ComplexSeries, SegmentMeta> {
    const auto& [path, row] = entries[jobs[i].entry];
    ComplexSeries s = load_cw_record(path, row.rate);
    if (a.t0 <= 0.0) return {std::move(s), row.meta};
    SegmentMeta base = row.meta;
    base.segment_index = jobs[i].index;
    const auto len = static_cast<std::size_t>(std::llround(a.t0 * s.rate));
    const auto start = static_cast<std::size_t>(jobs[i].piece) * len;
    if (start + len > s.size()) throw InputError(row.file + " is shorter than its manifest duration");
    std::vector<cdouble> piece(s.samples.begin() + static_cast<std::ptrdiff_t>(start),
                               s.samples.begin() + static_cast<std::ptrdiff_t>(start + len));
    base.duration = a.t0;
    return {ComplexSeries(std::move(piece), s.rate, static_cast<double>(start) / s.rate), base};
  };
  const FeatureTable table = extract_features(jobs.size(), source, kind, config, a.workers);
  for (const auto& f : table.failures)
    err << "segment " << f.index << " (" << f.meta.subject_id << ", " << f.meta.session_id << ", "
        << f.meta.segment_index << ") failed: " << f.reason << '\n';

  std::ostringstream seeds;
  for (std::size_t e = 0; e < entries.size() && e < 8; ++e) seeds << (e ? " " : "") << entries[e].second.seed;
  if (entries.size() > 8) seeds << " ...";
  const std::vector<std::string> provenance{
      version_line("extract"), "config_hash " + config_hash(canonical_config(config)),
      "config " + canonical_config(config), "manifest " + a.manifest, "segment_seeds " + seeds.str(),
      "t0 " + std::to_string(a.t0)};
  write_feature_csv(a.out, table, provenance);
  out << "extracted " << table.X.rows() << " of " << table.attempted << " segments (" << to_string(kind) << ", "
      << table.X.cols() << " columns) to " << a.out << '\n';
  if (table.failure_fraction() > 0.10) {
    err << "error: " << table.failures.size() << " of " << table.attempted << " segments failed (> 10%)\n";
    return kExtractionFailure;
  }
  return kOk;
}

// ---- evaluate -------------------------------------------------------------

struct EvaluateArgs {
  std::string features;
  std::string method = "C1";
  int folds = 10;
  std::uint64_t seed = 1;
  std::string grid = "none";
  std::string split = "stratified";
  int inner_folds = 5;
  std::string out = ".";
  std::string model_out;
};

int cmd_evaluate(EvaluateArgs& a, std::ostream& out) {
  if (!fs::exists(a.features)) throw InputError("feature file " + a.features + " does not exist");
  const MethodId method = MethodId::parse(a.method);
  FeatureTable table = read_feature_csv(a.features);
  if (table.kind != method.feature) table = select_kind(table, method.feature);
  const Dataset data = to_dataset(table);

  ClassifierSpec spec = reference_spec(method);
  spec.seed = a.seed;
  CvOptions options;
  options.inner_folds = a.inner_folds;
  if (a.grid != "none") {
    auto grid = default_grid(method.classifier, data.X.cols(), spec);
    if (a.grid == "gaussian") {
      if (method.classifier != ClassifierKind::svm) throw InputError("--grid gaussian applies to SVM methods only");
      std::erase_if(grid, [](const ClassifierSpec& s) { return s.svm.kernel != SvmKernel::gaussian; });
    }
    options.grid = std::move(grid);
  }
  const FoldAssignment folds =
      a.split == "session" ? session_folds(data.meta) : stratified_folds(data.y, a.folds, a.seed, data.class_names);
  EvalReport report = cross_validate(data, spec, folds, options);
  report.method = method.str();

  std::ostringstream canon;
  canon << "method=" << report.method << ";folds=" << folds.k << ";seed=" << a.seed << ";grid=" << a.grid
        << ";split=" << a.split << ";inner=" << a.inner_folds << ";spec=" << to_json(spec).dump();
  const std::vector<std::string> provenance{version_line("evaluate"), "config_hash " + config_hash(canon.str()),
                                            "cv_seed " + std::to_string(a.seed), "features " + a.features};
  write_report(report, a.out, provenance);
  if (!a.model_out.empty()) {
    ClassifierSpec final_spec = spec;
    if (options.grid)
      final_spec = grid_search(data.X, data.y, data.n_classes(), *options.grid, a.inner_folds, a.seed).best;
    std::ofstream os(a.model_out);
    if (!os) throw InputError("cannot write " + a.model_out);
    os << train(data, final_spec).to_json().dump() << '\n';
  }
  out << std::fixed << std::setprecision(4) << "method " << report.method << " accuracy " << report.accuracy()
      << " macro_f1 " << report.confusion.macro_f1 << " macro_auc " << report.macro_auc() << " ("
      << data.X.rows() << " segments, " << data.n_classes() << " classes, " << folds.k << " folds)\n";
  return kOk;
}

// ---- dump-diagnostics -----------------------------------------------------

struct DumpArgs {
  std::string input;
  double rate = 0.0;
  std::string manifest;
  std::size_t row = 0;
  std::string out = "diagnostics";
  FeatureOptions features;
};

int cmd_dump(DumpArgs& a, std::ostream& out) {
  const FeatureConfig& config = a.features.resolved();
  ComplexSeries s;
  SegmentMeta meta;
  if (!a.manifest.empty()) {
    const auto entries = manifest_entries(a.manifest);
    if (a.row >= entries.size()) throw InputError("manifest row out of range");
    s = load_cw_record(entries[a.row].first, entries[a.row].second.rate);
    meta = entries[a.row].second.meta;
  } else {
    if (a.input.empty() || !(a.rate > 0.0)) throw InputError("give --manifest, or --input with --rate");
    s = load_cw_record(a.input, a.rate);
  }
  const fs::path dir(a.out);
  fs::create_directories(dir);
  const std::string header = "# " + version_line("dump-diagnostics") + "\n# config_hash " +
                             config_hash(canonical_config(config)) + "\n";

  const DisplacementSeries d = phase_demodulate(s, config.wavelength);
  {
    std::ofstream os(dir / "displacement.csv");
    os << header << "t_s,d_m\n" << std::setprecision(10);
    for (std::size_t i = 0; i < d.size(); ++i) os << d.t0 + static_cast<double>(i) / d.rate << ',' << d.values[i] << '\n';
  }
  const InstantFeatures inst = instantaneous_features(d, config.resp);
  {
    std::ofstream os(dir / "window_fits.csv");
    os << header << "t_s,amplitude_m,freq_hz,beta1,beta2,duty,shift_s,c2,residual\n" << std::setprecision(10);
    for (const auto& w : inst.fits)
      os << w.t << ',' << w.params.amplitude << ',' << w.params.freq << ',' << w.params.beta1 << ','
         << w.params.beta2 << ',' << w.params.duty << ',' << w.params.shift << ',' << w.c2 << ',' << w.residual
         << '\n';
  }
  const ComplexSeries accel = second_difference(s);
  const Spectrogram spec = stft(accel, config.hb.stft_window, config.hb.stft_hop);
  const MelFilterBank bank = build_mel_bank(s.rate, config.hb.f_tilde, config.hb.f_prime, config.hb.n_filters);
  const MelEnergies energies = mel_energies(spec, bank);
  const Mfcc c = mfcc(energies, config.hb.n_coeffs);
  {
    std::ofstream os(dir / "mel_energies.csv");
    os << header << "filter,center_hz,pos,neg\n" << std::setprecision(12);
    for (int l = 0; l < bank.n_filters; ++l)
      os << l << ',' << bank.centers[l + 1] << ',' << energies.pos[l] << ',' << energies.neg[l] << '\n';
  }
  {
    std::ofstream os(dir / "mfcc.csv");
    os << header << "k,pos,neg\n" << std::setprecision(12);
    for (int k = 0; k < config.hb.n_coeffs; ++k) os << k << ',' << c.pos[k] << ',' << c.neg[k] << '\n';
  }
  out << "segment " << meta.subject_id << ": " << inst.features.size() << " of " << inst.n_windows
      << " windows fitted (flat " << inst.rejected_flat << ", no plateau " << inst.rejected_support << ")"
      << (c.floored ? ", mel energies floored" : "") << "; wrote " << dir.string() << '\n';
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Radar vital-sign individual identification pipeline", "vitalid"};
  app.set_version_flag("--version", VITALID_VERSION);
  app.set_config("--config", "", "Read options from an INI/TOML file (one [section] per subcommand)");
  app.require_subcommand(1, 1);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Generate a synthetic population of CW records plus a manifest");
  s->add_option("--preset", synth.preset, "exp1 (6 x 50 x 60 s) or exp2 (30 x 650 s)")->check(CLI::IsMember({"exp1", "exp2"}));
  s->add_option("--subjects", synth.spec.n_subjects, "Number of subjects")->capture_default_str();
  s->add_option("--segments", synth.spec.n_segments, "Segments per subject")->capture_default_str();
  s->add_option("--t0", synth.spec.T0, "Segment length, s")->capture_default_str();
  s->add_option("--fs", synth.spec.fs, "Sample rate, Hz")->capture_default_str();
  s->add_option("--snr", synth.spec.snr_db, "SNR, dB")->capture_default_str();
  s->add_option("--seed", synth.spec.seed, "Population seed")->capture_default_str();
  s->add_option("--per-session", synth.spec.segments_per_session, "Segments per session")->capture_default_str();
  s->add_option("--separation", synth.spec.ranges.min_separation, "Minimum inter-subject separation, jitter stds")
      ->capture_default_str();
  s->add_flag("--identical", synth.spec.identical_profiles, "Give every subject the same profile");
  s->add_option("--format", synth.format, "Record format")->check(CLI::IsMember({"csv", "f32"}))->capture_default_str();
  s->add_option("--workers", synth.workers, "Worker threads")->capture_default_str();
  s->add_option("--out", synth.out, "Output directory")->required();

  IngestArgs ingest;
  auto* g = app.add_subcommand("ingest", "Convert an FMCW cube or CW record into T0-second segments");
  g->add_option("--input", ingest.input, "Cube (with .meta sidecar) or CW record")->required();
  g->add_option("--kind", ingest.kind, "Input kind")->check(CLI::IsMember({"auto", "fmcw", "cw"}))->capture_default_str();
  g->add_option("--rate", ingest.rate, "Sample rate of a CW record, Hz");
  g->add_option("--target-rate", ingest.target_rate, "Output sample rate, Hz")->capture_default_str();
  g->add_option("--subject", ingest.base.subject_id, "Subject label")->required();
  g->add_option("--session", ingest.base.session_id, "Session label")->capture_default_str();
  g->add_option("--day", ingest.base.day_index, "Day index")->capture_default_str();
  g->add_option("--t0", ingest.t0, "Segment length, s")->capture_default_str();
  g->add_option("--hop", ingest.hop, "Segment hop, s (default T0)");
  g->add_option("--format", ingest.format, "Record format")->check(CLI::IsMember({"csv", "f32"}))->capture_default_str();
  g->add_option("--out", ingest.out, "Output directory (manifest is merged)")->required();

  ExtractArgs extract;
  auto* x = app.add_subcommand("extract", "Compute r_resp / r_hb / r_prop for every manifest segment");
  x->add_option("--manifest", extract.manifest, "Manifest CSV")->required();
  x->add_option("--feature", extract.feature, "Feature vector")->check(CLI::IsMember({"resp", "hb", "prop"}))->capture_default_str();
  x->add_option("--t0", extract.t0, "Re-cut records into T0-second segments (0 keeps records whole)")->capture_default_str();
  x->add_option("--workers", extract.workers, "Worker threads")->capture_default_str();
  x->add_option("--out", extract.out, "Feature CSV")->capture_default_str();
  extract.features.add(x);

  EvaluateArgs evaluate;
  auto* e = app.add_subcommand("evaluate", "Cross-validate a method and write its report");
  e->add_option("--features", evaluate.features, "Feature CSV")->required();
  e->add_option("--method", evaluate.method, "Method ID A1 ... C3")->capture_default_str();
  e->add_option("--folds", evaluate.folds, "Stratified folds k")->capture_default_str();
  e->add_option("--seed", evaluate.seed, "Fold seed")->capture_default_str();
  e->add_option("--grid", evaluate.grid, "Inner grid search")->check(CLI::IsMember({"none", "gaussian", "full"}))->capture_default_str();
  e->add_option("--inner-folds", evaluate.inner_folds, "Folds of the inner grid search")->capture_default_str();
  e->add_option("--split", evaluate.split, "Fold scheme")->check(CLI::IsMember({"stratified", "session"}))->capture_default_str();
  e->add_option("--out", evaluate.out, "Report directory")->capture_default_str();
  e->add_option("--model-out", evaluate.model_out, "Also train on all rows and save the model JSON here");

  DumpArgs dump;
  auto* d = app.add_subcommand("dump-diagnostics", "Write intermediate signals of one segment");
  d->add_option("--manifest", dump.manifest, "Manifest CSV");
  d->add_option("--row", dump.row, "Manifest row")->capture_default_str();
  d->add_option("--input", dump.input, "CW record (instead of a manifest)");
  d->add_option("--rate", dump.rate, "Sample rate of --input, Hz");
  d->add_option("--out", dump.out, "Output directory")->capture_default_str();
  dump.features.add(d);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& ex) {
    const int code = app.exit(ex, out, err);
    return code == 0 ? kOk : kInputFailure;
  }

  try {
    if (s->parsed()) return cmd_synth(synth, *s, out);
    if (g->parsed()) return cmd_ingest(ingest, out, err);
    if (x->parsed()) return cmd_extract(extract, out, err);
    if (e->parsed()) return cmd_evaluate(evaluate, out);
    if (d->parsed()) return cmd_dump(dump, out);
  } catch (const Error& ex) {
    err << "error: " << ex.what() << '\n';
    return exit_code(ex.kind());
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << '\n';
    return kUnexpected;
  }
  return kUnexpected;
}

}  // namespace vitalid::cli
