#include "vitalid/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

namespace vitalid {

namespace {

constexpr std::pair<const char*, FeatureKind> kKinds[] = {
    {"resp", FeatureKind::resp}, {"hb", FeatureKind::hb}, {"prop", FeatureKind::prop}};

const char* const kMetaColumns[] = {"subject_id", "session_id", "day_index", "segment_index", "duration_s"};
const char* const kManifestColumns[] = {"subject_id", "session_id", "day_index", "segment_index",
                                        "duration_s", "file",       "seed",      "rate_hz"};

std::vector<std::string> split(const std::string& line, char sep = ',') {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

void check_cell(const std::string& s) {
  if (s.find_first_of(",\n\r") != std::string::npos) throw InputError("label '" + s + "' contains a separator");
}

double to_double(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw InputError("cannot parse " + what + " '" + s + "'");
  }
}

long to_long(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    const long v = std::stol(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw InputError("cannot parse " + what + " '" + s + "'");
  }
}

std::uint64_t to_u64(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    const unsigned long long v = std::stoull(s, &pos);
    if (pos != s.size() || s.front() == '-') throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw InputError("cannot parse " + what + " '" + s + "'");
  }
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_meta(std::ostream& os, const SegmentMeta& m) {
  check_cell(m.subject_id);
  check_cell(m.session_id);
  os << m.subject_id << ',' << m.session_id << ',' << m.day_index << ',' << m.segment_index << ','
     << format_double(m.duration);
}

SegmentMeta parse_meta(const std::vector<std::string>& cells) {
  SegmentMeta m;
  m.subject_id = cells[0];
  m.session_id = cells[1];
  m.day_index = static_cast<int>(to_long(cells[2], "day_index"));
  m.segment_index = static_cast<int>(to_long(cells[3], "segment_index"));
  m.duration = to_double(cells[4], "duration_s");
  return m;
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace

std::string to_string(FeatureKind kind) {
  for (const auto& [name, k] : kKinds)
    if (k == kind) return name;
  return "?";
}

FeatureKind parse_feature_kind(const std::string& s) {
  for (const auto& [name, k] : kKinds)
    if (s == name) return k;
  throw InputError("unknown feature '" + s + "' (expected resp, hb or prop)");
}

std::size_t feature_dimension(FeatureKind kind, const FeatureConfig& config) {
  switch (kind) {
    case FeatureKind::resp: return kRespDim;
    case FeatureKind::hb: return config.hb.dimension();
    case FeatureKind::prop: return kRespDim + config.hb.dimension();
  }
  return 0;
}

std::vector<std::string> feature_names(FeatureKind kind, const FeatureConfig& config) {
  std::vector<std::string> names;
  if (kind != FeatureKind::hb) names = resp_feature_names();
  if (kind != FeatureKind::resp) {
    const auto hb = hb_feature_names(config.hb.n_keep);
    names.insert(names.end(), hb.begin(), hb.end());
  }
  return names;
}

std::string MethodId::str() const {
  const char letter = feature == FeatureKind::resp ? 'A' : feature == FeatureKind::hb ? 'B' : 'C';
  const char digit = classifier == ClassifierKind::svm ? '1' : classifier == ClassifierKind::knn ? '2' : '3';
  return {letter, digit};
}

MethodId MethodId::parse(const std::string& s) {
  if (s.size() != 2) throw InputError("method must be one of A1 ... C3, got '" + s + "'");
  MethodId m;
  switch (s[0]) {
    case 'A': case 'a': m.feature = FeatureKind::resp; break;
    case 'B': case 'b': m.feature = FeatureKind::hb; break;
    case 'C': case 'c': m.feature = FeatureKind::prop; break;
    default: throw InputError("method must be one of A1 ... C3, got '" + s + "'");
  }
  switch (s[1]) {
    case '1': m.classifier = ClassifierKind::svm; break;
    case '2': m.classifier = ClassifierKind::knn; break;
    case '3': m.classifier = ClassifierKind::mlp; break;
    default: throw InputError("method must be one of A1 ... C3, got '" + s + "'");
  }
  return m;
}

ClassifierSpec reference_spec(MethodId method) {
  ClassifierSpec s;
  s.kind = method.classifier;
  s.svm.kernel = SvmKernel::gaussian;
  switch (method.feature) {
    case FeatureKind::resp:
      s.knn = {9, Distance::cityblock};
      s.mlp.sizes = {39, 19};
      break;
    case FeatureKind::hb:
      s.knn = {28, Distance::cosine};
      s.mlp.sizes = {47, 49};
      break;
    case FeatureKind::prop:
      s.knn = {28, Distance::cosine};
      s.mlp.sizes = {15, 15};
      break;
  }
  s.mlp.activation = Activation::relu;
  return s;
}

RespFeature resp_feature(const ComplexSeries& s, const SegmentMeta& meta, const FeatureConfig& config) {
  const DisplacementSeries d = phase_demodulate(s, config.wavelength);
  const InstantFeatures inst = instantaneous_features(d, config.resp);
  return resp_statistics(inst.features, meta);
}

std::vector<double> extract_feature(const ComplexSeries& s, const SegmentMeta& meta, FeatureKind kind,
                                    const FeatureConfig& config) {
  std::vector<double> row;
  row.reserve(feature_dimension(kind, config));
  if (kind != FeatureKind::hb) {
    const RespFeature r = resp_feature(s, meta, config);
    row.insert(row.end(), r.r.begin(), r.r.end());
  }
  if (kind != FeatureKind::resp) {
    const HbFeature h = hb_feature(s, meta, config.hb);
    row.insert(row.end(), h.r.begin(), h.r.end());
  }
  return row;
}

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
  std::size_t w = workers > 0 ? static_cast<std::size_t>(workers) : std::max(1u, std::thread::hardware_concurrency());
  w = std::min(w, n);
  if (w <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::exception_ptr first;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < w; ++t)
    pool.emplace_back([&] {
      for (std::size_t i; !stop && (i = next++) < n;) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!first) first = std::current_exception();
          stop = true;
        }
      }
    });
  for (auto& th : pool) th.join();
  if (first) std::rethrow_exception(first);
}

FeatureTable extract_features(std::size_t n, const SegmentSource& source, FeatureKind kind,
                              const FeatureConfig& config, int workers) {
  struct Slot {
    std::vector<double> row;
    SegmentMeta meta;
    bool ok = false;
    ErrorKind kind = ErrorKind::extraction;
    std::string reason;
  };
  std::vector<Slot> slots(n);
  parallel_for(n, workers, [&](std::size_t i) {
    Slot& slot = slots[i];
    try {
      auto [series, meta] = source(i);
      slot.meta = meta;
      slot.row = extract_feature(series, meta, kind, config);
      slot.ok = true;
    } catch (const Error& e) {
      slot.kind = e.kind();
      slot.reason = e.what();
    }
  });

  FeatureTable t;
  t.kind = kind;
  t.names = feature_names(kind, config);
  t.attempted = n;
  t.X = FeatureMatrix(0, t.names.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (slots[i].ok) {
      t.X.append_row(slots[i].row);
      t.meta.push_back(slots[i].meta);
    } else {
      t.failures.push_back({i, slots[i].meta, slots[i].kind, slots[i].reason});
    }
  }
  return t;
}

FeatureTable select_kind(const FeatureTable& prop, FeatureKind kind, const FeatureConfig& config) {
  if (prop.kind != FeatureKind::prop) {
    if (prop.kind == kind) return prop;
    throw InputError("only an r_prop table can be sliced into r_resp and r_hb");
  }
  FeatureTable t = prop;
  t.kind = kind;
  t.names = feature_names(kind, config);
  if (kind == FeatureKind::resp) t.X = prop.X.select_cols(0, kRespDim);
  if (kind == FeatureKind::hb) t.X = prop.X.select_cols(kRespDim, config.hb.dimension());
  return t;
}

Dataset to_dataset(const FeatureTable& table) {
  std::vector<std::string> labels;
  for (const auto& m : table.meta) labels.push_back(m.subject_id);
  return make_dataset(table.X, labels, table.meta);
}

std::string config_hash(const std::string& canonical) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string canonical_config(const FeatureConfig& c) {
  std::ostringstream os;
  os.precision(17);
  os << "wavelength=" << c.wavelength << ";window=" << c.resp.window << ";hop=" << c.resp.hop
     << ";eps=" << c.resp.eps << ";boundary=" << (c.resp.fit.boundary == MrcwBoundary::continuous ? "continuous" : "printed")
     << ";stft_window=" << c.hb.stft_window << ";stft_hop=" << c.hb.stft_hop << ";f_tilde=" << c.hb.f_tilde
     << ";f_prime=" << c.hb.f_prime << ";L=" << c.hb.n_filters << ";K=" << c.hb.n_coeffs << ";Kp=" << c.hb.n_keep;
  return os.str();
}

void write_feature_csv(const std::filesystem::path& path, const FeatureTable& table,
                       std::span<const std::string> provenance) {
  if (table.X.rows() != table.meta.size() || table.X.cols() != table.names.size())
    throw InputError("feature table shape is inconsistent");
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path);
  if (!os) throw InputError("cannot write " + path.string());
  os << "# " << kFeatureFormatLine << '\n';
  for (const auto& line : provenance) os << "# " << line << '\n';
  for (const char* c : kMetaColumns) os << c << ',';
  for (std::size_t c = 0; c < table.names.size(); ++c) os << table.names[c] << (c + 1 < table.names.size() ? "," : "\n");
  for (std::size_t r = 0; r < table.X.rows(); ++r) {
    write_meta(os, table.meta[r]);
    for (std::size_t c = 0; c < table.X.cols(); ++c) os << ',' << format_double(table.X(r, c));
    os << '\n';
  }
}

FeatureTable read_feature_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw InputError("cannot open feature file " + path.string());
  std::string line;
  if (!std::getline(is, line)) throw InputError(path.string() + " is empty");
  strip_cr(line);
  if (line != std::string("# ") + kFeatureFormatLine)
    throw InputError(path.string() + " is not a '" + kFeatureFormatLine + "' feature file");
  while (std::getline(is, line)) {
    strip_cr(line);
    if (line.empty() || line[0] != '#') break;
  }
  const auto header = split(line);
  constexpr std::size_t n_meta = std::size(kMetaColumns);
  if (header.size() <= n_meta) throw InputError(path.string() + ": header has no feature columns");
  for (std::size_t c = 0; c < n_meta; ++c)
    if (header[c] != kMetaColumns[c]) throw InputError(path.string() + ": unexpected column '" + header[c] + "'");

  FeatureTable t;
  t.names.assign(header.begin() + n_meta, header.end());
  const std::size_t D = t.names.size();
  if (D == kRespDim && t.names.front().rfind("resp_", 0) == 0) t.kind = FeatureKind::resp;
  else if (t.names.front().rfind("hb_", 0) == 0) t.kind = FeatureKind::hb;
  else t.kind = FeatureKind::prop;
  t.X = FeatureMatrix(0, D);
  std::vector<double> row(D);
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty() || line[0] == '#') continue;
    const auto cells = split(line);
    if (cells.size() != n_meta + D)
      throw InputError(path.string() + ": row " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                       " cells, expected " + std::to_string(n_meta + D));
    t.meta.push_back(parse_meta(cells));
    for (std::size_t c = 0; c < D; ++c) row[c] = to_double(cells[n_meta + c], t.names[c]);
    t.X.append_row(row);
  }
  t.attempted = t.meta.size();
  return t;
}

void write_manifest(const std::filesystem::path& path, std::span<const ManifestRow> rows,
                    std::span<const std::string> provenance) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path);
  if (!os) throw InputError("cannot write " + path.string());
  for (const auto& line : provenance) os << "# " << line << '\n';
  for (std::size_t c = 0; c < std::size(kManifestColumns); ++c)
    os << kManifestColumns[c] << (c + 1 < std::size(kManifestColumns) ? "," : "\n");
  for (const auto& r : rows) {
    check_cell(r.file);
    write_meta(os, r.meta);
    os << ',' << r.file << ',' << r.seed << ',' << format_double(r.rate) << '\n';
  }
}

std::vector<ManifestRow> read_manifest(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw InputError("cannot open manifest " + path.string());
  std::string line;
  std::vector<std::string> header;
  while (std::getline(is, line)) {
    strip_cr(line);
    if (line.empty() || line[0] == '#') continue;
    header = split(line);
    break;
  }
  std::map<std::string, std::size_t> col;
  for (std::size_t c = 0; c < header.size(); ++c) col[header[c]] = c;
  for (const char* required : kManifestColumns)
    if (!col.count(required)) throw InputError(path.string() + ": manifest lacks column '" + required + "'");
  std::vector<ManifestRow> rows;
  while (std::getline(is, line)) {
    strip_cr(line);
    if (line.empty() || line[0] == '#') continue;
    const auto cells = split(line);
    if (cells.size() != header.size()) throw InputError(path.string() + ": ragged manifest row");
    ManifestRow r;
    r.meta.subject_id = cells[col["subject_id"]];
    r.meta.session_id = cells[col["session_id"]];
    r.meta.day_index = static_cast<int>(to_long(cells[col["day_index"]], "day_index"));
    r.meta.segment_index = static_cast<int>(to_long(cells[col["segment_index"]], "segment_index"));
    r.meta.duration = to_double(cells[col["duration_s"]], "duration_s");
    r.file = cells[col["file"]];
    r.seed = to_u64(cells[col["seed"]], "seed");
    r.rate = to_double(cells[col["rate_hz"]], "rate_hz");
    rows.push_back(std::move(r));
  }
  return rows;
}

ComplexSeries target_series(const DataCube& cube, const TargetSearch& search, TargetBin* chosen) {
  const RangeProfiles profiles = range_fft(cube);
  const TargetBin bin = select_target_bin(profiles, cube.params, search);
  if (chosen) *chosen = bin;
  ComplexSeries s = beam_series(profiles, cube.params, bin.range_index, bin.angle_deg);
  s.t0 = cube.t0;
  return s;
}

}  // namespace vitalid
