#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vitalid/classify.hpp"
#include "vitalid/error.hpp"
#include "vitalid/hb_features.hpp"
#include "vitalid/resp_features.hpp"
#include "vitalid/signal.hpp"
#include "vitalid/synth.hpp"
#include "vitalid/types.hpp"

namespace vitalid {

// Feature vectors: A = resp, B = hb, C = prop = [resp; hb].
enum class FeatureKind { resp, hb, prop };

std::string to_string(FeatureKind kind);
FeatureKind parse_feature_kind(const std::string& s);

struct FeatureConfig {
  double wavelength = kDefaultWavelength;
  RespConfig resp;
  HbConfig hb;
};

std::size_t feature_dimension(FeatureKind kind, const FeatureConfig& config = {});
std::vector<std::string> feature_names(FeatureKind kind, const FeatureConfig& config = {});

// Method IDs A1 ... C3: letter = feature, digit = 1 SVM, 2 k-NN, 3 MLP.
struct MethodId {
  FeatureKind feature = FeatureKind::prop;
  ClassifierKind classifier = ClassifierKind::svm;

  std::string str() const;
  static MethodId parse(const std::string& s);  // throws InputError
};

// Reference cell per method (SVM C and gamma left at
// C = 1, gamma = 1/D).
ClassifierSpec reference_spec(MethodId method);

// phase_demodulate -> sliding MRCW fits -> statistics.
RespFeature resp_feature(const ComplexSeries& s, const SegmentMeta& meta, const FeatureConfig& config = {});

// One row of the requested kind.
std::vector<double> extract_feature(const ComplexSeries& s, const SegmentMeta& meta, FeatureKind kind,
                                    const FeatureConfig& config = {});

struct ExtractionFailure {
  std::size_t index = 0;
  SegmentMeta meta;
  ErrorKind kind = ErrorKind::extraction;
  std::string reason;
};

struct FeatureTable {
  FeatureKind kind = FeatureKind::prop;
  std::vector<std::string> names;
  std::vector<SegmentMeta> meta;
  FeatureMatrix X;
  std::vector<ExtractionFailure> failures;
  std::size_t attempted = 0;

  double failure_fraction() const noexcept {
    return attempted == 0 ? 0.0 : static_cast<double>(failures.size()) / static_cast<double>(attempted);
  }
};

using SegmentSource = std::function<std::pair<ComplexSeries, SegmentMeta>(std::size_t)>;

// Runs fn(0) ... fn(n - 1) on up to `workers` threads (0 = hardware
// concurrency). The first exception is rethrown after all workers stop.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

// Segments that fail with a vitalid::Error are recorded and skipped; rows
// keep source order whatever the worker count.
FeatureTable extract_features(std::size_t n, const SegmentSource& source, FeatureKind kind,
                              const FeatureConfig& config = {}, int workers = 1);

// Column slice of an r_prop table.
FeatureTable select_kind(const FeatureTable& prop, FeatureKind kind, const FeatureConfig& config = {});

// Labels are subject ids.
Dataset to_dataset(const FeatureTable& table);

// FNV-1a 64-bit, as 16 hex digits.
std::string config_hash(const std::string& canonical);
std::string canonical_config(const FeatureConfig& config);

inline constexpr const char* kFeatureFormatLine = "vitalid-features v1";

// "# vitalid-features v1", "# <provenance>" lines, the header row
// (subject_id, session_id, day_index, segment_index, duration_s, features...)
// and one row per segment.
void write_feature_csv(const std::filesystem::path& path, const FeatureTable& table,
                       std::span<const std::string> provenance = {});
FeatureTable read_feature_csv(const std::filesystem::path& path);

struct ManifestRow {
  SegmentMeta meta;
  std::string file;  // relative to the manifest directory
  std::uint64_t seed = 0;
  double rate = 0.0;  // Hz
};

void write_manifest(const std::filesystem::path& path, std::span<const ManifestRow> rows,
                    std::span<const std::string> provenance = {});
std::vector<ManifestRow> read_manifest(const std::filesystem::path& path);

// Beam-formed slow-time series at the selected target cell.
ComplexSeries target_series(const DataCube& cube, const TargetSearch& search = {}, TargetBin* chosen = nullptr);

}  // namespace vitalid
