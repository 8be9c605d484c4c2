#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vitalid/classify.hpp"
#include "vitalid/types.hpp"

namespace vitalid {

struct FoldAssignment {
  std::vector<int> fold_of;
  int k = 0;
  std::uint64_t seed = 0;

  std::vector<std::size_t> train_indices(int fold) const;
  std::vector<std::size_t> test_indices(int fold) const;
};

// Per class: seeded shuffle, then round-robin dealing; the dealing position
// carries over from one class to the next so fold totals stay balanced.
// Throws InputError naming the first class with fewer than k members.
FoldAssignment stratified_folds(std::span<const int> y, int k, std::uint64_t seed,
                                std::span<const std::string> class_names = {});

// One fold per distinct session_id, in order of first appearance.
FoldAssignment session_folds(std::span<const SegmentMeta> meta);

struct Confusion {
  std::vector<std::vector<long>> counts;  // rows true, columns predicted
  std::vector<double> f1;
  std::vector<bool> f1_degenerate;  // class neither true nor predicted
  double macro_f1 = 0.0;
  double accuracy = 0.0;
};

Confusion confusion_and_f1(std::span<const int> truth, std::span<const int> predicted, std::size_t n_classes);

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
};

struct RocResult {
  std::vector<std::vector<RocPoint>> curves;  // per class, (0,0) ... (1,1)
  std::vector<double> auc;                    // NaN when undefined
  std::vector<bool> defined;                  // class has positives and negatives
  double macro_auc = 0.0;                     // mean over defined classes
  std::vector<RocPoint> macro_curve;
};

// scores is N x n_classes.
RocResult roc_auc_ovr(const FeatureMatrix& scores, std::span<const int> truth, std::size_t n_classes);

struct EvalReport {
  std::string method;
  std::vector<std::string> class_names;
  ClassifierSpec spec;                      // as requested
  std::vector<ClassifierSpec> fold_specs;   // after any inner grid search
  FoldAssignment folds;
  std::vector<int> truth;
  std::vector<int> predicted;
  FeatureMatrix scores;
  Confusion confusion;
  RocResult roc;

  double accuracy() const noexcept { return confusion.accuracy; }
  double macro_auc() const noexcept { return roc.macro_auc; }
};

struct CvOptions {
  // When set, each training fold runs grid_search over these cells with
  // inner_folds stratified folds and trains the winner.
  std::optional<std::vector<ClassifierSpec>> grid;
  int inner_folds = 5;
};

// Trains on each fold's complement and pools held-out predictions. Training
// failures are rethrown as TrainingError naming the fold.
EvalReport cross_validate(const Dataset& data, const ClassifierSpec& spec, const FoldAssignment& folds,
                          const CvOptions& options = {});

nlohmann::json report_json(const EvalReport& report);
// <dir>/<method>_report.json, <method>_confusion.csv, <method>_roc.csv.
void write_report(const EvalReport& report, const std::filesystem::path& dir,
                  std::span<const std::string> header_lines = {});

}  // namespace vitalid
