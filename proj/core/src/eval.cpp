#include "vitalid/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "vitalid/error.hpp"
#include "vitalid/rng.hpp"

namespace vitalid {

std::vector<std::size_t> FoldAssignment::train_indices(int fold) const {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < fold_of.size(); ++i)
    if (fold_of[i] != fold) idx.push_back(i);
  return idx;
}

std::vector<std::size_t> FoldAssignment::test_indices(int fold) const {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < fold_of.size(); ++i)
    if (fold_of[i] == fold) idx.push_back(i);
  return idx;
}

FoldAssignment stratified_folds(std::span<const int> y, int k, std::uint64_t seed,
                                std::span<const std::string> class_names) {
  if (k < 2) throw InputError("cross-validation needs k >= 2");
  int n_classes = 0;
  for (int label : y) {
    if (label < 0) throw InputError("negative class label");
    n_classes = std::max(n_classes, label + 1);
  }
  std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(n_classes));
  for (std::size_t i = 0; i < y.size(); ++i) members[static_cast<std::size_t>(y[i])].push_back(i);

  FoldAssignment fa;
  fa.k = k;
  fa.seed = seed;
  fa.fold_of.assign(y.size(), -1);
  std::size_t offset = 0;
  for (int c = 0; c < n_classes; ++c) {
    auto& m = members[static_cast<std::size_t>(c)];
    if (m.empty()) continue;
    if (m.size() < static_cast<std::size_t>(k)) {
      const std::string name =
          static_cast<std::size_t>(c) < class_names.size() ? class_names[c] : std::to_string(c);
      throw InputError("class '" + name + "' has " + std::to_string(m.size()) + " samples, fewer than k = " +
                       std::to_string(k));
    }
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(c)));
    rng.shuffle(m);
    for (std::size_t i = 0; i < m.size(); ++i) fa.fold_of[m[i]] = static_cast<int>((offset + i) % k);
    offset = (offset + m.size()) % k;
  }
  return fa;
}

FoldAssignment session_folds(std::span<const SegmentMeta> meta) {
  std::vector<std::string> sessions;
  FoldAssignment fa;
  for (const auto& m : meta) {
    auto it = std::find(sessions.begin(), sessions.end(), m.session_id);
    if (it == sessions.end()) {
      sessions.push_back(m.session_id);
      it = sessions.end() - 1;
    }
    fa.fold_of.push_back(static_cast<int>(it - sessions.begin()));
  }
  if (sessions.size() < 2) throw InputError("session split needs at least two sessions");
  fa.k = static_cast<int>(sessions.size());
  return fa;
}

Confusion confusion_and_f1(std::span<const int> truth, std::span<const int> predicted, std::size_t n_classes) {
  if (truth.size() != predicted.size()) throw InputError("truth and prediction lengths differ");
  Confusion cm;
  cm.counts.assign(n_classes, std::vector<long>(n_classes, 0));
  auto check = [&](int l) {
    if (l < 0 || static_cast<std::size_t>(l) >= n_classes) throw InputError("unknown label " + std::to_string(l));
  };
  for (std::size_t i = 0; i < truth.size(); ++i) {
    check(truth[i]);
    check(predicted[i]);
    ++cm.counts[truth[i]][predicted[i]];
  }
  long trace = 0;
  std::size_t n_defined = 0;
  for (std::size_t c = 0; c < n_classes; ++c) {
    long row = 0, col = 0;
    for (std::size_t o = 0; o < n_classes; ++o) {
      row += cm.counts[c][o];
      col += cm.counts[o][c];
    }
    const long tp = cm.counts[c][c];
    trace += tp;
    const double P = col > 0 ? static_cast<double>(tp) / col : 0.0;
    const double R = row > 0 ? static_cast<double>(tp) / row : 0.0;
    cm.f1.push_back(P + R > 0.0 ? 2.0 * P * R / (P + R) : 0.0);
    cm.f1_degenerate.push_back(row == 0 && col == 0);
    if (!cm.f1_degenerate.back()) {
      cm.macro_f1 += cm.f1.back();
      ++n_defined;
    }
  }
  if (n_defined > 0) cm.macro_f1 /= static_cast<double>(n_defined);
  cm.accuracy = truth.empty() ? 0.0 : static_cast<double>(trace) / static_cast<double>(truth.size());
  return cm;
}

namespace {

// TPR at a given FPR; on a vertical run the top of the run is used.
double tpr_at(const std::vector<RocPoint>& curve, double x) {
  double best = -1.0;
  for (const auto& p : curve)
    if (p.fpr == x) best = std::max(best, p.tpr);
  if (best >= 0.0) return best;
  for (std::size_t i = 1; i < curve.size(); ++i) {
    const auto& a = curve[i - 1];
    const auto& b = curve[i];
    if (a.fpr < x && x < b.fpr) return a.tpr + (b.tpr - a.tpr) * (x - a.fpr) / (b.fpr - a.fpr);
  }
  return curve.back().tpr;
}

}  // namespace

RocResult roc_auc_ovr(const FeatureMatrix& scores, std::span<const int> truth, std::size_t n_classes) {
  if (scores.rows() != truth.size() || scores.cols() != n_classes) throw InputError("score matrix shape mismatch");
  for (double v : scores.data())
    if (!std::isfinite(v)) throw InputError("non-finite classifier score");
  const std::size_t n = truth.size();
  RocResult r;
  std::size_t n_defined = 0;
  for (std::size_t c = 0; c < n_classes; ++c) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores(a, c) > scores(b, c); });
    std::size_t P = 0;
    for (int t : truth) P += static_cast<std::size_t>(t) == c;
    const std::size_t N = n - P;
    std::vector<RocPoint> curve{{0.0, 0.0}};
    if (P == 0 || N == 0) {
      r.curves.push_back(curve);
      r.auc.push_back(std::numeric_limits<double>::quiet_NaN());
      r.defined.push_back(false);
      continue;
    }
    std::size_t tp = 0, fp = 0;
    double auc = 0.0;
    for (std::size_t i = 0; i < n;) {
      const double s = scores(order[i], c);
      for (; i < n && scores(order[i], c) == s; ++i) (static_cast<std::size_t>(truth[order[i]]) == c ? tp : fp)++;
      const RocPoint p{static_cast<double>(fp) / N, static_cast<double>(tp) / P};
      auc += (p.fpr - curve.back().fpr) * (p.tpr + curve.back().tpr) / 2.0;
      curve.push_back(p);
    }
    r.curves.push_back(std::move(curve));
    r.auc.push_back(auc);
    r.defined.push_back(true);
    r.macro_auc += auc;
    ++n_defined;
  }
  if (n_defined == 0) {
    r.macro_auc = std::numeric_limits<double>::quiet_NaN();
    return r;
  }
  r.macro_auc /= static_cast<double>(n_defined);

  std::vector<double> grid;
  for (std::size_t c = 0; c < n_classes; ++c)
    if (r.defined[c])
      for (const auto& p : r.curves[c]) grid.push_back(p.fpr);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  r.macro_curve.push_back({0.0, 0.0});
  for (double x : grid) {
    double mean = 0.0;
    for (std::size_t c = 0; c < n_classes; ++c)
      if (r.defined[c]) mean += tpr_at(r.curves[c], x);
    r.macro_curve.push_back({x, mean / static_cast<double>(n_defined)});
  }
  return r;
}

EvalReport cross_validate(const Dataset& data, const ClassifierSpec& spec, const FoldAssignment& folds,
                          const CvOptions& options) {
  data.validate();
  if (folds.fold_of.size() != data.X.rows()) throw InputError("fold assignment does not cover the dataset");
  const std::size_t n = data.X.rows(), n_classes = data.n_classes();
  EvalReport rep;
  rep.class_names = data.class_names;
  rep.spec = spec;
  rep.folds = folds;
  rep.truth = data.y;
  rep.predicted.assign(n, -1);
  rep.scores = FeatureMatrix(n, n_classes);

  for (int f = 0; f < folds.k; ++f) {
    const auto train_idx = folds.train_indices(f);
    const auto test_idx = folds.test_indices(f);
    if (test_idx.empty()) continue;
    try {
      const FeatureMatrix Xtr = data.X.select_rows(train_idx);
      std::vector<int> ytr;
      for (std::size_t i : train_idx) ytr.push_back(data.y[i]);
      ClassifierSpec fold_spec = spec;
      if (options.grid) {
        fold_spec = grid_search(Xtr, ytr, n_classes, *options.grid, options.inner_folds,
                                derive_seed(folds.seed, static_cast<std::uint64_t>(f), 1))
                        .best;
      }
      rep.fold_specs.push_back(fold_spec);
      const Model model = train(Xtr, ytr, n_classes, fold_spec);
      for (std::size_t i : test_idx) {
        const Prediction p = model.predict(data.X.row(i));
        rep.predicted[i] = p.label;
        for (std::size_t c = 0; c < n_classes; ++c) rep.scores(i, c) = p.scores[c];
      }
    } catch (const Error& e) {
      const std::string msg = "fold " + std::to_string(f) + ": " + e.what();
      if (e.kind() == ErrorKind::training) throw TrainingError(msg);
      throw Error(e.kind(), msg);
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    if (rep.predicted[i] < 0) throw InputError("fold assignment leaves row " + std::to_string(i) + " unscored");
  rep.confusion = confusion_and_f1(rep.truth, rep.predicted, n_classes);
  rep.roc = roc_auc_ovr(rep.scores, rep.truth, n_classes);
  return rep;
}

nlohmann::json report_json(const EvalReport& r) {
  auto curve_json = [](const std::vector<RocPoint>& c) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& p : c) a.push_back({p.fpr, p.tpr});
    return a;
  };
  nlohmann::json curves = nlohmann::json::array();
  for (const auto& c : r.roc.curves) curves.push_back(curve_json(c));
  nlohmann::json fold_specs = nlohmann::json::array();
  for (const auto& s : r.fold_specs) fold_specs.push_back(to_json(s));
  nlohmann::json auc = nlohmann::json::array();
  for (double a : r.roc.auc) auc.push_back(std::isfinite(a) ? nlohmann::json(a) : nlohmann::json(nullptr));
  return {{"method", r.method},
          {"class_names", r.class_names},
          {"n_samples", r.truth.size()},
          {"accuracy", r.confusion.accuracy},
          {"macro_f1", r.confusion.macro_f1},
          {"macro_auc", r.roc.macro_auc},
          {"confusion", r.confusion.counts},
          {"f1", r.confusion.f1},
          {"f1_degenerate", r.confusion.f1_degenerate},
          {"auc", auc},
          {"auc_defined", r.roc.defined},
          {"roc", curves},
          {"macro_roc", curve_json(r.roc.macro_curve)},
          {"folds", {{"k", r.folds.k}, {"seed", r.folds.seed}, {"fold_of", r.folds.fold_of}}},
          {"spec", to_json(r.spec)},
          {"fold_specs", fold_specs},
          {"truth", r.truth},
          {"predicted", r.predicted}};
}

void write_report(const EvalReport& r, const std::filesystem::path& dir, std::span<const std::string> header_lines) {
  std::filesystem::create_directories(dir);
  const std::string stem = r.method.empty() ? std::string("report") : r.method;
  auto open = [&](const std::string& name) {
    std::ofstream os(dir / name);
    if (!os) throw InputError("cannot write " + (dir / name).string());
    os.precision(17);
    return os;
  };
  nlohmann::json j = report_json(r);
  j["provenance"] = std::vector<std::string>(header_lines.begin(), header_lines.end());
  open(stem + "_report.json") << j.dump(2) << '\n';

  auto os = open(stem + "_confusion.csv");
  for (const auto& h : header_lines) os << "# " << h << '\n';
  os << "true";
  for (const auto& name : r.class_names) os << ',' << name;
  os << '\n';
  for (std::size_t c = 0; c < r.confusion.counts.size(); ++c) {
    os << r.class_names[c];
    for (long v : r.confusion.counts[c]) os << ',' << v;
    os << '\n';
  }

  auto roc = open(stem + "_roc.csv");
  for (const auto& h : header_lines) roc << "# " << h << '\n';
  roc << "curve,fpr,tpr\n";
  for (std::size_t c = 0; c < r.roc.curves.size(); ++c)
    for (const auto& p : r.roc.curves[c]) roc << r.class_names[c] << ',' << p.fpr << ',' << p.tpr << '\n';
  for (const auto& p : r.roc.macro_curve) roc << "macro," << p.fpr << ',' << p.tpr << '\n';
}

}  // namespace vitalid
