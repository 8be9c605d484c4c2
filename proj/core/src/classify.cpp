#include "vitalid/classify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "vitalid/error.hpp"
#include "vitalid/eval.hpp"

namespace vitalid {

namespace {

template <typename E, std::size_t N>
E parse_enum(const std::string& s, const std::pair<const char*, E> (&table)[N], const char* what) {
  for (const auto& [name, value] : table)
    if (s == name) return value;
  throw InputError(std::string("unknown ") + what + " '" + s + "'");
}

constexpr std::pair<const char*, ClassifierKind> kKinds[] = {
    {"svm", ClassifierKind::svm}, {"knn", ClassifierKind::knn}, {"mlp", ClassifierKind::mlp}};
constexpr std::pair<const char*, SvmKernel> kKernels[] = {{"linear", SvmKernel::linear},
                                                          {"gaussian", SvmKernel::gaussian}};
constexpr std::pair<const char*, Distance> kDistances[] = {
    {"euclidean", Distance::euclidean}, {"cityblock", Distance::cityblock}, {"cosine", Distance::cosine}};
constexpr std::pair<const char*, Activation> kActivations[] = {{"relu", Activation::relu},
                                                               {"sigmoid", Activation::sigmoid}};

template <typename E, std::size_t N>
std::string enum_name(E value, const std::pair<const char*, E> (&table)[N]) {
  for (const auto& [name, v] : table)
    if (v == value) return name;
  return "?";
}

void check_finite(const FeatureMatrix& X) {
  for (std::size_t r = 0; r < X.rows(); ++r)
    for (std::size_t c = 0; c < X.cols(); ++c)
      if (!std::isfinite(X(r, c)))
        throw InputError("non-finite feature at row " + std::to_string(r) + ", column " + std::to_string(c));
}

}  // namespace

std::string to_string(ClassifierKind kind) { return enum_name(kind, kKinds); }
std::string to_string(SvmKernel kernel) { return enum_name(kernel, kKernels); }
std::string to_string(Distance distance) { return enum_name(distance, kDistances); }
std::string to_string(Activation activation) { return enum_name(activation, kActivations); }
ClassifierKind parse_classifier_kind(const std::string& s) { return parse_enum(s, kKinds, "classifier"); }
SvmKernel parse_kernel(const std::string& s) { return parse_enum(s, kKernels, "kernel"); }
Distance parse_distance(const std::string& s) { return parse_enum(s, kDistances, "distance"); }
Activation parse_activation(const std::string& s) { return parse_enum(s, kActivations, "activation"); }

void ClassifierSpec::validate() const {
  switch (kind) {
    case ClassifierKind::svm:
      if (!(svm.C > 0.0)) throw InputError("SVM C must be positive");
      if (svm.gamma < 0.0) throw InputError("SVM gamma must be non-negative");
      if (!(svm.tol > 0.0) || svm.max_iter < 1) throw InputError("SVM tolerance and iteration cap must be positive");
      break;
    case ClassifierKind::knn:
      if (knn.k < 1 || knn.k > 300) throw InputError("k-NN k must lie in [1, 300]");
      break;
    case ClassifierKind::mlp:
      if (mlp.sizes.empty() || mlp.sizes.size() > 3) throw InputError("MLP needs 1 to 3 hidden layers");
      for (int s : mlp.sizes)
        if (s < 1 || s > 300) throw InputError("MLP layer sizes must lie in [1, 300]");
      if (mlp.batch < 1 || mlp.epochs < 1 || mlp.patience < 1 || mlp.decay_every < 1)
        throw InputError("MLP batch, epochs, patience and decay interval must be positive");
      if (!(mlp.learning_rate > 0.0) || !(mlp.decay > 0.0)) throw InputError("MLP learning rate must be positive");
      break;
  }
}

std::string ClassifierSpec::describe() const {
  std::ostringstream os;
  os << to_string(kind);
  switch (kind) {
    case ClassifierKind::svm:
      os << " kernel=" << to_string(svm.kernel) << " C=" << svm.C;
      if (svm.kernel == SvmKernel::gaussian) os << " gamma=" << (svm.gamma == 0.0 ? std::string("1/D") : std::to_string(svm.gamma));
      break;
    case ClassifierKind::knn:
      os << " k=" << knn.k << " distance=" << to_string(knn.distance);
      break;
    case ClassifierKind::mlp:
      os << " sizes=";
      for (std::size_t i = 0; i < mlp.sizes.size(); ++i) os << (i ? "x" : "") << mlp.sizes[i];
      os << " activation=" << to_string(mlp.activation);
      break;
  }
  return os.str();
}

nlohmann::json to_json(const ClassifierSpec& s) {
  return {{"kind", to_string(s.kind)},
          {"svm",
           {{"kernel", to_string(s.svm.kernel)},
            {"gamma", s.svm.gamma},
            {"C", s.svm.C},
            {"tol", s.svm.tol},
            {"max_iter", s.svm.max_iter}}},
          {"knn", {{"k", s.knn.k}, {"distance", to_string(s.knn.distance)}}},
          {"mlp",
           {{"sizes", s.mlp.sizes},
            {"activation", to_string(s.mlp.activation)},
            {"batch", s.mlp.batch},
            {"learning_rate", s.mlp.learning_rate},
            {"decay_every", s.mlp.decay_every},
            {"decay", s.mlp.decay},
            {"epochs", s.mlp.epochs},
            {"patience", s.mlp.patience}}},
          {"standardize", s.standardize},
          {"seed", s.seed}};
}

ClassifierSpec spec_from_json(const nlohmann::json& j) {
  ClassifierSpec s;
  s.kind = parse_classifier_kind(j.at("kind").get<std::string>());
  const auto& v = j.at("svm");
  s.svm.kernel = parse_kernel(v.at("kernel").get<std::string>());
  s.svm.gamma = v.at("gamma").get<double>();
  s.svm.C = v.at("C").get<double>();
  s.svm.tol = v.at("tol").get<double>();
  s.svm.max_iter = v.at("max_iter").get<long>();
  const auto& k = j.at("knn");
  s.knn.k = k.at("k").get<int>();
  s.knn.distance = parse_distance(k.at("distance").get<std::string>());
  const auto& m = j.at("mlp");
  s.mlp.sizes = m.at("sizes").get<std::vector<int>>();
  s.mlp.activation = parse_activation(m.at("activation").get<std::string>());
  s.mlp.batch = m.at("batch").get<int>();
  s.mlp.learning_rate = m.at("learning_rate").get<double>();
  s.mlp.decay_every = m.at("decay_every").get<int>();
  s.mlp.decay = m.at("decay").get<double>();
  s.mlp.epochs = m.at("epochs").get<int>();
  s.mlp.patience = m.at("patience").get<int>();
  s.standardize = j.at("standardize").get<bool>();
  s.seed = j.at("seed").get<std::uint64_t>();
  return s;
}

void Dataset::validate() const {
  if (y.size() != X.rows()) throw InputError("label count does not match feature rows");
  if (!meta.empty() && meta.size() != X.rows()) throw InputError("metadata count does not match feature rows");
  for (int label : y)
    if (label < 0 || static_cast<std::size_t>(label) >= class_names.size()) throw InputError("label outside class set");
}

Dataset make_dataset(FeatureMatrix X, std::span<const std::string> labels, std::vector<SegmentMeta> meta) {
  Dataset d;
  d.X = std::move(X);
  d.meta = std::move(meta);
  std::map<std::string, int> index;
  for (const auto& l : labels) {
    auto [it, inserted] = index.emplace(l, static_cast<int>(d.class_names.size()));
    if (inserted) d.class_names.push_back(l);
    d.y.push_back(it->second);
  }
  d.validate();
  return d;
}

bool Normalizer::any_zero_variance() const {
  return std::find(zero_variance.begin(), zero_variance.end(), true) != zero_variance.end();
}

std::vector<double> Normalizer::apply(std::span<const double> x) const {
  if (x.size() != mean.size()) throw InputError("normalizer dimension mismatch");
  std::vector<double> z(x.size());
  for (std::size_t c = 0; c < x.size(); ++c) z[c] = (x[c] - mean[c]) / stddev[c];
  return z;
}

FeatureMatrix Normalizer::apply(const FeatureMatrix& X) const {
  if (X.cols() != mean.size()) throw InputError("normalizer dimension mismatch");
  FeatureMatrix Z(X.rows(), X.cols());
  for (std::size_t r = 0; r < X.rows(); ++r)
    for (std::size_t c = 0; c < X.cols(); ++c) Z(r, c) = (X(r, c) - mean[c]) / stddev[c];
  return Z;
}

Normalizer Normalizer::identity(std::size_t dims) {
  return {std::vector<double>(dims, 0.0), std::vector<double>(dims, 1.0), std::vector<bool>(dims, false)};
}

Normalizer fit_normalizer(const FeatureMatrix& X) {
  if (X.rows() < 2) throw InputError("normalizer needs at least two rows");
  const std::size_t n = X.rows(), D = X.cols();
  Normalizer nz = Normalizer::identity(D);
  for (std::size_t c = 0; c < D; ++c) {
    bool constant = true;
    double sum = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      sum += X(r, c);
      constant = constant && X(r, c) == X(0, c);
    }
    if (constant) {
      nz.mean[c] = X(0, c);
      nz.zero_variance[c] = true;
      continue;
    }
    const double mu = sum / static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t r = 0; r < n; ++r) ss += (X(r, c) - mu) * (X(r, c) - mu);
    const double sd = std::sqrt(ss / static_cast<double>(n));
    nz.mean[c] = mu;
    if (sd > 0.0)
      nz.stddev[c] = sd;
    else
      nz.zero_variance[c] = true;
  }
  return nz;
}

Prediction Model::predict(std::span<const double> x) const {
  if (x.size() != dims_)
    throw InputError("feature dimension " + std::to_string(x.size()) + " does not match model dimension " +
                     std::to_string(dims_));
  const std::vector<double> z = normalizer_.apply(x);
  Prediction p;
  if (spec_.kind == ClassifierKind::knn) {
    p.scores = knn_scores(z, p.label);
    return p;
  }
  p.scores = spec_.kind == ClassifierKind::svm ? svm_scores(z) : mlp_.forward(z);
  p.label = static_cast<int>(std::max_element(p.scores.begin(), p.scores.end()) - p.scores.begin());
  return p;
}

std::vector<Prediction> Model::predict(const FeatureMatrix& X) const {
  std::vector<Prediction> out;
  out.reserve(X.rows());
  for (std::size_t r = 0; r < X.rows(); ++r) out.push_back(predict(X.row(r)));
  return out;
}

namespace {

nlohmann::json matrix_json(const FeatureMatrix& M) {
  return {{"rows", M.rows()}, {"cols", M.cols()}, {"data", M.data()}};
}

FeatureMatrix matrix_from_json(const nlohmann::json& j) {
  const auto rows = j.at("rows").get<std::size_t>(), cols = j.at("cols").get<std::size_t>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (data.size() != rows * cols) throw InputError("model matrix size mismatch");
  FeatureMatrix M(rows, cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) M(r, c) = data[r * cols + c];
  return M;
}

}  // namespace

nlohmann::json Model::to_json() const {
  nlohmann::json j = {{"format", "vitalid-model"},
                      {"version", 1},
                      {"spec", vitalid::to_json(spec_)},
                      {"class_names", class_names_},
                      {"n_classes", n_classes_},
                      {"dims", dims_},
                      {"normalizer",
                       {{"mean", normalizer_.mean},
                        {"stddev", normalizer_.stddev},
                        {"zero_variance", normalizer_.zero_variance}}},
                      {"gamma", gamma_},
                      {"vectors", matrix_json(sv_)},
                      {"coef", coef_},
                      {"bias", bias_},
                      {"train_y", train_y_}};
  if (spec_.kind == ClassifierKind::mlp)
    j["mlp"] = {{"layer_sizes", mlp_.layer_sizes},
                {"activation", to_string(mlp_.activation)},
                {"weights", mlp_.weights},
                {"biases", mlp_.biases},
                {"epochs_run", mlp_.epochs_run},
                {"final_loss", mlp_.final_loss}};
  return j;
}

Model Model::from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "vitalid-model" || j.value("version", 0) != 1)
    throw InputError("not a version-1 vitalid model");
  Model m;
  m.spec_ = spec_from_json(j.at("spec"));
  m.class_names_ = j.at("class_names").get<std::vector<std::string>>();
  m.n_classes_ = j.at("n_classes").get<std::size_t>();
  m.dims_ = j.at("dims").get<std::size_t>();
  const auto& nz = j.at("normalizer");
  m.normalizer_.mean = nz.at("mean").get<std::vector<double>>();
  m.normalizer_.stddev = nz.at("stddev").get<std::vector<double>>();
  m.normalizer_.zero_variance = nz.at("zero_variance").get<std::vector<bool>>();
  m.gamma_ = j.at("gamma").get<double>();
  m.sv_ = matrix_from_json(j.at("vectors"));
  m.coef_ = j.at("coef").get<std::vector<std::vector<double>>>();
  m.bias_ = j.at("bias").get<std::vector<double>>();
  m.train_y_ = j.at("train_y").get<std::vector<int>>();
  if (m.spec_.kind == ClassifierKind::mlp) {
    const auto& p = j.at("mlp");
    m.mlp_.layer_sizes = p.at("layer_sizes").get<std::vector<int>>();
    m.mlp_.activation = parse_activation(p.at("activation").get<std::string>());
    m.mlp_.weights = p.at("weights").get<std::vector<std::vector<double>>>();
    m.mlp_.biases = p.at("biases").get<std::vector<std::vector<double>>>();
    m.mlp_.epochs_run = p.at("epochs_run").get<int>();
    m.mlp_.final_loss = p.at("final_loss").get<double>();
  }
  if (m.normalizer_.mean.size() != m.dims_) throw InputError("model normalizer dimension mismatch");
  return m;
}

Model train(const FeatureMatrix& X, std::span<const int> y, std::size_t n_classes, const ClassifierSpec& spec) {
  spec.validate();
  if (X.rows() != y.size()) throw InputError("label count does not match feature rows");
  if (n_classes < 2) throw InputError("training needs at least two classes");
  if (X.rows() < 2 || X.cols() == 0) throw InputError("training needs at least two rows and one column");
  for (int label : y)
    if (label < 0 || static_cast<std::size_t>(label) >= n_classes) throw InputError("label outside class set");
  check_finite(X);

  Model m;
  m.spec_ = spec;
  m.n_classes_ = n_classes;
  m.dims_ = X.cols();
  for (std::size_t c = 0; c < n_classes; ++c) m.class_names_.push_back(std::to_string(c));
  m.normalizer_ = spec.standardize ? fit_normalizer(X) : Normalizer::identity(X.cols());
  const FeatureMatrix Z = m.normalizer_.apply(X);

  switch (spec.kind) {
    case ClassifierKind::svm: {
      m.gamma_ = spec.svm.gamma > 0.0 ? spec.svm.gamma : 1.0 / static_cast<double>(X.cols());
      const std::vector<double> K = kernel_matrix(Z, spec.svm.kernel, m.gamma_);
      const std::size_t n_problems = n_classes == 2 ? 1 : n_classes;
      std::vector<BinarySvm> problems;
      for (std::size_t c = 0; c < n_problems; ++c) {
        std::vector<int> yy(y.size());
        bool pos = false, neg = false;
        for (std::size_t i = 0; i < y.size(); ++i) {
          yy[i] = static_cast<std::size_t>(y[i]) == c ? 1 : -1;
          (yy[i] > 0 ? pos : neg) = true;
        }
        if (!pos || !neg) throw TrainingError("class " + std::to_string(c) + " has no training samples");
        try {
          problems.push_back(solve_binary_svm(K, yy, spec.svm.C, spec.svm.tol, spec.svm.max_iter));
        } catch (const ConvergenceError& e) {
          throw ConvergenceError("class " + std::to_string(c) + ": " + e.what(), e.iterations());
        }
        for (std::size_t i = 0; i < y.size(); ++i) problems.back().alpha[i] *= yy[i];
      }
      std::vector<std::size_t> support;
      for (std::size_t i = 0; i < y.size(); ++i)
        for (const auto& p : problems)
          if (p.alpha[i] != 0.0) {
            support.push_back(i);
            break;
          }
      m.sv_ = Z.select_rows(support);
      for (const auto& p : problems) {
        std::vector<double> coef;
        coef.reserve(support.size());
        for (std::size_t i : support) coef.push_back(p.alpha[i]);
        m.coef_.push_back(std::move(coef));
        m.bias_.push_back(p.bias);
      }
      break;
    }
    case ClassifierKind::knn:
      if (static_cast<std::size_t>(spec.knn.k) > X.rows())
        throw TrainingError("k-NN k = " + std::to_string(spec.knn.k) + " exceeds the " + std::to_string(X.rows()) +
                            " training rows");
      m.sv_ = Z;
      m.train_y_.assign(y.begin(), y.end());
      break;
    case ClassifierKind::mlp:
      m.mlp_ = train_mlp(Z, y, n_classes, spec.mlp, spec.seed);
      break;
  }
  return m;
}

Model train(const Dataset& data, const ClassifierSpec& spec) {
  data.validate();
  Model m = train(data.X, data.y, data.n_classes(), spec);
  m.class_names_ = data.class_names;
  return m;
}

std::vector<ClassifierSpec> default_grid(ClassifierKind kind, std::size_t dims, const ClassifierSpec& base) {
  std::vector<ClassifierSpec> grid;
  ClassifierSpec s = base;
  s.kind = kind;
  switch (kind) {
    case ClassifierKind::svm: {
      const double Cs[] = {0.1, 1.0, 10.0, 100.0};
      const double gammas[] = {0.01, 0.1, 1.0 / static_cast<double>(std::max<std::size_t>(dims, 1)), 1.0, 10.0};
      for (double C : Cs) {
        s.svm.kernel = SvmKernel::linear;
        s.svm.C = C;
        s.svm.gamma = 0.0;
        grid.push_back(s);
      }
      for (double C : Cs)
        for (double g : gammas) {
          s.svm.kernel = SvmKernel::gaussian;
          s.svm.C = C;
          s.svm.gamma = g;
          grid.push_back(s);
        }
      break;
    }
    case ClassifierKind::knn:
      for (Distance d : {Distance::euclidean, Distance::cityblock, Distance::cosine})
        for (int k : {1, 2, 3, 5, 9, 14, 28, 50, 100, 200, 300}) {
          s.knn.k = k;
          s.knn.distance = d;
          grid.push_back(s);
        }
      break;
    case ClassifierKind::mlp: {
      const int widths[] = {10, 40, 160};
      for (Activation a : {Activation::relu, Activation::sigmoid}) {
        s.mlp.activation = a;
        for (int w1 : widths) {
          s.mlp.sizes = {w1};
          grid.push_back(s);
          for (int w2 : widths) {
            s.mlp.sizes = {w1, w2};
            grid.push_back(s);
            for (int w3 : widths) {
              s.mlp.sizes = {w1, w2, w3};
              grid.push_back(s);
            }
          }
        }
      }
      break;
    }
  }
  return grid;
}

bool simpler(const ClassifierSpec& a, const ClassifierSpec& b) {
  auto key = [](const ClassifierSpec& s) {
    std::vector<double> k{static_cast<double>(s.kind)};
    switch (s.kind) {
      case ClassifierKind::svm:
        k.push_back(s.svm.kernel == SvmKernel::linear ? 0.0 : 1.0);
        k.push_back(s.svm.C);
        k.push_back(s.svm.kernel == SvmKernel::linear ? 0.0 : s.svm.gamma);
        break;
      case ClassifierKind::knn:
        k.push_back(s.knn.k);
        k.push_back(static_cast<double>(s.knn.distance));
        break;
      case ClassifierKind::mlp: {
        double units = 0.0;
        for (int w : s.mlp.sizes) units += w;
        k.push_back(units);
        k.push_back(static_cast<double>(s.mlp.sizes.size()));
        k.push_back(static_cast<double>(s.mlp.activation));
        break;
      }
    }
    return k;
  };
  return key(a) < key(b);
}

GridResult grid_search(const FeatureMatrix& X, std::span<const int> y, std::size_t n_classes,
                       std::span<const ClassifierSpec> grid, int folds, std::uint64_t seed) {
  if (grid.empty()) throw InputError("grid search over an empty grid");
  const FoldAssignment fa = stratified_folds(y, folds, seed);
  std::size_t min_train = X.rows();
  std::vector<std::vector<std::size_t>> train_idx(folds), test_idx(folds);
  for (int f = 0; f < folds; ++f) {
    train_idx[f] = fa.train_indices(f);
    test_idx[f] = fa.test_indices(f);
    min_train = std::min(min_train, train_idx[f].size());
  }
  std::vector<FeatureMatrix> Xtr(folds), Xte(folds);
  std::vector<std::vector<int>> ytr(folds), yte(folds);
  for (int f = 0; f < folds; ++f) {
    Xtr[f] = X.select_rows(train_idx[f]);
    Xte[f] = X.select_rows(test_idx[f]);
    for (std::size_t i : train_idx[f]) ytr[f].push_back(y[i]);
    for (std::size_t i : test_idx[f]) yte[f].push_back(y[i]);
  }

  GridResult result;
  const GridCell* best = nullptr;
  for (const ClassifierSpec& spec : grid) {
    if (spec.kind == ClassifierKind::knn && static_cast<std::size_t>(spec.knn.k) > min_train) continue;
    GridCell cell{spec, {}, 0.0};
    for (int f = 0; f < folds; ++f) {
      const Model m = train(Xtr[f], ytr[f], n_classes, spec);
      std::size_t correct = 0;
      for (std::size_t r = 0; r < Xte[f].rows(); ++r) correct += m.predict(Xte[f].row(r)).label == yte[f][r];
      cell.fold_accuracy.push_back(static_cast<double>(correct) / static_cast<double>(Xte[f].rows()));
    }
    for (double a : cell.fold_accuracy) cell.mean_accuracy += a;
    cell.mean_accuracy /= folds;
    result.cells.push_back(std::move(cell));
  }
  if (result.cells.empty()) throw InputError("no grid cell is trainable on these folds");
  for (const GridCell& c : result.cells) {
    if (!best || c.mean_accuracy > best->mean_accuracy + 1e-12 ||
        (std::abs(c.mean_accuracy - best->mean_accuracy) <= 1e-12 && simpler(c.spec, best->spec)))
      best = &c;
  }
  result.best = best->spec;
  return result;
}

}  // namespace vitalid
