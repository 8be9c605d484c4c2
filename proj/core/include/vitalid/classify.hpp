#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vitalid/types.hpp"

namespace vitalid {

enum class ClassifierKind { svm, knn, mlp };
enum class SvmKernel { linear, gaussian };
enum class Distance { euclidean, cityblock, cosine };
enum class Activation { relu, sigmoid };

std::string to_string(ClassifierKind kind);
std::string to_string(SvmKernel kernel);
std::string to_string(Distance distance);
std::string to_string(Activation activation);
ClassifierKind parse_classifier_kind(const std::string& s);
SvmKernel parse_kernel(const std::string& s);
Distance parse_distance(const std::string& s);
Activation parse_activation(const std::string& s);

struct SvmSpec {
  SvmKernel kernel = SvmKernel::gaussian;
  double gamma = 0.0;  // K(x, x') = exp(-gamma |x - x'|^2); 0 means 1 / D
  double C = 1.0;
  double tol = 1e-3;   // KKT gap at termination
  long max_iter = 10'000'000;
};

struct KnnSpec {
  int k = 9;
  Distance distance = Distance::euclidean;
};

struct MlpSpec {
  std::vector<int> sizes{39, 19};  // hidden layers, 1..3 entries each in [1, 300]
  Activation activation = Activation::relu;
  int batch = 32;
  double learning_rate = 1e-3;
  int decay_every = 100;  // epochs between x0.5 learning-rate steps
  double decay = 0.5;
  int epochs = 400;
  int patience = 50;      // epochs without training-loss improvement before stopping
};

struct ClassifierSpec {
  ClassifierKind kind = ClassifierKind::svm;
  SvmSpec svm;
  KnnSpec knn;
  MlpSpec mlp;
  bool standardize = true;
  std::uint64_t seed = 0;

  void validate() const;  // throws InputError outside the allowed ranges
  std::string describe() const;
};

nlohmann::json to_json(const ClassifierSpec& spec);
ClassifierSpec spec_from_json(const nlohmann::json& j);

struct Dataset {
  FeatureMatrix X;
  std::vector<int> y;  // indices into class_names
  std::vector<std::string> class_names;
  std::vector<SegmentMeta> meta;  // optional, empty or one per row

  std::size_t n_classes() const noexcept { return class_names.size(); }
  void validate() const;
};

// Builds class indices from string labels, classes ordered by first appearance.
Dataset make_dataset(FeatureMatrix X, std::span<const std::string> labels, std::vector<SegmentMeta> meta = {});

struct Normalizer {
  std::vector<double> mean;
  std::vector<double> stddev;  // population; zero-variance columns get 1
  std::vector<bool> zero_variance;

  bool any_zero_variance() const;
  FeatureMatrix apply(const FeatureMatrix& X) const;
  std::vector<double> apply(std::span<const double> x) const;
  static Normalizer identity(std::size_t dims);
};

// Needs at least two rows.
Normalizer fit_normalizer(const FeatureMatrix& X);

struct Prediction {
  int label = 0;
  std::vector<double> scores;  // one per class, larger is more confident
};

// Binary soft-margin dual solved by SMO with second-order working-set
// selection. y entries are +1 / -1.
struct BinarySvm {
  std::vector<double> alpha;
  double bias = 0.0;        // f(x) = sum_i alpha_i y_i K(x_i, x) + bias
  long iterations = 0;
  double kkt_gap = 0.0;     // max violating-pair gap at termination
};

double svm_kernel(std::span<const double> a, std::span<const double> b, SvmKernel kernel, double gamma);
std::vector<double> kernel_matrix(const FeatureMatrix& X, SvmKernel kernel, double gamma);  // N x N row-major
BinarySvm solve_binary_svm(std::span<const double> K, std::span<const int> y, double C, double tol, long max_iter);
BinarySvm solve_binary_svm(const FeatureMatrix& X, std::span<const int> y, const SvmSpec& spec);

// Fully connected network with softmax output. Layer l maps
// layer_sizes[l] -> layer_sizes[l + 1]; weights are row-major (out x in).
struct Mlp {
  std::vector<int> layer_sizes;  // input, hidden..., classes
  Activation activation = Activation::relu;
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;
  int epochs_run = 0;
  double final_loss = 0.0;

  // Glorot-uniform weights, zero biases.
  static Mlp init(std::vector<int> layer_sizes, Activation activation, std::uint64_t seed);

  std::vector<double> forward(std::span<const double> x) const;  // class probabilities
  // Mean cross-entropy over the rows of X; the gradient follows flatten() order.
  double loss_and_gradient(const FeatureMatrix& X, std::span<const int> y, std::vector<double>* gradient) const;

  std::size_t n_parameters() const;
  std::vector<double> flatten() const;  // W_0, b_0, W_1, b_1, ...
  void unflatten(std::span<const double> params);
};

// Mini-batch Adam on cross-entropy with the step-decay schedule and early
// stopping of `spec`. Throws DivergenceError when the loss blows up.
Mlp train_mlp(const FeatureMatrix& Z, std::span<const int> y, std::size_t n_classes, const MlpSpec& spec,
              std::uint64_t seed);

class Model {
 public:
  const ClassifierSpec& spec() const noexcept { return spec_; }
  const Normalizer& normalizer() const noexcept { return normalizer_; }
  std::size_t n_classes() const noexcept { return n_classes_; }
  std::size_t dimension() const noexcept { return dims_; }
  const std::vector<std::string>& class_names() const noexcept { return class_names_; }

  // Throws InputError on a dimension mismatch.
  Prediction predict(std::span<const double> x) const;
  std::vector<Prediction> predict(const FeatureMatrix& X) const;

  // SVM internals, one binary problem per class (a single shared one for two classes).
  const FeatureMatrix& support_vectors() const noexcept { return sv_; }
  const std::vector<std::vector<double>>& dual_coefficients() const noexcept { return coef_; }
  const std::vector<double>& biases() const noexcept { return bias_; }
  const Mlp& mlp() const noexcept { return mlp_; }

  nlohmann::json to_json() const;
  static Model from_json(const nlohmann::json& j);

 private:
  friend Model train(const FeatureMatrix&, std::span<const int>, std::size_t, const ClassifierSpec&);
  friend Model train(const Dataset&, const ClassifierSpec&);
  std::vector<double> svm_scores(std::span<const double> z) const;
  std::vector<double> knn_scores(std::span<const double> z, int& label) const;

  ClassifierSpec spec_;
  Normalizer normalizer_;
  std::size_t n_classes_ = 0;
  std::size_t dims_ = 0;
  std::vector<std::string> class_names_;
  double gamma_ = 0.0;  // resolved
  FeatureMatrix sv_;    // SVM support vectors, or the k-NN training set
  std::vector<std::vector<double>> coef_;
  std::vector<double> bias_;
  std::vector<int> train_y_;
  Mlp mlp_;
};

// Fits the normalizer (when standardize is set) and the classifier on X.
// Throws InputError for non-finite features or inconsistent labels and
// TrainingError subclasses when optimization fails.
Model train(const FeatureMatrix& X, std::span<const int> y, std::size_t n_classes, const ClassifierSpec& spec);
Model train(const Dataset& data, const ClassifierSpec& spec);

struct GridCell {
  ClassifierSpec spec;
  std::vector<double> fold_accuracy;
  double mean_accuracy = 0.0;
};

struct GridResult {
  ClassifierSpec best;
  std::vector<GridCell> cells;
};

// SVM: linear x C, gaussian x C x gamma. k-NN: log-spaced k x distances.
// MLP: 1..3 layers of log-spaced widths x activations.
std::vector<ClassifierSpec> default_grid(ClassifierKind kind, std::size_t dims, const ClassifierSpec& base = {});

// Ordering used to break accuracy ties: linear before gaussian, fewer
// neighbours, fewer hidden units, then smaller C and gamma.
bool simpler(const ClassifierSpec& a, const ClassifierSpec& b);

// Mean stratified-CV accuracy per cell; k-NN cells with k above the smallest
// training fold are skipped. Throws InputError when the grid is empty.
GridResult grid_search(const FeatureMatrix& X, std::span<const int> y, std::size_t n_classes,
                       std::span<const ClassifierSpec> grid, int folds, std::uint64_t seed);

}  // namespace vitalid
