#include <Eigen/Dense>

#include <cmath>
#include <numeric>

#include "vitalid/classify.hpp"
#include "vitalid/error.hpp"
#include "vitalid/rng.hpp"

namespace vitalid {

namespace {

using Mat = Eigen::MatrixXd;
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Mat activate(const Mat& z, Activation a) {
  if (a == Activation::relu) return z.cwiseMax(0.0);
  return (1.0 + (-z.array()).exp()).inverse().matrix();
}

Mat activation_slope(const Mat& z, const Mat& out, Activation a) {
  if (a == Activation::relu) return (z.array() > 0.0).cast<double>().matrix();
  return (out.array() * (1.0 - out.array())).matrix();
}

// Columns of X are samples. Returns mean cross-entropy; fills the gradient
// when requested.
double batch_loss(const Mlp& net, const Mat& X, std::span<const int> y, std::vector<double>* gradient) {
  const std::size_t L = net.weights.size();
  const auto n = static_cast<double>(X.cols());
  std::vector<Mat> z(L), act(L + 1);
  act[0] = X;
  for (std::size_t l = 0; l < L; ++l) {
    const Eigen::Map<const RowMat> W(net.weights[l].data(), net.layer_sizes[l + 1], net.layer_sizes[l]);
    const Eigen::Map<const Eigen::VectorXd> b(net.biases[l].data(), net.layer_sizes[l + 1]);
    z[l] = (W * act[l]).colwise() + b;
    if (l + 1 < L) act[l + 1] = activate(z[l], net.activation);
  }
  // Log-softmax of the output layer.
  Mat& logits = z[L - 1];
  const Eigen::RowVectorXd mx = logits.colwise().maxCoeff();
  Mat shifted = logits.rowwise() - mx;
  const Eigen::RowVectorXd lse = shifted.array().exp().colwise().sum().log().matrix();
  double loss = 0.0;
  for (Eigen::Index c = 0; c < logits.cols(); ++c) loss -= shifted(y[c], c) - lse(c);
  loss /= n;
  if (!gradient) return loss;

  gradient->assign(net.n_parameters(), 0.0);
  Mat delta = (shifted.rowwise() - lse).array().exp().matrix();
  for (Eigen::Index c = 0; c < delta.cols(); ++c) delta(y[c], c) -= 1.0;
  delta /= n;
  std::vector<std::size_t> offset(L);
  std::size_t pos = 0;
  for (std::size_t l = 0; l < L; ++l) {
    offset[l] = pos;
    pos += net.weights[l].size() + net.biases[l].size();
  }
  for (std::size_t l = L; l-- > 0;) {
    const int out = net.layer_sizes[l + 1], in = net.layer_sizes[l];
    Eigen::Map<RowMat> dW(gradient->data() + offset[l], out, in);
    Eigen::Map<Eigen::VectorXd> db(gradient->data() + offset[l] + net.weights[l].size(), out);
    dW = delta * act[l].transpose();
    db = delta.rowwise().sum();
    if (l == 0) break;
    const Eigen::Map<const RowMat> W(net.weights[l].data(), out, in);
    delta = ((W.transpose() * delta).array() * activation_slope(z[l - 1], act[l], net.activation).array()).matrix();
  }
  return loss;
}

Mat columns(const FeatureMatrix& X, std::span<const std::size_t> rows) {
  Mat out(X.cols(), rows.size());
  for (std::size_t c = 0; c < rows.size(); ++c)
    for (std::size_t d = 0; d < X.cols(); ++d) out(d, c) = X(rows[c], d);
  return out;
}

}  // namespace

Mlp Mlp::init(std::vector<int> layer_sizes, Activation activation, std::uint64_t seed) {
  if (layer_sizes.size() < 2) throw InputError("MLP needs input and output layers");
  Mlp net;
  net.layer_sizes = std::move(layer_sizes);
  net.activation = activation;
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < net.layer_sizes.size(); ++l) {
    const int in = net.layer_sizes[l], out = net.layer_sizes[l + 1];
    const double limit = std::sqrt(6.0 / (in + out));
    std::vector<double> W(static_cast<std::size_t>(in) * out);
    for (double& w : W) w = rng.uniform(-limit, limit);
    net.weights.push_back(std::move(W));
    net.biases.emplace_back(static_cast<std::size_t>(out), 0.0);
  }
  return net;
}

std::vector<double> Mlp::forward(std::span<const double> x) const {
  if (x.size() != static_cast<std::size_t>(layer_sizes.front())) throw InputError("MLP input dimension mismatch");
  Eigen::VectorXd a = Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
  for (std::size_t l = 0; l < weights.size(); ++l) {
    const Eigen::Map<const RowMat> W(weights[l].data(), layer_sizes[l + 1], layer_sizes[l]);
    const Eigen::Map<const Eigen::VectorXd> b(biases[l].data(), layer_sizes[l + 1]);
    Eigen::VectorXd z = W * a + b;
    a = l + 1 < weights.size() ? Eigen::VectorXd(activate(z, activation)) : z;
  }
  const double mx = a.maxCoeff();
  Eigen::VectorXd e = (a.array() - mx).exp();
  e /= e.sum();
  return {e.data(), e.data() + e.size()};
}

double Mlp::loss_and_gradient(const FeatureMatrix& X, std::span<const int> y, std::vector<double>* gradient) const {
  if (X.rows() != y.size() || X.rows() == 0) throw InputError("MLP batch and labels disagree");
  std::vector<std::size_t> rows(X.rows());
  std::iota(rows.begin(), rows.end(), 0);
  return batch_loss(*this, columns(X, rows), y, gradient);
}

std::size_t Mlp::n_parameters() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) n += weights[l].size() + biases[l].size();
  return n;
}

std::vector<double> Mlp::flatten() const {
  std::vector<double> p;
  p.reserve(n_parameters());
  for (std::size_t l = 0; l < weights.size(); ++l) {
    p.insert(p.end(), weights[l].begin(), weights[l].end());
    p.insert(p.end(), biases[l].begin(), biases[l].end());
  }
  return p;
}

void Mlp::unflatten(std::span<const double> p) {
  if (p.size() != n_parameters()) throw InputError("MLP parameter count mismatch");
  std::size_t pos = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    for (double& w : weights[l]) w = p[pos++];
    for (double& b : biases[l]) b = p[pos++];
  }
}

Mlp train_mlp(const FeatureMatrix& Z, std::span<const int> y, std::size_t n_classes, const MlpSpec& spec,
              std::uint64_t seed) {
  std::vector<int> sizes{static_cast<int>(Z.cols())};
  sizes.insert(sizes.end(), spec.sizes.begin(), spec.sizes.end());
  sizes.push_back(static_cast<int>(n_classes));
  Mlp net = Mlp::init(sizes, spec.activation, derive_seed(seed, 1));
  Rng order_rng(derive_seed(seed, 2));

  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  std::vector<double> params = net.flatten(), m(params.size(), 0.0), v(params.size(), 0.0), grad;
  std::vector<std::size_t> order(Z.rows());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t batch = static_cast<std::size_t>(spec.batch);
  double best = std::numeric_limits<double>::infinity();
  int stale = 0;
  long step = 0;
  std::vector<int> yb;

  for (int epoch = 0; epoch < spec.epochs; ++epoch) {
    const double lr = spec.learning_rate * std::pow(spec.decay, epoch / spec.decay_every);
    order_rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      const std::span<const std::size_t> rows(order.data() + start, end - start);
      yb.clear();
      for (std::size_t r : rows) yb.push_back(y[r]);
      const double loss = batch_loss(net, columns(Z, rows), yb, &grad);
      if (!std::isfinite(loss) || loss > 1e6) throw DivergenceError(epoch, loss);
      epoch_loss += loss * static_cast<double>(rows.size());
      ++step;
      const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
      for (std::size_t i = 0; i < params.size(); ++i) {
        m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * grad[i];
        v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * grad[i] * grad[i];
        params[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + kEps);
      }
      net.unflatten(params);
    }
    epoch_loss /= static_cast<double>(order.size());
    net.epochs_run = epoch + 1;
    net.final_loss = epoch_loss;
    if (epoch_loss < best) {
      best = epoch_loss;
      stale = 0;
    } else if (++stale >= spec.patience) {
      break;
    }
  }
  return net;
}

}  // namespace vitalid
