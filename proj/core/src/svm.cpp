#include <cmath>
#include <limits>

#include "vitalid/classify.hpp"
#include "vitalid/error.hpp"

namespace vitalid {

double svm_kernel(std::span<const double> a, std::span<const double> b, SvmKernel kernel, double gamma) {
  double acc = 0.0;
  if (kernel == SvmKernel::linear) {
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
  }
  for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
  return std::exp(-gamma * acc);
}

std::vector<double> kernel_matrix(const FeatureMatrix& X, SvmKernel kernel, double gamma) {
  const std::size_t n = X.rows();
  std::vector<double> K(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) K[i * n + j] = K[j * n + i] = svm_kernel(X.row(i), X.row(j), kernel, gamma);
  return K;
}

// LIBSVM-style SMO on min 1/2 a'Qa - e'a, Q_ij = y_i y_j K_ij,
// 0 <= a <= C, y'a = 0.
BinarySvm solve_binary_svm(std::span<const double> K, std::span<const int> y, double C, double tol, long max_iter) {
  const std::size_t n = y.size();
  if (K.size() != n * n) throw InputError("kernel matrix size does not match labels");
  constexpr double kTau = 1e-12;
  std::vector<double> a(n, 0.0), G(n, -1.0);
  auto upper = [&](std::size_t t) { return a[t] >= C; };
  auto lower = [&](std::size_t t) { return a[t] <= 0.0; };

  BinarySvm out;
  long iter = 0;
  for (;; ++iter) {
    // i: maximal violator in I_up.
    double gmax = -std::numeric_limits<double>::infinity();
    std::ptrdiff_t i = -1;
    for (std::size_t t = 0; t < n; ++t) {
      if (y[t] > 0 ? !upper(t) : !lower(t)) {
        const double v = -y[t] * G[t];
        if (v >= gmax) {
          gmax = v;
          i = static_cast<std::ptrdiff_t>(t);
        }
      }
    }
    // j: second-order choice in I_low.
    double gmax2 = -std::numeric_limits<double>::infinity();
    std::ptrdiff_t j = -1;
    double obj_min = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < n; ++t) {
      if (!(y[t] > 0 ? !lower(t) : !upper(t))) continue;
      const double v = y[t] * G[t];
      gmax2 = std::max(gmax2, v);
      if (i < 0) continue;
      const double diff = gmax + v;
      if (diff > 0.0) {
        double quad = K[i * n + i] + K[t * n + t] - 2.0 * K[i * n + t];
        if (quad <= 0.0) quad = kTau;
        const double obj = -(diff * diff) / quad;
        if (obj <= obj_min) {
          obj_min = obj;
          j = static_cast<std::ptrdiff_t>(t);
        }
      }
    }
    out.kkt_gap = gmax + gmax2;
    if (i < 0 || j < 0 || out.kkt_gap < tol) break;
    if (iter >= max_iter)
      throw ConvergenceError("SMO did not reach the KKT tolerance", iter);

    const double ai = a[i], aj = a[j];
    const double* Ki = &K[i * n];
    const double* Kj = &K[j * n];
    double quad = Ki[i] + Kj[j] - 2.0 * Ki[j];
    if (quad <= 0.0) quad = kTau;
    if (y[i] != y[j]) {
      const double delta = (-G[i] - G[j]) / quad;
      const double diff = a[i] - a[j];
      a[i] += delta;
      a[j] += delta;
      if (diff > 0.0) {
        if (a[j] < 0.0) {
          a[j] = 0.0;
          a[i] = diff;
        }
      } else if (a[i] < 0.0) {
        a[i] = 0.0;
        a[j] = -diff;
      }
      if (diff > 0.0) {
        if (a[i] > C) {
          a[i] = C;
          a[j] = C - diff;
        }
      } else if (a[j] > C) {
        a[j] = C;
        a[i] = C + diff;
      }
    } else {
      const double delta = (G[i] - G[j]) / quad;
      const double sum = a[i] + a[j];
      a[i] -= delta;
      a[j] += delta;
      if (sum > C) {
        if (a[i] > C) {
          a[i] = C;
          a[j] = sum - C;
        }
      } else if (a[j] < 0.0) {
        a[j] = 0.0;
        a[i] = sum;
      }
      if (sum > C) {
        if (a[j] > C) {
          a[j] = C;
          a[i] = sum - C;
        }
      } else if (a[i] < 0.0) {
        a[i] = 0.0;
        a[j] = sum;
      }
    }
    const double dai = (a[i] - ai) * y[i], daj = (a[j] - aj) * y[j];
    for (std::size_t t = 0; t < n; ++t) G[t] += y[t] * (Ki[t] * dai + Kj[t] * daj);
  }

  // rho from free vectors, else the midpoint of the feasible interval.
  double ub = std::numeric_limits<double>::infinity(), lb = -ub, sum_free = 0.0;
  std::size_t n_free = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = y[t] * G[t];
    if (upper(t)) {
      if (y[t] < 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else if (lower(t)) {
      if (y[t] > 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  const double rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : (ub + lb) / 2.0;
  out.alpha = std::move(a);
  out.bias = -rho;
  out.iterations = iter;
  return out;
}

BinarySvm solve_binary_svm(const FeatureMatrix& X, std::span<const int> y, const SvmSpec& spec) {
  if (X.rows() != y.size()) throw InputError("label count does not match feature rows");
  const double gamma = spec.gamma > 0.0 ? spec.gamma : 1.0 / static_cast<double>(X.cols());
  return solve_binary_svm(kernel_matrix(X, spec.kernel, gamma), y, spec.C, spec.tol, spec.max_iter);
}

std::vector<double> Model::svm_scores(std::span<const double> z) const {
  std::vector<double> k(sv_.rows());
  for (std::size_t s = 0; s < sv_.rows(); ++s) k[s] = svm_kernel(sv_.row(s), z, spec_.svm.kernel, gamma_);
  std::vector<double> scores(n_classes_);
  for (std::size_t c = 0; c < coef_.size(); ++c) {
    double f = bias_[c];
    for (std::size_t s = 0; s < k.size(); ++s) f += coef_[c][s] * k[s];
    scores[c] = f;
  }
  if (coef_.size() == 1) scores[1] = -scores[0];
  return scores;
}

}  // namespace vitalid
