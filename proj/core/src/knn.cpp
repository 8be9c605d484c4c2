#include <algorithm>
#include <cmath>
#include <numeric>

#include "vitalid/classify.hpp"

namespace vitalid {

namespace {

double distance(std::span<const double> a, std::span<const double> b, Distance metric) {
  double acc = 0.0;
  switch (metric) {
    case Distance::euclidean:
      for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
      return std::sqrt(acc);
    case Distance::cityblock:
      for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(a[i] - b[i]);
      return acc;
    case Distance::cosine: {
      double na = 0.0, nb = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) {
        acc += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
      }
      if (na == 0.0 || nb == 0.0) return 1.0;
      return 1.0 - acc / (std::sqrt(na) * std::sqrt(nb));
    }
  }
  return acc;
}

}  // namespace

std::vector<double> Model::knn_scores(std::span<const double> z, int& label) const {
  const std::size_t n = sv_.rows();
  const auto k = static_cast<std::size_t>(spec_.knn.k);
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = distance(sv_.row(i), z, spec_.knn.distance);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    [&](std::size_t a, std::size_t b) { return d[a] < d[b] || (d[a] == d[b] && a < b); });

  std::vector<double> votes(n_classes_, 0.0), cumulative(n_classes_, 0.0);
  for (std::size_t r = 0; r < k; ++r) {
    const auto c = static_cast<std::size_t>(train_y_[order[r]]);
    votes[c] += 1.0;
    cumulative[c] += d[order[r]];
  }
  std::size_t best = 0;
  for (std::size_t c = 1; c < n_classes_; ++c)
    if (votes[c] > votes[best] || (votes[c] == votes[best] && cumulative[c] < cumulative[best])) best = c;
  label = static_cast<int>(best);
  for (double& v : votes) v /= static_cast<double>(k);
  return votes;
}

}  // namespace vitalid
