#include <algorithm>
#include <numeric>

#include "touchauth/oneclass.hpp"

namespace touchauth {

namespace {

constexpr double kDistFloor = 1e-12;

struct Neighbor {
  double dist;
  Eigen::Index index;
};

// k nearest rows of `train` to x, ordered by (distance, index); `skip` is
// excluded (-1 for none).
std::vector<Neighbor> nearest(const Samples& train, const Eigen::VectorXd& x, int k,
                              Eigen::Index skip) {
  std::vector<Neighbor> all;
  all.reserve(static_cast<std::size_t>(train.rows()));
  for (Eigen::Index i = 0; i < train.rows(); ++i) {
    if (i == skip) continue;
    all.push_back({(train.row(i).transpose() - x).norm(), i});
  }
  auto cmp = [](const Neighbor& a, const Neighbor& b) {
    return a.dist < b.dist || (a.dist == b.dist && a.index < b.index);
  };
  std::partial_sort(all.begin(), all.begin() + k, all.end(), cmp);
  all.resize(static_cast<std::size_t>(k));
  return all;
}

double local_density(const LofModel& m, const std::vector<Neighbor>& nb) {
  double sum = 0.0;
  for (const auto& o : nb) sum += std::max({m.k_distance[o.index], o.dist, kDistFloor});
  return 1.0 / (sum / static_cast<double>(nb.size()));
}

double lof_from(const LofModel& m, const std::vector<Neighbor>& nb) {
  double sum = 0.0;
  for (const auto& o : nb) sum += m.lrd[o.index];
  return (sum / static_cast<double>(nb.size())) / local_density(m, nb);
}

}  // namespace

LofModel lof_fit(const Samples& X, int k) {
  const auto n = X.rows();
  if (k < 1 || k >= n) {
    throw InvariantError("lof_fit: need 1 <= k < n (k=" + std::to_string(k) +
                         ", n=" + std::to_string(n) + ")");
  }
  LofModel m;
  m.train = X;
  m.k = k;
  std::vector<std::vector<Neighbor>> nbs(static_cast<std::size_t>(n));
  m.k_distance.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    nbs[i] = nearest(X, X.row(i).transpose(), k, i);
    m.k_distance[i] = nbs[i].back().dist;
  }
  m.lrd.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) m.lrd[i] = local_density(m, nbs[i]);
  return m;
}

double lof_score(const LofModel& m, const Eigen::VectorXd& x) {
  if (x.size() != m.train.cols()) throw InvariantError("lof_score: dimension mismatch");
  return -lof_from(m, nearest(m.train, x, m.k, -1));
}

double lof_score_train(const LofModel& m, Eigen::Index i) {
  return -lof_from(m, nearest(m.train, m.train.row(i).transpose(), m.k, i));
}

}  // namespace touchauth
