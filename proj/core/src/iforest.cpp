#include <algorithm>
#include <cmath>
#include <numeric>

#include "touchauth/oneclass.hpp"

namespace touchauth {

double iforest_c(double n) {
  if (n <= 1.0) return 0.0;
  if (n <= 2.0) return 1.0;
  constexpr double kEulerGamma = 0.5772156649;
  return 2.0 * (std::log(n - 1.0) + kEulerGamma) - 2.0 * (n - 1.0) / n;
}

int IsoTree::height() const {
  std::vector<int> depth(nodes.size(), 0);
  int h = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& nd = nodes[i];
    if (nd.feature < 0) {
      h = std::max(h, depth[i]);
      continue;
    }
    depth[nd.left] = depth[nd.right] = depth[i] + 1;
  }
  return h;
}

namespace {

class TreeBuilder {
 public:
  TreeBuilder(const Samples& X, int limit, Rng& rng) : X_(X), limit_(limit), rng_(rng) {}

  IsoTree build(std::vector<Eigen::Index> idx) {
    tree_.nodes.clear();
    grow(idx, 0);
    return std::move(tree_);
  }

 private:
  int leaf(std::size_t size) {
    tree_.nodes.push_back({-1, 0.0, -1, -1, static_cast<int>(size)});
    return static_cast<int>(tree_.nodes.size() - 1);
  }

  int grow(std::vector<Eigen::Index>& idx, int depth) {
    if (depth >= limit_ || idx.size() <= 1) return leaf(idx.size());

    std::vector<int> candidates;
    std::vector<double> lo, hi;
    for (Eigen::Index f = 0; f < X_.cols(); ++f) {
      double mn = X_(idx[0], f), mx = mn;
      for (auto i : idx) {
        mn = std::min(mn, X_(i, f));
        mx = std::max(mx, X_(i, f));
      }
      if (mx > mn) {
        candidates.push_back(static_cast<int>(f));
        lo.push_back(mn);
        hi.push_back(mx);
      }
    }
    if (candidates.empty()) return leaf(idx.size());

    const auto pick = rng_.below(candidates.size());
    const int f = candidates[pick];
    const double split = rng_.uniform(lo[pick], hi[pick]);
    std::vector<Eigen::Index> left, right;
    for (auto i : idx) (X_(i, f) < split ? left : right).push_back(i);
    if (left.empty() || right.empty()) return leaf(idx.size());

    const int self = static_cast<int>(tree_.nodes.size());
    tree_.nodes.push_back({f, split, -1, -1, static_cast<int>(idx.size())});
    const int l = grow(left, depth + 1);
    const int r = grow(right, depth + 1);
    tree_.nodes[self].left = l;
    tree_.nodes[self].right = r;
    return self;
  }

  const Samples& X_;
  int limit_;
  Rng& rng_;
  IsoTree tree_;
};

}  // namespace

IForestModel iforest_fit(const Samples& X, int n_trees, int psi, std::uint64_t seed) {
  const auto n = X.rows();
  if (n < 2) throw InvariantError("iforest_fit: need at least 2 samples");
  if (n_trees < 1 || psi < 2) throw InvariantError("iforest_fit: need n_trees >= 1 and psi >= 2");
  IForestModel m;
  m.psi = static_cast<int>(std::min<Eigen::Index>(psi, n));
  m.seed = seed;
  const int limit = static_cast<int>(std::ceil(std::log2(static_cast<double>(m.psi))));
  for (int t = 0; t < n_trees; ++t) {
    Rng rng(Rng::derive(seed, static_cast<std::uint64_t>(t)));
    std::vector<Eigen::Index> all(static_cast<std::size_t>(n));
    std::iota(all.begin(), all.end(), 0);
    for (int k = 0; k < m.psi; ++k) {
      std::swap(all[k], all[k + rng.below(static_cast<std::uint64_t>(n - k))]);
    }
    all.resize(static_cast<std::size_t>(m.psi));
    m.trees.push_back(TreeBuilder(X, limit, rng).build(std::move(all)));
  }
  return m;
}

double iforest_path_length(const IForestModel& m, const Eigen::VectorXd& x) {
  double total = 0.0;
  for (const auto& tree : m.trees) {
    int node = 0, depth = 0;
    while (tree.nodes[node].feature >= 0) {
      const auto& nd = tree.nodes[node];
      if (nd.feature >= x.size()) throw InvariantError("iforest: dimension mismatch");
      node = x(nd.feature) < nd.split ? nd.left : nd.right;
      ++depth;
    }
    total += depth + iforest_c(tree.nodes[node].size);
  }
  return total / static_cast<double>(m.trees.size());
}

double iforest_anomaly(const IForestModel& m, const Eigen::VectorXd& x) {
  return std::pow(2.0, -iforest_path_length(m, x) / iforest_c(m.psi));
}

double iforest_score(const IForestModel& m, const Eigen::VectorXd& x) { return -iforest_anomaly(m, x); }

}  // namespace touchauth
