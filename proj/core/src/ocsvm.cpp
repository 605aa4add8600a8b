#include <algorithm>
#include <cmath>
#include <limits>

#include "touchauth/oneclass.hpp"

namespace touchauth {

Eigen::MatrixXd rbf_kernel(const Samples& X, double gamma) {
  const auto n = X.rows();
  Eigen::MatrixXd K(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    K(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      K(i, j) = K(j, i) = std::exp(-gamma * (X.row(i) - X.row(j)).squaredNorm());
    }
  }
  return K;
}

OcSvmSolution ocsvm_solve(const Eigen::MatrixXd& K, double nu, double tol, long max_iter) {
  const auto n = K.rows();
  if (n < 1 || K.cols() != n) throw InvariantError("ocsvm: kernel must be square and non-empty");
  if (!(nu > 0.0 && nu <= 1.0)) throw InvariantError("ocsvm: nu must be in (0, 1]");
  const double C = 1.0 / (nu * static_cast<double>(n));

  // Feasible start: fill alphas at the bound in index order until the sum is 1.
  Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
  double remaining = 1.0;
  for (Eigen::Index i = 0; i < n && remaining > 0.0; ++i) {
    a(i) = std::min(C, remaining);
    remaining -= a(i);
  }
  Eigen::VectorXd G = K * a;

  const double eps_bound = 1e-12 * C;
  auto at_upper = [&](Eigen::Index i) { return a(i) >= C - eps_bound; };
  auto at_lower = [&](Eigen::Index i) { return a(i) <= eps_bound; };

  OcSvmSolution sol;
  for (;;) {
    // i: most negative gradient among those that can grow; j: most positive
    // among those that can shrink.
    Eigen::Index i = -1, j = -1;
    double gmin = std::numeric_limits<double>::infinity();
    double gmax = -std::numeric_limits<double>::infinity();
    for (Eigen::Index t = 0; t < n; ++t) {
      if (!at_upper(t) && G(t) < gmin) gmin = G(t), i = t;
      if (!at_lower(t) && G(t) > gmax) gmax = G(t), j = t;
    }
    sol.max_violation = (i < 0 || j < 0) ? 0.0 : std::max(0.0, gmax - gmin);
    if (sol.max_violation < tol) break;
    if (sol.iterations >= max_iter) {
      throw ConvergenceError("ocsvm: no convergence after " + std::to_string(max_iter) +
                                 " iterations (max KKT violation " +
                                 std::to_string(sol.max_violation) + ")",
                             sol.max_violation);
    }
    ++sol.iterations;

    const double quad = std::max(K(i, i) + K(j, j) - 2.0 * K(i, j), 1e-12);
    double step = (G(j) - G(i)) / quad;
    step = std::min({step, C - a(i), a(j)});
    a(i) += step;
    a(j) -= step;
    if (C - a(i) <= eps_bound) a(i) = C;
    if (a(j) <= eps_bound) a(j) = 0.0;
    G += step * (K.col(i) - K.col(j));
  }

  // rho: mean gradient over free alphas, else the midpoint of the feasible
  // interval given by the bounded ones.
  double sum_free = 0.0;
  long n_free = 0;
  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  for (Eigen::Index t = 0; t < n; ++t) {
    if (at_upper(t)) {
      lb = std::max(lb, G(t));
    } else if (at_lower(t)) {
      ub = std::min(ub, G(t));
    } else {
      sum_free += G(t);
      ++n_free;
    }
  }
  if (n_free > 0) {
    sol.rho = sum_free / static_cast<double>(n_free);
  } else if (std::isinf(ub)) {
    sol.rho = lb;
  } else if (std::isinf(lb)) {
    sol.rho = ub;
  } else {
    sol.rho = 0.5 * (ub + lb);
  }
  sol.alpha = std::move(a);
  sol.objective = 0.5 * sol.alpha.dot(K * sol.alpha);
  return sol;
}

OcSvmModel ocsvm_train(const Samples& X, double nu, double gamma, double tol, long max_iter) {
  if (X.rows() < 2) throw InvariantError("ocsvm_train: need at least 2 samples");
  if (!(gamma > 0.0)) throw InvariantError("ocsvm_train: gamma must be > 0");
  const auto sol = ocsvm_solve(rbf_kernel(X, gamma), nu, tol, max_iter);
  std::vector<Eigen::Index> sv;
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    if (sol.alpha(i) > 1e-9) sv.push_back(i);
  OcSvmModel m;
  m.support_vectors.resize(static_cast<Eigen::Index>(sv.size()), X.cols());
  m.alpha.resize(static_cast<Eigen::Index>(sv.size()));
  for (std::size_t k = 0; k < sv.size(); ++k) {
    m.support_vectors.row(k) = X.row(sv[k]);
    m.alpha(k) = sol.alpha(sv[k]);
  }
  m.rho = sol.rho;
  m.gamma = gamma;
  m.nu = nu;
  m.max_violation = sol.max_violation;
  return m;
}

double ocsvm_score(const OcSvmModel& m, const Eigen::VectorXd& x) {
  if (x.size() != m.support_vectors.cols()) throw InvariantError("ocsvm_score: dimension mismatch");
  double f = 0.0;
  for (Eigen::Index i = 0; i < m.support_vectors.rows(); ++i) {
    f += m.alpha(i) * std::exp(-m.gamma * (m.support_vectors.row(i).transpose() - x).squaredNorm());
  }
  return f - m.rho;
}

}  // namespace touchauth
