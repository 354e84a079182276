#pragma once

// Independent reference computations used by the unit and acceptance tests.
// Nothing here calls into the library under test.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

namespace oracle {

enum class Bound { lower, upper, free };

/// Best feasible point of  min 1/2 a'Qa + p'a, y'a = 0, 0 <= a <= C  when
/// each variable is pinned to the given bound or left free.
inline std::optional<double> restricted_optimum(const Eigen::MatrixXd& Q, const Eigen::VectorXd& p,
                                                const Eigen::VectorXd& y, double C,
                                                const std::vector<Bound>& states, Eigen::VectorXd* alpha_out) {
  const auto n = static_cast<Eigen::Index>(states.size());
  Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
  std::vector<Eigen::Index> fr;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (states[i] == Bound::upper) a[i] = C;
    if (states[i] == Bound::free) fr.push_back(i);
  }
  const auto m = static_cast<Eigen::Index>(fr.size());
  if (m > 0) {
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(m + 1, m + 1);
    Eigen::VectorXd rhs(m + 1);
    for (Eigen::Index r = 0; r < m; ++r) {
      double fixed = 0.0;
      for (Eigen::Index j = 0; j < n; ++j)
        if (states[j] != Bound::free) fixed += Q(fr[r], j) * a[j];
      for (Eigen::Index c = 0; c < m; ++c) kkt(r, c) = Q(fr[r], fr[c]);
      kkt(r, m) = y[fr[r]];
      kkt(m, r) = y[fr[r]];
      rhs[r] = -p[fr[r]] - fixed;
    }
    double ya = 0.0;
    for (Eigen::Index j = 0; j < n; ++j)
      if (states[j] != Bound::free) ya += y[j] * a[j];
    rhs[m] = -ya;
    const Eigen::VectorXd sol = kkt.completeOrthogonalDecomposition().solve(rhs);
    if ((kkt * sol - rhs).norm() > 1e-9 * (1.0 + rhs.norm())) return std::nullopt;
    for (Eigen::Index r = 0; r < m; ++r) a[fr[r]] = sol[r];
  } else if (std::abs(y.dot(a)) > 1e-12) {
    return std::nullopt;
  }
  const double slack = 1e-10 * (1.0 + C);
  for (Eigen::Index i = 0; i < n; ++i)
    if (a[i] < -slack || a[i] > C + slack) return std::nullopt;
  if (std::abs(y.dot(a)) > 1e-9) return std::nullopt;
  if (alpha_out) *alpha_out = a;
  return 0.5 * a.dot(Q * a) + p.dot(a);
}

/// Exhaustive search over all 3^n active sets.
inline double brute_force_dual(const Eigen::MatrixXd& Q, const Eigen::VectorXd& p, const Eigen::VectorXd& y,
                               double C) {
  const auto n = static_cast<std::size_t>(Q.rows());
  std::size_t combos = 1;
  for (std::size_t i = 0; i < n; ++i) combos *= 3;
  double best = std::numeric_limits<double>::infinity();
  std::vector<Bound> states(n);
  for (std::size_t code = 0; code < combos; ++code) {
    std::size_t c = code;
    for (std::size_t i = 0; i < n; ++i, c /= 3) states[i] = static_cast<Bound>(c % 3);
    if (auto v = restricted_optimum(Q, p, y, C, states, nullptr)) best = std::min(best, *v);
  }
  return best;
}

/// Epsilon-SVR dual over 2n variables (alpha, alpha*). At the optimum a
/// point never has both multipliers positive, so each point takes one of
/// five joint states.
inline double brute_force_svr(const Eigen::MatrixXd& K, const Eigen::VectorXd& z, double C, double eps) {
  const auto n = K.rows();
  Eigen::MatrixXd Q(2 * n, 2 * n);
  Eigen::VectorXd p(2 * n), y(2 * n);
  for (Eigen::Index i = 0; i < 2 * n; ++i) {
    y[i] = i < n ? 1.0 : -1.0;
    p[i] = i < n ? eps - z[i] : eps + z[i - n];
  }
  for (Eigen::Index i = 0; i < 2 * n; ++i)
    for (Eigen::Index j = 0; j < 2 * n; ++j) Q(i, j) = y[i] * y[j] * K(i % n, j % n);
  static const Bound joint[5][2] = {{Bound::lower, Bound::lower}, {Bound::free, Bound::lower},
                                    {Bound::upper, Bound::lower}, {Bound::lower, Bound::free},
                                    {Bound::lower, Bound::upper}};
  std::size_t combos = 1;
  for (Eigen::Index i = 0; i < n; ++i) combos *= 5;
  double best = std::numeric_limits<double>::infinity();
  std::vector<Bound> states(static_cast<std::size_t>(2 * n));
  for (std::size_t code = 0; code < combos; ++code) {
    std::size_t c = code;
    for (Eigen::Index i = 0; i < n; ++i, c /= 5) {
      states[static_cast<std::size_t>(i)] = joint[c % 5][0];
      states[static_cast<std::size_t>(i + n)] = joint[c % 5][1];
    }
    if (auto v = restricted_optimum(Q, p, y, C, states, nullptr)) best = std::min(best, *v);
  }
  return best;
}

inline double rbf(const std::vector<double>& u, const std::vector<double>& v, double gamma) {
  double d2 = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) d2 += (u[i] - v[i]) * (u[i] - v[i]);
  return std::exp(-gamma * d2);
}

inline Eigen::MatrixXd rbf_gram(const std::vector<std::vector<double>>& x, double gamma) {
  const auto n = static_cast<Eigen::Index>(x.size());
  Eigen::MatrixXd K(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      K(i, j) = rbf(x[static_cast<std::size_t>(i)], x[static_cast<std::size_t>(j)], gamma);
  return K;
}

/// Normal-incidence Fresnel coefficient in extended precision.
inline std::complex<long double> fresnel_ld(std::complex<long double> e1, std::complex<long double> e2) {
  const auto n1 = std::sqrt(e1), n2 = std::sqrt(e2);
  return (n1 - n2) / (n1 + n2);
}

/// F1 of class `positive` from precision and recall, counted directly.
inline double f1_from_counts(const std::vector<int>& truth, const std::vector<int>& pred, int positive) {
  double tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (pred[i] == positive && truth[i] == positive) ++tp;
    if (pred[i] == positive && truth[i] != positive) ++fp;
    if (pred[i] != positive && truth[i] == positive) ++fn;
  }
  const double precision = tp / (tp + fp), recall = tp / (tp + fn);
  return 2.0 * precision * recall / (precision + recall);
}

/// Root mean square error accumulated with Kahan summation in long double.
inline double rmse_ld(const std::vector<double>& a, const std::vector<double>& b) {
  long double sum = 0.0L, comp = 0.0L;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const long double d = static_cast<long double>(a[i]) - static_cast<long double>(b[i]);
    const long double term = d * d - comp;
    const long double t = sum + term;
    comp = (t - sum) - term;
    sum = t;
  }
  return static_cast<double>(std::sqrt(sum / static_cast<long double>(a.size())));
}

}  // namespace oracle
