#pragma once

#include <cmath>
#include <functional>

#include <Eigen/Core>

#include "lmiql/baselines.hpp"
#include "lmiql/env.hpp"
#include "lmiql/qmodel.hpp"

namespace lmiql::testing {

// Values computed offline with scipy.linalg.solve_discrete_are on the sqrt(g)-scaled pair.
inline Eigen::RowVector2d frozen_lqr_gain() { return {-0.07740925329539755, -0.3197939929644865}; }
inline Eigen::Matrix2d frozen_lqr_p() {
  Eigen::Matrix2d P;
  P << 1.5239703496190469, 0.3006898014572211, 0.3006898014572211, 1.3102418972108532;
  return P;
}
inline Eigen::RowVector2d frozen_inaccurate_gain() { return {-0.2335485575882807, 0.0079579829356043}; }
inline Eigen::RowVector2d frozen_oracle_lqr_gain() { return {-13.933485603624531, -6.267376196041456}; }

inline LinearModel lqr_model() {
  LinearModel lm;
  lm.A.resize(2, 2);
  lm.A << 0.6, 0.3, 0.0, 0.5;
  lm.B = Eigen::Vector2d(0.0, 1.0);
  lm.Q_cost = Eigen::MatrixXd::Identity(2, 2);
  lm.R_cost = Eigen::MatrixXd::Identity(1, 1);
  lm.gamma = 0.98;
  return lm;
}

inline RewardSpec lqr_reward() { return RewardSpec{Eigen::MatrixXd::Identity(3, 3)}; }

/// Noise-free transitions of the LQR model, x uniform on [-1, 1]^2, u ~ N(0, 1).
inline Dataset lqr_dataset(int n, std::uint64_t seed) {
  const auto lm = lqr_model();
  const Environment env{LinearSystem{lm.A, lm.B, 0.0, 0.0}};
  return generate_dataset(env, lqr_reward(), n, seed,
                          InitSampler::uniform(Eigen::Vector2d(-1, -1), Eigen::Vector2d(1, 1)), 1.0);
}

/// Exact Q-function parameters of the LQR problem on phi(x) = x:
/// S = [[Q + gA'PA, gA'PB], [gB'PA, R + gB'PB]], T = 0, R = 0.
inline QParams riccati_params(const LinearModel& lm, const Eigen::MatrixXd& P) {
  const int n = static_cast<int>(lm.A.rows());
  const int m = static_cast<int>(lm.B.cols());
  QParams p = QParams::zeros(n, m);
  const double g = lm.gamma;
  p.S.topLeftCorner(n, n) = lm.Q_cost + g * lm.A.transpose() * P * lm.A;
  p.S.topRightCorner(n, m) = g * lm.A.transpose() * P * lm.B;
  p.S.bottomLeftCorner(m, n) = p.S.topRightCorner(n, m).transpose();
  p.S.bottomRightCorner(m, m) = lm.R_cost + g * lm.B.transpose() * P * lm.B;
  return p;
}

inline RewardSpec pendulum_reward() { return RewardSpec::diagonal(Eigen::Vector3d(1, 0.1, 0.001)); }

/// Baseline from the inaccurate linearization m = 0.01, l = 0.3.
inline BaselinePolicy pendulum_baseline() {
  return make_baseline(pendulum_linearization(PendulumConfig{}, 0.01, 0.3, pendulum_reward(), 0.98),
                       pendulum_basis());
}

inline Dataset pendulum_dataset(int n, std::uint64_t seed) {
  return generate_dataset(Environment{PendulumConfig{}}, pendulum_reward(), n, seed,
                          InitSampler::pendulum_default(), std::sqrt(10.0));
}

/// Conjugate gradient on a quadratic known only through evaluations. Gradients come from
/// central differences and the step length from the curvature along the search direction,
/// both exact for quadratics up to rounding.
inline Eigen::VectorXd minimize_quadratic_blackbox(const std::function<double(const Eigen::VectorXd&)>& f,
                                                   Eigen::VectorXd x, double grad_tol = 1e-11,
                                                   int max_iter = 500) {
  const double h = 1e-3;
  auto grad = [&](const Eigen::VectorXd& at) {
    Eigen::VectorXd g(at.size());
    for (Eigen::Index i = 0; i < at.size(); ++i) {
      Eigen::VectorXd a = at, b = at;
      a[i] += h;
      b[i] -= h;
      g[i] = (f(a) - f(b)) / (2 * h);
    }
    return g;
  };
  Eigen::VectorXd g = grad(x);
  Eigen::VectorXd d = -g;
  for (int it = 0; it < max_iter && g.norm() > grad_tol; ++it) {
    const double curv = (f(x + d) + f(x - d) - 2 * f(x)) / 2;
    if (!(curv > 0)) break;
    const double alpha = -g.dot(d) / (2 * curv);
    x += alpha * d;
    const Eigen::VectorXd g_new = grad(x);
    const double beta = std::max(0.0, g_new.dot(g_new - g) / g.squaredNorm());
    d = -g_new + beta * d;
    g = g_new;
  }
  return x;
}

}  // namespace lmiql::testing
