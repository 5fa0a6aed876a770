#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "lmiql/baselines.hpp"
#include "lmiql/qmodel.hpp"
#include "oracles.hpp"

namespace lmiql {
namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

QParams unit_s(int n_phi, int n_u) {
  QParams p = QParams::zeros(n_phi, n_u);
  p.S.setIdentity();
  return p;
}

QParams random_params(std::mt19937_64& rng, int n_phi, int n_u) {
  std::normal_distribution<double> n(0, 1);
  const int m = n_phi + n_u;
  Eigen::MatrixXd A(m, m);
  for (int i = 0; i < m * m; ++i) A.data()[i] = n(rng);
  QParams p = QParams::zeros(n_phi, n_u);
  p.T = n(rng);
  for (int i = 0; i < n_phi; ++i) p.R_x[i] = n(rng);
  for (int i = 0; i < n_u; ++i) p.R_u[i] = n(rng);
  p.S = A.transpose() * A + 0.1 * Eigen::MatrixXd::Identity(m, m);
  return p;
}

BaselinePolicy random_baseline(std::mt19937_64& rng, int n_x, int n_u, int n_phi) {
  std::normal_distribution<double> n(0, 1);
  BaselinePolicy b = BaselinePolicy::zero(n_x, n_u, n_phi);
  b.zero_flag = false;
  for (int i = 0; i < b.K_bar.size(); ++i) b.K_bar.data()[i] = n(rng);
  for (int i = 0; i < n_u; ++i) b.offset[i] = n(rng);
  Eigen::MatrixXd A(n_x, n_x);
  for (int i = 0; i < A.size(); ++i) A.data()[i] = n(rng);
  b.P_bar = A.transpose() * A;
  return b;
}

Eigen::VectorXd random_vec(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> d(0, 1);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = d(rng);
  return v;
}

TEST(QParams, ParameterCount) {
  EXPECT_EQ(QParams::parameter_count(3, 1), 15);
  EXPECT_EQ(QParams::zeros(3, 1).to_vector().size(), 15);
}

TEST(QParams, VectorRoundTrip) {
  std::mt19937_64 rng(1);
  const auto p = random_params(rng, 3, 2);
  const auto q = QParams::from_vector(p.to_vector(), 3, 2);
  EXPECT_EQ(q.T, p.T);
  EXPECT_TRUE(q.R_x == p.R_x && q.R_u == p.R_u);
  EXPECT_LE((q.S - p.S).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_THROW(QParams::from_vector(Eigen::VectorXd::Zero(4), 3, 1), std::invalid_argument);
}

TEST(QParams, RelaxationBlocks) {
  std::mt19937_64 rng(2);
  const auto p = random_params(rng, 3, 1);
  const auto Om = omega(p);
  const auto Ps = psi(p);
  EXPECT_EQ(Om(3, 3), 0.0);
  EXPECT_TRUE(Om.topLeftCorner(3, 3) == -p.S_xx());
  EXPECT_DOUBLE_EQ(Om(0, 3), 0.5 * p.R_x[0]);
  EXPECT_DOUBLE_EQ(Ps(3, 0), -0.5 * p.R_u[0]);
  EXPECT_TRUE(Ps.topRows(3) == p.S_xu());
}

TEST(QValue, HandExample) {
  const auto basis = identity_basis(2);
  const auto b = BaselinePolicy::zero(2, 1, 2);
  EXPECT_DOUBLE_EQ(q_value(unit_s(2, 1), b, basis, vec({1, 0}), vec({0})), -1.0);
}

TEST(QValue, ReducesToT) {
  std::mt19937_64 rng(3);
  const auto basis = identity_basis(2);
  auto b = random_baseline(rng, 2, 1, 2);
  b.P_bar.setZero();
  const auto p = random_params(rng, 2, 1);
  const auto x = vec({0, 0});
  EXPECT_NEAR(q_value(p, b, basis, x, b.action(basis, x)), p.T, 1e-14);
}

TEST(QValue, ZeroFlagMatchesExplicitZero) {
  std::mt19937_64 rng(4);
  const auto basis = pendulum_basis();
  const auto flagged = BaselinePolicy::zero(2, 1, 3);
  BaselinePolicy explicit_zero = flagged;
  explicit_zero.zero_flag = false;
  const auto p = random_params(rng, 3, 1);
  for (int i = 0; i < 20; ++i) {
    const auto x = random_vec(rng, 2);
    const auto u = random_vec(rng, 1);
    EXPECT_EQ(q_value(p, flagged, basis, x, u), q_value(p, explicit_zero, basis, x, u));
  }
}

TEST(QValue, DimensionMismatch) {
  const auto basis = identity_basis(2);
  const auto b = BaselinePolicy::zero(2, 1, 2);
  EXPECT_THROW(q_value(unit_s(2, 1), b, basis, vec({1, 0}), vec({0, 1})), std::invalid_argument);
}

TEST(GreedyAction, BaselineWhenNoCoupling) {
  std::mt19937_64 rng(5);
  const auto basis = identity_basis(2);
  const auto b = random_baseline(rng, 2, 1, 2);
  auto p = random_params(rng, 2, 1);
  p.S.topRightCorner(2, 1).setZero();
  p.S.bottomLeftCorner(1, 2).setZero();
  p.R_u.setZero();
  const auto x = random_vec(rng, 2);
  EXPECT_NEAR((greedy_action(p, b, basis, x) - b.action(basis, x)).norm(), 0.0, 1e-14);
}

TEST(GreedyAction, ScalarExample) {
  std::mt19937_64 rng(6);
  const auto basis = identity_basis(2);
  const auto b = random_baseline(rng, 2, 1, 2);
  QParams p = unit_s(2, 1);
  p.S(2, 2) = 2.0;
  p.R_u[0] = 4.0;
  const auto x = random_vec(rng, 2);
  EXPECT_NEAR(greedy_action(p, b, basis, x)[0], b.action(basis, x)[0] + 1.0, 1e-14);
}

TEST(GreedyAction, LocalMaximum) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n(0, 1);
  const auto basis = pendulum_basis();
  const auto b = random_baseline(rng, 2, 1, 3);
  const auto p = random_params(rng, 3, 1);
  const auto x = random_vec(rng, 2);
  const auto u = greedy_action(p, b, basis, x);
  const double best = q_value(p, b, basis, x, u);
  for (int i = 0; i < 100; ++i) EXPECT_GE(best, q_value(p, b, basis, x, u + vec({n(rng)})));
  const double h = 1e-5;
  const double grad =
      (q_value(p, b, basis, x, u + vec({h})) - q_value(p, b, basis, x, u - vec({h}))) / (2 * h);
  EXPECT_LE(std::abs(grad), 1e-6);
}

TEST(GreedyAction, RejectsIndefiniteSuu) {
  const auto basis = identity_basis(2);
  const auto b = BaselinePolicy::zero(2, 1, 2);
  QParams p = unit_s(2, 1);
  p.S(2, 2) = -1.0;
  EXPECT_THROW(greedy_action(p, b, basis, vec({1, 0})), NotPositiveDefinite);
  p.S(2, 2) = 0.0;
  EXPECT_THROW(greedy_policy(p, b), NotPositiveDefinite);
}

TEST(GreedyValue, HandExample) {
  const auto basis = identity_basis(2);
  const auto b = BaselinePolicy::zero(2, 1, 2);
  EXPECT_DOUBLE_EQ(greedy_value(unit_s(2, 1), b, basis, vec({1, 0})), -1.0);
}

TEST(GreedyValue, IdentityOnRandomInstances) {
  std::mt19937_64 rng(8);
  const auto basis = pendulum_basis();
  for (int i = 0; i < 1000; ++i) {
    const auto b = random_baseline(rng, 2, 1, 3);
    const auto p = random_params(rng, 3, 1);
    const auto x = random_vec(rng, 2);
    const double v = greedy_value(p, b, basis, x);
    const double q = q_value(p, b, basis, x, greedy_action(p, b, basis, x));
    ASSERT_LE(std::abs(v - q), 1e-9 * std::max(1.0, std::abs(q)));
  }
}

TEST(GreedyValue, ZeroFeatureSelectsCorner) {
  std::mt19937_64 rng(9);
  const auto basis = identity_basis(2);
  auto b = random_baseline(rng, 2, 1, 2);
  const auto p = random_params(rng, 2, 1);
  const auto x = vec({0, 0});
  const Eigen::MatrixXd G = omega(p) + greedy_w(p);
  EXPECT_NEAR(greedy_value(p, b, basis, x), p.T + b.value(x) + G(2, 2), 1e-13);
}

TEST(GreedyPolicy, MatchesGreedyAction) {
  std::mt19937_64 rng(10);
  const auto basis = pendulum_basis();
  const auto b = random_baseline(rng, 2, 1, 3);
  const auto p = random_params(rng, 3, 1);
  const auto pol = greedy_policy(p, b);
  for (int i = 0; i < 20; ++i) {
    const auto x = random_vec(rng, 2);
    EXPECT_NEAR((pol.action(basis, x) - greedy_action(p, b, basis, x)).norm(), 0.0, 1e-12);
  }
}

TEST(BellmanResidual, HandExample) {
  const auto basis = identity_basis(2);
  const auto b = BaselinePolicy::zero(2, 1, 2);
  const Sample s{vec({1, 0}), vec({0}), -1.0, vec({1, 0})};
  EXPECT_NEAR(bellman_residual(unit_s(2, 1), b, basis, s, 0.98), 0.98, 1e-14);
}

TEST(BellmanResidual, ConstructedFixedPoint) {
  std::mt19937_64 rng(11);
  const auto basis = identity_basis(2);
  const auto b = random_baseline(rng, 2, 1, 2);
  const auto p = random_params(rng, 2, 1);
  const auto x = random_vec(rng, 2);
  const auto u = random_vec(rng, 1);
  const double r = q_value(p, b, basis, x, u) - greedy_value(p, b, basis, x);
  EXPECT_NEAR(bellman_residual(p, b, basis, Sample{x, u, r, x}, 1.0), 0.0, 1e-12);
  EXPECT_THROW(bellman_residual(p, b, basis, Sample{x, u, r, x}, 0.0), std::invalid_argument);
}

TEST(BellmanResidual, RiccatiParamsAreFixedPoint) {
  const auto lm = testing::lqr_model();
  const auto p = testing::riccati_params(lm, solve_dare(lm).P);
  const auto basis = identity_basis(2);
  const auto b = BaselinePolicy::zero(2, 1, 2);
  const auto d = testing::lqr_dataset(50, 3);
  for (int k = 0; k < d.size(); ++k)
    EXPECT_LE(std::abs(bellman_residual(p, b, basis, d.sample(k), lm.gamma)), 1e-8);
  EXPECT_LE(l1_cost(p, b, basis, d, lm.gamma), 1e-6);
}

TEST(L1Cost, SumsAbsoluteResiduals) {
  const auto basis = identity_basis(2);
  const auto b = BaselinePolicy::zero(2, 1, 2);
  const auto p = QParams::zeros(2, 1);
  QParams q = p;
  q.S(2, 2) = 1.0;
  Dataset d;
  d.X = Eigen::MatrixXd::Zero(3, 2);
  d.U = Eigen::MatrixXd::Zero(3, 1);
  d.X_next = Eigen::MatrixXd::Zero(3, 2);
  d.R = vec({-1, 2, 0});
  EXPECT_NEAR(l1_cost(q, b, basis, d, 0.9), 3.0, 1e-15);
  EXPECT_NEAR(l1_cost(q, b, basis, d.prefix(1), 0.9),
              std::abs(bellman_residual(q, b, basis, d.sample(0), 0.9)), 1e-15);
  EXPECT_THROW(l1_cost(q, b, basis, d.prefix(0), 0.9), std::invalid_argument);
}

TEST(ProjectSFloor, ClipsSmallEigenvalues) {
  QParams p = unit_s(2, 1);
  p.S(2, 2) = 1e-9;
  EXPECT_TRUE(project_s_floor(p, 1e-6));
  EXPECT_NEAR(p.S(2, 2), 1e-6, 1e-15);
  EXPECT_FALSE(project_s_floor(p, 1e-6));
}

}  // namespace
}  // namespace lmiql
