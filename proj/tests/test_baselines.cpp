#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "lmiql/baselines.hpp"
#include "oracles.hpp"

namespace lmiql {
namespace {

using testing::lqr_dataset;
using testing::lqr_model;

LinearModel scalar_model(double a, double b, double q, double r, double g) {
  LinearModel lm;
  lm.A = Eigen::MatrixXd::Constant(1, 1, a);
  lm.B = Eigen::MatrixXd::Constant(1, 1, b);
  lm.Q_cost = Eigen::MatrixXd::Constant(1, 1, q);
  lm.R_cost = Eigen::MatrixXd::Constant(1, 1, r);
  lm.gamma = g;
  return lm;
}

LinearModel random_model(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0, 1);
  std::uniform_real_distribution<double> u(0.5, 1.0);
  LinearModel lm;
  lm.A.resize(3, 3);
  lm.B.resize(3, 2);
  for (int i = 0; i < 9; ++i) lm.A.data()[i] = 0.5 * n(rng);
  for (int i = 0; i < 6; ++i) lm.B.data()[i] = n(rng);
  Eigen::MatrixXd C(3, 3);
  for (int i = 0; i < 9; ++i) C.data()[i] = n(rng);
  lm.Q_cost = C.transpose() * C + 0.1 * Eigen::MatrixXd::Identity(3, 3);
  lm.R_cost = Eigen::Vector2d(u(rng), u(rng)).asDiagonal();
  lm.gamma = u(rng);
  return lm;
}

TEST(SolveDare, ScalarGoldenRatio) {
  const auto sol = solve_dare(scalar_model(1, 1, 1, 1, 1));
  const double phi = (1 + std::sqrt(5.0)) / 2;
  EXPECT_NEAR(sol.P(0, 0), phi, 1e-8);
  EXPECT_NEAR(sol.K(0, 0), 1 / phi, 1e-8);
}

TEST(SolveDare, NoControl) {
  const auto sol = solve_dare(scalar_model(0, 0, 2, 1, 0.9));
  EXPECT_NEAR(sol.P(0, 0), 2.0, 1e-14);
  EXPECT_EQ(sol.K(0, 0), 0.0);
  const auto geo = solve_dare(scalar_model(0.5, 0, 1, 1, 0.9));
  EXPECT_NEAR(geo.P(0, 0), 1 / (1 - 0.9 * 0.25), 1e-11);
}

TEST(SolveDare, SqrtGammaScaling) {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 10; ++i) {
    const auto lm = random_model(rng);
    LinearModel scaled = lm;
    scaled.A *= std::sqrt(lm.gamma);
    scaled.B *= std::sqrt(lm.gamma);
    scaled.gamma = 1.0;
    const auto a = solve_dare(lm);
    const auto b = solve_dare(scaled);
    EXPECT_LE((a.P - b.P).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LE((a.K - b.K).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(SolveDare, ResidualSmall) {
  std::mt19937_64 rng(18);
  const auto lm = random_model(rng);
  const auto sol = solve_dare(lm, 1e-12);
  EXPECT_LE(dare_residual(lm, sol.P), 1e-11);
}

TEST(SolveDare, MatchesFrozenOracle) {
  const auto sol = solve_dare(lqr_model());
  EXPECT_LE((sol.P - testing::frozen_lqr_p()).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LE((-sol.K - testing::frozen_lqr_gain()).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(SolveDare, ReportsNonConvergence) {
  auto lm = scalar_model(2, 0, 1, 1, 1);
  try {
    solve_dare(lm, 1e-12, 50);
    FAIL();
  } catch (const DareNotConverged& e) {
    EXPECT_GT(e.last_delta(), 1e-12);
  }
  lm.R_cost(0, 0) = -1;
  EXPECT_THROW(solve_dare(lm), std::invalid_argument);
}

TEST(Baseline, InaccuratePendulum) {
  PendulumConfig pc;
  const auto spec = RewardSpec::diagonal(Eigen::Vector3d(1, 0.1, 0.001));
  const auto lm = pendulum_linearization(pc, 0.01, 0.3, spec, 0.98);
  const auto b = make_baseline(lm, pendulum_basis());
  ASSERT_EQ(b.K_bar.cols(), 3);
  EXPECT_NEAR(b.K_bar(0, 0), testing::frozen_inaccurate_gain()[0], 1e-9);
  EXPECT_NEAR(b.K_bar(0, 1), testing::frozen_inaccurate_gain()[1], 1e-9);
  EXPECT_EQ(b.K_bar(0, 2), 0.0);
  EXPECT_TRUE(b.P_bar.isApprox(b.P_bar.transpose()));
  const auto truth = pendulum_linearization(pc, pc.m, pc.l, spec, 0.98);
  const double rho = spectral_radius(truth.A + truth.B * b.K_bar.leftCols(2));
  EXPECT_TRUE(std::isfinite(rho));
}

TEST(Baseline, AccurateModelIsNominalLqr) {
  PendulumConfig pc;
  const auto spec = RewardSpec::diagonal(Eigen::Vector3d(1, 0.1, 0.001));
  const auto lm = pendulum_linearization(pc, pc.m, pc.l, spec, 0.98);
  const auto b = make_baseline(lm, identity_basis(2));
  EXPECT_LE((b.K_bar + solve_dare(lm).K).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Baseline, RejectsCrossTerms) {
  RewardSpec spec;
  spec.M = Eigen::Matrix3d::Identity();
  spec.M(0, 2) = spec.M(2, 0) = 0.1;
  EXPECT_THROW(pendulum_linearization(PendulumConfig{}, 0.1, 1, spec, 0.98), std::invalid_argument);
}

TEST(Oracle, Examples) {
  PendulumConfig pc;
  const auto spec = RewardSpec::diagonal(Eigen::Vector3d(1, 0.1, 0.001));
  const auto pol = feedback_linearization_oracle(pc, spec, 0.98);
  const auto basis = pendulum_basis();
  EXPECT_EQ(pol.action(basis, Eigen::Vector2d(0, 0))[0], 0.0);
  EXPECT_NEAR(pol.gain(0, 2), -0.981, 1e-12);
  EXPECT_NEAR(pol.gain(0, 0), testing::frozen_oracle_lqr_gain()[0], 1e-8);
  EXPECT_NEAR(pol.gain(0, 1), testing::frozen_oracle_lqr_gain()[1], 1e-8);
  const double u = pol.action(basis, Eigen::Vector2d(M_PI / 2, 0))[0];
  EXPECT_NEAR(u, -0.981 + pol.gain(0, 0) * M_PI / 2, 1e-12);
}

TEST(Oracle, CancelsGravity) {
  PendulumConfig pc;
  const auto spec = RewardSpec::diagonal(Eigen::Vector3d(1, 0.1, 0.001));
  const auto pol = feedback_linearization_oracle(pc, spec, 0.98);
  const auto basis = pendulum_basis();
  const double ml2 = pc.m * pc.l * pc.l;
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> a(-M_PI, M_PI), v(-2, 2);
  for (int i = 0; i < 100; ++i) {
    const Eigen::Vector2d x(a(rng), v(rng));
    const Eigen::VectorXd u = pol.action(basis, x);
    const auto next = pendulum_step(pc, x, u, Eigen::Vector2d::Zero());
    const double v_lin = pol.gain(0, 0) * x[0] + pol.gain(0, 1) * x[1];
    const double linear = x[1] - pc.Ts * pc.d / ml2 * x[1] + pc.Ts / ml2 * v_lin;
    EXPECT_LE(std::abs(next[1] - linear), 1e-12);
  }
}

TEST(LspiFeatures, MatchQValue) {
  std::mt19937_64 rng(20);
  std::normal_distribution<double> n(0, 1);
  const auto basis = pendulum_basis();
  BaselinePolicy b = BaselinePolicy::zero(2, 1, 3);
  b.zero_flag = false;
  b.K_bar << n(rng), n(rng), n(rng);
  b.offset << n(rng);
  b.P_bar << 2, 0.3, 0.3, 1;
  for (int i = 0; i < 100; ++i) {
    Eigen::VectorXd theta(15);
    for (int j = 0; j < 15; ++j) theta[j] = n(rng);
    const auto p = QParams::from_vector(theta, 3, 1);
    const Eigen::Vector2d x(n(rng), n(rng));
    const Eigen::VectorXd u = Eigen::VectorXd::Constant(1, n(rng));
    const double lhs = q_value(p, b, basis, x, u) - b.value(x);
    EXPECT_NEAR(lhs, lspi_features(b, basis, x, u).dot(theta), 1e-10 * std::max(1.0, std::abs(lhs)));
  }
}

TEST(Lstdq, ConstantFeatureExample) {
  Dataset d;
  d.X = Eigen::MatrixXd::Zero(1, 1);
  d.U = Eigen::MatrixXd::Zero(1, 1);
  d.X_next = Eigen::MatrixXd::Zero(1, 1);
  d.R = Eigen::VectorXd::Constant(1, 1.0);
  const auto basis = identity_basis(1);
  const auto theta =
      lstdq_evaluate(d, BaselinePolicy::zero(1, 1, 1), basis, 0.5, AffinePolicy::zero(1, 1), 1e-12);
  EXPECT_NEAR(theta[0], 2.0, 1e-9);
  EXPECT_NEAR(theta.tail(theta.size() - 1).norm(), 0.0, 1e-12);
}

TEST(Lstdq, RidgeZeroSingular) {
  const auto d = lqr_dataset(3, 1);
  EXPECT_THROW(lstdq_evaluate(d, BaselinePolicy::zero(2, 1, 2), identity_basis(2), 0.98,
                              AffinePolicy::zero(1, 2), 0.0),
               std::runtime_error);
}

struct ScalarInstance {
  Dataset data;
  BaselinePolicy baseline;
  AffinePolicy policy;
};

ScalarInstance random_scalar_instance(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0, 1);
  ScalarInstance s;
  s.data.X.resize(10, 1);
  s.data.U.resize(10, 1);
  s.data.X_next.resize(10, 1);
  s.data.R.resize(10);
  for (int k = 0; k < 10; ++k) {
    s.data.X(k, 0) = n(rng);
    s.data.U(k, 0) = n(rng);
    s.data.X_next(k, 0) = n(rng);
    s.data.R[k] = -std::abs(n(rng));
  }
  s.baseline = BaselinePolicy::zero(1, 1, 1);
  s.baseline.zero_flag = false;
  s.baseline.K_bar(0, 0) = 0.3 * n(rng);
  s.baseline.P_bar(0, 0) = std::abs(n(rng));
  s.policy = AffinePolicy{Eigen::MatrixXd::Constant(1, 1, n(rng)), Eigen::VectorXd::Constant(1, n(rng))};
  return s;
}

TEST(Lstdq, ClosedFormZeroesGradient) {
  const auto basis = identity_basis(1);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto s = random_scalar_instance(seed);
    const auto theta = lstdq_evaluate(s.data, s.baseline, basis, 0.9, s.policy, 1e-8);
    auto f = [&](const Eigen::VectorXd& t) {
      return lstdq_objective(t, s.data, s.baseline, basis, 0.9, s.policy, 1e-8);
    };
    const double h = 1e-4;
    Eigen::VectorXd g(theta.size());
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
      Eigen::VectorXd a = theta, b = theta;
      a[i] += h;
      b[i] -= h;
      g[i] = (f(a) - f(b)) / (2 * h);
    }
    EXPECT_LE(g.norm(), 1e-8) << "seed " << seed;
  }
}

TEST(Lstdq, MatchesBlackboxMinimizer) {
  const auto basis = identity_basis(1);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto s = random_scalar_instance(seed);
    const auto theta = lstdq_evaluate(s.data, s.baseline, basis, 0.9, s.policy, 1e-8);
    auto f = [&](const Eigen::VectorXd& t) {
      return lstdq_objective(t, s.data, s.baseline, basis, 0.9, s.policy, 1e-8);
    };
    const auto brute = testing::minimize_quadratic_blackbox(f, Eigen::VectorXd::Zero(theta.size()));
    EXPECT_LE((brute - theta).cwiseAbs().maxCoeff(), 1e-6) << "seed " << seed;
  }
}

TEST(Lspi, RecoversLqrGain) {
  const auto data = lqr_dataset(200, 0);
  LspiConfig cfg;
  const auto res = lspi_train(data, BaselinePolicy::zero(2, 1, 2), identity_basis(2), 0.98, cfg);
  ASSERT_EQ(res.solve_log.size(), 20u);
  EXPECT_LE((res.policy.gain - testing::frozen_lqr_gain()).cwiseAbs().maxCoeff(), 1e-2);
  EXPECT_LE(std::abs(res.policy.offset[0]), 1e-2);
}

TEST(Lspi, KeepsPolicyOnIndefiniteSuu) {
  // Rewards that grow with |u| make every evaluated S_uu negative.
  Dataset d = lqr_dataset(50, 2);
  for (int k = 0; k < d.size(); ++k) d.R[k] = d.U(k, 0) * d.U(k, 0);
  LspiConfig cfg;
  cfg.iterations = 3;
  const AffinePolicy init{Eigen::MatrixXd::Constant(1, 2, 0.25), Eigen::VectorXd::Zero(1)};
  cfg.init_policy = init;
  const auto res = lspi_train(d, BaselinePolicy::zero(2, 1, 2), identity_basis(2), 0.98, cfg);
  EXPECT_EQ(res.indefinite_iterations, 3);
  EXPECT_TRUE(res.policy.gain == init.gain);
  EXPECT_EQ(res.solve_log[0].status, "IndefiniteSuu");
}

TEST(Lspi, RejectsBadConfig) {
  const auto data = lqr_dataset(20, 0);
  LspiConfig cfg;
  cfg.iterations = 0;
  EXPECT_THROW(lspi_train(data, BaselinePolicy::zero(2, 1, 2), identity_basis(2), 0.98, cfg),
               std::invalid_argument);
}

}  // namespace
}  // namespace lmiql
