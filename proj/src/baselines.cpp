#include "lmiql/baselines.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>

namespace lmiql {

namespace {

Eigen::MatrixXd riccati_map(const LinearModel& m, const Eigen::MatrixXd& P) {
  const double g = m.gamma;
  const Eigen::MatrixXd BtPA = m.B.transpose() * P * m.A;
  const Eigen::MatrixXd H = m.R_cost + g * m.B.transpose() * P * m.B;
  Eigen::MatrixXd next = m.Q_cost + g * m.A.transpose() * P * m.A -
                         g * g * BtPA.transpose() * H.ldlt().solve(BtPA);
  return 0.5 * (next + next.transpose());
}

void split_reward(const RewardSpec& spec, int n_x, Eigen::MatrixXd& Q, Eigen::MatrixXd& R) {
  spec.validate();
  const int n_u = static_cast<int>(spec.M.rows()) - n_x;
  if (n_u <= 0) throw std::invalid_argument("reward matrix too small for the state dimension");
  if (spec.M.topRightCorner(n_x, n_u).cwiseAbs().maxCoeff() > 0.0)
    throw std::invalid_argument("LQR utilities require a reward matrix without state-input cross terms");
  Q = spec.M.topLeftCorner(n_x, n_x);
  R = spec.M.bottomRightCorner(n_u, n_u);
}

}  // namespace

void LinearModel::validate() const {
  const auto n = A.rows();
  if (n == 0 || A.cols() != n || B.rows() != n || B.cols() == 0)
    throw std::invalid_argument("LinearModel: inconsistent A/B sizes");
  if (Q_cost.rows() != n || Q_cost.cols() != n || R_cost.rows() != B.cols() ||
      R_cost.cols() != B.cols())
    throw std::invalid_argument("LinearModel: inconsistent cost sizes");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("LinearModel: gamma not in (0, 1]");
  if (!R_cost.isApprox(R_cost.transpose()) || R_cost.llt().info() != Eigen::Success)
    throw std::invalid_argument("LinearModel: R_cost must be symmetric positive definite");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (Q_cost + Q_cost.transpose()),
                                                     Eigen::EigenvaluesOnly);
  if (!Q_cost.isApprox(Q_cost.transpose()) || eig.eigenvalues().minCoeff() < -1e-12)
    throw std::invalid_argument("LinearModel: Q_cost must be symmetric positive semidefinite");
}

DareSolution solve_dare(const LinearModel& model, double tol, int max_iter) {
  model.validate();
  DareSolution sol;
  Eigen::MatrixXd P = model.Q_cost;
  double delta = std::numeric_limits<double>::infinity();
  int it = 0;
  for (; it < max_iter; ++it) {
    const Eigen::MatrixXd next = riccati_map(model, P);
    delta = (next - P).cwiseAbs().maxCoeff();
    P = next;
    if (!std::isfinite(delta)) break;
    if (delta <= tol) break;
  }
  if (!(delta <= tol)) {
    std::ostringstream os;
    os << "solve_dare: no convergence after " << it << " iterations (last |dP| = " << delta << ")";
    throw DareNotConverged(os.str(), delta);
  }
  sol.P = P;
  const double g = model.gamma;
  const Eigen::MatrixXd H = model.R_cost + g * model.B.transpose() * P * model.B;
  sol.K = g * H.ldlt().solve(model.B.transpose() * P * model.A);
  sol.iterations = it + 1;
  sol.last_delta = delta;
  return sol;
}

double dare_residual(const LinearModel& model, const Eigen::MatrixXd& P) {
  return (P - riccati_map(model, P)).cwiseAbs().maxCoeff();
}

double spectral_radius(const Eigen::MatrixXd& A) {
  return A.eigenvalues().cwiseAbs().maxCoeff();
}

LinearModel pendulum_linearization(const PendulumConfig& config, double m, double l,
                                   const RewardSpec& spec, double gamma) {
  if (!(m > 0.0) || !(l > 0.0)) throw std::invalid_argument("pendulum_linearization: m, l > 0");
  LinearModel lm;
  const double ml2 = m * l * l;
  lm.A.resize(2, 2);
  lm.A << 1.0, config.Ts, config.Ts * config.g_const / l, 1.0 - config.Ts * config.d / ml2;
  lm.B.resize(2, 1);
  lm.B << 0.0, config.Ts / ml2;
  split_reward(spec, 2, lm.Q_cost, lm.R_cost);
  lm.gamma = gamma;
  return lm;
}

BaselinePolicy make_baseline(const LinearModel& model, const BasisSpec& basis) {
  const auto sol = solve_dare(model);
  const int n_x = static_cast<int>(model.A.rows());
  const int n_u = static_cast<int>(model.B.cols());
  if (basis.n_x != n_x || basis.n_phi < n_x)
    throw std::invalid_argument("make_baseline: basis must carry the state in its leading entries");
  BaselinePolicy b;
  b.K_bar = Eigen::MatrixXd::Zero(n_u, basis.n_phi);
  b.K_bar.leftCols(n_x) = -sol.K;
  b.offset = Eigen::VectorXd::Zero(n_u);
  b.P_bar = sol.P;
  b.zero_flag = false;
  return b;
}

AffinePolicy feedback_linearization_oracle(const PendulumConfig& c, const RewardSpec& spec,
                                           double gamma) {
  c.validate();
  const double ml2 = c.m * c.l * c.l;
  LinearModel lm;
  lm.A.resize(2, 2);
  lm.A << 1.0, c.Ts, 0.0, 1.0 - c.Ts * c.d / ml2;
  lm.B.resize(2, 1);
  lm.B << 0.0, c.Ts / ml2;
  split_reward(spec, 2, lm.Q_cost, lm.R_cost);
  lm.gamma = gamma;
  const auto sol = solve_dare(lm);
  AffinePolicy pol;
  pol.gain.resize(1, 3);
  pol.gain << -sol.K(0, 0), -sol.K(0, 1), -c.m * c.l * c.g_const;
  pol.offset = Eigen::VectorXd::Zero(1);
  return pol;
}

Eigen::VectorXd lspi_features(const BaselinePolicy& baseline, const BasisSpec& basis,
                              const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
  const Eigen::VectorXd phi = basis(x);
  const Eigen::Index n = phi.size() + u.size();
  Eigen::VectorXd xi(n);
  xi << phi, u - baseline.action(basis, x);
  Eigen::VectorXd f(1 + n + n * (n + 1) / 2);
  int k = 0;
  f[k++] = 1.0;
  for (Eigen::Index i = 0; i < n; ++i) f[k++] = xi[i];
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i; j < n; ++j) f[k++] = -(i == j ? 1.0 : 2.0) * xi[i] * xi[j];
  return f;
}

namespace {

void lstdq_system(const Dataset& data, const BaselinePolicy& baseline, const BasisSpec& basis,
                  double gamma, const AffinePolicy& policy, Eigen::MatrixXd& rows,
                  Eigen::VectorXd& targets) {
  if (data.size() == 0) throw std::invalid_argument("LSPI: empty dataset");
  const int n_theta = QParams::parameter_count(basis.n_phi, data.n_u());
  rows.resize(data.size(), n_theta);
  targets.resize(data.size());
  for (int k = 0; k < data.size(); ++k) {
    const Sample s = data.sample(k);
    const Eigen::VectorXd u_next = policy.action(basis, s.x_next);
    rows.row(k) = (lspi_features(baseline, basis, s.x, s.u) -
                   gamma * lspi_features(baseline, basis, s.x_next, u_next))
                      .transpose();
    targets[k] = s.r - baseline.value(s.x) + gamma * baseline.value(s.x_next);
  }
}

}  // namespace

Eigen::VectorXd lstdq_evaluate(const Dataset& data, const BaselinePolicy& baseline,
                               const BasisSpec& basis, double gamma, const AffinePolicy& policy,
                               double ridge) {
  if (ridge < 0.0) throw std::invalid_argument("LSPI: ridge must be >= 0");
  Eigen::MatrixXd rows;
  Eigen::VectorXd targets;
  lstdq_system(data, baseline, basis, gamma, policy, rows, targets);
  Eigen::MatrixXd normal = rows.transpose() * rows;
  normal.diagonal().array() += ridge;
  const Eigen::VectorXd rhs = rows.transpose() * targets;
  if (ridge == 0.0) {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(normal);
    if (lu.rank() < normal.rows())
      throw std::runtime_error("LSPI: singular normal equations; use ridge > 0");
    return lu.solve(rhs);
  }
  Eigen::LDLT<Eigen::MatrixXd> ldlt(normal);
  if (ldlt.info() != Eigen::Success) throw std::runtime_error("LSPI: normal equations failed");
  return ldlt.solve(rhs);
}

double lstdq_objective(const Eigen::VectorXd& theta, const Dataset& data,
                       const BaselinePolicy& baseline, const BasisSpec& basis, double gamma,
                       const AffinePolicy& policy, double ridge) {
  Eigen::MatrixXd rows;
  Eigen::VectorXd targets;
  lstdq_system(data, baseline, basis, gamma, policy, rows, targets);
  return (rows * theta - targets).squaredNorm() + ridge * theta.squaredNorm();
}

TrainResult lspi_train(const Dataset& data, const BaselinePolicy& baseline, const BasisSpec& basis,
                       double gamma, const LspiConfig& config) {
  if (config.iterations < 1) throw std::invalid_argument("LSPI: iterations must be >= 1");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma must be in (0, 1]");
  baseline.validate(basis);
  TrainResult result;
  result.method = "lspi";
  AffinePolicy policy = config.init_policy.value_or(baseline.as_affine());
  const int n_u = data.n_u();
  for (int it = 0; it < config.iterations; ++it) {
    const Eigen::VectorXd theta = lstdq_evaluate(data, baseline, basis, gamma, policy, config.ridge);
    QParams params = QParams::from_vector(theta, basis.n_phi, n_u);
    SolveLogEntry entry;
    entry.key = it;
    entry.objective = lstdq_objective(theta, data, baseline, basis, gamma, policy, config.ridge);
    try {
      policy = greedy_policy(params, baseline);
      entry.status = "Improved";
      entry.upper_bound = l1_cost(params, baseline, basis, data, gamma);
    } catch (const NotPositiveDefinite&) {
      entry.status = "IndefiniteSuu";
      ++result.indefinite_iterations;
    }
    result.solve_log.push_back(entry);
    result.params = params;
    result.upper_bound_cost = entry.upper_bound;
  }
  result.policy = policy;
  return result;
}

}  // namespace lmiql
