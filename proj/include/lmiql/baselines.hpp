#pragma once

#include <optional>
#include <stdexcept>

#include <Eigen/Core>

#include "lmiql/env.hpp"
#include "lmiql/qmodel.hpp"
#include "lmiql/train_result.hpp"

namespace lmiql {

/// x+ = A x + B u with stage reward -(x'Qx + u'Ru) discounted by gamma.
struct LinearModel {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  Eigen::MatrixXd Q_cost;
  Eigen::MatrixXd R_cost;
  double gamma = 1.0;

  void validate() const;
};

struct DareSolution {
  Eigen::MatrixXd P;
  /// Optimal feedback u = -K x.
  Eigen::MatrixXd K;
  int iterations = 0;
  double last_delta = 0.0;
};

class DareNotConverged : public std::runtime_error {
 public:
  DareNotConverged(const std::string& what, double last_delta)
      : std::runtime_error(what), last_delta_(last_delta) {}
  double last_delta() const { return last_delta_; }

 private:
  double last_delta_;
};

/// Fixed point of the discounted Riccati recursion
///   P <- Q + g A'PA - g^2 A'PB (R + g B'PB)^{-1} B'PA,   K = g (R + g B'PB)^{-1} B'PA,
/// iterated from P = Q until max|dP| <= tol.
DareSolution solve_dare(const LinearModel& model, double tol = 1e-12, int max_iter = 1000000);

/// max|P - Riccati(P)|.
double dare_residual(const LinearModel& model, const Eigen::MatrixXd& P);

double spectral_radius(const Eigen::MatrixXd& A);

/// Linearization of the pendulum at the upright equilibrium using physical constants (m, l),
/// with cost blocks taken from the reward matrix.
LinearModel pendulum_linearization(const PendulumConfig& config, double m, double l,
                                   const RewardSpec& spec, double gamma);

/// LQR baseline: pi_bar(x) = -K x acting on the state block of phi, V(x) = -x'Px.
BaselinePolicy make_baseline(const LinearModel& model, const BasisSpec& basis);

/// Gravity cancellation u = -m l g sin(angle) plus LQR on the remaining linear dynamics,
/// expressed on the pendulum basis [angle, velocity, sin(angle)].
AffinePolicy feedback_linearization_oracle(const PendulumConfig& true_params, const RewardSpec& spec,
                                           double gamma);

struct LspiConfig {
  int iterations = 20;
  double ridge = 1e-8;
  /// Defaults to the baseline policy.
  std::optional<AffinePolicy> init_policy;
};

/// psi(x, u) such that q_value(theta) - V(x) = psi' theta.to_vector().
Eigen::VectorXd lspi_features(const BaselinePolicy& baseline, const BasisSpec& basis,
                              const Eigen::VectorXd& x, const Eigen::VectorXd& u);

/// Least-squares evaluation of a fixed policy:
///   argmin_theta sum_k (psi_k'theta - r_k - g psi'_k theta)^2 + ridge |theta|^2,
/// with psi'_k taken at (x+_k, policy(x+_k)) and the baseline value folded into the targets.
Eigen::VectorXd lstdq_evaluate(const Dataset& data, const BaselinePolicy& baseline,
                               const BasisSpec& basis, double gamma, const AffinePolicy& policy,
                               double ridge);

/// Sum of squared Bellman residuals of theta under a fixed next-step policy.
double lstdq_objective(const Eigen::VectorXd& theta, const Dataset& data,
                       const BaselinePolicy& baseline, const BasisSpec& basis, double gamma,
                       const AffinePolicy& policy, double ridge);

TrainResult lspi_train(const Dataset& data, const BaselinePolicy& baseline, const BasisSpec& basis,
                       double gamma, const LspiConfig& config);

}  // namespace lmiql
