#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace lmiql {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Closed-form greedy value against q_value at the greedy action, on random S > 0 instances.
CheckResult check_greedy_identity(std::uint64_t seed, int instances = 1000);

/// Scalar golden-ratio instance and the sqrt(gamma) scaling on random instances.
CheckResult check_dare(std::uint64_t seed, int instances = 10);

/// relaxed_cost <= upper_bound_cost on several datasets, and the lambda = 0 relaxation below the
/// l1 cost of random feasible parameters and of the parameters both LMI learners return.
CheckResult check_relaxation_bracketing(std::uint64_t seed, int feasible_points = 20);

/// All three learners on the noise-free linear system against the discounted LQR gain.
CheckResult check_lqr_recovery(std::uint64_t seed, int n_samples = 200);

/// LSTD-Q solution: zero gradient of the squared Bellman objective and agreement with a
/// derivative-free minimizer on random scalar instances.
CheckResult check_lspi_closed_form(std::uint64_t seed, int instances = 10);

/// Conjugate directions on a quadratic seen only through evaluations (central-difference
/// gradients, curvature step).
Eigen::VectorXd minimize_quadratic_numeric(const std::function<double(const Eigen::VectorXd&)>& f,
                                           Eigen::VectorXd x, double grad_tol = 1e-11,
                                           int max_iter = 500);

/// The analytic checks run by `lmiql verify`.
std::vector<CheckResult> run_self_checks(std::uint64_t seed);

}  // namespace lmiql
