#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "lmiql/baselines.hpp"
#include "lmiql/env.hpp"
#include "lmiql/synthesis.hpp"

namespace lmiql {

/// Everything a run needs: environment, reward, basis, baseline, learners and the sweep.
struct ExperimentConfig {
  enum class EnvKind { Pendulum, Linear };
  enum class BaselineKind { InaccurateLqr, Lqr, Zero };

  EnvKind env = EnvKind::Pendulum;
  PendulumConfig pendulum;
  LinearSystem linear;
  RewardSpec reward = RewardSpec::diagonal(Eigen::Vector3d(1.0, 0.1, 0.001));
  std::string basis = "pendulum";
  double gamma = 0.98;

  int n_samples = 500;
  double explore_variance = 10.0;
  InitSampler init = InitSampler::pendulum_default();

  BaselineKind baseline = BaselineKind::InaccurateLqr;
  /// Physical constants of the inaccurate model behind the baseline.
  double baseline_m = 0.01;
  double baseline_l = 0.3;

  LmiQlConfig lmi_ql;
  LmiQliConfig lmi_qli;
  int lspi_iterations = 20;
  double lspi_ridge = 1e-8;
  /// LSPI learns without the baseline: pi_bar = V = 0 and the zero initial policy.
  bool lspi_zero_baseline = true;

  Eigen::VectorXd x0 = Eigen::Vector2d(0.5 * 3.14159265358979323846, 0.0);
  int eval_horizon = 100;
  double eval_gamma = 1.0;
  DivergenceLimits limits;

  std::vector<std::string> methods = {"lmi-ql", "lmi-qli", "lspi", "oracle", "baseline-only"};
  std::vector<int> subset_sizes = {0, 25, 50, 100, 200, 300, 400, 500};
  int n_monte_carlo = 20;
  std::uint64_t seed = 0;

  static const std::vector<std::string>& known_methods();
  /// Desk-scale pendulum defaults.
  static ExperimentConfig pendulum_defaults();
  /// Noise-free two-state linear system with identity reward and the zero baseline.
  static ExperimentConfig linear_defaults();

  void validate() const;
  int n_x() const;
  int n_u() const;
};

Environment make_environment(const ExperimentConfig& cfg);
BasisSpec make_basis(const ExperimentConfig& cfg);
BaselinePolicy make_baseline_policy(const ExperimentConfig& cfg);
/// Model-based comparison policy: feedback linearization + LQR on the pendulum, the discounted
/// LQR gain on linear systems.
AffinePolicy make_oracle(const ExperimentConfig& cfg);
/// Discounted LQR gain of the configured linear system (linear environments only).
Eigen::MatrixXd linear_optimal_gain(const ExperimentConfig& cfg);

Dataset generate_data(const ExperimentConfig& cfg, int n_samples, std::uint64_t seed);

/// Trains one learner ("lmi-ql", "lmi-qli", "lspi") on the data.
TrainResult train_method(const ExperimentConfig& cfg, const std::string& method, const Dataset& data);

/// Seed of the dataset (stream 0) or evaluation disturbances (stream 1) of a Monte-Carlo run.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t run);

struct LearningCurvePoint {
  std::string method;
  int n_data = 0;
  double mean_reward = 0.0;
  double ci95_low = 0.0;
  double ci95_high = 0.0;
  int n_excluded = 0;
  int n_total = 0;
};

/// One (run, method, subset size) evaluation.
struct RunRecord {
  int run = 0;
  std::string method;
  int n_data = 0;
  /// "ok", "diverged" or "failed".
  std::string status;
  std::string message;
  double reward = 0.0;
  double selected_lambda = 0.0;
  double upper_bound = 0.0;
  double relaxed_cost = 0.0;
  /// Largest t_k - |z_k| over the Optimal solves of this training run (NaN when none).
  double max_epigraph_gap = 0.0;
  int optimal_solves = 0;
  int s_clipped = 0;
  int indefinite_iterations = 0;
  bool rank_deficient = false;
  double train_seconds = 0.0;
};

struct ExperimentResult {
  std::vector<LearningCurvePoint> points;
  std::vector<RunRecord> log;
  /// Spectral radius of the true linearization under the baseline feedback (pendulum only).
  double baseline_closed_loop_radius = 0.0;
};

/// Mean and normal-approximation 95% interval over the finite values; excluded counts the rest.
LearningCurvePoint aggregate(const std::string& method, int n_data, const std::vector<double>& rewards,
                             int n_failed);

ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Rows sorted by (method, n_data), 17 significant digits.
std::string curves_csv(std::vector<LearningCurvePoint> points);
void emit_curves(const std::vector<LearningCurvePoint>& points, const std::string& path);
std::vector<LearningCurvePoint> parse_curves_csv(const std::string& text);

}  // namespace lmiql
