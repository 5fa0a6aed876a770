#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

namespace lmiql {

using Policy = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Wraps an angle to [-pi, pi).
double wrap_angle(double angle);

/// Forward-Euler damped pendulum; state is (angle, angular velocity), angle 0 upright.
struct PendulumConfig {
  double m = 0.1;
  double l = 1.0;
  double g_const = 9.81;
  double d = 0.1;
  double Ts = 0.01;
  /// Covariance scales: process noise Sigma_w = sigma_w * I, measurement noise Sigma_v = sigma_v * I.
  double sigma_w = 2.5e-5;
  double sigma_v = 1e-4;

  void validate() const;
};

/// x+ = A x + B u + w.
struct LinearSystem {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  double sigma_w = 0.0;
  double sigma_v = 0.0;

  void validate() const;
};

class Environment {
 public:
  Environment(PendulumConfig config);  // NOLINT(google-explicit-constructor)
  Environment(LinearSystem system);    // NOLINT(google-explicit-constructor)

  int n_x() const;
  int n_u() const;
  bool wraps_angle() const { return is_pendulum(); }
  bool is_pendulum() const { return std::holds_alternative<PendulumConfig>(model_); }

  const PendulumConfig& pendulum() const { return std::get<PendulumConfig>(model_); }
  const LinearSystem& linear() const { return std::get<LinearSystem>(model_); }

  double sigma_w() const;
  double sigma_v() const;

  Eigen::VectorXd step(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                       const Eigen::VectorXd& w) const;

 private:
  std::variant<PendulumConfig, LinearSystem> model_;
};

Eigen::VectorXd pendulum_step(const PendulumConfig& config, const Eigen::VectorXd& x,
                              const Eigen::VectorXd& u, const Eigen::VectorXd& w);

/// r = -[x; u]' M [x; u] with M symmetric positive definite.
struct RewardSpec {
  Eigen::MatrixXd M;

  static RewardSpec diagonal(const Eigen::VectorXd& weights);
  void validate() const;
};

double reward(const RewardSpec& spec, const Eigen::VectorXd& x, const Eigen::VectorXd& u);

struct Sample {
  Eigen::VectorXd x;
  Eigen::VectorXd u;
  double r = 0.0;
  Eigen::VectorXd x_next;
};

/// One-step transitions; row k of X, U, X_next and entry k of R form a sample.
struct Dataset {
  Eigen::MatrixXd X;
  Eigen::MatrixXd U;
  Eigen::VectorXd R;
  Eigen::MatrixXd X_next;
  std::uint64_t seed = 0;
  std::string meta;

  int size() const { return static_cast<int>(R.size()); }
  int n_x() const { return static_cast<int>(X.cols()); }
  int n_u() const { return static_cast<int>(U.cols()); }
  Sample sample(int k) const;
  /// First n rows.
  Dataset prefix(int n) const;
  void validate(bool wrapped_angle) const;
};

/// Distribution of initial states for data generation.
struct InitSampler {
  enum class Kind { Uniform, Point };
  Kind kind = Kind::Uniform;
  Eigen::VectorXd low;
  Eigen::VectorXd high;

  /// Uniform over angle [-pi, pi) x velocity [-2, 2].
  static InitSampler pendulum_default();
  static InitSampler uniform(Eigen::VectorXd low, Eigen::VectorXd high);
  static InitSampler point(Eigen::VectorXd x);
};

/// Independent one-step tuples: x from the sampler, u ~ N(0, explore_std^2 I), reward on the
/// noiseless state, x+ through the dynamics with process noise; recorded x and x+ then get
/// measurement noise. Deterministic given the seed.
Dataset generate_dataset(const Environment& env, const RewardSpec& spec, int n_samples,
                         std::uint64_t seed, const InitSampler& init, double explore_std);

struct RolloutResult {
  double cumulative_reward = 0.0;
  std::vector<Eigen::VectorXd> states;
  std::vector<Eigen::VectorXd> inputs;
  bool diverged = false;
};

/// Divergence thresholds for rollouts.
struct DivergenceLimits {
  double max_velocity = 50.0;
  double max_state = 100.0;
};

RolloutResult rollout(const Policy& policy, const Environment& env, const RewardSpec& spec,
                      const Eigen::VectorXd& x0, int horizon, std::uint64_t seed, double gamma,
                      const DivergenceLimits& limits = {});

}  // namespace lmiql
