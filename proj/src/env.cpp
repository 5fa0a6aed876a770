#include "lmiql/env.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace lmiql {

namespace {

constexpr double kPi = std::numbers::pi;

void require_dims(const Eigen::VectorXd& v, int n, const char* what) {
  if (v.size() != n) {
    std::ostringstream os;
    os << what << ": expected dimension " << n << ", got " << v.size();
    throw std::invalid_argument(os.str());
  }
}

Eigen::VectorXd gaussian(std::mt19937_64& rng, int n, double stddev) {
  std::normal_distribution<double> n01(0.0, 1.0);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = stddev * n01(rng);
  return v;
}

}  // namespace

double wrap_angle(double angle) {
  double a = angle - 2.0 * kPi * std::floor((angle + kPi) / (2.0 * kPi));
  if (a >= kPi) a -= 2.0 * kPi;
  if (a < -kPi) a += 2.0 * kPi;
  return a;
}

void PendulumConfig::validate() const {
  if (!(m > 0.0) || !(l > 0.0) || !(Ts > 0.0))
    throw std::invalid_argument("PendulumConfig: m, l and Ts must be positive");
  if (d < 0.0 || sigma_w < 0.0 || sigma_v < 0.0)
    throw std::invalid_argument("PendulumConfig: damping and noise scales must be nonnegative");
}

void LinearSystem::validate() const {
  if (A.rows() == 0 || A.rows() != A.cols())
    throw std::invalid_argument("LinearSystem: A must be square and non-empty");
  if (B.rows() != A.rows() || B.cols() == 0)
    throw std::invalid_argument("LinearSystem: B must have as many rows as A");
  if (sigma_w < 0.0 || sigma_v < 0.0)
    throw std::invalid_argument("LinearSystem: noise scales must be nonnegative");
}

Environment::Environment(PendulumConfig config) : model_(config) { config.validate(); }
Environment::Environment(LinearSystem system) : model_(system) { system.validate(); }

int Environment::n_x() const {
  return is_pendulum() ? 2 : static_cast<int>(linear().A.rows());
}

int Environment::n_u() const { return is_pendulum() ? 1 : static_cast<int>(linear().B.cols()); }

double Environment::sigma_w() const {
  return is_pendulum() ? pendulum().sigma_w : linear().sigma_w;
}

double Environment::sigma_v() const {
  return is_pendulum() ? pendulum().sigma_v : linear().sigma_v;
}

Eigen::VectorXd Environment::step(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                                  const Eigen::VectorXd& w) const {
  if (is_pendulum()) return pendulum_step(pendulum(), x, u, w);
  const auto& sys = linear();
  require_dims(x, n_x(), "linear step state");
  require_dims(u, n_u(), "linear step input");
  require_dims(w, n_x(), "linear step disturbance");
  return sys.A * x + sys.B * u + w;
}

Eigen::VectorXd pendulum_step(const PendulumConfig& c, const Eigen::VectorXd& x,
                              const Eigen::VectorXd& u, const Eigen::VectorXd& w) {
  require_dims(x, 2, "pendulum_step state");
  require_dims(u, 1, "pendulum_step input");
  require_dims(w, 2, "pendulum_step disturbance");
  const double ml2 = c.m * c.l * c.l;
  Eigen::VectorXd next(2);
  next[0] = wrap_angle(x[0] + c.Ts * x[1]);
  next[1] = x[1] + (c.Ts * c.g_const / c.l) * std::sin(x[0]) - (c.Ts * c.d / ml2) * x[1] +
            (c.Ts / ml2) * u[0];
  next += w;
  // The disturbance is added after the modulo, so the angle can leave [-pi, pi) again.
  next[0] = wrap_angle(next[0]);
  return next;
}

RewardSpec RewardSpec::diagonal(const Eigen::VectorXd& weights) {
  RewardSpec s;
  s.M = weights.asDiagonal();
  s.validate();
  return s;
}

void RewardSpec::validate() const {
  if (M.rows() == 0 || M.rows() != M.cols())
    throw std::invalid_argument("RewardSpec: M must be square and non-empty");
  if (!M.isApprox(M.transpose(), 1e-12))
    throw std::invalid_argument("RewardSpec: M must be symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(M, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() <= 0.0)
    throw std::invalid_argument("RewardSpec: M must be positive definite");
}

double reward(const RewardSpec& spec, const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
  if (x.size() + u.size() != spec.M.rows())
    throw std::invalid_argument("reward: [x; u] does not match the size of M");
  Eigen::VectorXd xu(x.size() + u.size());
  xu << x, u;
  return -xu.dot(spec.M * xu);
}

Sample Dataset::sample(int k) const {
  if (k < 0 || k >= size()) throw std::out_of_range("Dataset::sample");
  return Sample{X.row(k).transpose(), U.row(k).transpose(), R[k], X_next.row(k).transpose()};
}

Dataset Dataset::prefix(int n) const {
  if (n < 0 || n > size()) throw std::out_of_range("Dataset::prefix: size out of range");
  Dataset d;
  d.X = X.topRows(n);
  d.U = U.topRows(n);
  d.R = R.head(n);
  d.X_next = X_next.topRows(n);
  d.seed = seed;
  d.meta = meta;
  return d;
}

void Dataset::validate(bool wrapped_angle) const {
  const auto n = R.size();
  if (n < 1) throw std::invalid_argument("Dataset: must contain at least one sample");
  if (X.rows() != n || U.rows() != n || X_next.rows() != n)
    throw std::invalid_argument("Dataset: X, U, R, X_next must have the same length");
  if (X.cols() != X_next.cols()) throw std::invalid_argument("Dataset: X and X_next widths differ");
  if (wrapped_angle) {
    for (Eigen::Index k = 0; k < n; ++k) {
      for (double a : {X(k, 0), X_next(k, 0)}) {
        if (!(a >= -kPi && a < kPi)) throw std::invalid_argument("Dataset: angle outside [-pi, pi)");
      }
    }
  }
}

InitSampler InitSampler::pendulum_default() {
  return uniform(Eigen::Vector2d(-kPi, -2.0), Eigen::Vector2d(kPi, 2.0));
}

InitSampler InitSampler::uniform(Eigen::VectorXd low, Eigen::VectorXd high) {
  if (low.size() != high.size()) throw std::invalid_argument("InitSampler: bound size mismatch");
  InitSampler s;
  s.kind = Kind::Uniform;
  s.low = std::move(low);
  s.high = std::move(high);
  return s;
}

InitSampler InitSampler::point(Eigen::VectorXd x) {
  InitSampler s;
  s.kind = Kind::Point;
  s.low = x;
  s.high = std::move(x);
  return s;
}

Dataset generate_dataset(const Environment& env, const RewardSpec& spec, int n_samples,
                         std::uint64_t seed, const InitSampler& init, double explore_std) {
  if (n_samples <= 0) throw std::invalid_argument("generate_dataset: n_samples must be >= 1");
  if (explore_std < 0.0) throw std::invalid_argument("generate_dataset: explore_std < 0");
  const int nx = env.n_x();
  const int nu = env.n_u();
  require_dims(init.low, nx, "generate_dataset initial-state sampler");
  spec.validate();
  if (spec.M.rows() != nx + nu) throw std::invalid_argument("generate_dataset: M size mismatch");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double std_w = std::sqrt(env.sigma_w());
  const double std_v = std::sqrt(env.sigma_v());

  Dataset d;
  d.X.resize(n_samples, nx);
  d.U.resize(n_samples, nu);
  d.R.resize(n_samples);
  d.X_next.resize(n_samples, nx);
  d.seed = seed;
  std::ostringstream meta;
  meta << "exploring policy u ~ N(0, " << explore_std * explore_std << " I)";
  d.meta = meta.str();

  for (int k = 0; k < n_samples; ++k) {
    Eigen::VectorXd x(nx);
    for (int i = 0; i < nx; ++i) {
      x[i] = init.kind == InitSampler::Kind::Point
                 ? init.low[i]
                 : init.low[i] + (init.high[i] - init.low[i]) * unit(rng);
    }
    if (env.wraps_angle()) x[0] = wrap_angle(x[0]);
    const Eigen::VectorXd u = gaussian(rng, nu, explore_std);
    const Eigen::VectorXd w = gaussian(rng, nx, std_w);
    const Eigen::VectorXd x_next = env.step(x, u, w);
    Eigen::VectorXd x_meas = x + gaussian(rng, nx, std_v);
    Eigen::VectorXd x_next_meas = x_next + gaussian(rng, nx, std_v);
    if (env.wraps_angle()) {
      x_meas[0] = wrap_angle(x_meas[0]);
      x_next_meas[0] = wrap_angle(x_next_meas[0]);
    }
    d.X.row(k) = x_meas.transpose();
    d.U.row(k) = u.transpose();
    d.R[k] = reward(spec, x, u);
    d.X_next.row(k) = x_next_meas.transpose();
  }
  return d;
}

RolloutResult rollout(const Policy& policy, const Environment& env, const RewardSpec& spec,
                      const Eigen::VectorXd& x0, int horizon, std::uint64_t seed, double gamma,
                      const DivergenceLimits& limits) {
  if (horizon < 1) throw std::invalid_argument("rollout: horizon must be >= 1");
  require_dims(x0, env.n_x(), "rollout initial state");
  std::mt19937_64 rng(seed);
  const double std_w = std::sqrt(env.sigma_w());

  RolloutResult out;
  Eigen::VectorXd x = x0;
  double discount = 1.0;
  out.states.push_back(x);
  for (int i = 0; i < horizon; ++i) {
    const Eigen::VectorXd u = policy(x);
    require_dims(u, env.n_u(), "rollout policy output");
    out.inputs.push_back(u);
    out.cumulative_reward += discount * reward(spec, x, u);
    discount *= gamma;
    const Eigen::VectorXd w = gaussian(rng, env.n_x(), std_w);
    x = env.step(x, u, w);
    out.states.push_back(x);
    const bool too_fast = env.is_pendulum() && std::abs(x[1]) > limits.max_velocity;
    if (!x.allFinite() || too_fast || x.lpNorm<Eigen::Infinity>() > limits.max_state) {
      out.diverged = true;
      break;
    }
  }
  return out;
}

}  // namespace lmiql
