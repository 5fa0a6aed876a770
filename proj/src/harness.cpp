#include "lmiql/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

namespace lmiql {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

const std::vector<std::string>& ExperimentConfig::known_methods() {
  static const std::vector<std::string> names = {"lmi-ql", "lmi-qli", "lspi", "oracle",
                                                 "baseline-only"};
  return names;
}

ExperimentConfig ExperimentConfig::pendulum_defaults() { return ExperimentConfig{}; }

ExperimentConfig ExperimentConfig::linear_defaults() {
  ExperimentConfig c;
  c.env = EnvKind::Linear;
  c.linear.A.resize(2, 2);
  c.linear.A << 0.6, 0.3, 0.0, 0.5;
  c.linear.B = Eigen::Vector2d(0.0, 1.0);
  c.linear.sigma_w = 0.0;
  c.linear.sigma_v = 0.0;
  c.reward.M = Eigen::MatrixXd::Identity(3, 3);
  c.basis = "identity";
  c.n_samples = 200;
  c.explore_variance = 1.0;
  c.init = InitSampler::uniform(Eigen::Vector2d(-1, -1), Eigen::Vector2d(1, 1));
  c.baseline = BaselineKind::Zero;
  c.x0 = Eigen::Vector2d(1.0, -1.0);
  c.subset_sizes = {0, 50, 100, 200};
  return c;
}

int ExperimentConfig::n_x() const {
  return env == EnvKind::Pendulum ? 2 : static_cast<int>(linear.A.rows());
}

int ExperimentConfig::n_u() const {
  return env == EnvKind::Pendulum ? 1 : static_cast<int>(linear.B.cols());
}

void ExperimentConfig::validate() const {
  if (env == EnvKind::Pendulum) {
    pendulum.validate();
    if (basis != "pendulum" && basis != "identity")
      throw std::invalid_argument("config: unknown basis '" + basis + "'");
  } else {
    linear.validate();
    if (basis != "identity") throw std::invalid_argument("config: linear systems use the identity basis");
    if (baseline == BaselineKind::InaccurateLqr)
      throw std::invalid_argument("config: the inaccurate-lqr baseline is defined for the pendulum only");
  }
  reward.validate();
  if (reward.M.rows() != n_x() + n_u())
    throw std::invalid_argument("config: reward matrix size must equal n_x + n_u");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("config: gamma must be in (0, 1]");
  if (!(eval_gamma > 0.0 && eval_gamma <= 1.0))
    throw std::invalid_argument("config: eval_gamma must be in (0, 1]");
  if (n_samples < 1) throw std::invalid_argument("config: n_samples must be >= 1");
  if (!(explore_variance >= 0.0)) throw std::invalid_argument("config: explore_variance must be >= 0");
  if (init.low.size() != n_x()) throw std::invalid_argument("config: init sampler dimension mismatch");
  if (x0.size() != n_x()) throw std::invalid_argument("config: x0 dimension mismatch");
  if (!(baseline_m > 0.0 && baseline_l > 0.0))
    throw std::invalid_argument("config: baseline model constants must be positive");
  lmi_ql.validate();
  if (lmi_qli.tau < 1) throw std::invalid_argument("config: tau must be >= 1");
  if (!(lmi_qli.epsilon_pd > 0.0)) throw std::invalid_argument("config: lmi_qli epsilon_pd must be > 0");
  if (lspi_iterations < 1) throw std::invalid_argument("config: lspi iterations must be >= 1");
  if (lspi_ridge < 0.0) throw std::invalid_argument("config: lspi ridge must be >= 0");
  if (eval_horizon < 1) throw std::invalid_argument("config: eval_horizon must be >= 1");
  if (methods.empty()) throw std::invalid_argument("config: no methods");
  for (const auto& m : methods)
    if (std::find(known_methods().begin(), known_methods().end(), m) == known_methods().end())
      throw std::invalid_argument("config: unknown method '" + m + "'");
  if (subset_sizes.empty()) throw std::invalid_argument("config: subset_sizes is empty");
  for (std::size_t i = 0; i < subset_sizes.size(); ++i) {
    if (subset_sizes[i] < 0 || subset_sizes[i] > n_samples)
      throw std::invalid_argument("config: subset sizes must lie in [0, n_samples]");
    if (i > 0 && subset_sizes[i] <= subset_sizes[i - 1])
      throw std::invalid_argument("config: subset_sizes must be strictly increasing");
  }
  if (n_monte_carlo < 1) throw std::invalid_argument("config: n_monte_carlo must be >= 1");
}

Environment make_environment(const ExperimentConfig& cfg) {
  if (cfg.env == ExperimentConfig::EnvKind::Pendulum) return Environment{cfg.pendulum};
  return Environment{cfg.linear};
}

BasisSpec make_basis(const ExperimentConfig& cfg) { return basis_by_name(cfg.basis, cfg.n_x()); }

namespace {

LinearModel linear_model(const ExperimentConfig& cfg) {
  LinearModel lm;
  lm.A = cfg.linear.A;
  lm.B = cfg.linear.B;
  const int n = cfg.n_x();
  const int m = cfg.n_u();
  if (cfg.reward.M.topRightCorner(n, m).cwiseAbs().maxCoeff() > 0.0)
    throw std::invalid_argument("LQR utilities require a reward matrix without state-input cross terms");
  lm.Q_cost = cfg.reward.M.topLeftCorner(n, n);
  lm.R_cost = cfg.reward.M.bottomRightCorner(m, m);
  lm.gamma = cfg.gamma;
  return lm;
}

}  // namespace

BaselinePolicy make_baseline_policy(const ExperimentConfig& cfg) {
  const BasisSpec basis = make_basis(cfg);
  switch (cfg.baseline) {
    case ExperimentConfig::BaselineKind::Zero:
      return BaselinePolicy::zero(cfg.n_x(), cfg.n_u(), basis.n_phi);
    case ExperimentConfig::BaselineKind::InaccurateLqr:
      return make_baseline(
          pendulum_linearization(cfg.pendulum, cfg.baseline_m, cfg.baseline_l, cfg.reward, cfg.gamma),
          basis);
    case ExperimentConfig::BaselineKind::Lqr:
      if (cfg.env == ExperimentConfig::EnvKind::Pendulum)
        return make_baseline(pendulum_linearization(cfg.pendulum, cfg.pendulum.m, cfg.pendulum.l,
                                                    cfg.reward, cfg.gamma),
                             basis);
      return make_baseline(linear_model(cfg), basis);
  }
  throw std::logic_error("unreachable baseline kind");
}

Eigen::MatrixXd linear_optimal_gain(const ExperimentConfig& cfg) {
  if (cfg.env != ExperimentConfig::EnvKind::Linear)
    throw std::invalid_argument("linear_optimal_gain: environment is not linear");
  return -solve_dare(linear_model(cfg)).K;
}

AffinePolicy make_oracle(const ExperimentConfig& cfg) {
  if (cfg.env == ExperimentConfig::EnvKind::Pendulum) {
    if (cfg.basis != "pendulum")
      throw std::invalid_argument("the pendulum oracle needs the pendulum basis");
    return feedback_linearization_oracle(cfg.pendulum, cfg.reward, cfg.gamma);
  }
  return AffinePolicy{linear_optimal_gain(cfg), Eigen::VectorXd::Zero(cfg.n_u())};
}

Dataset generate_data(const ExperimentConfig& cfg, int n_samples, std::uint64_t seed) {
  return generate_dataset(make_environment(cfg), cfg.reward, n_samples, seed, cfg.init,
                          std::sqrt(cfg.explore_variance));
}

TrainResult train_method(const ExperimentConfig& cfg, const std::string& method, const Dataset& data) {
  const BasisSpec basis = make_basis(cfg);
  if (method == "lmi-ql") return run_lmi_ql(data, make_baseline_policy(cfg), basis, cfg.gamma, cfg.lmi_ql);
  if (method == "lmi-qli")
    return run_lmi_qli(data, make_baseline_policy(cfg), basis, cfg.gamma,
                       QliAnchors::initial(basis.n_phi, cfg.n_u()), cfg.lmi_qli);
  if (method == "lspi") {
    LspiConfig lc;
    lc.iterations = cfg.lspi_iterations;
    lc.ridge = cfg.lspi_ridge;
    if (cfg.lspi_zero_baseline) {
      lc.init_policy = AffinePolicy::zero(cfg.n_u(), basis.n_phi);
      return lspi_train(data, BaselinePolicy::zero(cfg.n_x(), cfg.n_u(), basis.n_phi), basis,
                        cfg.gamma, lc);
    }
    return lspi_train(data, make_baseline_policy(cfg), basis, cfg.gamma, lc);
  }
  throw std::invalid_argument("train_method: '" + method + "' is not a learning method");
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t run) {
  // splitmix64 over the combined key.
  std::uint64_t z = base * 0x9E3779B97F4A7C15ULL + (stream << 32) + run + 0x632BE59BD9B4E019ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

LearningCurvePoint aggregate(const std::string& method, int n_data, const std::vector<double>& rewards,
                             int n_failed) {
  LearningCurvePoint p;
  p.method = method;
  p.n_data = n_data;
  p.n_total = static_cast<int>(rewards.size()) + n_failed;
  std::vector<double> kept;
  for (double r : rewards)
    if (std::isfinite(r)) kept.push_back(r);
  p.n_excluded = p.n_total - static_cast<int>(kept.size());
  if (kept.empty()) {
    p.mean_reward = p.ci95_low = p.ci95_high = kNaN;
    return p;
  }
  double sum = 0.0;
  for (double r : kept) sum += r;
  const double n = static_cast<double>(kept.size());
  p.mean_reward = sum / n;
  double half = 0.0;
  if (kept.size() > 1) {
    double ss = 0.0;
    for (double r : kept) ss += (r - p.mean_reward) * (r - p.mean_reward);
    half = 1.96 * std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  }
  p.ci95_low = p.mean_reward - half;
  p.ci95_high = p.mean_reward + half;
  return p;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const Environment env = make_environment(cfg);
  const BasisSpec basis = make_basis(cfg);
  const BaselinePolicy baseline = make_baseline_policy(cfg);
  const AffinePolicy oracle = make_oracle(cfg);
  const AffinePolicy lspi_start =
      cfg.lspi_zero_baseline ? AffinePolicy::zero(cfg.n_u(), basis.n_phi) : baseline.as_affine();
  const int n_full = cfg.subset_sizes.back();

  ExperimentResult out;
  if (cfg.env == ExperimentConfig::EnvKind::Pendulum && !baseline.zero_flag) {
    const LinearModel truth =
        pendulum_linearization(cfg.pendulum, cfg.pendulum.m, cfg.pendulum.l, cfg.reward, cfg.gamma);
    out.baseline_closed_loop_radius = spectral_radius(truth.A + truth.B * baseline.K_bar.leftCols(2));
  }

  for (int run = 0; run < cfg.n_monte_carlo; ++run) {
    const Dataset full = generate_data(cfg, std::max(n_full, 1), derive_seed(cfg.seed, 0, run));
    const std::uint64_t eval_seed = derive_seed(cfg.seed, 1, run);
    auto evaluate = [&](const AffinePolicy& policy, RunRecord& rec) {
      const RolloutResult r = rollout(policy.bind(basis), env, cfg.reward, cfg.x0, cfg.eval_horizon,
                                      eval_seed, cfg.eval_gamma, cfg.limits);
      rec.reward = r.cumulative_reward;
      rec.status = r.diverged || !std::isfinite(r.cumulative_reward) ? "diverged" : "ok";
    };
    for (int n : cfg.subset_sizes) {
      const Dataset data = full.prefix(n);
      for (const auto& method : cfg.methods) {
        RunRecord rec;
        rec.run = run;
        rec.method = method;
        rec.n_data = n;
        rec.selected_lambda = rec.upper_bound = rec.relaxed_cost = rec.max_epigraph_gap = kNaN;
        if (method == "oracle") {
          evaluate(oracle, rec);
        } else if (method == "baseline-only" || (n == 0 && method != "lspi")) {
          evaluate(baseline.as_affine(), rec);
        } else if (n == 0) {
          evaluate(lspi_start, rec);
        } else {
          const auto t0 = std::chrono::steady_clock::now();
          try {
            const TrainResult tr = train_method(cfg, method, data);
            rec.train_seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            rec.selected_lambda = tr.selected_lambda;
            rec.upper_bound = tr.upper_bound_cost;
            rec.relaxed_cost = tr.relaxed_cost;
            rec.s_clipped = tr.s_clipped;
            rec.indefinite_iterations = tr.indefinite_iterations;
            rec.rank_deficient = tr.rank_deficient_data;
            for (const auto& e : tr.solve_log) {
              if (e.status != "Optimal" || !std::isfinite(e.epigraph_gap)) continue;
              ++rec.optimal_solves;
              rec.max_epigraph_gap = std::isfinite(rec.max_epigraph_gap)
                                         ? std::max(rec.max_epigraph_gap, e.epigraph_gap)
                                         : e.epigraph_gap;
            }
            evaluate(tr.policy, rec);
          } catch (const std::exception& e) {
            rec.status = "failed";
            rec.message = e.what();
            rec.reward = kNaN;
          }
        }
        out.log.push_back(std::move(rec));
      }
    }
  }

  std::map<std::pair<std::string, int>, std::pair<std::vector<double>, int>> groups;
  for (const auto& rec : out.log) {
    auto& g = groups[{rec.method, rec.n_data}];
    if (rec.status == "failed")
      ++g.second;
    else
      g.first.push_back(rec.status == "ok" ? rec.reward : kNaN);
  }
  for (const auto& [key, g] : groups) out.points.push_back(aggregate(key.first, key.second, g.first, g.second));
  return out;
}

namespace {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

double parse_double(const std::string& s) {
  if (s == "nan") return kNaN;
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw std::invalid_argument("bad number '" + s + "'");
  return v;
}

}  // namespace

std::string curves_csv(std::vector<LearningCurvePoint> points) {
  std::sort(points.begin(), points.end(), [](const auto& a, const auto& b) {
    return a.method != b.method ? a.method < b.method : a.n_data < b.n_data;
  });
  std::ostringstream os;
  os << "method,n_data,mean_reward,ci95_low,ci95_high,n_excluded,n_total\n";
  for (const auto& p : points)
    os << p.method << ',' << p.n_data << ',' << format_double(p.mean_reward) << ','
       << format_double(p.ci95_low) << ',' << format_double(p.ci95_high) << ',' << p.n_excluded
       << ',' << p.n_total << '\n';
  return os.str();
}

void emit_curves(const std::vector<LearningCurvePoint>& points, const std::string& path) {
  if (points.empty()) throw std::invalid_argument("emit_curves: no points");
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("emit_curves: cannot open '" + path + "' for writing");
  f << curves_csv(points);
  f.close();
  if (!f) throw std::runtime_error("emit_curves: write to '" + path + "' failed");
}

std::vector<LearningCurvePoint> parse_curves_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "method,n_data,mean_reward,ci95_low,ci95_high,n_excluded,n_total")
    throw std::invalid_argument("curves csv: unexpected header");
  std::vector<LearningCurvePoint> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (f.size() != 7) throw std::invalid_argument("curves csv: expected 7 fields in '" + line + "'");
    LearningCurvePoint p;
    p.method = f[0];
    p.n_data = std::stoi(f[1]);
    p.mean_reward = parse_double(f[2]);
    p.ci95_low = parse_double(f[3]);
    p.ci95_high = parse_double(f[4]);
    p.n_excluded = std::stoi(f[5]);
    p.n_total = std::stoi(f[6]);
    out.push_back(p);
  }
  return out;
}

}  // namespace lmiql
