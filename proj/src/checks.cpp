#include "lmiql/checks.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "lmiql/baselines.hpp"
#include "lmiql/harness.hpp"
#include "lmiql/synthesis.hpp"

namespace lmiql {

namespace {

std::string fmt(const char* f, double a, double b = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

Eigen::MatrixXd gaussian(std::mt19937_64& rng, int r, int c, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

QParams random_pd_params(std::mt19937_64& rng, int n_phi, int n_u) {
  const int m = n_phi + n_u;
  const Eigen::MatrixXd A = gaussian(rng, m, m);
  QParams p = QParams::zeros(n_phi, n_u);
  p.T = gaussian(rng, 1, 1)(0, 0);
  p.R_x = gaussian(rng, n_phi, 1);
  p.R_u = gaussian(rng, n_u, 1);
  p.S = A.transpose() * A + 0.1 * Eigen::MatrixXd::Identity(m, m);
  return p;
}

double max_abs(const Eigen::MatrixXd& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

CheckResult check_greedy_identity(std::uint64_t seed, int instances) {
  std::mt19937_64 rng(seed);
  const BasisSpec basis = pendulum_basis();
  double worst = 0.0;
  for (int i = 0; i < instances; ++i) {
    BaselinePolicy b = BaselinePolicy::zero(2, 1, 3);
    b.zero_flag = false;
    b.K_bar = gaussian(rng, 1, 3);
    b.offset = gaussian(rng, 1, 1);
    const Eigen::MatrixXd C = gaussian(rng, 2, 2);
    b.P_bar = C.transpose() * C;
    const QParams p = random_pd_params(rng, 3, 1);
    const Eigen::VectorXd x = gaussian(rng, 2, 1);
    const double v = greedy_value(p, b, basis, x);
    const double q = q_value(p, b, basis, x, greedy_action(p, b, basis, x));
    worst = std::max(worst, std::abs(v - q) / std::max(1.0, std::abs(q)));
  }
  return {"greedy-value identity", worst <= 1e-9,
          fmt("max relative deviation %.3g over ", worst) + std::to_string(instances) + " instances"};
}

CheckResult check_dare(std::uint64_t seed, int instances) {
  LinearModel scalar;
  scalar.A = scalar.B = scalar.Q_cost = scalar.R_cost = Eigen::MatrixXd::Ones(1, 1);
  scalar.gamma = 1.0;
  const double golden = (1.0 + std::sqrt(5.0)) / 2.0;
  const double golden_err = std::abs(solve_dare(scalar).P(0, 0) - golden);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.5, 1.0);
  double scale_err = 0.0;
  for (int i = 0; i < instances; ++i) {
    LinearModel lm;
    lm.A = gaussian(rng, 3, 3, 0.5);
    lm.B = gaussian(rng, 3, 2);
    const Eigen::MatrixXd C = gaussian(rng, 3, 3);
    lm.Q_cost = C.transpose() * C + 0.1 * Eigen::MatrixXd::Identity(3, 3);
    lm.R_cost = Eigen::Vector2d(u(rng), u(rng)).asDiagonal();
    lm.gamma = u(rng);
    LinearModel scaled = lm;
    scaled.A *= std::sqrt(lm.gamma);
    scaled.B *= std::sqrt(lm.gamma);
    scaled.gamma = 1.0;
    const DareSolution a = solve_dare(lm);
    const DareSolution b = solve_dare(scaled);
    scale_err = std::max({scale_err, max_abs(a.P - b.P), max_abs(a.K - b.K)});
  }
  return {"DARE examples", golden_err <= 1e-8 && scale_err <= 1e-8,
          fmt("golden-ratio error %.3g, sqrt(gamma) scaling error %.3g", golden_err, scale_err)};
}

CheckResult check_relaxation_bracketing(std::uint64_t seed, int feasible_points) {
  const double gamma = 0.98;
  const auto pend = ExperimentConfig::pendulum_defaults();
  const auto lin = ExperimentConfig::linear_defaults();
  struct Case {
    Dataset data;
    BaselinePolicy baseline;
    BasisSpec basis;
  };
  std::vector<Case> cases;
  cases.push_back({generate_data(lin, 50, seed), make_baseline_policy(lin), make_basis(lin)});
  for (std::uint64_t s = 0; s < 3; ++s)
    cases.push_back({generate_data(pend, 60 + 20 * static_cast<int>(s), seed + s),
                     make_baseline_policy(pend), make_basis(pend)});

  std::mt19937_64 rng(seed);
  double worst_bracket = -INFINITY;
  double worst_feasible = -INFINITY;
  for (const Case& c : cases) {
    const TrainResult r = run_lmi_ql(c.data, c.baseline, c.basis, gamma, LmiQlConfig{});
    worst_bracket = std::max(worst_bracket, r.relaxed_cost - r.upper_bound_cost);

    const EpigraphSystem sys = build_residual_exprs(c.data, c.baseline, c.basis, gamma,
                                                    ThetaLayout::standard(c.basis.n_phi, 1));
    const EpigraphProgram prog = build_lmi_ql_problem(sys, 0.0, LmiQlConfig{}.epsilon_pd, true);
    const SolveResult sr = solve(prog.problem);
    if (sr.status != SolveStatus::Optimal)
      return {"relaxation bracketing", false,
              std::string("lambda = 0 relaxation returned ") + to_string(sr.status)};
    const TrainResult qli = run_lmi_qli(c.data, c.baseline, c.basis, gamma,
                                        QliAnchors::initial(c.basis.n_phi, 1), LmiQliConfig{});
    for (const QParams* p : {&r.params, &qli.params})
      worst_feasible = std::max(worst_feasible,
                                sr.objective_value - l1_cost(*p, c.baseline, c.basis, c.data, gamma));
    for (int i = 0; i < feasible_points; ++i) {
      const QParams p = random_pd_params(rng, c.basis.n_phi, 1);
      worst_feasible = std::max(
          worst_feasible, sr.objective_value - l1_cost(p, c.baseline, c.basis, c.data, gamma));
    }
  }
  return {"relaxation bracketing", worst_bracket <= 1e-6 && worst_feasible <= 1e-6,
          fmt("max(relaxed - upper) %.3g, max(lambda=0 bound - l1 of learned or random theta) %.3g", worst_bracket,
              worst_feasible)};
}

CheckResult check_lqr_recovery(std::uint64_t seed, int n_samples) {
  auto cfg = ExperimentConfig::linear_defaults();
  cfg.n_samples = n_samples;
  const Dataset data = generate_data(cfg, n_samples, seed);
  const Eigen::MatrixXd K = linear_optimal_gain(cfg);
  bool ok = true;
  std::string detail;
  for (const std::string method : {"lmi-ql", "lmi-qli", "lspi"}) {
    const TrainResult r = train_method(cfg, method, data);
    const double gain_err = max_abs(r.policy.gain - K);
    const bool lmi = method != "lspi";
    bool pass = gain_err <= (lmi ? 1e-3 : 1e-2);
    detail += method + fmt(": gain error %.3g", gain_err);
    if (lmi) {
      const double cost = l1_cost(r.params, make_baseline_policy(cfg), make_basis(cfg), data, cfg.gamma);
      pass = pass && cost <= 1e-4;
      detail += fmt(", l1 cost %.3g", cost);
    }
    detail += "; ";
    ok = ok && pass;
  }
  detail.resize(detail.size() - 2);
  return {"LQR recovery", ok, detail};
}

Eigen::VectorXd minimize_quadratic_numeric(const std::function<double(const Eigen::VectorXd&)>& f,
                                           Eigen::VectorXd x, double grad_tol, int max_iter) {
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
    x += (-g.dot(d) / (2 * curv)) * d;
    const Eigen::VectorXd g_new = grad(x);
    const double beta = std::max(0.0, g_new.dot(g_new - g) / g.squaredNorm());
    d = -g_new + beta * d;
    g = g_new;
  }
  return x;
}

CheckResult check_lspi_closed_form(std::uint64_t seed, int instances) {
  const BasisSpec basis = identity_basis(1);
  const double gamma = 0.9;
  const double ridge = 1e-8;
  double worst_grad = 0.0;
  double worst_match = 0.0;
  for (int i = 0; i < instances; ++i) {
    std::mt19937_64 rng(seed + static_cast<std::uint64_t>(i));
    std::normal_distribution<double> n(0, 1);
    Dataset d;
    d.X = gaussian(rng, 10, 1);
    d.U = gaussian(rng, 10, 1);
    d.X_next = gaussian(rng, 10, 1);
    d.R = -gaussian(rng, 10, 1).cwiseAbs();
    BaselinePolicy b = BaselinePolicy::zero(1, 1, 1);
    b.zero_flag = false;
    b.K_bar(0, 0) = 0.3 * n(rng);
    b.P_bar(0, 0) = std::abs(n(rng));
    const AffinePolicy pol{Eigen::MatrixXd::Constant(1, 1, n(rng)), Eigen::VectorXd::Constant(1, n(rng))};

    const Eigen::VectorXd theta = lstdq_evaluate(d, b, basis, gamma, pol, ridge);
    auto f = [&](const Eigen::VectorXd& t) { return lstdq_objective(t, d, b, basis, gamma, pol, ridge); };
    const double h = 1e-4;
    Eigen::VectorXd g(theta.size());
    for (Eigen::Index k = 0; k < theta.size(); ++k) {
      Eigen::VectorXd a = theta, c = theta;
      a[k] += h;
      c[k] -= h;
      g[k] = (f(a) - f(c)) / (2 * h);
    }
    worst_grad = std::max(worst_grad, g.norm());
    const Eigen::VectorXd brute = minimize_quadratic_numeric(f, Eigen::VectorXd::Zero(theta.size()));
    worst_match = std::max(worst_match, max_abs(brute - theta));
  }
  return {"LSPI closed form", worst_grad <= 1e-8 && worst_match <= 1e-6,
          fmt("max gradient norm %.3g, max deviation from numeric minimizer %.3g", worst_grad, worst_match)};
}

std::vector<CheckResult> run_self_checks(std::uint64_t seed) {
  return {check_greedy_identity(seed), check_dare(seed), check_relaxation_bracketing(seed)};
}

}  // namespace lmiql
