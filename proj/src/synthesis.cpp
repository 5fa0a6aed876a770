#include "lmiql/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>

namespace lmiql {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double sym_weight(int i, int j) { return i == j ? 1.0 : 2.0; }

void add_margin(ExprMatrix& m, double eps) {
  for (int i = 0; i < m.rows(); ++i) m(i, i).add_constant(-eps);
}

}  // namespace

ThetaLayout ThetaLayout::standard(int n_phi, int n_u) {
  if (n_phi < 1 || n_u < 1) throw std::invalid_argument("ThetaLayout: n_phi and n_u must be >= 1");
  ThetaLayout l;
  l.n_phi = n_phi;
  l.n_u = n_u;
  l.T = 0;
  for (int i = 0; i < n_phi; ++i) l.R_x.push_back(1 + i);
  for (int i = 0; i < n_u; ++i) l.R_u.push_back(1 + n_phi + i);
  l.S = SymMatVar("S", n_phi + n_u, 1 + n_phi + n_u);
  l.W = SymMatVar("W", n_phi + 1, QParams::parameter_count(n_phi, n_u));
  return l;
}

QParams ThetaLayout::decode(const Eigen::VectorXd& y) const {
  return QParams::from_vector(y.head(theta_count()), n_phi, n_u);
}

Eigen::MatrixXd ThetaLayout::decode_w(const Eigen::VectorXd& y) const { return W.value(y); }

Eigen::VectorXd ThetaLayout::encode(const QParams& params, const Eigen::MatrixXd& w) const {
  Eigen::VectorXd y(total_count());
  y.head(theta_count()) = params.to_vector();
  for (int i = 0; i < W.dim(); ++i)
    for (int j = i; j < W.dim(); ++j) y[W.entry(i, j)] = w(i, j);
  return y;
}

ExprMatrix ThetaLayout::psi_expr() const {
  ExprMatrix ps(n_phi + 1, n_u);
  for (int j = 0; j < n_u; ++j) {
    for (int i = 0; i < n_phi; ++i) ps(i, j) = S.expr(i, n_phi + j);
    ps(n_phi, j) = AffineExpr::variable(R_u[j], -0.5);
  }
  return ps;
}

ThetaLayout allocate_theta(ConicProblem& problem, int n_phi, int n_u, bool with_w) {
  if (problem.var_count() != 0)
    throw std::logic_error("allocate_theta: theta must be the first allocation");
  ThetaLayout layout = ThetaLayout::standard(n_phi, n_u);
  problem.add_scalar_var("T");
  for (int i = 0; i < n_phi; ++i) problem.add_scalar_var("R_x" + std::to_string(i));
  for (int i = 0; i < n_u; ++i) problem.add_scalar_var("R_u" + std::to_string(i));
  const auto s = problem.add_sym_mat_var(n_phi + n_u, "S");
  if (s.first_index() != layout.S.first_index()) throw std::logic_error("allocate_theta: S offset");
  if (with_w) {
    const auto w = problem.add_sym_mat_var(n_phi + 1, "W");
    if (w.first_index() != layout.W.first_index())
      throw std::logic_error("allocate_theta: W offset");
  }
  return layout;
}

AffineExpr omega_quadratic_expr(const ThetaLayout& layout, const Eigen::VectorXd& e) {
  // e'Omega e = -phi' S_xx phi + R_x' phi.
  AffineExpr out;
  for (int i = 0; i < layout.n_phi; ++i) {
    out.add_term(layout.R_x[i], e[i]);
    for (int j = i; j < layout.n_phi; ++j)
      out.add_term(layout.S.entry(i, j), -sym_weight(i, j) * e[i] * e[j]);
  }
  return out;
}

EpigraphSystem build_residual_exprs(const Dataset& data, const BaselinePolicy& baseline,
                                    const BasisSpec& basis, double gamma,
                                    const ThetaLayout& layout) {
  if (data.size() == 0) throw std::invalid_argument("build_residual_exprs: empty dataset");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma must be in (0, 1]");
  if (basis.n_phi != layout.n_phi || data.n_u() != layout.n_u || data.n_x() != basis.n_x)
    throw std::invalid_argument("build_residual_exprs: dimension mismatch");
  baseline.validate(basis);

  EpigraphSystem sys;
  sys.layout = layout;
  sys.gamma = gamma;
  const int n_phi = layout.n_phi;
  const int n = n_phi + layout.n_u;

  Eigen::MatrixXd regressors(data.size(), n + 1);
  for (int k = 0; k < data.size(); ++k) {
    const Sample s = data.sample(k);
    Eigen::VectorXd xi(n);
    xi << basis(s.x), s.u - baseline.action(basis, s.x);
    regressors.row(k) << xi.transpose(), 1.0;
    Eigen::VectorXd e(n_phi + 1);
    e << basis(s.x_next), 1.0;

    // Q side: T + xi'R - xi'S xi, plus the baseline value.
    AffineExpr z(baseline.value(s.x) - s.r - gamma * baseline.value(s.x_next));
    z.add_term(layout.T, 1.0 - gamma);
    for (int i = 0; i < n; ++i) {
      z.add_term(i < n_phi ? layout.R_x[i] : layout.R_u[i - n_phi], xi[i]);
      for (int j = i; j < n; ++j) z.add_term(layout.S.entry(i, j), -sym_weight(i, j) * xi[i] * xi[j]);
    }
    // Greedy side at x+: g e'(Omega + W)e.
    AffineExpr next = omega_quadratic_expr(layout, e);
    for (int i = 0; i <= n_phi; ++i)
      for (int j = i; j <= n_phi; ++j) next.add_term(layout.W.entry(i, j), sym_weight(i, j) * e[i] * e[j]);
    z -= gamma * next;

    sys.residual_exprs.push_back(std::move(z));
    sys.next_features.push_back(std::move(e));
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(regressors);
  sys.rank_deficient = qr.rank() < regressors.cols();
  return sys;
}

QliAnchors QliAnchors::initial(int n_phi, int n_u) {
  QliAnchors a;
  a.S_xx_hat = Eigen::MatrixXd::Identity(n_phi, n_phi);
  a.R_x_hat = Eigen::VectorXd::Zero(n_phi);
  a.Psi_hat = Eigen::MatrixXd::Zero(n_phi + 1, n_u);
  a.S_uu_hat = Eigen::MatrixXd::Identity(n_u, n_u);
  return a;
}

QliAnchors QliAnchors::from_params(const QParams& p) {
  QliAnchors a;
  a.S_xx_hat = p.S_xx();
  a.R_x_hat = p.R_x;
  a.Psi_hat = psi(p);
  a.S_uu_hat = p.S_uu();
  return a;
}

Eigen::MatrixXd QliAnchors::W() const {
  Eigen::LLT<Eigen::MatrixXd> llt(S_uu_hat);
  if (llt.info() != Eigen::Success)
    throw NotPositiveDefinite("QliAnchors: S_uu_hat is not positive definite");
  Eigen::MatrixXd w = Psi_hat * llt.solve(Psi_hat.transpose());
  return 0.5 * (w + w.transpose());
}

Eigen::MatrixXd QliAnchors::Omega() const {
  const auto n = S_xx_hat.rows();
  Eigen::MatrixXd o = Eigen::MatrixXd::Zero(n + 1, n + 1);
  o.topLeftCorner(n, n) = -S_xx_hat;
  o.topRightCorner(n, 1) = 0.5 * R_x_hat;
  o.bottomLeftCorner(1, n) = 0.5 * R_x_hat.transpose();
  return o;
}

void QliAnchors::validate(int n_phi, int n_u) const {
  if (S_xx_hat.rows() != n_phi || S_xx_hat.cols() != n_phi || R_x_hat.size() != n_phi ||
      Psi_hat.rows() != n_phi + 1 || Psi_hat.cols() != n_u || S_uu_hat.rows() != n_u ||
      S_uu_hat.cols() != n_u)
    throw std::invalid_argument("QliAnchors: dimension mismatch");
  if (!S_uu_hat.isApprox(S_uu_hat.transpose(), 1e-12))
    throw std::invalid_argument("QliAnchors: S_uu_hat must be symmetric");
  (void)W();
}

namespace {

void add_epigraph(EpigraphProgram& prog, AffineExpr objective) {
  for (const auto& z : prog.residuals) {
    const int t = prog.problem.add_scalar_var("t" + std::to_string(prog.t_vars.size()));
    prog.t_vars.push_back(t);
    prog.problem.add_scalar_ineq(AffineExpr::variable(t) - z);
    prog.problem.add_scalar_ineq(AffineExpr::variable(t) + z);
    objective.add_term(t, 1.0);
  }
  prog.problem.set_objective(std::move(objective));
}

void add_s_margin(EpigraphProgram& prog, double epsilon_pd) {
  ExprMatrix s = prog.layout.S.as_expr_matrix();
  add_margin(s, epsilon_pd);
  prog.problem.add_psd_constraint(std::move(s));
}

}  // namespace

EpigraphProgram build_qli_problem(const EpigraphSystem& system, const QliAnchors& anchors,
                                  double epsilon_pd, bool fix_omega) {
  const auto& layout = system.layout;
  anchors.validate(layout.n_phi, layout.n_u);
  if (!(epsilon_pd > 0.0)) throw std::invalid_argument("epsilon_pd must be positive");

  EpigraphProgram prog;
  prog.layout = allocate_theta(prog.problem, layout.n_phi, layout.n_u, false);
  prog.has_w = false;

  const Eigen::MatrixXd w_hat = anchors.W();
  const Eigen::MatrixXd omega_hat = anchors.Omega();
  std::map<int, double> w_values;
  for (int i = 0; i < layout.W.dim(); ++i)
    for (int j = i; j < layout.W.dim(); ++j) w_values[layout.W.entry(i, j)] = w_hat(i, j);

  for (int k = 0; k < system.size(); ++k) {
    AffineExpr z = system.residual_exprs[k].substitute(w_values);
    if (fix_omega) {
      const Eigen::VectorXd& e = system.next_features[k];
      z += system.gamma * omega_quadratic_expr(layout, e);
      z.add_constant(-system.gamma * e.dot(omega_hat * e));
    }
    prog.residuals.push_back(std::move(z));
  }
  add_epigraph(prog, AffineExpr());
  add_s_margin(prog, epsilon_pd);
  return prog;
}

EpigraphProgram build_lmi_ql_problem(const EpigraphSystem& system, double lambda,
                                     double epsilon_pd, bool use_extra_lmi) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be >= 0");
  if (!(epsilon_pd > 0.0)) throw std::invalid_argument("epsilon_pd must be positive");
  const auto& layout = system.layout;

  EpigraphProgram prog;
  prog.layout = allocate_theta(prog.problem, layout.n_phi, layout.n_u, true);
  prog.has_w = true;
  prog.residuals = system.residual_exprs;
  if (system.gamma < 1.0) {
    // T and W_nn enter every residual through the same constant column; folding them into one
    // offset variable keeps the Newton systems well conditioned.
    const int w_nn = layout.W.entry(layout.n_phi, layout.n_phi);
    const std::map<int, double> drop = {{layout.T, 0.0}, {w_nn, 0.0}};
    for (auto& z : prog.residuals) {
      z = z.substitute(drop);
      z.add_term(layout.T, 1.0);
    }
    prog.offset_gamma = system.gamma;
  }

  AffineExpr penalty;
  for (int i = 0; i < layout.W.dim(); ++i) penalty.add_term(layout.W.entry(i, i), lambda);
  add_epigraph(prog, penalty);

  // W >= Psi S_uu^{-1} Psi' through its Schur complement. Without a trace penalty W_nn is
  // unbounded above once folded into the offset, and so is the rest of the last row of W.
  const ExprMatrix ps = layout.psi_expr();
  const ExprMatrix s_uu = layout.S.block(layout.n_phi, layout.n_phi, layout.n_u, layout.n_u);
  if (lambda == 0.0 && prog.offset_gamma > 0.0) {
    prog.w_border_free = true;
    const ExprMatrix s_xu = layout.S.block(0, layout.n_phi, layout.n_phi, layout.n_u);
    prog.problem.add_psd_constraint(ExprMatrix::block2x2(
        layout.W.block(0, 0, layout.n_phi, layout.n_phi), s_xu, s_xu.transposed(), s_uu));
  } else {
    prog.problem.add_psd_constraint(
        ExprMatrix::block2x2(layout.W.as_expr_matrix(), ps, ps.transposed(), s_uu));
  }
  add_s_margin(prog, epsilon_pd);
  if (use_extra_lmi) {
    ExprMatrix gap = layout.S.block(0, 0, layout.n_phi, layout.n_phi);
    gap -= layout.W.block(0, 0, layout.n_phi, layout.n_phi);
    add_margin(gap, epsilon_pd);
    prog.problem.add_psd_constraint(std::move(gap));
  }
  return prog;
}

namespace {

/// min w such that [[A, b], [b', w]] is PSD, i.e. b'A^+b.
double smallest_border(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (a + a.transpose()));
  const Eigen::VectorXd& ev = eig.eigenvalues();
  const double cut = 1e-12 * std::max(ev.cwiseAbs().maxCoeff(), 1e-300);
  const Eigen::VectorXd proj = eig.eigenvectors().transpose() * b;
  double w = 0.0;
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    if (ev[i] > cut) w += proj[i] * proj[i] / ev[i];
  return w;
}

}  // namespace

QParams EpigraphProgram::decode(const Eigen::VectorXd& y) const {
  QParams p = layout.decode(y);
  if (offset_gamma > 0.0) {
    double w_nn = y[layout.W.entry(layout.n_phi, layout.n_phi)];
    if (w_border_free) {
      const int n_phi = layout.n_phi;
      const int n_u = layout.n_u;
      Eigen::MatrixXd a(n_phi + n_u, n_phi + n_u);
      a << layout.W.value(y).topLeftCorner(n_phi, n_phi), p.S_xu(), p.S_xu().transpose(), p.S_uu();
      Eigen::VectorXd b(n_phi + n_u);
      b << layout.W.value(y).col(n_phi).head(n_phi), -0.5 * p.R_u;
      w_nn = smallest_border(a, b);
    }
    p.T = (y[layout.T] + offset_gamma * w_nn) / (1.0 - offset_gamma);
  }
  return p;
}

Eigen::VectorXd EpigraphProgram::encode(const QParams& params, const Eigen::MatrixXd& W) const {
  if (!has_w) return params.to_vector();
  Eigen::VectorXd y = layout.encode(params, W);
  if (offset_gamma > 0.0)
    y[layout.T] = (1.0 - offset_gamma) * params.T - offset_gamma * W(layout.n_phi, layout.n_phi);
  return y;
}

double epigraph_gap(const EpigraphProgram& program, const Eigen::VectorXd& y) {
  double gap = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < program.t_vars.size(); ++k)
    gap = std::max(gap, y[program.t_vars[k]] - std::abs(program.residuals[k].evaluate(y)));
  return gap;
}

void LmiQlConfig::validate() const {
  if (lambda_grid.empty()) throw std::invalid_argument("LmiQlConfig: lambda_grid is empty");
  for (std::size_t i = 0; i < lambda_grid.size(); ++i) {
    if (!(lambda_grid[i] >= 0.0)) throw std::invalid_argument("LmiQlConfig: negative lambda");
    if (i > 0 && !(lambda_grid[i] > lambda_grid[i - 1]))
      throw std::invalid_argument("LmiQlConfig: lambda_grid must be strictly increasing");
  }
  if (!(epsilon_pd > 0.0)) throw std::invalid_argument("LmiQlConfig: epsilon_pd must be > 0");
}

double project_upper_bound(const QParams& params, const Dataset& data,
                           const BaselinePolicy& baseline, const BasisSpec& basis, double gamma) {
  return l1_cost(params, baseline, basis, data, gamma);
}

namespace {

struct Candidate {
  double lambda = 0.0;
  bool ok = false;
  QParams params;
  double relaxed = kNaN;
  double upper = std::numeric_limits<double>::infinity();
};

}  // namespace

TrainResult run_lmi_ql(const Dataset& data, const BaselinePolicy& baseline, const BasisSpec& basis,
                       double gamma, const LmiQlConfig& config) {
  config.validate();
  const auto layout = ThetaLayout::standard(basis.n_phi, data.n_u());
  const EpigraphSystem system = build_residual_exprs(data, baseline, basis, gamma, layout);

  TrainResult result;
  result.method = "lmi-ql";
  result.rank_deficient_data = system.rank_deficient;
  std::vector<Candidate> candidates;

  auto evaluate = [&](double lambda) -> const Candidate& {
    for (const auto& c : candidates)
      if (c.lambda == lambda) return c;
    const EpigraphProgram prog =
        build_lmi_ql_problem(system, lambda, config.epsilon_pd, config.use_extra_lmi);
    const SolveResult sr = solve(prog.problem, config.solver);
    Candidate cand;
    cand.lambda = lambda;
    SolveLogEntry entry;
    entry.key = lambda;
    entry.status = to_string(sr.status);
    if (sr.status == SolveStatus::Optimal) {
      cand.params = prog.decode(sr.y);
      if (project_s_floor(cand.params, config.epsilon_pd)) ++result.s_clipped;
      cand.relaxed = sr.objective_value - lambda * layout.decode_w(sr.y).trace();
      try {
        cand.upper = project_upper_bound(cand.params, data, baseline, basis, gamma);
        cand.ok = std::isfinite(cand.upper);
      } catch (const NotPositiveDefinite&) {
        cand.ok = false;
      }
      entry.objective = cand.relaxed;
      entry.upper_bound = cand.ok ? cand.upper : kNaN;
      entry.epigraph_gap = epigraph_gap(prog, sr.y);
    }
    result.solve_log.push_back(entry);
    candidates.push_back(std::move(cand));
    return candidates.back();
  };

  // Best upper bound so far; ties go to the larger penalty.
  auto best_index = [&]() {
    int best = -1;
    for (int i = 0; i < static_cast<int>(candidates.size()); ++i) {
      if (!candidates[i].ok) continue;
      if (best < 0 || candidates[i].upper < candidates[best].upper ||
          (candidates[i].upper == candidates[best].upper &&
           candidates[i].lambda > candidates[best].lambda))
        best = i;
    }
    return best;
  };

  for (double lambda : config.lambda_grid) evaluate(lambda);

  int best = best_index();
  if (best < 0) {
    std::ostringstream os;
    os << "LMI-QL: no penalty value produced a usable solution (";
    for (const auto& e : result.solve_log) os << e.key << ":" << e.status << " ";
    os << ")";
    throw TrainingError(os.str(), result.solve_log);
  }

  if (config.refine && config.lambda_grid.size() > 1) {
    const auto& grid = config.lambda_grid;
    const auto pos = std::find(grid.begin(), grid.end(), candidates[best].lambda) - grid.begin();
    const double lo = grid[pos > 0 ? pos - 1 : pos];
    const double hi = grid[pos + 1 < static_cast<long>(grid.size()) ? pos + 1 : pos];
    // Golden section on log(lambda) when the bracket is positive, on lambda otherwise.
    const bool log_scale = lo > 0.0;
    auto to_lambda = [&](double s) { return log_scale ? std::exp(s) : s; };
    double a = log_scale ? std::log(lo) : lo;
    double b = log_scale ? std::log(hi) : hi;
    const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
    auto f = [&](double s) {
      const auto& c = evaluate(to_lambda(s));
      return c.ok ? c.upper : std::numeric_limits<double>::infinity();
    };
    double c = b - ratio * (b - a);
    double d = a + ratio * (b - a);
    double prev = candidates[best].upper;
    double fc = f(c);
    double fd = f(d);
    int solves = 2;
    while (solves < config.refine_max_solves) {
      const double now = candidates[best_index()].upper;
      if ((prev - now) < config.refine_rel_tol * std::max(std::abs(prev), 1e-300)) break;
      prev = now;
      if (fc < fd) {
        b = d;
        d = c;
        fd = fc;
        c = b - ratio * (b - a);
        fc = f(c);
      } else {
        a = c;
        c = d;
        fc = fd;
        d = a + ratio * (b - a);
        fd = f(d);
      }
      ++solves;
    }
    best = best_index();
  }

  const Candidate& win = candidates[best];
  result.params = win.params;
  result.policy = greedy_policy(win.params, baseline);
  result.upper_bound_cost = win.upper;
  result.selected_lambda = win.lambda;

  // The lambda = 0 relaxation is the guaranteed lower bound on the l1 problem.
  const Candidate& zero = evaluate(0.0);
  result.relaxed_cost = zero.relaxed;
  return result;
}

TrainResult run_lmi_qli(const Dataset& data, const BaselinePolicy& baseline,
                        const BasisSpec& basis, double gamma, const QliAnchors& init,
                        const LmiQliConfig& config) {
  if (config.tau < 1) throw std::invalid_argument("LMI-QLi: tau must be >= 1");
  const auto layout = ThetaLayout::standard(basis.n_phi, data.n_u());
  const EpigraphSystem system = build_residual_exprs(data, baseline, basis, gamma, layout);

  TrainResult result;
  result.method = "lmi-qli";
  result.rank_deficient_data = system.rank_deficient;
  QliAnchors anchors = init;
  bool have_params = false;

  for (int it = 0; it < config.tau; ++it) {
    const EpigraphProgram prog =
        build_qli_problem(system, anchors, config.epsilon_pd, config.fix_omega);
    const SolveResult sr = solve(prog.problem, config.solver);
    SolveLogEntry entry;
    entry.key = it;
    entry.status = to_string(sr.status);
    if (sr.status != SolveStatus::Optimal) {
      result.solve_log.push_back(entry);
      break;
    }
    QParams params = prog.decode(sr.y);
    if (project_s_floor(params, config.epsilon_pd)) ++result.s_clipped;
    entry.objective = sr.objective_value;
    entry.epigraph_gap = epigraph_gap(prog, sr.y);
    entry.upper_bound = project_upper_bound(params, data, baseline, basis, gamma);
    result.solve_log.push_back(entry);

    result.params = params;
    result.upper_bound_cost = entry.upper_bound;
    have_params = true;
    anchors = QliAnchors::from_params(params);
  }
  if (!have_params) {
    throw TrainingError("LMI-QLi: first iteration failed with status " +
                            result.solve_log.front().status,
                        result.solve_log);
  }
  result.policy = greedy_policy(result.params, baseline);
  return result;
}

}  // namespace lmiql
