#pragma once

#include <map>
#include <vector>

#include <Eigen/Core>

#include "lmiql/conic.hpp"
#include "lmiql/qmodel.hpp"
#include "lmiql/train_result.hpp"

namespace lmiql {

/// Decision-vector positions of theta = (T, R_x, R_u, S) followed by the auxiliary W.
/// Positions are fixed by (n_phi, n_u): T first, then R_x, R_u, the upper triangle of S and
/// the upper triangle of W. Every program below allocates theta first so that these
/// positions coincide with its own decision indices.
struct ThetaLayout {
  int n_phi = 0;
  int n_u = 0;
  int T = 0;
  std::vector<int> R_x;
  std::vector<int> R_u;
  SymMatVar S;
  SymMatVar W;

  static ThetaLayout standard(int n_phi, int n_u);

  int theta_count() const { return QParams::parameter_count(n_phi, n_u); }
  int total_count() const { return theta_count() + W.index_count(); }

  QParams decode(const Eigen::VectorXd& y) const;
  Eigen::MatrixXd decode_w(const Eigen::VectorXd& y) const;
  /// Decision vector of size total_count() holding (params, W).
  Eigen::VectorXd encode(const QParams& params, const Eigen::MatrixXd& W) const;

  /// Psi = [S_xu; -R_u'/2] as expressions.
  ExprMatrix psi_expr() const;
};

/// Adds theta (and W when requested) to an empty problem at the standard positions.
ThetaLayout allocate_theta(ConicProblem& problem, int n_phi, int n_u, bool with_w);

/// Bellman residuals z_k as affine forms in (theta, W):
///   z_k = Q(x_k, u_k) - r_k - g (V(x+_k) + T + e_k'(Omega + W) e_k),  e_k = [phi(x+_k); 1].
struct EpigraphSystem {
  ThetaLayout layout;
  std::vector<AffineExpr> residual_exprs;
  std::vector<Eigen::VectorXd> next_features;
  double gamma = 1.0;
  /// [phi(x), u - pi_bar(x), 1] over the dataset has deficient column rank.
  bool rank_deficient = false;

  int size() const { return static_cast<int>(residual_exprs.size()); }
};

EpigraphSystem build_residual_exprs(const Dataset& data, const BaselinePolicy& baseline,
                                    const BasisSpec& basis, double gamma,
                                    const ThetaLayout& layout);

/// e'(Omega(theta))e as an affine form.
AffineExpr omega_quadratic_expr(const ThetaLayout& layout, const Eigen::VectorXd& e);

/// Values held fixed by one coordinate-descent step.
struct QliAnchors {
  Eigen::MatrixXd S_xx_hat;
  Eigen::VectorXd R_x_hat;
  Eigen::MatrixXd Psi_hat;
  Eigen::MatrixXd S_uu_hat;

  /// S_hat = I, R_hat = 0.
  static QliAnchors initial(int n_phi, int n_u);
  static QliAnchors from_params(const QParams& params);

  Eigen::MatrixXd W() const;
  Eigen::MatrixXd Omega() const;
  void validate(int n_phi, int n_u) const;
};

/// A built program plus the bookkeeping needed to read its solution back.
struct EpigraphProgram {
  ConicProblem problem;
  ThetaLayout layout;
  bool has_w = false;
  std::vector<int> t_vars;
  /// z_k in the program's decision indices.
  std::vector<AffineExpr> residuals;
  /// When positive, the T slot holds the common residual offset (1 - g) T - g W_nn for this
  /// discount g instead of T itself.
  double offset_gamma = 0.0;
  /// The last row of W is left out of the Schur block (zero trace penalty); decode() then
  /// takes the smallest W_nn compatible with the rest of the block.
  bool w_border_free = false;

  QParams decode(const Eigen::VectorXd& y) const;
  /// Decision vector for (params, W); W is ignored when the program has none.
  Eigen::VectorXd encode(const QParams& params, const Eigen::MatrixXd& W) const;
};

/// Fixed-anchor program: min sum t_k, |z_k| <= t_k with W and (optionally) Omega held at
/// the anchors, S - eps I PSD.
EpigraphProgram build_qli_problem(const EpigraphSystem& system, const QliAnchors& anchors,
                                  double epsilon_pd, bool fix_omega = true);

/// Relaxed program: min sum t_k + lambda tr(W) with [[W, Psi], [Psi', S_uu]] PSD,
/// S - eps I PSD and, optionally, S_xx - W_11 - eps I PSD.
EpigraphProgram build_lmi_ql_problem(const EpigraphSystem& system, double lambda,
                                     double epsilon_pd, bool use_extra_lmi);

/// max_k (t_k - |z_k(y)|).
double epigraph_gap(const EpigraphProgram& program, const Eigen::VectorXd& y);

struct LmiQlConfig {
  std::vector<double> lambda_grid = {0.0, 1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0};
  double epsilon_pd = 1e-6;
  bool use_extra_lmi = true;
  /// Golden-section pass between the neighbours of the best grid point.
  bool refine = true;
  double refine_rel_tol = 1e-3;
  int refine_max_solves = 8;
  SolverSettings solver;

  void validate() const;
};

struct LmiQliConfig {
  int tau = 20;
  double epsilon_pd = 1e-6;
  /// Hold Omega at the anchors as well as W.
  bool fix_omega = true;
  SolverSettings solver;
};

TrainResult run_lmi_ql(const Dataset& data, const BaselinePolicy& baseline, const BasisSpec& basis,
                       double gamma, const LmiQlConfig& config);

TrainResult run_lmi_qli(const Dataset& data, const BaselinePolicy& baseline,
                        const BasisSpec& basis, double gamma, const QliAnchors& init,
                        const LmiQliConfig& config);

/// l1 Bellman cost with W = Psi S_uu^{-1} Psi'.
double project_upper_bound(const QParams& params, const Dataset& data,
                           const BaselinePolicy& baseline, const BasisSpec& basis, double gamma);

}  // namespace lmiql
