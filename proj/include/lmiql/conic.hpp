#pragma once

#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace lmiql {

/// Affine form `constant + sum_i coeff[i] * y[i]` over the global decision vector.
class AffineExpr {
 public:
  AffineExpr() = default;
  explicit AffineExpr(double constant) : constant_(constant) {}

  static AffineExpr variable(int index, double coeff = 1.0);

  double constant() const { return constant_; }
  const std::map<int, double>& coefficients() const { return coeffs_; }

  void add_constant(double c) { constant_ += c; }
  /// Adds `coeff * y[index]`. Entries that cancel to exactly zero are dropped.
  void add_term(int index, double coeff);

  AffineExpr& operator+=(const AffineExpr& other);
  AffineExpr& operator-=(const AffineExpr& other);
  AffineExpr& operator*=(double scale);

  double evaluate(const Eigen::VectorXd& y) const;

  /// Replaces the listed decision entries by constants.
  AffineExpr substitute(const std::map<int, double>& values) const;

  /// Largest referenced decision index, or -1 for a constant expression.
  int max_index() const;
  bool is_constant() const { return coeffs_.empty(); }

  friend bool operator==(const AffineExpr& a, const AffineExpr& b) {
    return a.constant_ == b.constant_ && a.coeffs_ == b.coeffs_;
  }

  std::string to_string() const;

 private:
  double constant_ = 0.0;
  std::map<int, double> coeffs_;
};

AffineExpr operator+(AffineExpr a, const AffineExpr& b);
AffineExpr operator-(AffineExpr a, const AffineExpr& b);
AffineExpr operator*(double s, AffineExpr a);

/// Dense square grid of affine expressions, used for LMI blocks.
class ExprMatrix {
 public:
  ExprMatrix() = default;
  ExprMatrix(int rows, int cols) : rows_(rows), cols_(cols), data_(rows * cols) {}

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  AffineExpr& operator()(int i, int j) { return data_[i * cols_ + j]; }
  const AffineExpr& operator()(int i, int j) const { return data_[i * cols_ + j]; }

  Eigen::MatrixXd evaluate(const Eigen::VectorXd& y) const;
  bool is_structurally_symmetric() const;

  /// Stacks four blocks as [[tl, tr], [bl, br]].
  static ExprMatrix block2x2(const ExprMatrix& tl, const ExprMatrix& tr, const ExprMatrix& bl,
                             const ExprMatrix& br);
  static ExprMatrix constant(const Eigen::MatrixXd& m);
  ExprMatrix transposed() const;
  ExprMatrix& operator-=(const ExprMatrix& other);

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<AffineExpr> data_;
};

/// Symmetric matrix decision variable. Storage is the upper triangle; entry(i, j) and
/// entry(j, i) resolve to the same decision index.
class SymMatVar {
 public:
  SymMatVar() = default;
  SymMatVar(std::string name, int dim, int first_index);

  const std::string& name() const { return name_; }
  int dim() const { return dim_; }
  int first_index() const { return first_; }
  int index_count() const { return dim_ * (dim_ + 1) / 2; }

  int entry(int i, int j) const;
  AffineExpr expr(int i, int j) const { return AffineExpr::variable(entry(i, j)); }
  ExprMatrix as_expr_matrix() const;
  /// Sub-block [r0, r0+rows) x [c0, c0+cols) as expressions.
  ExprMatrix block(int r0, int c0, int rows, int cols) const;

  Eigen::MatrixXd value(const Eigen::VectorXd& y) const;

 private:
  std::string name_;
  int dim_ = 0;
  int first_ = 0;
};

/// Linear objective, scalar constraints `expr >= 0`, and LMI blocks `block >= 0`.
class ConicProblem {
 public:
  int var_count() const { return var_count_; }

  SymMatVar add_sym_mat_var(int dim, std::string name = "");
  int add_scalar_var(const std::string& name = "");

  void set_objective(AffineExpr objective);
  void add_scalar_ineq(AffineExpr expr);
  void add_psd_constraint(ExprMatrix block);

  const AffineExpr& objective() const { return objective_; }
  const std::vector<AffineExpr>& scalar_ineqs() const { return scalar_ineqs_; }
  const std::vector<ExprMatrix>& psd_blocks() const { return psd_blocks_; }

  /// Human-readable dump: objective, one line per scalar inequality, then each block.
  std::string dump() const;

 private:
  void check_indices(const AffineExpr& e) const;

  int var_count_ = 0;
  AffineExpr objective_;
  std::vector<AffineExpr> scalar_ineqs_;
  std::vector<ExprMatrix> psd_blocks_;
  std::vector<std::string> var_names_;
};

enum class SolveStatus { Optimal, Infeasible, Unbounded, NumericalFailure, MaxIter };

const char* to_string(SolveStatus status);
SolveStatus solve_status_from_string(const std::string& s);

struct SolverSettings {
  double feas_tol = 1e-8;
  double gap_tol = 1e-8;
  int max_iter = 200;
  bool verbose = false;
};

struct SolveResult {
  SolveStatus status = SolveStatus::NumericalFailure;
  Eigen::VectorXd y;
  double objective_value = 0.0;
  /// Relative primal infeasibility of the returned point.
  double primal_residual = 0.0;
  /// Relative dual infeasibility of the returned multipliers.
  double dual_residual = 0.0;
  double gap = 0.0;
  int iterations = 0;
};

/// Primal-dual interior-point method (HKM direction, Mehrotra predictor-corrector).
SolveResult solve(const ConicProblem& problem, const SolverSettings& settings = {});

/// max(0, -lambda_min(block(y))).
double eval_psd_violation(const ExprMatrix& block, const Eigen::VectorXd& y);

/// Largest violation of any scalar inequality or LMI block at y (0 when feasible).
double max_constraint_violation(const ConicProblem& problem, const Eigen::VectorXd& y);

}  // namespace lmiql
