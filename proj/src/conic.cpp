#include "lmiql/conic.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace lmiql {

namespace {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

AffineExpr AffineExpr::variable(int index, double coeff) {
  AffineExpr e;
  e.add_term(index, coeff);
  return e;
}

void AffineExpr::add_term(int index, double coeff) {
  if (index < 0) throw std::out_of_range("AffineExpr: negative decision index");
  if (coeff == 0.0) return;
  auto [it, inserted] = coeffs_.try_emplace(index, coeff);
  if (!inserted) {
    it->second += coeff;
    if (it->second == 0.0) coeffs_.erase(it);
  }
}

AffineExpr& AffineExpr::operator+=(const AffineExpr& other) {
  constant_ += other.constant_;
  for (const auto& [i, c] : other.coeffs_) add_term(i, c);
  return *this;
}

AffineExpr& AffineExpr::operator-=(const AffineExpr& other) {
  constant_ -= other.constant_;
  for (const auto& [i, c] : other.coeffs_) add_term(i, -c);
  return *this;
}

AffineExpr& AffineExpr::operator*=(double scale) {
  constant_ *= scale;
  if (scale == 0.0) {
    coeffs_.clear();
    return *this;
  }
  for (auto& [i, c] : coeffs_) c *= scale;
  return *this;
}

double AffineExpr::evaluate(const Eigen::VectorXd& y) const {
  double v = constant_;
  for (const auto& [i, c] : coeffs_) {
    if (i >= y.size()) throw std::out_of_range("AffineExpr::evaluate: decision vector too short");
    v += c * y[i];
  }
  return v;
}

AffineExpr AffineExpr::substitute(const std::map<int, double>& values) const {
  AffineExpr out(constant_);
  for (const auto& [i, c] : coeffs_) {
    auto it = values.find(i);
    if (it == values.end()) {
      out.add_term(i, c);
    } else {
      out.constant_ += c * it->second;
    }
  }
  return out;
}

int AffineExpr::max_index() const { return coeffs_.empty() ? -1 : coeffs_.rbegin()->first; }

std::string AffineExpr::to_string() const {
  std::ostringstream os;
  os << format_double(constant_);
  for (const auto& [i, c] : coeffs_) {
    os << (c < 0 ? " - " : " + ") << format_double(std::abs(c)) << "*y" << i;
  }
  return os.str();
}

AffineExpr operator+(AffineExpr a, const AffineExpr& b) { return a += b; }
AffineExpr operator-(AffineExpr a, const AffineExpr& b) { return a -= b; }
AffineExpr operator*(double s, AffineExpr a) { return a *= s; }

Eigen::MatrixXd ExprMatrix::evaluate(const Eigen::VectorXd& y) const {
  Eigen::MatrixXd m(rows_, cols_);
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < cols_; ++j) m(i, j) = (*this)(i, j).evaluate(y);
  return m;
}

bool ExprMatrix::is_structurally_symmetric() const {
  if (rows_ != cols_) return false;
  for (int i = 0; i < rows_; ++i)
    for (int j = i + 1; j < cols_; ++j)
      if (!((*this)(i, j) == (*this)(j, i))) return false;
  return true;
}

ExprMatrix ExprMatrix::block2x2(const ExprMatrix& tl, const ExprMatrix& tr, const ExprMatrix& bl,
                                const ExprMatrix& br) {
  if (tl.rows() != tr.rows() || bl.rows() != br.rows() || tl.cols() != bl.cols() ||
      tr.cols() != br.cols()) {
    throw std::invalid_argument("ExprMatrix::block2x2: incompatible block sizes");
  }
  ExprMatrix out(tl.rows() + bl.rows(), tl.cols() + tr.cols());
  for (int i = 0; i < out.rows(); ++i) {
    for (int j = 0; j < out.cols(); ++j) {
      const bool top = i < tl.rows();
      const bool left = j < tl.cols();
      const int ii = top ? i : i - tl.rows();
      const int jj = left ? j : j - tl.cols();
      out(i, j) = top ? (left ? tl(ii, jj) : tr(ii, jj)) : (left ? bl(ii, jj) : br(ii, jj));
    }
  }
  return out;
}

ExprMatrix ExprMatrix::constant(const Eigen::MatrixXd& m) {
  ExprMatrix out(static_cast<int>(m.rows()), static_cast<int>(m.cols()));
  for (int i = 0; i < out.rows(); ++i)
    for (int j = 0; j < out.cols(); ++j) out(i, j) = AffineExpr(m(i, j));
  return out;
}

ExprMatrix ExprMatrix::transposed() const {
  ExprMatrix out(cols_, rows_);
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < cols_; ++j) out(j, i) = (*this)(i, j);
  return out;
}

ExprMatrix& ExprMatrix::operator-=(const ExprMatrix& other) {
  if (rows_ != other.rows_ || cols_ != other.cols_)
    throw std::invalid_argument("ExprMatrix: size mismatch");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= other.data_[k];
  return *this;
}

SymMatVar::SymMatVar(std::string name, int dim, int first_index)
    : name_(std::move(name)), dim_(dim), first_(first_index) {}

int SymMatVar::entry(int i, int j) const {
  if (i < 0 || j < 0 || i >= dim_ || j >= dim_) throw std::out_of_range("SymMatVar::entry");
  if (i > j) std::swap(i, j);
  // Row-major upper triangle: row i starts after sum_{r<i} (dim - r) entries.
  return first_ + i * dim_ - i * (i - 1) / 2 + (j - i);
}

ExprMatrix SymMatVar::as_expr_matrix() const { return block(0, 0, dim_, dim_); }

ExprMatrix SymMatVar::block(int r0, int c0, int rows, int cols) const {
  ExprMatrix out(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) out(i, j) = expr(r0 + i, c0 + j);
  return out;
}

Eigen::MatrixXd SymMatVar::value(const Eigen::VectorXd& y) const {
  Eigen::MatrixXd m(dim_, dim_);
  for (int i = 0; i < dim_; ++i)
    for (int j = 0; j < dim_; ++j) m(i, j) = y[entry(i, j)];
  return m;
}

SymMatVar ConicProblem::add_sym_mat_var(int dim, std::string name) {
  if (dim <= 0) throw std::invalid_argument("add_sym_mat_var: dim must be >= 1");
  if (name.empty()) name = "M" + std::to_string(var_count_);
  SymMatVar var(name, dim, var_count_);
  for (int i = 0; i < dim; ++i)
    for (int j = i; j < dim; ++j)
      var_names_.push_back(name + "[" + std::to_string(i) + "," + std::to_string(j) + "]");
  var_count_ += var.index_count();
  return var;
}

int ConicProblem::add_scalar_var(const std::string& name) {
  var_names_.push_back(name.empty() ? "y" + std::to_string(var_count_) : name);
  return var_count_++;
}

void ConicProblem::check_indices(const AffineExpr& e) const {
  if (e.max_index() >= var_count_)
    throw std::out_of_range("ConicProblem: expression references unknown decision index " +
                            std::to_string(e.max_index()));
}

void ConicProblem::set_objective(AffineExpr objective) {
  check_indices(objective);
  objective_ = std::move(objective);
}

void ConicProblem::add_scalar_ineq(AffineExpr expr) {
  check_indices(expr);
  scalar_ineqs_.push_back(std::move(expr));
}

void ConicProblem::add_psd_constraint(ExprMatrix block) {
  if (block.rows() != block.cols() || block.rows() == 0)
    throw std::invalid_argument("add_psd_constraint: block must be square and non-empty");
  if (!block.is_structurally_symmetric())
    throw std::invalid_argument("add_psd_constraint: block is not structurally symmetric");
  for (int i = 0; i < block.rows(); ++i)
    for (int j = 0; j < block.cols(); ++j) check_indices(block(i, j));
  psd_blocks_.push_back(std::move(block));
}

std::string ConicProblem::dump() const {
  std::ostringstream os;
  os << "vars " << var_count_ << "\n";
  os << "minimize " << objective_.to_string() << "\n";
  for (const auto& e : scalar_ineqs_) os << "ineq " << e.to_string() << " >= 0\n";
  for (std::size_t b = 0; b < psd_blocks_.size(); ++b) {
    const auto& blk = psd_blocks_[b];
    os << "psd " << b << " dim " << blk.rows() << "\n";
    for (int i = 0; i < blk.rows(); ++i) {
      for (int j = 0; j < blk.cols(); ++j) os << (j ? " | " : "  ") << blk(i, j).to_string();
      os << "\n";
    }
  }
  return os.str();
}

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Optimal:
      return "Optimal";
    case SolveStatus::Infeasible:
      return "Infeasible";
    case SolveStatus::Unbounded:
      return "Unbounded";
    case SolveStatus::NumericalFailure:
      return "NumericalFailure";
    case SolveStatus::MaxIter:
      return "MaxIter";
  }
  return "?";
}

SolveStatus solve_status_from_string(const std::string& s) {
  for (auto st : {SolveStatus::Optimal, SolveStatus::Infeasible, SolveStatus::Unbounded,
                  SolveStatus::NumericalFailure, SolveStatus::MaxIter}) {
    if (s == to_string(st)) return st;
  }
  throw std::invalid_argument("unknown solve status '" + s + "'");
}

double eval_psd_violation(const ExprMatrix& block, const Eigen::VectorXd& y) {
  const Eigen::MatrixXd m = block.evaluate(y);
  const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym, Eigen::EigenvaluesOnly);
  return std::max(0.0, -eig.eigenvalues().minCoeff());
}

double max_constraint_violation(const ConicProblem& problem, const Eigen::VectorXd& y) {
  double v = 0.0;
  for (const auto& e : problem.scalar_ineqs()) v = std::max(v, -e.evaluate(y));
  for (const auto& b : problem.psd_blocks()) v = std::max(v, eval_psd_violation(b, y));
  return v;
}

}  // namespace lmiql
