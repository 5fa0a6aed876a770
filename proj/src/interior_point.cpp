// Infeasible-start primal-dual path-following method for
//
//   minimize    c'y + c0
//   subject to  a_i'y + b_i >= 0                    (scalar rows)
//               F_j0 + sum_l y_l F_jl  >= 0 (PSD)   (LMI blocks)
//
// with the dual  maximize -b'z - sum_j <F_j0, Z_j> + c0  s.t.  A'z + sum_j A_j*(Z_j) = c,
// z >= 0, Z_j PSD. Search directions use the HKM scaling and a Mehrotra
// predictor-corrector. Epigraph-style variables (unit coefficient in exactly two
// rows, no LMI) are eliminated from the Schur complement in closed form, which keeps
// the weights z/s of nearly-active row pairs from cancelling against each other.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "lmiql/conic.hpp"

namespace lmiql {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNeighbourhood = 1e-4;
constexpr int kMaxShrink = 30;

struct LmiBlock {
  int dim = 0;
  MatrixXd constant;
  std::vector<int> vars;
  std::vector<MatrixXd> coeffs;
};

struct CanonicalData {
  int n = 0;
  int m = 0;
  VectorXd c;
  double c0 = 0.0;
  // Row storage for the scalar constraints.
  std::vector<int> row_ptr;
  std::vector<int> col;
  std::vector<double> val;
  VectorXd b;
  std::vector<LmiBlock> blocks;
};

CanonicalData canonicalize(const ConicProblem& p) {
  CanonicalData d;
  d.n = p.var_count();
  d.c = VectorXd::Zero(d.n);
  d.c0 = p.objective().constant();
  for (const auto& [i, v] : p.objective().coefficients()) d.c[i] = v;

  d.m = static_cast<int>(p.scalar_ineqs().size());
  d.b.resize(d.m);
  d.row_ptr.push_back(0);
  for (int i = 0; i < d.m; ++i) {
    const auto& e = p.scalar_ineqs()[i];
    d.b[i] = e.constant();
    for (const auto& [j, v] : e.coefficients()) {
      d.col.push_back(j);
      d.val.push_back(v);
    }
    d.row_ptr.push_back(static_cast<int>(d.col.size()));
  }

  for (const auto& blk : p.psd_blocks()) {
    LmiBlock lb;
    lb.dim = blk.rows();
    lb.constant = MatrixXd::Zero(lb.dim, lb.dim);
    std::map<int, MatrixXd> per_var;
    for (int r = 0; r < lb.dim; ++r) {
      for (int s = 0; s < lb.dim; ++s) {
        lb.constant(r, s) = blk(r, s).constant();
        for (const auto& [j, v] : blk(r, s).coefficients()) {
          auto [it, fresh] = per_var.try_emplace(j, MatrixXd::Zero(lb.dim, lb.dim));
          it->second(r, s) = v;
        }
      }
    }
    for (auto& [j, f] : per_var) {
      lb.vars.push_back(j);
      lb.coeffs.push_back(std::move(f));
    }
    d.blocks.push_back(std::move(lb));
  }
  return d;
}

MatrixXd sym(const MatrixXd& x) { return 0.5 * (x + x.transpose()); }

/// Largest alpha in [0, inf) with X + alpha*dX PSD, given X positive definite.
double max_psd_step(const MatrixXd& x, const MatrixXd& dx) {
  Eigen::LLT<MatrixXd> llt(x);
  if (llt.info() != Eigen::Success) return 0.0;
  const MatrixXd l_inv_dx = llt.matrixL().solve(dx);
  const MatrixXd scaled = llt.matrixL().solve(l_inv_dx.transpose());
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(sym(scaled), Eigen::EigenvaluesOnly);
  const double lmin = eig.eigenvalues().minCoeff();
  return lmin >= 0.0 ? kInf : -1.0 / lmin;
}

double max_orthant_step(const VectorXd& x, const VectorXd& dx) {
  double a = kInf;
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (dx[i] < 0.0) a = std::min(a, -x[i] / dx[i]);
  return a;
}

double min_eig(const MatrixXd& x) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(sym(x), Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

struct Direction {
  VectorXd dy, ds, dz;
  std::vector<MatrixXd> dS, dZ;
};

/// Scalar variable that appears only in two rows `t + g1'y + b1 >= 0`, `t + g2'y + b2 >= 0`
/// (unit coefficient, no LMI). It is eliminated from the Newton system in closed form.
struct EliminatedPair {
  int var = 0;
  int r1 = 0;
  int r2 = 0;
  // g1 - g2 over the kept variables, in kept positions.
  std::vector<int> delta_idx;
  std::vector<double> delta_val;
};

class InteriorPoint {
 public:
  InteriorPoint(const ConicProblem& problem, const SolverSettings& settings)
      : d_(canonicalize(problem)), settings_(settings) {
    nu_ = d_.m;
    for (const auto& blk : d_.blocks) nu_ += blk.dim;
    analyze();
  }

  SolveResult run();

 private:
  void analyze();

  VectorXd apply_A(const VectorXd& y) const;
  VectorXd apply_At(const VectorXd& z) const;
  MatrixXd apply_F(int j, const VectorXd& y, bool with_constant) const;
  void add_Ft(int j, const MatrixXd& Z, VectorXd& out) const;
  /// g'y over row i without the eliminated variable of its pair.
  double row_rest_dot(int i, const VectorXd& y) const;

  bool assemble_and_factor();
  VectorXd solve_schur(const VectorXd& rhs) const;
  VectorXd apply_schur(const VectorXd& v) const;
  Direction direction(double sigma_mu, const Direction* corrector) const;

  double complementarity() const;
  bool centered(const VectorXd& s, const VectorXd& z, const std::vector<MatrixXd>& S,
                const std::vector<MatrixXd>& Z) const;

  CanonicalData d_;
  SolverSettings settings_;
  int nu_ = 0;

  std::vector<EliminatedPair> pairs_;
  std::vector<int> row_pair_;     // pair index per row, -1 if none
  std::vector<int> kept_;         // kept variable ids
  std::vector<int> kept_pos_;     // position in kept_, -1 if eliminated
  std::vector<int> row_kept_idx_; // kept positions of row entries (-1 for the eliminated one)
  MatrixXd schur_;
  Eigen::LDLT<MatrixXd> ldlt_;

  // Iterate.
  VectorXd y_, s_, z_;
  std::vector<MatrixXd> S_, Z_, S_inv_;
  // Residuals.
  VectorXd rp_, rd_;
  std::vector<MatrixXd> Rp_;
};

void InteriorPoint::analyze() {
  std::vector<int> row_count(d_.n, 0);
  std::vector<int> first_row(d_.n, -1), second_row(d_.n, -1);
  std::vector<bool> unit(d_.n, true), in_block(d_.n, false);
  for (int i = 0; i < d_.m; ++i) {
    for (int a = d_.row_ptr[i]; a < d_.row_ptr[i + 1]; ++a) {
      const int j = d_.col[a];
      if (d_.val[a] != 1.0) unit[j] = false;
      if (row_count[j] == 0) first_row[j] = i;
      else if (row_count[j] == 1) second_row[j] = i;
      ++row_count[j];
    }
  }
  for (const auto& blk : d_.blocks)
    for (int j : blk.vars) in_block[j] = true;

  row_pair_.assign(d_.m, -1);
  kept_pos_.assign(d_.n, -1);
  std::vector<bool> eliminated(d_.n, false);
  for (int j = 0; j < d_.n; ++j) {
    if (in_block[j] || row_count[j] != 2 || !unit[j]) continue;
    const int r1 = first_row[j], r2 = second_row[j];
    if (r1 == r2 || row_pair_[r1] >= 0 || row_pair_[r2] >= 0) continue;
    // The rows must not carry another eliminated variable.
    bool clash = false;
    for (int r : {r1, r2})
      for (int a = d_.row_ptr[r]; a < d_.row_ptr[r + 1]; ++a)
        if (d_.col[a] != j && eliminated[d_.col[a]]) clash = true;
    if (clash) continue;
    EliminatedPair p;
    p.var = j;
    p.r1 = r1;
    p.r2 = r2;
    row_pair_[r1] = row_pair_[r2] = static_cast<int>(pairs_.size());
    eliminated[j] = true;
    pairs_.push_back(std::move(p));
  }
  for (int j = 0; j < d_.n; ++j) {
    if (eliminated[j]) continue;
    kept_pos_[j] = static_cast<int>(kept_.size());
    kept_.push_back(j);
  }
  row_kept_idx_.resize(d_.col.size());
  for (std::size_t a = 0; a < d_.col.size(); ++a) row_kept_idx_[a] = kept_pos_[d_.col[a]];

  for (auto& p : pairs_) {
    std::map<int, double> delta;
    for (int a = d_.row_ptr[p.r1]; a < d_.row_ptr[p.r1 + 1]; ++a)
      if (d_.col[a] != p.var) delta[row_kept_idx_[a]] += d_.val[a];
    for (int a = d_.row_ptr[p.r2]; a < d_.row_ptr[p.r2 + 1]; ++a)
      if (d_.col[a] != p.var) delta[row_kept_idx_[a]] -= d_.val[a];
    for (const auto& [k, v] : delta) {
      if (v == 0.0) continue;
      p.delta_idx.push_back(k);
      p.delta_val.push_back(v);
    }
  }
  const int nk = static_cast<int>(kept_.size());
  schur_ = MatrixXd::Zero(nk, nk);
}

double InteriorPoint::row_rest_dot(int i, const VectorXd& y) const {
  double v = 0.0;
  for (int a = d_.row_ptr[i]; a < d_.row_ptr[i + 1]; ++a)
    if (row_kept_idx_[a] >= 0) v += d_.val[a] * y[d_.col[a]];
  return v;
}

VectorXd InteriorPoint::apply_A(const VectorXd& y) const {
  VectorXd out(d_.m);
  for (int i = 0; i < d_.m; ++i) {
    double v = 0.0;
    for (int a = d_.row_ptr[i]; a < d_.row_ptr[i + 1]; ++a) v += d_.val[a] * y[d_.col[a]];
    out[i] = v;
  }
  return out;
}

VectorXd InteriorPoint::apply_At(const VectorXd& z) const {
  VectorXd out = VectorXd::Zero(d_.n);
  for (int i = 0; i < d_.m; ++i)
    for (int a = d_.row_ptr[i]; a < d_.row_ptr[i + 1]; ++a) out[d_.col[a]] += d_.val[a] * z[i];
  return out;
}

MatrixXd InteriorPoint::apply_F(int j, const VectorXd& y, bool with_constant) const {
  const auto& blk = d_.blocks[j];
  MatrixXd out = with_constant ? blk.constant : MatrixXd::Zero(blk.dim, blk.dim);
  for (std::size_t p = 0; p < blk.vars.size(); ++p) out += y[blk.vars[p]] * blk.coeffs[p];
  return out;
}

void InteriorPoint::add_Ft(int j, const MatrixXd& Z, VectorXd& out) const {
  const auto& blk = d_.blocks[j];
  for (std::size_t p = 0; p < blk.vars.size(); ++p)
    out[blk.vars[p]] += blk.coeffs[p].cwiseProduct(Z).sum();
}

bool InteriorPoint::centered(const VectorXd& s, const VectorXd& z, const std::vector<MatrixXd>& S,
                             const std::vector<MatrixXd>& Z) const {
  double total = s.dot(z);
  for (std::size_t j = 0; j < S.size(); ++j) total += S[j].cwiseProduct(Z[j]).sum();
  const double floor = kNeighbourhood * total / std::max(1, nu_);
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s[i] * z[i] < floor) return false;
  for (std::size_t j = 0; j < S.size(); ++j) {
    Eigen::LLT<MatrixXd> llt(S[j]);
    if (llt.info() != Eigen::Success) return false;
    const MatrixXd l = llt.matrixL();
    if (min_eig(l.transpose() * Z[j] * l) < floor) return false;
  }
  return true;
}

double InteriorPoint::complementarity() const {
  double g = s_.dot(z_);
  for (std::size_t j = 0; j < S_.size(); ++j) g += S_[j].cwiseProduct(Z_[j]).sum();
  return g;
}

bool InteriorPoint::assemble_and_factor() {
  const int nk = static_cast<int>(kept_.size());
  if (nk == 0) return true;
  schur_.setZero();

  for (int i = 0; i < d_.m; ++i) {
    if (row_pair_[i] >= 0) continue;
    const double w = z_[i] / s_[i];
    for (int a = d_.row_ptr[i]; a < d_.row_ptr[i + 1]; ++a)
      for (int bb = d_.row_ptr[i]; bb < d_.row_ptr[i + 1]; ++bb)
        schur_(row_kept_idx_[a], row_kept_idx_[bb]) += w * d_.val[a] * d_.val[bb];
  }
  for (const auto& p : pairs_) {
    const double d1 = z_[p.r1] / s_[p.r1];
    const double d2 = z_[p.r2] / s_[p.r2];
    const double w = d1 * d2 / (d1 + d2);
    for (std::size_t a = 0; a < p.delta_idx.size(); ++a)
      for (std::size_t bb = 0; bb < p.delta_idx.size(); ++bb)
        schur_(p.delta_idx[a], p.delta_idx[bb]) += w * p.delta_val[a] * p.delta_val[bb];
  }
  for (std::size_t j = 0; j < d_.blocks.size(); ++j) {
    const auto& blk = d_.blocks[j];
    std::vector<MatrixXd> g(blk.vars.size());
    for (std::size_t q = 0; q < blk.vars.size(); ++q) g[q] = S_inv_[j] * blk.coeffs[q] * Z_[j];
    for (std::size_t p = 0; p < blk.vars.size(); ++p) {
      for (std::size_t q = 0; q <= p; ++q) {
        const double v = blk.coeffs[p].cwiseProduct(g[q].transpose()).sum();
        const int kp = kept_pos_[blk.vars[p]], kq = kept_pos_[blk.vars[q]];
        schur_(kp, kq) += v;
        if (kp != kq) schur_(kq, kp) += v;
      }
    }
  }

  // Exactly singular systems (free variables collinear in the data) need a larger shift;
  // iterative refinement against the unshifted operator removes its effect on the step.
  const MatrixXd base = 0.5 * (schur_ + schur_.transpose());
  const double scale = std::max(1.0, base.diagonal().maxCoeff());
  for (double rel : {1e-24, 1e-16, 1e-12, 1e-8}) {
    MatrixXd reg = base;
    reg.diagonal().array() += rel * scale;
    ldlt_.compute(reg);
    if (ldlt_.info() == Eigen::Success) return true;
  }
  return false;
}

VectorXd InteriorPoint::apply_schur(const VectorXd& v) const {
  // v lives in kept positions.
  VectorXd full = VectorXd::Zero(d_.n);
  for (std::size_t k = 0; k < kept_.size(); ++k) full[kept_[k]] = v[k];
  VectorXd out_full = VectorXd::Zero(d_.n);
  for (int i = 0; i < d_.m; ++i) {
    if (row_pair_[i] >= 0) continue;
    double av = 0.0;
    for (int a = d_.row_ptr[i]; a < d_.row_ptr[i + 1]; ++a) av += d_.val[a] * full[d_.col[a]];
    const double w = z_[i] / s_[i] * av;
    for (int a = d_.row_ptr[i]; a < d_.row_ptr[i + 1]; ++a) out_full[d_.col[a]] += w * d_.val[a];
  }
  for (std::size_t j = 0; j < d_.blocks.size(); ++j)
    add_Ft(static_cast<int>(j), sym(S_inv_[j] * apply_F(static_cast<int>(j), full, false) * Z_[j]),
           out_full);
  VectorXd out(kept_.size());
  for (std::size_t k = 0; k < kept_.size(); ++k) out[k] = out_full[kept_[k]];
  for (const auto& p : pairs_) {
    const double d1 = z_[p.r1] / s_[p.r1];
    const double d2 = z_[p.r2] / s_[p.r2];
    double dv = 0.0;
    for (std::size_t a = 0; a < p.delta_idx.size(); ++a) dv += p.delta_val[a] * v[p.delta_idx[a]];
    const double w = d1 * d2 / (d1 + d2) * dv;
    for (std::size_t a = 0; a < p.delta_idx.size(); ++a) out[p.delta_idx[a]] += w * p.delta_val[a];
  }
  return out;
}

VectorXd InteriorPoint::solve_schur(const VectorXd& rhs) const {
  if (rhs.size() == 0) return VectorXd();
  VectorXd x = ldlt_.solve(rhs);
  const double rhs_norm = std::max(rhs.lpNorm<Eigen::Infinity>(), 1e-300);
  double prev = kInf;
  for (int it = 0; it < 10; ++it) {
    const VectorXd r = rhs - apply_schur(x);
    const double rn = r.lpNorm<Eigen::Infinity>();
    if (rn <= 1e-15 * rhs_norm || rn >= 0.5 * prev) break;
    prev = rn;
    x += ldlt_.solve(r);
  }
  return x;
}

Direction InteriorPoint::direction(double sigma_mu, const Direction* corr) const {
  const std::size_t nb = d_.blocks.size();
  VectorXd h_lp(d_.m);
  for (int i = 0; i < d_.m; ++i) {
    double c = sigma_mu - s_[i] * z_[i];
    if (corr) c -= corr->ds[i] * corr->dz[i];
    h_lp[i] = c / s_[i];
  }
  std::vector<MatrixXd> H(nb);
  for (std::size_t j = 0; j < nb; ++j) {
    MatrixXd h = sigma_mu * S_inv_[j] - Z_[j];
    if (corr) h -= S_inv_[j] * corr->dS[j] * corr->dZ[j];
    H[j] = sym(h);
  }

  VectorXd w(d_.m);
  for (int i = 0; i < d_.m; ++i) w[i] = h_lp[i] - z_[i] / s_[i] * rp_[i];
  VectorXd rhs = apply_At(w) - rd_;
  for (std::size_t j = 0; j < nb; ++j)
    add_Ft(static_cast<int>(j), H[j] - sym(S_inv_[j] * Rp_[j] * Z_[j]), rhs);

  // Fold the eliminated variables into the kept right-hand side.
  std::vector<double> rhs_t(pairs_.size());
  for (std::size_t k = 0; k < pairs_.size(); ++k) {
    const auto& p = pairs_[k];
    const double d1 = z_[p.r1] / s_[p.r1];
    const double d2 = z_[p.r2] / s_[p.r2];
    rhs_t[k] = rhs[p.var];
    const double b1 = d1 / (d1 + d2), b2 = d2 / (d1 + d2);
    for (int a = d_.row_ptr[p.r1]; a < d_.row_ptr[p.r1 + 1]; ++a)
      if (d_.col[a] != p.var) rhs[d_.col[a]] -= b1 * d_.val[a] * rhs_t[k];
    for (int a = d_.row_ptr[p.r2]; a < d_.row_ptr[p.r2 + 1]; ++a)
      if (d_.col[a] != p.var) rhs[d_.col[a]] -= b2 * d_.val[a] * rhs_t[k];
  }
  VectorXd rhs_kept(kept_.size());
  for (std::size_t k = 0; k < kept_.size(); ++k) rhs_kept[k] = rhs[kept_[k]];
  const VectorXd dy_kept = solve_schur(rhs_kept);

  Direction dir;
  dir.dy = VectorXd::Zero(d_.n);
  for (std::size_t k = 0; k < kept_.size(); ++k) dir.dy[kept_[k]] = dy_kept[k];
  dir.ds = apply_A(dir.dy) + rp_;  // pair rows are overwritten below
  for (std::size_t k = 0; k < pairs_.size(); ++k) {
    const auto& p = pairs_[k];
    const double d1 = z_[p.r1] / s_[p.r1];
    const double d2 = z_[p.r2] / s_[p.r2];
    const double g1 = row_rest_dot(p.r1, dir.dy);
    const double g2 = row_rest_dot(p.r2, dir.dy);
    double gd = 0.0;
    for (std::size_t a = 0; a < p.delta_idx.size(); ++a)
      gd += p.delta_val[a] * dy_kept[p.delta_idx[a]];
    dir.dy[p.var] = (rhs_t[k] - d1 * g1 - d2 * g2) / (d1 + d2);
    dir.ds[p.r1] = (rhs_t[k] + d2 * gd) / (d1 + d2) + rp_[p.r1];
    dir.ds[p.r2] = (rhs_t[k] - d1 * gd) / (d1 + d2) + rp_[p.r2];
  }
  dir.dz.resize(d_.m);
  for (int i = 0; i < d_.m; ++i) dir.dz[i] = h_lp[i] - z_[i] / s_[i] * dir.ds[i];
  dir.dS.resize(nb);
  dir.dZ.resize(nb);
  for (std::size_t j = 0; j < nb; ++j) {
    dir.dS[j] = apply_F(static_cast<int>(j), dir.dy, false) + Rp_[j];
    dir.dZ[j] = H[j] - sym(S_inv_[j] * dir.dS[j] * Z_[j]);
  }
  return dir;
}

SolveResult InteriorPoint::run() {
  SolveResult result;
  const std::size_t nb = d_.blocks.size();

  double b_scale = d_.b.size() ? d_.b.lpNorm<Eigen::Infinity>() : 0.0;
  for (const auto& blk : d_.blocks) b_scale = std::max(b_scale, blk.constant.cwiseAbs().maxCoeff());
  const double c_scale = d_.c.size() ? d_.c.lpNorm<Eigen::Infinity>() : 0.0;

  // Starting point: y = 0 with slacks and multipliers on the central path of a
  // scaled identity.
  const double zeta_p = std::max(1.0, std::sqrt(b_scale));
  const double zeta_d = std::max(1.0, std::sqrt(c_scale));
  y_ = VectorXd::Zero(d_.n);
  s_ = VectorXd::Constant(d_.m, zeta_p);
  z_ = VectorXd::Constant(d_.m, zeta_d);
  S_.resize(nb);
  Z_.resize(nb);
  S_inv_.resize(nb);
  Rp_.resize(nb);
  for (std::size_t j = 0; j < nb; ++j) {
    const int dim = d_.blocks[j].dim;
    S_[j] = zeta_p * MatrixXd::Identity(dim, dim);
    Z_[j] = zeta_d * MatrixXd::Identity(dim, dim);
  }

  auto finish = [&](SolveStatus st, int iter, double pinf, double dinf, double gap) {
    result.status = st;
    result.y = y_;
    result.objective_value = d_.c.dot(y_) + d_.c0;
    result.primal_residual = pinf;
    result.dual_residual = dinf;
    result.gap = gap;
    result.iterations = iter;
    return result;
  };

  double pinf = kInf, dinf = kInf, gap = kInf;
  int stalls = 0;
  for (int iter = 0; iter <= settings_.max_iter; ++iter) {
    rp_ = apply_A(y_) + d_.b - s_;
    VectorXd dual_map = apply_At(z_);
    for (std::size_t j = 0; j < nb; ++j) {
      Rp_[j] = apply_F(static_cast<int>(j), y_, true) - S_[j];
      add_Ft(static_cast<int>(j), Z_[j], dual_map);
    }
    rd_ = d_.c - dual_map;

    double rp_norm = rp_.size() ? rp_.lpNorm<Eigen::Infinity>() : 0.0;
    for (const auto& r : Rp_) rp_norm = std::max(rp_norm, r.cwiseAbs().maxCoeff());
    pinf = rp_norm / (1.0 + b_scale);
    dinf = (rd_.size() ? rd_.lpNorm<Eigen::Infinity>() : 0.0) / (1.0 + c_scale);

    const double pobj = d_.c.dot(y_);
    double bz = d_.b.dot(z_);
    for (std::size_t j = 0; j < nb; ++j) bz += d_.blocks[j].constant.cwiseProduct(Z_[j]).sum();
    const double dobj = -bz;
    const double compl_total = complementarity();
    const double denom = 1.0 + std::abs(pobj) + std::abs(dobj);
    gap = std::max(std::abs(pobj - dobj), compl_total) / denom;

    if (!std::isfinite(pinf) || !std::isfinite(dinf) || !std::isfinite(gap))
      return finish(SolveStatus::NumericalFailure, iter, pinf, dinf, gap);

    if (settings_.verbose) {
      std::fprintf(stderr, "ipm %3d pobj %+.10e dobj %+.10e pinf %.2e dinf %.2e gap %.2e\n", iter,
                   pobj + d_.c0, dobj + d_.c0, pinf, dinf, gap);
    }

    if (pinf <= settings_.feas_tol && dinf <= settings_.feas_tol && gap <= settings_.gap_tol) {
      VectorXd ay = apply_A(y_) + d_.b;
      double viol = ay.size() ? std::max(0.0, -ay.minCoeff()) : 0.0;
      for (std::size_t j = 0; j < nb; ++j)
        viol = std::max(viol, -min_eig(apply_F(static_cast<int>(j), y_, true)));
      if (viol <= settings_.feas_tol) return finish(SolveStatus::Optimal, iter, pinf, dinf, gap);
    }

    // Farkas certificate for an empty feasible set: A'z + sum A_j*(Z_j) ~ 0 with
    // b'z + sum <F_j0, Z_j> < 0.
    if (bz < 0.0 && pinf > settings_.feas_tol) {
      const double ray = dual_map.size() ? dual_map.lpNorm<Eigen::Infinity>() : 0.0;
      if (ray <= settings_.feas_tol * (-bz))
        return finish(SolveStatus::Infeasible, iter, pinf, dinf, gap);
    }
    // Improving ray: A y >= 0, F_lin(y) PSD, c'y < 0.
    if (pobj < 0.0 && dinf > settings_.feas_tol && y_.size() &&
        y_.lpNorm<Eigen::Infinity>() > 1e6 * (1.0 + b_scale)) {
      VectorXd ay = apply_A(y_);
      double viol = ay.size() ? std::max(0.0, -ay.minCoeff()) : 0.0;
      for (std::size_t j = 0; j < nb; ++j)
        viol = std::max(viol, -min_eig(apply_F(static_cast<int>(j), y_, false)));
      if (viol <= settings_.feas_tol * (-pobj))
        return finish(SolveStatus::Unbounded, iter, pinf, dinf, gap);
    }

    if (iter == settings_.max_iter) break;

    for (std::size_t j = 0; j < nb; ++j) {
      Eigen::LLT<MatrixXd> llt(S_[j]);
      if (llt.info() != Eigen::Success) {
        if (settings_.verbose) std::fprintf(stderr, "    slack block %zu lost definiteness\n", j);
        return finish(SolveStatus::NumericalFailure, iter, pinf, dinf, gap);
      }
      S_inv_[j] = sym(llt.solve(MatrixXd::Identity(S_[j].rows(), S_[j].cols())));
    }
    if (!assemble_and_factor()) {
      if (settings_.verbose) std::fprintf(stderr, "    Schur factorization failed\n");
      return finish(SolveStatus::NumericalFailure, iter, pinf, dinf, gap);
    }

    const double mu = compl_total / std::max(1, nu_);

    // Predictor.
    const Direction aff = direction(0.0, nullptr);
    double ap = max_orthant_step(s_, aff.ds);
    double ad = max_orthant_step(z_, aff.dz);
    for (std::size_t j = 0; j < nb; ++j) {
      ap = std::min(ap, max_psd_step(S_[j], aff.dS[j]));
      ad = std::min(ad, max_psd_step(Z_[j], aff.dZ[j]));
    }
    ap = std::min(1.0, ap);
    ad = std::min(1.0, ad);
    double mu_aff = (s_ + ap * aff.ds).dot(z_ + ad * aff.dz);
    for (std::size_t j = 0; j < nb; ++j)
      mu_aff += (S_[j] + ap * aff.dS[j]).cwiseProduct(Z_[j] + ad * aff.dZ[j]).sum();
    mu_aff /= std::max(1, nu_);
    const double sigma = std::clamp(std::pow(mu_aff / mu, 3.0), 0.0, 1.0);

    // Corrector.
    const Direction dir = direction(sigma * mu, &aff);
    ap = max_orthant_step(s_, dir.ds);
    ad = max_orthant_step(z_, dir.dz);
    for (std::size_t j = 0; j < nb; ++j) {
      ap = std::min(ap, max_psd_step(S_[j], dir.dS[j]));
      ad = std::min(ad, max_psd_step(Z_[j], dir.dZ[j]));
    }
    const double tau = 0.98;
    ap = std::min(1.0, tau * ap);
    ad = std::min(1.0, tau * ad);

    if (settings_.verbose) std::fprintf(stderr, "    step %.3e / %.3e sigma %.3e\n", ap, ad, sigma);
    if (!dir.dy.allFinite() || !std::isfinite(ap) || !std::isfinite(ad))
      return finish(SolveStatus::NumericalFailure, iter, pinf, dinf, gap);
    if (ap < 1e-12 && ad < 1e-12) {
      if (++stalls >= 3) return finish(SolveStatus::NumericalFailure, iter, pinf, dinf, gap);
    } else {
      stalls = 0;
    }

    // Shorten the step until every complementary pair stays within a wide neighbourhood of
    // the central path.
    VectorXd s_new, z_new;
    std::vector<MatrixXd> S_new(nb), Z_new(nb);
    for (int shrink = 0;; ++shrink) {
      s_new = s_ + ap * dir.ds;
      z_new = z_ + ad * dir.dz;
      for (std::size_t j = 0; j < nb; ++j) {
        S_new[j] = sym(S_[j] + ap * dir.dS[j]);
        Z_new[j] = sym(Z_[j] + ad * dir.dZ[j]);
      }
      if (shrink == kMaxShrink || centered(s_new, z_new, S_new, Z_new)) break;
      ap *= 0.8;
      ad *= 0.8;
    }
    y_ += ap * dir.dy;
    s_ = std::move(s_new);
    z_ = std::move(z_new);
    S_ = std::move(S_new);
    Z_ = std::move(Z_new);
  }
  return finish(SolveStatus::MaxIter, settings_.max_iter, pinf, dinf, gap);
}

}  // namespace

SolveResult solve(const ConicProblem& problem, const SolverSettings& settings) {
  InteriorPoint ipm(problem, settings);
  return ipm.run();
}

}  // namespace lmiql
