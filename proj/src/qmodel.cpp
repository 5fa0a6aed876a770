#include "lmiql/qmodel.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace lmiql {

namespace {

void check_dim(Eigen::Index got, Eigen::Index want, const char* what) {
  if (got != want) {
    std::ostringstream os;
    os << what << ": dimension mismatch (expected " << want << ", got " << got << ")";
    throw std::invalid_argument(os.str());
  }
}

Eigen::LLT<Eigen::MatrixXd> factor_suu(const QParams& p) {
  const Eigen::MatrixXd suu = p.S_uu();
  Eigen::LLT<Eigen::MatrixXd> llt(0.5 * (suu + suu.transpose()));
  if (llt.info() != Eigen::Success)
    throw NotPositiveDefinite("S_uu is not positive definite; greedy action undefined");
  return llt;
}

Eigen::VectorXd deviation_coords(const QParams& params, const BaselinePolicy& baseline,
                                 const BasisSpec& basis, const Eigen::VectorXd& x,
                                 const Eigen::VectorXd& u) {
  check_dim(u.size(), params.n_u(), "q_value input");
  const Eigen::VectorXd phi = basis(x);
  check_dim(phi.size(), params.n_phi(), "q_value basis");
  Eigen::VectorXd xi(phi.size() + u.size());
  xi << phi, u - baseline.action(basis, x);
  return xi;
}

}  // namespace

Eigen::VectorXd BasisSpec::operator()(const Eigen::VectorXd& x) const {
  check_dim(x.size(), n_x, "basis input");
  Eigen::VectorXd out = phi(x);
  check_dim(out.size(), n_phi, "basis output");
  return out;
}

BasisSpec identity_basis(int n_x) {
  return BasisSpec{"identity", n_x, n_x, [](const Eigen::VectorXd& x) { return x; }};
}

BasisSpec pendulum_basis() {
  return BasisSpec{"pendulum", 2, 3, [](const Eigen::VectorXd& x) {
                     Eigen::VectorXd phi(3);
                     const double angle = wrap_angle(x[0]);
                     phi << angle, x[1], std::sin(angle);
                     return phi;
                   }};
}

BasisSpec basis_by_name(const std::string& name, int n_x) {
  if (name == "identity") return identity_basis(n_x);
  if (name == "pendulum") {
    if (n_x != 2) throw std::invalid_argument("pendulum basis requires a 2-dimensional state");
    return pendulum_basis();
  }
  throw std::invalid_argument("unknown basis '" + name + "'");
}

AffinePolicy AffinePolicy::zero(int n_u, int n_phi) {
  return AffinePolicy{Eigen::MatrixXd::Zero(n_u, n_phi), Eigen::VectorXd::Zero(n_u)};
}

Eigen::VectorXd AffinePolicy::action(const BasisSpec& basis, const Eigen::VectorXd& x) const {
  const Eigen::VectorXd phi = basis(x);
  check_dim(phi.size(), gain.cols(), "affine policy");
  return gain * phi + offset;
}

Policy AffinePolicy::bind(const BasisSpec& basis) const {
  return [self = *this, basis](const Eigen::VectorXd& x) { return self.action(basis, x); };
}

BaselinePolicy BaselinePolicy::zero(int n_x, int n_u, int n_phi) {
  BaselinePolicy b;
  b.K_bar = Eigen::MatrixXd::Zero(n_u, n_phi);
  b.offset = Eigen::VectorXd::Zero(n_u);
  b.P_bar = Eigen::MatrixXd::Zero(n_x, n_x);
  b.zero_flag = true;
  return b;
}

Eigen::VectorXd BaselinePolicy::action(const BasisSpec& basis, const Eigen::VectorXd& x) const {
  if (zero_flag) return Eigen::VectorXd::Zero(n_u());
  return K_bar * basis(x) + offset;
}

double BaselinePolicy::value(const Eigen::VectorXd& x) const {
  if (zero_flag) return 0.0;
  check_dim(x.size(), P_bar.rows(), "baseline value");
  return -x.dot(P_bar * x);
}

void BaselinePolicy::validate(const BasisSpec& basis) const {
  check_dim(K_bar.cols(), basis.n_phi, "baseline gain columns");
  check_dim(K_bar.rows(), offset.size(), "baseline gain rows");
  check_dim(P_bar.rows(), basis.n_x, "baseline value matrix");
  if (!P_bar.isApprox(P_bar.transpose(), 1e-12) && P_bar.norm() > 0)
    throw std::invalid_argument("baseline value matrix must be symmetric");
}

QParams QParams::zeros(int n_phi, int n_u) {
  QParams p;
  p.R_x = Eigen::VectorXd::Zero(n_phi);
  p.R_u = Eigen::VectorXd::Zero(n_u);
  p.S = Eigen::MatrixXd::Zero(n_phi + n_u, n_phi + n_u);
  return p;
}

int QParams::parameter_count(int n_phi, int n_u) {
  const int n = n_phi + n_u;
  return 1 + n_phi + n_u + n * (n + 1) / 2;
}

Eigen::VectorXd QParams::to_vector() const {
  Eigen::VectorXd v(parameter_count(n_phi(), n_u()));
  int k = 0;
  v[k++] = T;
  for (Eigen::Index i = 0; i < R_x.size(); ++i) v[k++] = R_x[i];
  for (Eigen::Index i = 0; i < R_u.size(); ++i) v[k++] = R_u[i];
  for (Eigen::Index i = 0; i < S.rows(); ++i)
    for (Eigen::Index j = i; j < S.cols(); ++j) v[k++] = S(i, j);
  return v;
}

QParams QParams::from_vector(const Eigen::VectorXd& theta, int n_phi, int n_u) {
  check_dim(theta.size(), parameter_count(n_phi, n_u), "QParams::from_vector");
  QParams p = zeros(n_phi, n_u);
  int k = 0;
  p.T = theta[k++];
  for (int i = 0; i < n_phi; ++i) p.R_x[i] = theta[k++];
  for (int i = 0; i < n_u; ++i) p.R_u[i] = theta[k++];
  for (int i = 0; i < n_phi + n_u; ++i)
    for (int j = i; j < n_phi + n_u; ++j) p.S(i, j) = p.S(j, i) = theta[k++];
  return p;
}

void QParams::validate() const {
  const auto n = R_x.size() + R_u.size();
  if (S.rows() != n || S.cols() != n) throw std::invalid_argument("QParams: S has wrong size");
  if (!S.isApprox(S.transpose(), 1e-12) && S.norm() > 0)
    throw std::invalid_argument("QParams: S must be symmetric");
}

Eigen::MatrixXd omega(const QParams& p) {
  const int n = p.n_phi();
  Eigen::MatrixXd o = Eigen::MatrixXd::Zero(n + 1, n + 1);
  o.topLeftCorner(n, n) = -p.S_xx();
  o.topRightCorner(n, 1) = 0.5 * p.R_x;
  o.bottomLeftCorner(1, n) = 0.5 * p.R_x.transpose();
  return o;
}

Eigen::MatrixXd psi(const QParams& p) {
  const int n = p.n_phi();
  Eigen::MatrixXd ps(n + 1, p.n_u());
  ps.topRows(n) = p.S_xu();
  ps.bottomRows(1) = -0.5 * p.R_u.transpose();
  return ps;
}

Eigen::MatrixXd greedy_w(const QParams& p) {
  const auto llt = factor_suu(p);
  const Eigen::MatrixXd ps = psi(p);
  return ps * llt.solve(ps.transpose());
}

double q_value(const QParams& params, const BaselinePolicy& baseline, const BasisSpec& basis,
               const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
  const Eigen::VectorXd xi = deviation_coords(params, baseline, basis, x, u);
  Eigen::VectorXd r(params.n_phi() + params.n_u());
  r << params.R_x, params.R_u;
  return baseline.value(x) + params.T + xi.dot(r) - xi.dot(params.S * xi);
}

Eigen::VectorXd greedy_action(const QParams& params, const BaselinePolicy& baseline,
                              const BasisSpec& basis, const Eigen::VectorXd& x) {
  const auto llt = factor_suu(params);
  const Eigen::VectorXd phi = basis(x);
  check_dim(phi.size(), params.n_phi(), "greedy_action basis");
  const Eigen::VectorXd rhs = 0.5 * params.R_u - params.S_xu().transpose() * phi;
  return baseline.action(basis, x) + llt.solve(rhs);
}

double greedy_value(const QParams& params, const BaselinePolicy& baseline, const BasisSpec& basis,
                    const Eigen::VectorXd& x) {
  const Eigen::MatrixXd w = greedy_w(params);
  const Eigen::VectorXd phi = basis(x);
  check_dim(phi.size(), params.n_phi(), "greedy_value basis");
  Eigen::VectorXd e(phi.size() + 1);
  e << phi, 1.0;
  return baseline.value(x) + params.T + e.dot((omega(params) + w) * e);
}

AffinePolicy greedy_policy(const QParams& params, const BaselinePolicy& baseline) {
  const auto llt = factor_suu(params);
  AffinePolicy pol;
  const Eigen::MatrixXd sxu_t = params.S_xu().transpose();
  pol.gain = llt.solve(-sxu_t);
  pol.offset = llt.solve(0.5 * params.R_u);
  if (!baseline.zero_flag) {
    pol.gain += baseline.K_bar;
    pol.offset += baseline.offset;
  }
  return pol;
}

double bellman_residual(const QParams& params, const BaselinePolicy& baseline,
                        const BasisSpec& basis, const Sample& sample, double gamma) {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma must be in (0, 1]");
  return q_value(params, baseline, basis, sample.x, sample.u) -
         (sample.r + gamma * greedy_value(params, baseline, basis, sample.x_next));
}

Eigen::VectorXd bellman_residuals(const QParams& params, const BaselinePolicy& baseline,
                                  const BasisSpec& basis, const Dataset& data, double gamma) {
  if (data.size() == 0) throw std::invalid_argument("bellman_residuals: empty dataset");
  Eigen::VectorXd z(data.size());
  for (int k = 0; k < data.size(); ++k)
    z[k] = bellman_residual(params, baseline, basis, data.sample(k), gamma);
  return z;
}

double l1_cost(const QParams& params, const BaselinePolicy& baseline, const BasisSpec& basis,
               const Dataset& data, double gamma) {
  return bellman_residuals(params, baseline, basis, data, gamma).lpNorm<1>();
}

bool project_s_floor(QParams& params, double eps) {
  const Eigen::MatrixXd sym = 0.5 * (params.S + params.S.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  Eigen::VectorXd lambda = eig.eigenvalues();
  const bool clipped = lambda.minCoeff() < eps;
  if (clipped) {
    lambda = lambda.cwiseMax(eps);
    params.S = eig.eigenvectors() * lambda.asDiagonal() * eig.eigenvectors().transpose();
    params.S = 0.5 * (params.S + params.S.transpose());
  } else {
    params.S = sym;
  }
  return clipped;
}

}  // namespace lmiql
