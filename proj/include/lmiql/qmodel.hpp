#pragma once

#include <functional>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

#include "lmiql/env.hpp"

namespace lmiql {

/// Raised when a quadratic model cannot produce a greedy action because S_uu is not
/// positive definite.
class NotPositiveDefinite : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// State basis phi. The first n_x entries of phi(x) are the (wrapped) state itself for
/// the bases shipped here, which is what lets linear state feedback act on phi.
struct BasisSpec {
  std::string name;
  int n_x = 0;
  int n_phi = 0;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> phi;

  Eigen::VectorXd operator()(const Eigen::VectorXd& x) const;
};

/// phi(x) = x.
BasisSpec identity_basis(int n_x);
/// phi(x) = [wrap(x0); x1; sin(x0)].
BasisSpec pendulum_basis();
/// Looks up "identity" or "pendulum".
BasisSpec basis_by_name(const std::string& name, int n_x);

/// u = gain * phi(x) + offset.
struct AffinePolicy {
  Eigen::MatrixXd gain;
  Eigen::VectorXd offset;

  static AffinePolicy zero(int n_u, int n_phi);
  Eigen::VectorXd action(const BasisSpec& basis, const Eigen::VectorXd& x) const;
  Policy bind(const BasisSpec& basis) const;
};

/// Base policy pi_bar(x) = K_bar phi(x) + offset and value model V(x) = -x' P_bar x.
struct BaselinePolicy {
  Eigen::MatrixXd K_bar;
  Eigen::VectorXd offset;
  Eigen::MatrixXd P_bar;
  bool zero_flag = false;

  /// pi_bar = V = 0.
  static BaselinePolicy zero(int n_x, int n_u, int n_phi);

  int n_u() const { return static_cast<int>(offset.size()); }
  Eigen::VectorXd action(const BasisSpec& basis, const Eigen::VectorXd& x) const;
  double value(const Eigen::VectorXd& x) const;
  AffinePolicy as_affine() const { return AffinePolicy{K_bar, offset}; }
  void validate(const BasisSpec& basis) const;
};

/// theta = (T, R = [R_x; R_u], S) of the quadratic Q-function
///   Q(x, u) = V(x) + T + xi' R - xi' S xi,   xi = [phi(x); u - pi_bar(x)].
struct QParams {
  double T = 0.0;
  Eigen::VectorXd R_x;
  Eigen::VectorXd R_u;
  Eigen::MatrixXd S;

  static QParams zeros(int n_phi, int n_u);
  static int parameter_count(int n_phi, int n_u);

  int n_phi() const { return static_cast<int>(R_x.size()); }
  int n_u() const { return static_cast<int>(R_u.size()); }

  auto S_xx() const { return S.topLeftCorner(n_phi(), n_phi()); }
  auto S_xu() const { return S.topRightCorner(n_phi(), n_u()); }
  auto S_uu() const { return S.bottomRightCorner(n_u(), n_u()); }

  /// Flat record: T, R_x, R_u, then the upper triangle of S row by row.
  Eigen::VectorXd to_vector() const;
  static QParams from_vector(const Eigen::VectorXd& theta, int n_phi, int n_u);

  void validate() const;
};

/// Omega = [[-S_xx, R_x/2], [R_x'/2, 0]].
Eigen::MatrixXd omega(const QParams& params);
/// Psi = [S_xu; -R_u'/2].
Eigen::MatrixXd psi(const QParams& params);
/// Psi S_uu^{-1} Psi', the value of W at which the greedy value is exact.
Eigen::MatrixXd greedy_w(const QParams& params);

double q_value(const QParams& params, const BaselinePolicy& baseline, const BasisSpec& basis,
               const Eigen::VectorXd& x, const Eigen::VectorXd& u);

Eigen::VectorXd greedy_action(const QParams& params, const BaselinePolicy& baseline,
                              const BasisSpec& basis, const Eigen::VectorXd& x);

double greedy_value(const QParams& params, const BaselinePolicy& baseline, const BasisSpec& basis,
                    const Eigen::VectorXd& x);

/// Greedy policy of params as an affine map of phi.
AffinePolicy greedy_policy(const QParams& params, const BaselinePolicy& baseline);

double bellman_residual(const QParams& params, const BaselinePolicy& baseline,
                        const BasisSpec& basis, const Sample& sample, double gamma);

Eigen::VectorXd bellman_residuals(const QParams& params, const BaselinePolicy& baseline,
                                  const BasisSpec& basis, const Dataset& data, double gamma);

/// Sum of absolute Bellman residuals over the dataset.
double l1_cost(const QParams& params, const BaselinePolicy& baseline, const BasisSpec& basis,
               const Dataset& data, double gamma);

/// Symmetrizes S and lifts eigenvalues below eps to eps. Returns true if anything was clipped.
bool project_s_floor(QParams& params, double eps);

}  // namespace lmiql
