#pragma once

#include <vector>

#include <Eigen/Core>

#include "clbf/system_model.hpp"

namespace clbf {

/// Running cost eta(x, u) = theta (x'Qx + u'Ru) / (1 - h(x))^k, a proper
/// controlled indicator of the origin on S. With the barrier off the
/// denominator is 1 and eta is plain LQR cost.
///
/// The growth bounds near the origin and against the state speed hold for this
/// quadratic-over-barrier form by construction and are not re-checked.
class RunningCost {
 public:
  /// Throws InputError unless theta > 0, Q and R symmetric positive definite
  /// (pivoted LDL^T) and, with the barrier on, k >= 1.
  RunningCost(double theta, Eigen::MatrixXd Q, Eigen::MatrixXd R, double k, bool barrier_on);

  /// theta = 1, Q = I, R = I.
  static RunningCost identity(int state_dim, int input_dim, double k, bool barrier_on);

  double theta() const { return theta_; }
  const Eigen::MatrixXd& Q() const { return Q_; }
  const Eigen::MatrixXd& R() const { return R_; }
  double k() const { return k_; }
  bool barrier_on() const { return barrier_on_; }

  /// theta * x'Qx, theta * u'Ru.
  double state_part(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  double control_part(const Eigen::Ref<const Eigen::VectorXd>& u) const;
  /// (1 - h)^k, or 1 with the barrier off. Zero or negative means x is unsafe.
  double barrier_denominator(double h_value) const;

  bool operator==(const RunningCost& o) const {
    return theta_ == o.theta_ && Q_ == o.Q_ && R_ == o.R_ && k_ == o.k_ && barrier_on_ == o.barrier_on_;
  }

 private:
  double theta_;
  Eigen::MatrixXd Q_;
  Eigen::MatrixXd R_;
  double k_;
  bool barrier_on_;
};

/// +infinity when h(x) >= 1 and the barrier is on.
double eval_eta(const RunningCost& cost, const SafeSet& safe, const Eigen::Ref<const Eigen::VectorXd>& x,
                const Eigen::Ref<const Eigen::VectorXd>& u);

/// inf over u of eta(x, u). R > 0 puts the minimizer at u = 0.
double eval_omega(const RunningCost& cost, const SafeSet& safe, const Eigen::Ref<const Eigen::VectorXd>& x);

/// Zubov transform with constant rate phi = alpha: beta(s) = 1 - exp(-alpha s),
/// the solution of beta' = (1 - beta) alpha with beta(0) = 0.
class ZubovTransform {
 public:
  explicit ZubovTransform(double alpha = 0.1);
  double alpha() const { return alpha_; }
  bool operator==(const ZubovTransform&) const = default;

 private:
  double alpha_;
};

/// s in [0, inf]; beta(inf) = 1. Throws InputError for s < 0 or NaN.
double beta(const ZubovTransform& t, double s);
/// w in [0, 1); returns +infinity for w >= 1 (x outside the domain). Throws
/// InputError for w < 0 or NaN.
double beta_inv(const ZubovTransform& t, double w);

struct DivergenceProfile {
  std::vector<double> omega;
  bool increasing = false;
  /// omega grows at least like 1/(1 - h) along the ray: omega_i (1 - h_i) >=
  /// omega_0 (1 - h_0) at every point. Never set for fewer than two points.
  bool divergent = false;
};

/// omega along points approaching the boundary of S. Throws InputError unless h
/// is strictly increasing along the ray and stays below 1.
DivergenceProfile divergence_profile(const RunningCost& cost, const SafeSet& safe,
                                     const std::vector<Eigen::VectorXd>& ray);

}  // namespace clbf
