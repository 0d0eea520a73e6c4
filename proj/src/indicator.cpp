#include "clbf/indicator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>

#include "clbf/errors.hpp"

namespace clbf {

namespace {

void require_spd(const Eigen::MatrixXd& M, const char* name) {
  if (M.rows() != M.cols() || M.rows() == 0) throw InputError(std::string(name) + " must be a non-empty square matrix");
  if (!M.allFinite()) throw InputError(std::string(name) + " has non-finite entries");
  if ((M - M.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, M.cwiseAbs().maxCoeff())) {
    throw InputError(std::string(name) + " must be symmetric");
  }
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(M);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) throw InputError(std::string(name) + " must be positive definite");
  const auto d = ldlt.vectorD();
  if ((d.array() <= 0.0).any()) throw InputError(std::string(name) + " must be positive definite");
}

}  // namespace

RunningCost::RunningCost(double theta, Eigen::MatrixXd Q, Eigen::MatrixXd R, double k, bool barrier_on)
    : theta_(theta), Q_(std::move(Q)), R_(std::move(R)), k_(k), barrier_on_(barrier_on) {
  if (!(theta_ > 0.0) || !std::isfinite(theta_)) throw InputError("theta must be a positive real");
  require_spd(Q_, "Q");
  require_spd(R_, "R");
  if (barrier_on_ && !(k_ >= 1.0)) throw InputError("barrier exponent k must be >= 1");
  if (!std::isfinite(k_)) throw InputError("barrier exponent k must be finite");
}

RunningCost RunningCost::identity(int state_dim, int input_dim, double k, bool barrier_on) {
  return RunningCost(1.0, Eigen::MatrixXd::Identity(state_dim, state_dim), Eigen::MatrixXd::Identity(input_dim, input_dim),
                     k, barrier_on);
}

double RunningCost::state_part(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != Q_.rows()) throw InputError("state dimension does not match Q");
  return theta_ * x.dot(Q_ * x);
}

double RunningCost::control_part(const Eigen::Ref<const Eigen::VectorXd>& u) const {
  if (u.size() != R_.rows()) throw InputError("control dimension does not match R");
  return theta_ * u.dot(R_ * u);
}

double RunningCost::barrier_denominator(double h_value) const {
  if (!barrier_on_) return 1.0;
  const double gap = 1.0 - h_value;
  if (!(gap > 0.0)) return 0.0;
  return k_ == 1.0 ? gap : std::pow(gap, k_);
}

double eval_eta(const RunningCost& cost, const SafeSet& safe, const Eigen::Ref<const Eigen::VectorXd>& x,
                const Eigen::Ref<const Eigen::VectorXd>& u) {
  const double num = cost.state_part(x) + cost.control_part(u);
  if (!cost.barrier_on()) return num;
  const double h = eval_h(safe, x);
  if (h >= 1.0) return std::numeric_limits<double>::infinity();
  return num / cost.barrier_denominator(h);
}

double eval_omega(const RunningCost& cost, const SafeSet& safe, const Eigen::Ref<const Eigen::VectorXd>& x) {
  return eval_eta(cost, safe, x, Eigen::VectorXd::Zero(cost.R().rows()));
}

ZubovTransform::ZubovTransform(double alpha) : alpha_(alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw InputError("transform alpha must be a positive real");
}

double beta(const ZubovTransform& t, double s) {
  if (!(s >= 0.0)) throw InputError("beta is defined on [0, inf]");
  if (std::isinf(s)) return 1.0;
  return -std::expm1(-t.alpha() * s);
}

double beta_inv(const ZubovTransform& t, double w) {
  if (!(w >= 0.0)) throw InputError("beta_inv is defined on [0, 1)");
  if (w >= 1.0) return std::numeric_limits<double>::infinity();
  return -std::log1p(-w) / t.alpha();
}

DivergenceProfile divergence_profile(const RunningCost& cost, const SafeSet& safe,
                                     const std::vector<Eigen::VectorXd>& ray) {
  DivergenceProfile out;
  std::vector<double> hs;
  for (size_t i = 0; i < ray.size(); ++i) {
    const double h = eval_h(safe, ray[i]);
    if (!(h < 1.0)) throw InputError("ray point " + std::to_string(i) + " is outside the safe set");
    if (i > 0 && !(h > hs.back())) throw InputError("h must be strictly increasing along the ray");
    hs.push_back(h);
    out.omega.push_back(eval_omega(cost, safe, ray[i]));
  }
  if (ray.size() < 2) return out;
  out.increasing = true;
  for (size_t i = 1; i < ray.size(); ++i) out.increasing = out.increasing && out.omega[i] > out.omega[i - 1];
  const double base = out.omega[0] * (1.0 - hs[0]);
  bool follows = base > 0.0;
  for (size_t i = 1; i < ray.size(); ++i) follows = follows && out.omega[i] * (1.0 - hs[i]) >= base;
  out.divergent = out.increasing && follows;
  return out;
}

}  // namespace clbf
