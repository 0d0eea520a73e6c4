#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "clbf/grid.hpp"
#include "clbf/zubov_solver.hpp"

namespace clbf {

/// Data of the compatibility test at one state: zeta stands in for the CLF
/// gradient, xi for the barrier gradient grad h.
struct CompatibilityQuery {
  Eigen::VectorXd zeta;
  Eigen::VectorXd xi;
  Eigen::VectorXd f_vec;
  Eigen::MatrixXd g_mat;
  double w_margin = 0.0;
  double alpha0 = 1.0;
  double h_val = 0.0;
};

/// {u : a.u < b1 and c.u <= b2}.
struct HalfspacePair {
  Eigen::VectorXd a;
  double b1 = 0.0;
  Eigen::VectorXd c;
  double b2 = 0.0;
};

/// a = g'zeta, b1 = -w_margin - zeta.f, c = g'xi, b2 = alpha0 (1 - h_val) - xi.f.
/// Throws InputError on dimension mismatch, w_margin <= 0, alpha0 <= 0 or h_val >= 1.
HalfspacePair to_halfspaces(const CompatibilityQuery& q);

struct CompatibilityVerdict {
  bool feasible = false;
  /// Satisfies both inequalities when evaluated in double precision.
  Eigen::VectorXd witness;
  /// Infeasibility certificate: lambda1, lambda2 >= 0 with lambda1 a + lambda2 c = 0
  /// and either lambda1 b1 + lambda2 b2 < 0, or lambda1 > 0 and lambda1 b1 + lambda2 b2 <= 0.
  double lambda1 = 0.0;
  double lambda2 = 0.0;
};

/// Exact case analysis. If u = 0 works it is the witness. Otherwise, when a and
/// c are not negatively collinear (relative tolerance 1e-12) a common descent
/// direction is scaled until both hold; the negatively collinear case c = -l a
/// is feasible iff -b2 / l < b1. Throws InputError on length mismatch.
CompatibilityVerdict solve_halfspace_pair(const HalfspacePair& p);
CompatibilityVerdict check_compatibility(const CompatibilityQuery& q);

/// Outcome of one certification check. A check with nothing to test passes
/// vacuously (pass_fraction 1, tested 0). worst_node is -1 when there is none.
struct CertReport {
  std::string name;
  double pass_fraction = 1.0;
  size_t tested = 0;
  size_t passed = 0;
  long worst_node = -1;
  double worst_value = 0.0;
  std::map<std::string, double> params;
};

/// Nodes with w < 1 - eps_lvl, and the connected component of that mask (axis
/// neighbours) containing ORIGIN, which always belongs to the component.
struct DomainEstimate {
  std::vector<std::uint8_t> level_mask;
  std::vector<std::uint8_t> component;
  size_t size = 0;
  double volume = 0.0;
  /// Per-axis coordinate extent of the component.
  Eigen::VectorXd min_corner, max_corner;
};

DomainEstimate estimate_domain(const ValueField& field, double eps_lvl);

struct ClbfReports {
  /// min over controls of grad W . (f + g u) < -margin |x|^2 at every INTERIOR
  /// node with w <= 1 - eps_lvl; worst_value is the largest
  /// min_u grad W . (f + g u) + margin |x|^2.
  CertReport decrease;
  /// w = 1 at UNSAFE nodes and w < 1 on the domain estimate; worst_value is the
  /// smallest w over UNSAFE nodes.
  CertReport level;
};

/// Throws QueryError if the field is not converged.
ClbfReports check_clbf_conditions(const ValueField& field, const ZubovProblem& problem, double eps_lvl, double margin = 0.0);

/// w(ORIGIN) = 0 and w > 0 at every other node with w < 1. worst_value is the
/// smallest such w. Throws QueryError if the field is not converged.
CertReport check_positive_definite(const ValueField& field);

struct CompatibilityParams {
  double eps_layer = 0.1;
  double alpha0 = 1.0;
  double margin_c = 0.1;
  double eps_lvl = 0.01;
  int jitter = 10;
  std::uint64_t seed = 0;
};

/// Compatibility at every INTERIOR node of the domain estimate inside the layer
/// 1 - eps_layer <= h < 1, and at `jitter` uniform points within half a cell of
/// each, with zeta = grad W at the node and w_margin = margin_c |x|^2. The
/// jitter stream of a node depends only on the seed and the node index.
/// worst_node has the most infeasible samples; worst_value is that node's
/// infeasible fraction.
CertReport check_compatibility_layer(const ValueField& field, const ZubovProblem& problem, const CompatibilityParams& params);

enum class BoundaryTag { kNearS, kNearD0, kUnresolved };

const char* to_string(BoundaryTag tag);

struct BoundaryClassification {
  std::vector<std::pair<size_t, BoundaryTag>> frontier;
  size_t near_s = 0;
  size_t near_d0 = 0;
  size_t unresolved = 0;

  double unresolved_fraction() const {
    return frontier.empty() ? 0.0 : static_cast<double>(unresolved) / static_cast<double>(frontier.size());
  }
};

/// Frontier nodes of the domain estimate of `safe_field` (component nodes with
/// an axis neighbour outside the component). NEAR_S if an axis neighbour has
/// h >= 1 - |grad h(x)| * max spacing; otherwise NEAR_D0 if the unconstrained
/// field reaches 1 - eps_lvl at the node or an axis neighbour; otherwise
/// UNRESOLVED. Throws InputError if the grids differ in layout.
BoundaryClassification classify_boundary(const ValueField& safe_field, const ValueField& unconstrained_field,
                                         const SafeSet& safe, double eps_lvl);

/// Points (1 - 1/m) t* d for m = 2..m_max, where t* d is the first point with
/// h = 1 along the unit ray d (bisection to machine precision). Empty if h
/// stays below 1 inside the grid box along d.
std::vector<Eigen::VectorXd> boundary_ray(const Grid& grid, const SafeSet& safe, const Eigen::VectorXd& direction, int m_max);

struct DivergenceVerdict {
  std::vector<double> values;
  bool increasing = false;
  /// last / first; 0 for fewer than two points.
  double growth = 0.0;
  /// max / min - 1.
  double variation = 0.0;
  /// increasing and growth >= the threshold; never set for fewer than two points.
  bool diverging = false;
};

/// V = beta_inv(interpolated w) along the ray. Throws InputError if a point has
/// w = 1 (outside the estimated domain).
DivergenceVerdict divergence_test(const ValueField& field, const ZubovTransform& transform,
                                  const std::vector<Eigen::VectorXd>& ray, double growth_threshold = 2.0);

}  // namespace clbf
