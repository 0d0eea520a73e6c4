#include "clbf/certify.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <random>

#include "clbf/errors.hpp"

namespace clbf {

HalfspacePair to_halfspaces(const CompatibilityQuery& q) {
  const Eigen::Index n = q.zeta.size();
  if (n == 0 || q.xi.size() != n || q.f_vec.size() != n || q.g_mat.rows() != n || q.g_mat.cols() == 0) {
    throw InputError("compatibility query has inconsistent dimensions");
  }
  if (!(q.w_margin > 0.0)) throw InputError("w_margin must be positive");
  if (!(q.alpha0 > 0.0)) throw InputError("alpha0 must be positive");
  if (!(q.h_val < 1.0)) throw InputError("h_val must be below 1");
  return {q.g_mat.transpose() * q.zeta, -q.w_margin - q.zeta.dot(q.f_vec), q.g_mat.transpose() * q.xi,
          q.alpha0 * (1.0 - q.h_val) - q.xi.dot(q.f_vec)};
}

namespace {

bool satisfies(const HalfspacePair& p, const Eigen::VectorXd& u) { return p.a.dot(u) < p.b1 && p.c.dot(u) <= p.b2; }

CompatibilityVerdict feasible(Eigen::VectorXd u) { return {true, std::move(u), 0.0, 0.0}; }

CompatibilityVerdict infeasible(double lambda1, double lambda2) { return {false, Eigen::VectorXd(), lambda1, lambda2}; }

// u = s d for s = s0, 2 s0 + 1, ... until both inequalities hold in floating point.
CompatibilityVerdict scale_along(const HalfspacePair& p, const Eigen::VectorXd& d, double s0) {
  double s = std::max(s0, 0.0);
  Eigen::VectorXd u = s * d;
  for (int i = 0; i < 200 && !satisfies(p, u); ++i) {
    s = 2.0 * s + 1.0;
    u = s * d;
  }
  return feasible(std::move(u));
}

}  // namespace

CompatibilityVerdict solve_halfspace_pair(const HalfspacePair& p) {
  const Eigen::Index m = p.a.size();
  if (m == 0 || p.c.size() != m) throw InputError("half-space normals must share a positive dimension");
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(m);
  if (satisfies(p, zero)) return feasible(zero);

  const double na = p.a.norm();
  const double nc = p.c.norm();
  if (na == 0.0) {
    if (!(p.b1 > 0.0)) return infeasible(1.0, 0.0);
    if (nc == 0.0) return infeasible(0.0, 1.0);
    return scale_along(p, -p.c, -p.b2 / (nc * nc));
  }
  if (nc == 0.0) {
    if (!(p.b2 >= 0.0)) return infeasible(0.0, 1.0);
    return scale_along(p, -p.a, -p.b1 / (na * na));
  }

  const double cosine = p.a.dot(p.c) / (na * nc);
  if (1.0 + cosine <= 1e-12) {
    // c = -lambda a: the constraints read -b2 / lambda <= a.u < b1.
    const double lambda = nc / na;
    const double lo = -p.b2 / lambda;
    if (!(lo < p.b1)) return infeasible(lambda, 1.0);
    Eigen::VectorXd u = p.a * (lo / (na * na));
    for (double frac : {0.0, 0.5, 0.25, 0.75, 0.125, 0.0625, 0.875, 0.9375}) {
      u = p.a * ((lo + frac * (p.b1 - lo)) / (na * na));
      if (satisfies(p, u)) break;
    }
    return feasible(std::move(u));
  }

  const Eigen::VectorXd d = -(p.a / na + p.c / nc);
  const double ad = p.a.dot(d);
  const double cd = p.c.dot(d);
  return scale_along(p, d, std::max({0.0, p.b1 / ad, p.b2 / cd}));
}

CompatibilityVerdict check_compatibility(const CompatibilityQuery& q) { return solve_halfspace_pair(to_halfspaces(q)); }

namespace {

void require_converged(const ValueField& field) {
  if (!field.converged) throw QueryError("field is not converged; certification refused");
}

CertReport make_report(std::string name, size_t tested, size_t passed) {
  CertReport r;
  r.name = std::move(name);
  r.tested = tested;
  r.passed = passed;
  r.pass_fraction = tested == 0 ? 1.0 : static_cast<double>(passed) / static_cast<double>(tested);
  return r;
}

template <typename Fn>
void for_each_axis_neighbour(const Grid& grid, size_t node, Fn&& fn) {
  for (int a = 0; a < grid.dim(); ++a) {
    const int k = grid.axis_index(node, a);
    if (k > 0) fn(node - grid.stride(a));
    if (k < grid.counts()[a] - 1) fn(node + grid.stride(a));
  }
}

bool on_box_face(const Grid& grid, size_t node) {
  for (int a = 0; a < grid.dim(); ++a) {
    const int k = grid.axis_index(node, a);
    if (k == 0 || k == grid.counts()[a] - 1) return true;
  }
  return false;
}

}  // namespace

DomainEstimate estimate_domain(const ValueField& field, double eps_lvl) {
  const Grid& grid = *field.grid;
  const size_t total = grid.num_nodes();
  DomainEstimate d;
  d.level_mask.assign(total, 0);
  d.component.assign(total, 0);
  for (size_t i = 0; i < total; ++i) d.level_mask[i] = field.w[i] < 1.0 - eps_lvl;

  std::deque<size_t> queue{grid.origin_node()};
  d.component[grid.origin_node()] = 1;
  while (!queue.empty()) {
    const size_t node = queue.front();
    queue.pop_front();
    for_each_axis_neighbour(grid, node, [&](size_t nb) {
      if (d.level_mask[nb] && !d.component[nb]) {
        d.component[nb] = 1;
        queue.push_back(nb);
      }
    });
  }

  d.min_corner = Eigen::VectorXd::Constant(grid.dim(), std::numeric_limits<double>::infinity());
  d.max_corner = Eigen::VectorXd::Constant(grid.dim(), -std::numeric_limits<double>::infinity());
  Eigen::VectorXd x(grid.dim());
  for (size_t i = 0; i < total; ++i) {
    if (!d.component[i]) continue;
    ++d.size;
    grid.position_into(i, x);
    d.min_corner = d.min_corner.cwiseMin(x);
    d.max_corner = d.max_corner.cwiseMax(x);
  }
  d.volume = static_cast<double>(d.size) * grid.cell_volume();
  return d;
}

ClbfReports check_clbf_conditions(const ValueField& field, const ZubovProblem& problem, double eps_lvl, double margin) {
  require_converged(field);
  const Grid& grid = *field.grid;
  if (grid.dim() != problem.system.state_dim()) throw InputError("grid dimension does not match the system");

  size_t tested = 0, passed = 0;
  long worst_node = -1;
  double worst = -std::numeric_limits<double>::infinity();
  Eigen::VectorXd x(grid.dim());
  for (size_t node = 0; node < grid.num_nodes(); ++node) {
    if (grid.node_class(node) != NodeClass::kInterior || !(field.w[node] <= 1.0 - eps_lvl)) continue;
    grid.position_into(node, x);
    const Eigen::VectorXd grad = gradient(field, node);
    const Dynamics d = eval_dynamics(problem.system, x);
    const Eigen::VectorXd gtg = d.g.transpose() * grad;
    double best = std::numeric_limits<double>::infinity();
    for (const Eigen::VectorXd& u : problem.controls.samples()) best = std::min(best, gtg.dot(u));
    const double value = grad.dot(d.f) + best + margin * x.squaredNorm();
    ++tested;
    if (value < 0.0) ++passed;
    if (value > worst) {
      worst = value;
      worst_node = static_cast<long>(node);
    }
  }
  ClbfReports out;
  out.decrease = make_report("clbf_decrease", tested, passed);
  out.decrease.worst_node = worst_node;
  out.decrease.worst_value = worst_node < 0 ? 0.0 : worst;
  out.decrease.params = {{"eps_lvl", eps_lvl}, {"margin", margin}};

  const DomainEstimate domain = estimate_domain(field, eps_lvl);
  tested = passed = 0;
  worst_node = -1;
  worst = std::numeric_limits<double>::infinity();
  for (size_t node = 0; node < grid.num_nodes(); ++node) {
    const double w = field.w[node];
    if (grid.node_class(node) == NodeClass::kUnsafe) {
      ++tested;
      if (w == 1.0) ++passed;
      if (w < worst) {
        worst = w;
        worst_node = static_cast<long>(node);
      }
    } else if (domain.component[node]) {
      ++tested;
      if (w < 1.0) ++passed;
    }
  }
  out.level = make_report("clbf_level", tested, passed);
  out.level.worst_node = worst_node;
  out.level.worst_value = worst_node < 0 ? 1.0 : worst;
  out.level.params = {{"eps_lvl", eps_lvl}};
  return out;
}

CertReport check_positive_definite(const ValueField& field) {
  require_converged(field);
  const Grid& grid = *field.grid;
  const size_t origin = grid.origin_node();
  size_t tested = 0, passed = 0;
  long worst_node = -1;
  double worst = std::numeric_limits<double>::infinity();
  for (size_t node = 0; node < grid.num_nodes(); ++node) {
    const double w = field.w[node];
    if (!(w < 1.0)) continue;
    ++tested;
    const bool ok = node == origin ? w == 0.0 : w > 0.0;
    if (ok) ++passed;
    if (node == origin) {
      if (!ok) {
        worst_node = static_cast<long>(node);
        worst = -std::numeric_limits<double>::infinity();
      }
    } else if (w < worst) {
      worst = w;
      worst_node = static_cast<long>(node);
    }
  }
  CertReport r = make_report("positive_definite", tested, passed);
  r.worst_node = worst_node;
  r.worst_value = worst_node < 0 ? 0.0 : field.w[worst_node];
  return r;
}

CertReport check_compatibility_layer(const ValueField& field, const ZubovProblem& problem, const CompatibilityParams& params) {
  require_converged(field);
  if (params.jitter < 0) throw InputError("jitter count must be non-negative");
  const Grid& grid = *field.grid;
  const DomainEstimate domain = estimate_domain(field, params.eps_lvl);
  const auto in_layer = [&](double h) { return h >= 1.0 - params.eps_layer && h < 1.0; };

  size_t tested = 0, passed = 0;
  long worst_node = -1;
  double worst = -1.0;
  Eigen::VectorXd x(grid.dim());
  for (size_t node = 0; node < grid.num_nodes(); ++node) {
    if (grid.node_class(node) != NodeClass::kInterior || !domain.component[node]) continue;
    grid.position_into(node, x);
    if (!in_layer(eval_h(problem.safe, x))) continue;
    const Eigen::VectorXd zeta = gradient(field, node);

    std::vector<Eigen::VectorXd> samples{x};
    std::mt19937_64 rng(params.seed ^ (0x9e3779b97f4a7c15ull * (node + 1)));
    std::uniform_real_distribution<double> offset(-0.5, 0.5);
    for (int j = 0; j < params.jitter; ++j) {
      Eigen::VectorXd y = x;
      for (int a = 0; a < grid.dim(); ++a) y[a] += offset(rng) * grid.spacing()[a];
      if (grid.contains(y) && in_layer(eval_h(problem.safe, y))) samples.push_back(std::move(y));
    }

    size_t bad = 0, used = 0;
    for (const Eigen::VectorXd& y : samples) {
      const double w_margin = params.margin_c * y.squaredNorm();
      if (!(w_margin > 0.0)) continue;
      const Dynamics d = eval_dynamics(problem.system, y);
      CompatibilityQuery q{zeta, problem.safe.gradient(y), d.f, d.g, w_margin, params.alpha0, eval_h(problem.safe, y)};
      ++used;
      if (!check_compatibility(q).feasible) ++bad;
    }
    tested += used;
    passed += used - bad;
    const double frac = used == 0 ? 0.0 : static_cast<double>(bad) / static_cast<double>(used);
    if (bad > 0 && frac > worst) {
      worst = frac;
      worst_node = static_cast<long>(node);
    }
  }
  CertReport r = make_report("compatibility", tested, passed);
  r.worst_node = worst_node;
  r.worst_value = worst_node < 0 ? 0.0 : worst;
  r.params = {{"eps_layer", params.eps_layer}, {"alpha0", params.alpha0},           {"margin_c", params.margin_c},
              {"eps_lvl", params.eps_lvl},     {"jitter", double(params.jitter)}, {"seed", double(params.seed)}};
  return r;
}

const char* to_string(BoundaryTag tag) {
  switch (tag) {
    case BoundaryTag::kNearS:
      return "NEAR_S_BOUNDARY";
    case BoundaryTag::kNearD0:
      return "NEAR_D0_BOUNDARY";
    case BoundaryTag::kUnresolved:
      return "UNRESOLVED";
  }
  return "?";
}

BoundaryClassification classify_boundary(const ValueField& safe_field, const ValueField& unconstrained_field,
                                         const SafeSet& safe, double eps_lvl) {
  const Grid& grid = *safe_field.grid;
  if (!grid.same_layout(*unconstrained_field.grid)) throw InputError("fields live on different grids");
  if (safe.state_dim() != grid.dim()) throw InputError("safe set dimension does not match the grid");
  const DomainEstimate domain = estimate_domain(safe_field, eps_lvl);
  const double max_spacing = grid.spacing().maxCoeff();

  BoundaryClassification out;
  Eigen::VectorXd x(grid.dim()), y(grid.dim());
  for (size_t node = 0; node < grid.num_nodes(); ++node) {
    if (!domain.component[node]) continue;
    bool frontier = on_box_face(grid, node);
    for_each_axis_neighbour(grid, node, [&](size_t nb) { frontier = frontier || !domain.component[nb]; });
    if (!frontier) continue;

    grid.position_into(node, x);
    const double slack = safe.gradient(x).norm() * max_spacing;
    bool near_s = false;
    bool near_d0 = unconstrained_field.w[node] >= 1.0 - eps_lvl;
    for_each_axis_neighbour(grid, node, [&](size_t nb) {
      grid.position_into(nb, y);
      near_s = near_s || eval_h(safe, y) >= 1.0 - slack;
      near_d0 = near_d0 || unconstrained_field.w[nb] >= 1.0 - eps_lvl;
    });
    const BoundaryTag tag = near_s ? BoundaryTag::kNearS : near_d0 ? BoundaryTag::kNearD0 : BoundaryTag::kUnresolved;
    out.frontier.emplace_back(node, tag);
    if (tag == BoundaryTag::kNearS) ++out.near_s;
    if (tag == BoundaryTag::kNearD0) ++out.near_d0;
    if (tag == BoundaryTag::kUnresolved) ++out.unresolved;
  }
  return out;
}

std::vector<Eigen::VectorXd> boundary_ray(const Grid& grid, const SafeSet& safe, const Eigen::VectorXd& direction, int m_max) {
  if (direction.size() != grid.dim() || !(direction.norm() > 0.0)) throw InputError("ray direction must be a non-zero n-vector");
  const Eigen::VectorXd d = direction / direction.norm();
  double t_max = std::numeric_limits<double>::infinity();
  for (int a = 0; a < grid.dim(); ++a) {
    if (d[a] > 0.0) t_max = std::min(t_max, grid.upper()[a] / d[a]);
    if (d[a] < 0.0) t_max = std::min(t_max, grid.lower()[a] / d[a]);
  }
  const auto h_at = [&](double t) { return eval_h(safe, Eigen::VectorXd(t * d)); };
  constexpr int kScan = 4096;
  double lo = 0.0, hi = -1.0;
  for (int i = 1; i <= kScan; ++i) {
    const double t = t_max * i / kScan;
    if (h_at(t) >= 1.0) {
      hi = t;
      break;
    }
    lo = t;
  }
  if (hi < 0.0) return {};
  while (true) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (h_at(mid) >= 1.0 ? hi : lo) = mid;
  }
  std::vector<Eigen::VectorXd> ray;
  for (int m = 2; m <= m_max; ++m) ray.push_back((1.0 - 1.0 / m) * hi * d);
  return ray;
}

DivergenceVerdict divergence_test(const ValueField& field, const ZubovTransform& transform,
                                  const std::vector<Eigen::VectorXd>& ray, double growth_threshold) {
  DivergenceVerdict out;
  for (size_t i = 0; i < ray.size(); ++i) {
    const double w = interpolate(field, ray[i]);
    if (!(w < 1.0)) throw InputError("ray point " + std::to_string(i) + " lies outside the estimated domain");
    out.values.push_back(beta_inv(transform, w));
  }
  if (out.values.size() < 2) return out;
  out.increasing = true;
  for (size_t i = 1; i < out.values.size(); ++i) out.increasing = out.increasing && out.values[i] > out.values[i - 1];
  out.growth = out.values.back() / out.values.front();
  const auto [mn, mx] = std::minmax_element(out.values.begin(), out.values.end());
  out.variation = *mx / *mn - 1.0;
  out.diverging = out.increasing && out.growth >= growth_threshold;
  return out;
}

}  // namespace clbf
