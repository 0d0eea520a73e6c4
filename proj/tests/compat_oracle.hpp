#pragma once

#include <random>

#include <Eigen/Core>

#include "clbf/certify.hpp"

namespace clbf {
namespace testing {

/// Queries with small integer data and g = I in the plane, so a, b1, c, b2 are
/// integers and every nonempty feasible set contains a point of the 1/8 lattice
/// on [-32, 32]^2, where the inequalities evaluate exactly.
inline CompatibilityQuery RandomIntegerQuery(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> entry(-2, 2), drift(-1, 1), margin(1, 2), level(-1, 0);
  CompatibilityQuery q;
  q.zeta = Eigen::Vector2d(entry(rng), entry(rng));
  q.xi = Eigen::Vector2d(entry(rng), entry(rng));
  q.f_vec = Eigen::Vector2d(drift(rng), drift(rng));
  q.g_mat = Eigen::Matrix2d::Identity();
  q.w_margin = margin(rng);
  q.alpha0 = 1.0;
  q.h_val = level(rng);
  return q;
}

inline bool Satisfies(const HalfspacePair& p, const Eigen::VectorXd& u) {
  return p.a.dot(u) < p.b1 && p.c.dot(u) <= p.b2;
}

inline bool BruteForceFeasible(const HalfspacePair& p) {
  Eigen::Vector2d u;
  for (int i = -256; i <= 256; ++i) {
    u[0] = i / 8.0;
    for (int j = -256; j <= 256; ++j) {
      u[1] = j / 8.0;
      if (Satisfies(p, u)) return true;
    }
  }
  return false;
}

/// Checks the verdict's own evidence: a witness that satisfies both inequalities,
/// or multipliers that rule every u out.
inline bool EvidenceHolds(const HalfspacePair& p, const CompatibilityVerdict& v) {
  if (v.feasible) return v.witness.size() == p.a.size() && Satisfies(p, v.witness);
  if (v.lambda1 < 0.0 || v.lambda2 < 0.0) return false;
  if ((v.lambda1 * p.a + v.lambda2 * p.c).norm() > 1e-12 * (1.0 + p.a.norm() + p.c.norm())) return false;
  const double s = v.lambda1 * p.b1 + v.lambda2 * p.b2;
  return s < 0.0 || (v.lambda1 > 0.0 && s <= 0.0);
}

}  // namespace testing
}  // namespace clbf
