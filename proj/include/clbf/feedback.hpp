#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

#include <Eigen/Core>

#include "clbf/grid.hpp"
#include "clbf/zubov_solver.hpp"

namespace clbf {

/// Greedy one-step lookahead on a converged field. Holds references to the
/// field and the problem, which must outlive it.
struct Policy {
  const ValueField* field = nullptr;
  const ZubovProblem* problem = nullptr;
  /// dt and integrator of the lookahead step; normally the solver's.
  SolverParams lookahead;
};

/// The control sample minimizing the Bellman candidate at x (ties to the
/// smallest index). Throws QueryError outside the grid box.
Eigen::VectorXd greedy_control(const Policy& policy, const Eigen::Ref<const Eigen::VectorXd>& x);

using ControlLaw = std::function<Eigen::VectorXd(double t, const Eigen::VectorXd& x)>;

/// Stateful greedy law with its own scratch space; use one per thread.
ControlLaw make_greedy_law(const Policy& policy);
ControlLaw constant_law(Eigen::VectorXd u);

enum class Verdict { kSafeConverged, kUnsafe, kTimeout, kLeftDomain };

const char* to_string(Verdict v);

struct SimParams {
  double horizon = 50.0;
  double dt_sim = 0.01;
  double delta_conv = 0.05;
  /// Laws passed to simulate ignore t, so a state the step maps to itself
  /// exactly stays there; the rest of the record is filled without integrating.
  bool stationary_shortcut = true;

  /// Throws InputError unless all three are positive and finite.
  void validate() const;
};

/// Samples at t_i = i dt_sim. controls[i] is the control held on
/// [t_i, t_i+1); the last entry repeats the one before it (zero for a
/// single-sample record).
struct TrajectoryRecord {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;
  std::vector<Eigen::VectorXd> controls;
  std::vector<double> h;
  /// First sampled t with h >= 1, +infinity if none.
  double exit_time = 0.0;
  double peak_h = 0.0;
  Verdict verdict = Verdict::kTimeout;
};

/// RK4 with the control held over each step. Checks at every sample, in order:
/// h >= 1 gives UNSAFE, leaving the grid box gives LEFT_DOMAIN. At the horizon
/// the verdict is SAFE_CONVERGED if the ball |x| < delta_conv was entered and
/// never left afterwards, TIMEOUT otherwise.
TrajectoryRecord simulate(const SystemModel& sys, const SafeSet& safe, const Grid& domain, const ControlLaw& law,
                          const Eigen::VectorXd& x0, const SimParams& params);

struct SampleSpec {
  /// 0 simulates from the nodes themselves; k > 0 from k uniform points within
  /// half a cell of each node (kept if inside the box).
  int jitter = 0;
  std::uint64_t seed = 0;
};

struct WorstTrajectory {
  size_t sample = 0;
  Eigen::VectorXd x0;
  double peak_h = 0.0;
  Verdict verdict = Verdict::kTimeout;
};

struct SafetyReport {
  size_t samples = 0;
  bool empty = true;
  size_t safe_converged = 0;
  size_t unsafe = 0;
  size_t timeout = 0;
  size_t left_domain = 0;
  /// Any trajectory reached h >= 1.
  bool invariance_violated = false;
  double max_peak_h = 0.0;
  /// Up to five, by decreasing peak h (ties by sample order).
  std::vector<WorstTrajectory> worst;

  double fraction(Verdict v) const;
};

/// Closed-loop greedy simulation from every node with w <= 1 - eps_lvl.
/// Trajectories are distributed over `workers` threads; the report does not
/// depend on the thread count.
SafetyReport batch_verify(const Policy& policy, double eps_lvl, const SampleSpec& samples, const SimParams& params,
                          int workers);

/// max over consecutive samples of w(x_i+1) - w(x_i), with w = 1 wherever
/// h >= 1 or the state is outside the box. 0 for fewer than two samples.
double descent_monitor(const ValueField& field, const TrajectoryRecord& record);

/// CSV with header `t,x1..xn,u1..um,h,w`, one row per sample.
void write_trajectory_csv(std::ostream& os, const TrajectoryRecord& record, const ValueField& field);

}  // namespace clbf
