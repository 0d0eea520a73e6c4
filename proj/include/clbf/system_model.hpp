#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "clbf/keyvalue.hpp"
#include "clbf/polynomial.hpp"

namespace clbf {

/// Control-affine dynamics xdot = f(x) + g(x) u with polynomial entries.
/// Immutable; f(0) = 0 is enforced at construction.
class SystemModel {
 public:
  /// `g` is row-major: entry (i, j) at index i * input_dim + j.
  SystemModel(std::string name, int state_dim, int input_dim, std::vector<Polynomial> f, std::vector<Polynomial> g);

  const std::string& name() const { return name_; }
  int state_dim() const { return n_; }
  int input_dim() const { return m_; }
  const std::vector<Polynomial>& f_terms() const { return f_; }
  const std::vector<Polynomial>& g_terms() const { return g_; }
  const Polynomial& g_entry(int i, int j) const { return g_[i * m_ + j]; }

  bool operator==(const SystemModel&) const = default;

 private:
  std::string name_;
  int n_;
  int m_;
  std::vector<Polynomial> f_;
  std::vector<Polynomial> g_;
};

struct Dynamics {
  Eigen::VectorXd f;
  Eigen::MatrixXd g;
};

/// Throws InputError on dimension mismatch.
Dynamics eval_dynamics(const SystemModel& sys, const Eigen::Ref<const Eigen::VectorXd>& x);
/// Allocation-free variant; `f` and `g` must already have the right shape.
void eval_dynamics_into(const SystemModel& sys, const Eigen::Ref<const Eigen::VectorXd>& x, Eigen::Ref<Eigen::VectorXd> f,
                        Eigen::Ref<Eigen::MatrixXd> g);
Eigen::VectorXd vector_field(const SystemModel& sys, const Eigen::Ref<const Eigen::VectorXd>& x,
                             const Eigen::Ref<const Eigen::VectorXd>& u);

/// Safe set S = {x : h(x) < 1}; the obstacle U is its complement. h(0) < 1.
class SafeSet {
 public:
  SafeSet(Polynomial h, std::string description);

  const Polynomial& h() const { return h_; }
  const std::string& description() const { return description_; }
  int state_dim() const { return h_.num_vars(); }
  Eigen::VectorXd gradient(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  bool operator==(const SafeSet&) const = default;

 private:
  Polynomial h_;
  std::string description_;
  std::vector<Polynomial> grad_;
};

double eval_h(const SafeSet& safe, const Eigen::Ref<const Eigen::VectorXd>& x);

struct ParsedSystem {
  SystemModel system;
  SafeSet safe;
};

/// Reads `state_dim`, `input_dim`, `f.<i>`, `g.<i>.<j>` (1-based; absent g
/// entries are zero), `h`, and optional `name`. Other keys are left for the
/// caller. Throws ConfigError with the line of the offending key.
ParsedSystem parse_system_config(const KeyValueFile& file);
ParsedSystem parse_system_config(std::string_view text);

/// Emits only the keys read by parse_system_config, g entries that are zero
/// omitted. parse(serialize(s)) == s.
std::string serialize_system_config(const SystemModel& sys, const SafeSet& safe);

}  // namespace clbf
