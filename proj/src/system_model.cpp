#include "clbf/system_model.hpp"

#include <sstream>

#include "clbf/errors.hpp"

namespace clbf {

SystemModel::SystemModel(std::string name, int state_dim, int input_dim, std::vector<Polynomial> f,
                         std::vector<Polynomial> g)
    : name_(std::move(name)), n_(state_dim), m_(input_dim), f_(std::move(f)), g_(std::move(g)) {
  if (n_ < 1 || m_ < 1) throw InputError("state and input dimensions must be positive");
  if (static_cast<int>(f_.size()) != n_) throw InputError("f must have state_dim components");
  if (static_cast<int>(g_.size()) != n_ * m_) throw InputError("g must have state_dim * input_dim entries");
  for (const Polynomial& p : f_) {
    if (p.num_vars() != n_) throw InputError("f component has wrong number of variables");
  }
  for (const Polynomial& p : g_) {
    if (p.num_vars() != n_) throw InputError("g entry has wrong number of variables");
  }
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(n_);
  for (int i = 0; i < n_; ++i) {
    if (f_[i](zero) != 0.0) {
      throw InputError("f(0) must be zero; component " + std::to_string(i + 1) + " is " + format_real(f_[i](zero)));
    }
  }
}

void eval_dynamics_into(const SystemModel& sys, const Eigen::Ref<const Eigen::VectorXd>& x, Eigen::Ref<Eigen::VectorXd> f,
                        Eigen::Ref<Eigen::MatrixXd> g) {
  const int n = sys.state_dim();
  const int m = sys.input_dim();
  if (x.size() != n) throw InputError("state has dimension " + std::to_string(x.size()) + ", expected " + std::to_string(n));
  for (int i = 0; i < n; ++i) {
    f[i] = sys.f_terms()[i](x);
    for (int j = 0; j < m; ++j) g(i, j) = sys.g_entry(i, j)(x);
  }
}

Dynamics eval_dynamics(const SystemModel& sys, const Eigen::Ref<const Eigen::VectorXd>& x) {
  Dynamics d{Eigen::VectorXd(sys.state_dim()), Eigen::MatrixXd(sys.state_dim(), sys.input_dim())};
  eval_dynamics_into(sys, x, d.f, d.g);
  return d;
}

Eigen::VectorXd vector_field(const SystemModel& sys, const Eigen::Ref<const Eigen::VectorXd>& x,
                             const Eigen::Ref<const Eigen::VectorXd>& u) {
  if (u.size() != sys.input_dim()) throw InputError("control has wrong dimension");
  const Dynamics d = eval_dynamics(sys, x);
  return d.f + d.g * u;
}

SafeSet::SafeSet(Polynomial h, std::string description) : h_(std::move(h)), description_(std::move(description)) {
  if (h_.num_vars() < 1) throw InputError("safe set polynomial has no variables");
  const double h0 = h_(Eigen::VectorXd::Zero(h_.num_vars()));
  if (!(h0 < 1.0)) throw InputError("origin must lie in the safe set, but h(0) = " + format_real(h0));
  for (int i = 0; i < h_.num_vars(); ++i) grad_.push_back(h_.partial(i));
}

Eigen::VectorXd SafeSet::gradient(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  Eigen::VectorXd g(grad_.size());
  for (size_t i = 0; i < grad_.size(); ++i) g[i] = grad_[i](x);
  return g;
}

double eval_h(const SafeSet& safe, const Eigen::Ref<const Eigen::VectorXd>& x) { return safe.h()(x); }

namespace {

Polynomial parse_poly_entry(const KeyValueFile& file, const std::string& key, int n) {
  const auto& e = file.require(key);
  try {
    return Polynomial::parse(e.value, n);
  } catch (const InputError& err) {
    throw ConfigError(ConfigErrorKind::kSyntax, e.line, "'" + key + "': " + err.what());
  }
}

int positive_dim(const KeyValueFile& file, const std::string& key) {
  const int v = file.get_int(key);
  if (v < 1 || v > 16) throw ConfigError(ConfigErrorKind::kBadValue, file.require(key).line, key + " must be in 1..16");
  return v;
}

}  // namespace

ParsedSystem parse_system_config(const KeyValueFile& file) {
  const int n = positive_dim(file, "state_dim");
  const int m = positive_dim(file, "input_dim");

  for (const auto& [key, entry] : file.entries()) {
    if (key.rfind("f.", 0) == 0 || key.rfind("g.", 0) == 0) {
      const auto parts = split(key, '.');
      const bool is_f = key[0] == 'f';
      bool ok = parts.size() == (is_f ? 2u : 3u);
      if (ok) {
        const auto i = parse_integer(parts[1]);
        ok = i && *i >= 1 && *i <= n;
        if (ok && !is_f) {
          const auto j = parse_integer(parts[2]);
          ok = j && *j >= 1 && *j <= m;
        }
      }
      if (!ok) throw ConfigError(ConfigErrorKind::kUnknownKey, entry.line, "index out of range or malformed key '" + key + "'");
    }
  }

  std::vector<Polynomial> f;
  for (int i = 1; i <= n; ++i) f.push_back(parse_poly_entry(file, "f." + std::to_string(i), n));
  std::vector<Polynomial> g;
  for (int i = 1; i <= n; ++i) {
    for (int j = 1; j <= m; ++j) {
      const std::string key = "g." + std::to_string(i) + "." + std::to_string(j);
      g.push_back(file.contains(key) ? parse_poly_entry(file, key, n) : Polynomial(n, {}));
    }
  }
  const Polynomial h = parse_poly_entry(file, "h", n);

  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) {
    if (f[i](zero) != 0.0) {
      const std::string key = "f." + std::to_string(i + 1);
      throw ConfigError(ConfigErrorKind::kDriftNonzeroAtOrigin, file.require(key).line,
                        "'" + key + "' evaluates to " + format_real(f[i](zero)) + " at the origin");
    }
  }
  if (!(h(zero) < 1.0)) {
    throw ConfigError(ConfigErrorKind::kOriginUnsafe, file.require("h").line,
                      "h(0) = " + format_real(h(zero)) + " but the origin must satisfy h < 1");
  }

  std::string name = "custom";
  if (const auto* e = file.find("name")) name = e->value;
  std::string description = "h < 1";
  if (const auto* e = file.find("safe.description")) description = e->value;
  return ParsedSystem{SystemModel(name, n, m, std::move(f), std::move(g)), SafeSet(h, description)};
}

ParsedSystem parse_system_config(std::string_view text) { return parse_system_config(KeyValueFile::parse(text)); }

std::string serialize_system_config(const SystemModel& sys, const SafeSet& safe) {
  std::ostringstream os;
  os << "name = " << sys.name() << "\n";
  os << "state_dim = " << sys.state_dim() << "\n";
  os << "input_dim = " << sys.input_dim() << "\n";
  for (int i = 0; i < sys.state_dim(); ++i) os << "f." << i + 1 << " = " << sys.f_terms()[i].to_string() << "\n";
  for (int i = 0; i < sys.state_dim(); ++i) {
    for (int j = 0; j < sys.input_dim(); ++j) {
      const Polynomial& p = sys.g_entry(i, j);
      if (!p.is_zero()) os << "g." << i + 1 << "." << j + 1 << " = " << p.to_string() << "\n";
    }
  }
  os << "h = " << safe.h().to_string() << "\n";
  os << "safe.description = " << safe.description() << "\n";
  return os.str();
}

}  // namespace clbf
