#include "clbf/grid.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "clbf/errors.hpp"
#include "clbf/keyvalue.hpp"

namespace clbf {

const char* to_string(NodeClass c) {
  switch (c) {
    case NodeClass::kInterior:
      return "INTERIOR";
    case NodeClass::kUnsafe:
      return "UNSAFE";
    case NodeClass::kBoxBoundary:
      return "BOX_BOUNDARY";
    case NodeClass::kOrigin:
      return "ORIGIN";
  }
  return "?";
}

Grid Grid::build(Eigen::VectorXd lower, Eigen::VectorXd upper, std::vector<int> counts, const SafeSet* safe) {
  const int n = static_cast<int>(counts.size());
  if (n < 1 || lower.size() != n || upper.size() != n) throw InputError("grid bounds and counts must share one dimension");
  if (n > kMaxGridDim) throw InputError("grids support at most 6 dimensions");
  if (safe && safe->state_dim() != n) throw InputError("safe set dimension does not match the grid");
  size_t total = 1;
  for (int a = 0; a < n; ++a) {
    if (counts[a] < 3) throw InputError("each axis needs at least 3 nodes");
    if (!(lower[a] < 0.0 && 0.0 < upper[a])) throw InputError("grid box must contain the origin strictly");
    total *= static_cast<size_t>(counts[a]);
  }
  if (total > std::numeric_limits<std::uint32_t>::max()) throw InputError("grid too large");

  Grid g;
  g.lower_ = std::move(lower);
  g.upper_ = std::move(upper);
  g.counts_ = std::move(counts);
  g.constrained_ = safe != nullptr;
  g.spacing_.resize(n);
  g.strides_.assign(n, 1);
  for (int a = 0; a < n; ++a) g.spacing_[a] = (g.upper_[a] - g.lower_[a]) / (g.counts_[a] - 1);
  for (int a = n - 2; a >= 0; --a) g.strides_[a] = g.strides_[a + 1] * g.counts_[a + 1];

  std::vector<int> origin_idx(n);
  for (int a = 0; a < n; ++a) {
    const long k = std::lround(-g.lower_[a] / g.spacing_[a]);
    origin_idx[a] = static_cast<int>(std::clamp<long>(k, 0, g.counts_[a] - 1));
  }
  g.origin_ = g.flat_index(origin_idx);

  g.classes_.assign(total, NodeClass::kInterior);
  Eigen::VectorXd x(n);
  for (size_t node = 0; node < total; ++node) {
    g.position_into(node, x);
    if (safe && eval_h(*safe, x) >= 1.0) {
      g.classes_[node] = NodeClass::kUnsafe;
      continue;
    }
    if (node == g.origin_) {
      g.classes_[node] = NodeClass::kOrigin;
      continue;
    }
    for (int a = 0; a < n; ++a) {
      const int k = g.axis_index(node, a);
      if (k == 0 || k == g.counts_[a] - 1) {
        g.classes_[node] = NodeClass::kBoxBoundary;
        break;
      }
    }
  }
  if (g.classes_[g.origin_] != NodeClass::kOrigin) throw InputError("the grid node nearest the origin is unsafe");
  return g;
}

double Grid::coordinate(int axis, int k) const {
  if (k == counts_[axis] - 1) return upper_[axis];
  return lower_[axis] + k * spacing_[axis];
}

void Grid::position_into(size_t node, Eigen::Ref<Eigen::VectorXd> out) const {
  for (int a = 0; a < dim(); ++a) out[a] = coordinate(a, axis_index(node, a));
}

Eigen::VectorXd Grid::position(size_t node) const {
  Eigen::VectorXd x(dim());
  position_into(node, x);
  return x;
}

std::vector<int> Grid::multi_index(size_t node) const {
  std::vector<int> idx(dim());
  for (int a = 0; a < dim(); ++a) idx[a] = axis_index(node, a);
  return idx;
}

size_t Grid::flat_index(std::span<const int> idx) const {
  if (static_cast<int>(idx.size()) != dim()) throw InputError("multi-index has wrong dimension");
  size_t node = 0;
  for (int a = 0; a < dim(); ++a) {
    if (idx[a] < 0 || idx[a] >= counts_[a]) throw InputError("multi-index out of range");
    node += static_cast<size_t>(idx[a]) * strides_[a];
  }
  return node;
}

bool Grid::contains(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != dim()) throw InputError("point has wrong dimension for grid");
  for (int a = 0; a < dim(); ++a) {
    if (!(x[a] >= lower_[a] && x[a] <= upper_[a])) return false;
  }
  return true;
}

bool Grid::same_layout(const Grid& other) const {
  return counts_ == other.counts_ && lower_ == other.lower_ && upper_ == other.upper_;
}

double Grid::cell_volume() const { return spacing_.prod(); }

void make_stencil(const Grid& grid, const Eigen::Ref<const Eigen::VectorXd>& x, std::uint32_t* nodes, double* weights) {
  if (!grid.contains(x)) throw QueryError("interpolation point outside the grid box");
  const int n = grid.dim();
  size_t base = 0;
  double t[kMaxGridDim];
  size_t step[kMaxGridDim];
  for (int a = 0; a < n; ++a) {
    double s = (x[a] - grid.lower()[a]) / grid.spacing()[a];
    const double r = std::round(s);
    if (std::abs(s - r) < 1e-10) s = r;
    int i = static_cast<int>(std::floor(s));
    i = std::clamp(i, 0, grid.counts()[a] - 2);
    t[a] = std::clamp(s - i, 0.0, 1.0);
    base += static_cast<size_t>(i) * grid.stride(a);
    step[a] = grid.stride(a);
  }
  const int corners = 1 << n;
  for (int c = 0; c < corners; ++c) {
    size_t node = base;
    double wgt = 1.0;
    for (int a = 0; a < n; ++a) {
      if (c & (1 << a)) {
        node += step[a];
        wgt *= t[a];
      } else {
        wgt *= 1.0 - t[a];
      }
    }
    nodes[c] = static_cast<std::uint32_t>(node);
    weights[c] = wgt;
  }
}

Stencil make_stencil(const Grid& grid, const Eigen::Ref<const Eigen::VectorXd>& x) {
  const int corners = 1 << grid.dim();
  Stencil s{std::vector<std::uint32_t>(corners), std::vector<double>(corners)};
  make_stencil(grid, x, s.nodes.data(), s.weights.data());
  return s;
}

ControlSet::ControlSet(Eigen::VectorXd u_max, int samples_per_axis) : u_max_(std::move(u_max)), samples_(samples_per_axis) {
  const int m = static_cast<int>(u_max_.size());
  if (m < 1) throw InputError("control set needs at least one input");
  for (int j = 0; j < m; ++j) {
    if (!(u_max_[j] > 0.0) || !std::isfinite(u_max_[j])) throw InputError("control bounds must be positive");
  }
  if (samples_ < 3 || samples_ % 2 == 0) throw InputError("samples_per_axis must be odd and at least 3");
  const int half = samples_ / 2;
  size_t total = 1;
  for (int j = 0; j < m; ++j) total *= samples_;
  samples_list_.reserve(total);
  std::vector<int> idx(m, 0);
  for (size_t s = 0; s < total; ++s) {
    size_t rem = s;
    for (int j = m - 1; j >= 0; --j) {
      idx[j] = static_cast<int>(rem % samples_);
      rem /= samples_;
    }
    Eigen::VectorXd u(m);
    bool zero = true;
    for (int j = 0; j < m; ++j) {
      // Symmetric by construction: sample k and samples_-1-k are exact negatives.
      const int off = idx[j] - half;
      u[j] = u_max_[j] * static_cast<double>(off) / half;
      zero = zero && off == 0;
    }
    if (zero) zero_index_ = s;
    samples_list_.push_back(std::move(u));
  }
}

ControlSet ControlSet::zero_only(int input_dim) {
  if (input_dim < 1) throw InputError("control set needs at least one input");
  ControlSet cs;
  cs.u_max_ = Eigen::VectorXd::Zero(input_dim);
  cs.samples_ = 1;
  cs.samples_list_.push_back(Eigen::VectorXd::Zero(input_dim));
  cs.zero_index_ = 0;
  return cs;
}

std::vector<Eigen::VectorXd> control_samples(const ControlSet& cs) { return cs.samples(); }

ValueField ValueField::initial(std::shared_ptr<const Grid> grid) {
  ValueField f;
  f.w.assign(grid->num_nodes(), 1.0);
  f.w[grid->origin_node()] = 0.0;
  f.grid = std::move(grid);
  return f;
}

double interpolate(const ValueField& field, const Eigen::Ref<const Eigen::VectorXd>& x) {
  const Grid& g = *field.grid;
  if (!g.contains(x)) return 1.0;
  std::uint32_t nodes[kMaxStencilCorners];
  double weights[kMaxStencilCorners];
  make_stencil(g, x, nodes, weights);
  return apply_stencil(nodes, weights, 1 << g.dim(), field.w.data());
}

Eigen::VectorXd gradient(const ValueField& field, size_t node) {
  const Grid& g = *field.grid;
  if (node >= g.num_nodes()) throw QueryError("node index out of range");
  if (g.node_class(node) == NodeClass::kUnsafe) throw QueryError("gradient requested at an UNSAFE node");
  Eigen::VectorXd grad(g.dim());
  for (int a = 0; a < g.dim(); ++a) {
    const int k = g.axis_index(node, a);
    const size_t s = g.stride(a);
    const double h = g.spacing()[a];
    const bool has_lo = k > 0;
    const bool has_hi = k < g.counts()[a] - 1;
    if (has_lo && has_hi) {
      grad[a] = (field.w[node + s] - field.w[node - s]) / (2.0 * h);
    } else if (has_hi) {
      grad[a] = (field.w[node + s] - field.w[node]) / h;
    } else {
      grad[a] = (field.w[node] - field.w[node - s]) / h;
    }
  }
  return grad;
}

namespace {

std::string join_reals(const Eigen::VectorXd& v) {
  std::string out;
  for (int i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += format_real(v[i]);
  }
  return out;
}

std::map<std::string, std::string> parse_header_fields(const std::string& line) {
  std::map<std::string, std::string> out;
  std::istringstream is(line.substr(1));
  std::string tok;
  while (is >> tok) {
    const size_t eq = tok.find('=');
    if (eq == std::string::npos) throw InputError("malformed field header token '" + tok + "'");
    out[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  return out;
}

Eigen::VectorXd parse_real_list(const std::string& s, int n, const char* what) {
  const auto parts = split(s, ',');
  if (static_cast<int>(parts.size()) != n) throw InputError(std::string("field header: wrong number of ") + what);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) {
    const auto d = parse_double(parts[i]);
    if (!d) throw InputError(std::string("field header: bad ") + what);
    v[i] = *d;
  }
  return v;
}

}  // namespace

void write_field_csv(std::ostream& os, const ValueField& field, double alpha) {
  const Grid& g = *field.grid;
  os << "# n=" << g.dim() << " counts=";
  for (int a = 0; a < g.dim(); ++a) os << (a ? "," : "") << g.counts()[a];
  os << " lower=" << join_reals(g.lower()) << " upper=" << join_reals(g.upper()) << " alpha=" << format_real(alpha) << "\n";
  os << "# params_hash=" << (field.params_hash.empty() ? "none" : field.params_hash)
     << " converged=" << (field.converged ? 1 : 0) << " iterations=" << field.iterations
     << " final_change=" << format_real(field.final_change) << "\n";
  std::string row;
  for (size_t node = 0; node < g.num_nodes(); ++node) {
    row.clear();
    for (int a = 0; a < g.dim(); ++a) {
      row += std::to_string(g.axis_index(node, a));
      row += ',';
    }
    row += format_real(field.w[node]);
    row += '\n';
    os << row;
  }
}

FieldFile read_field_csv(std::istream& is) {
  FieldFile f;
  std::string line;
  if (!std::getline(is, line) || line.empty() || line[0] != '#') throw InputError("field file must start with a '#' header");
  auto hdr = parse_header_fields(line);
  for (const char* key : {"n", "counts", "lower", "upper", "alpha"}) {
    if (!hdr.count(key)) throw InputError(std::string("field header missing '") + key + "'");
  }
  const auto n = parse_integer(hdr["n"]);
  if (!n || *n < 1 || *n > 16) throw InputError("field header: bad n");
  const int dim = static_cast<int>(*n);
  for (auto part : split(hdr["counts"], ',')) {
    const auto c = parse_integer(part);
    if (!c || *c < 1) throw InputError("field header: bad counts");
    f.counts.push_back(static_cast<int>(*c));
  }
  if (static_cast<int>(f.counts.size()) != dim) throw InputError("field header: wrong number of counts");
  f.lower = parse_real_list(hdr["lower"], dim, "lower bounds");
  f.upper = parse_real_list(hdr["upper"], dim, "upper bounds");
  const auto alpha = parse_double(hdr["alpha"]);
  if (!alpha) throw InputError("field header: bad alpha");
  f.alpha = *alpha;

  size_t total = 1;
  for (int c : f.counts) total *= static_cast<size_t>(c);
  f.w.assign(total, std::numeric_limits<double>::quiet_NaN());
  std::vector<bool> seen(total, false);
  std::vector<size_t> strides(dim, 1);
  for (int a = dim - 2; a >= 0; --a) strides[a] = strides[a + 1] * f.counts[a + 1];

  size_t rows = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      auto meta = parse_header_fields(line);
      if (meta.count("params_hash")) f.params_hash = meta["params_hash"] == "none" ? "" : meta["params_hash"];
      if (meta.count("converged")) f.converged = meta["converged"] == "1";
      if (meta.count("iterations")) f.iterations = static_cast<int>(parse_integer(meta["iterations"]).value_or(0));
      if (meta.count("final_change")) f.final_change = parse_double(meta["final_change"]).value_or(0.0);
      continue;
    }
    const auto parts = split(line, ',');
    if (static_cast<int>(parts.size()) != dim + 1) throw InputError("field row has wrong number of columns: '" + line + "'");
    size_t node = 0;
    for (int a = 0; a < dim; ++a) {
      const auto k = parse_integer(parts[a]);
      if (!k || *k < 0 || *k >= f.counts[a]) throw InputError("field row index out of range: '" + line + "'");
      node += static_cast<size_t>(*k) * strides[a];
    }
    const auto w = parse_double(parts[dim]);
    if (!w || !(*w >= 0.0 && *w <= 1.0)) throw InputError("field value outside [0,1]: '" + line + "'");
    if (seen[node]) throw InputError("duplicate field row: '" + line + "'");
    seen[node] = true;
    f.w[node] = *w;
    ++rows;
  }
  if (rows != total) throw InputError("field file has " + std::to_string(rows) + " rows, expected " + std::to_string(total));
  return f;
}

ValueField bind_field(const FieldFile& file, std::shared_ptr<const Grid> grid) {
  if (file.counts != grid->counts() || file.lower != grid->lower() || file.upper != grid->upper()) {
    throw InputError("field file layout does not match the configured grid");
  }
  ValueField f;
  f.grid = std::move(grid);
  f.w = file.w;
  f.iterations = file.iterations;
  f.final_change = file.final_change;
  f.converged = file.converged;
  f.params_hash = file.params_hash;
  return f;
}

}  // namespace clbf
