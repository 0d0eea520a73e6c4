#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "clbf/system_model.hpp"

namespace clbf {

inline constexpr int kMaxGridDim = 6;
inline constexpr int kMaxStencilCorners = 1 << kMaxGridDim;

enum class NodeClass : std::uint8_t { kInterior, kUnsafe, kBoxBoundary, kOrigin };

const char* to_string(NodeClass c);

/// Rectilinear grid over the box [lower, upper]. Nodes are stored row-major
/// (the last axis varies fastest).
///
/// Classification, in order of precedence: UNSAFE where h >= 1, ORIGIN for the
/// single node nearest to x = 0, BOX_BOUNDARY for the remaining nodes on the box
/// faces, INTERIOR otherwise. A grid built without a safe set has no UNSAFE nodes.
class Grid {
 public:
  /// Throws InputError if the box does not strictly contain the origin, any
  /// count is below 3, or the origin node is unsafe.
  static Grid build(Eigen::VectorXd lower, Eigen::VectorXd upper, std::vector<int> counts, const SafeSet* safe);

  int dim() const { return static_cast<int>(counts_.size()); }
  size_t num_nodes() const { return classes_.size(); }
  const Eigen::VectorXd& lower() const { return lower_; }
  const Eigen::VectorXd& upper() const { return upper_; }
  const Eigen::VectorXd& spacing() const { return spacing_; }
  const std::vector<int>& counts() const { return counts_; }
  size_t stride(int axis) const { return strides_[axis]; }

  NodeClass node_class(size_t node) const { return classes_[node]; }
  const std::vector<NodeClass>& node_classes() const { return classes_; }
  size_t origin_node() const { return origin_; }
  bool constrained() const { return constrained_; }

  /// Coordinate of node index `k` along `axis`.
  double coordinate(int axis, int k) const;
  Eigen::VectorXd position(size_t node) const;
  void position_into(size_t node, Eigen::Ref<Eigen::VectorXd> out) const;
  int axis_index(size_t node, int axis) const { return static_cast<int>((node / strides_[axis]) % counts_[axis]); }
  std::vector<int> multi_index(size_t node) const;
  size_t flat_index(std::span<const int> idx) const;

  bool contains(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  /// Same box and counts; classification is not compared.
  bool same_layout(const Grid& other) const;
  double cell_volume() const;

 private:
  Grid() = default;

  Eigen::VectorXd lower_, upper_, spacing_;
  std::vector<int> counts_;
  std::vector<size_t> strides_;
  std::vector<NodeClass> classes_;
  size_t origin_ = 0;
  bool constrained_ = false;
};

/// Multilinear interpolation stencil: 2^n corner nodes and non-negative weights
/// summing to one, corners ordered by the bit pattern of the per-axis offsets.
struct Stencil {
  std::vector<std::uint32_t> nodes;
  std::vector<double> weights;
};

/// Throws QueryError if x is outside the grid box.
void make_stencil(const Grid& grid, const Eigen::Ref<const Eigen::VectorXd>& x, std::uint32_t* nodes, double* weights);
Stencil make_stencil(const Grid& grid, const Eigen::Ref<const Eigen::VectorXd>& x);

inline double apply_stencil(const std::uint32_t* nodes, const double* weights, int corners, const double* w) {
  double v = 0.0;
  for (int c = 0; c < corners; ++c) v += weights[c] * w[nodes[c]];
  return v;
}

/// Box of controls sampled on a uniform lattice with an odd number of samples
/// per axis, so the lattice contains 0 and is symmetric under negation. Samples
/// are ordered lexicographically, axis 0 slowest.
class ControlSet {
 public:
  /// Throws InputError on non-positive bounds or even / < 3 samples.
  ControlSet(Eigen::VectorXd u_max, int samples_per_axis);
  /// The single control u = 0.
  static ControlSet zero_only(int input_dim);

  int input_dim() const { return static_cast<int>(u_max_.size()); }
  const Eigen::VectorXd& u_max() const { return u_max_; }
  int samples_per_axis() const { return samples_; }
  size_t size() const { return samples_list_.size(); }
  const Eigen::VectorXd& operator[](size_t i) const { return samples_list_[i]; }
  const std::vector<Eigen::VectorXd>& samples() const { return samples_list_; }
  size_t zero_index() const { return zero_index_; }

  bool operator==(const ControlSet& o) const { return u_max_ == o.u_max_ && samples_ == o.samples_; }

 private:
  ControlSet() = default;

  Eigen::VectorXd u_max_;
  int samples_ = 1;
  std::vector<Eigen::VectorXd> samples_list_;
  size_t zero_index_ = 0;
};

std::vector<Eigen::VectorXd> control_samples(const ControlSet& cs);

/// Zubov-transformed value W sampled on a grid, W in [0, 1].
struct ValueField {
  std::shared_ptr<const Grid> grid;
  std::vector<double> w;
  int iterations = 0;
  double final_change = 0.0;
  bool converged = false;
  std::string params_hash;

  /// W = 1 off ORIGIN, 0 at ORIGIN: the supersolution the solver starts from.
  static ValueField initial(std::shared_ptr<const Grid> grid);
};

/// Multilinear interpolation; 1 outside the box.
double interpolate(const ValueField& field, const Eigen::Ref<const Eigen::VectorXd>& x);

/// Central differences per axis, one-sided where a neighbour falls outside the
/// box. Throws QueryError at UNSAFE nodes.
Eigen::VectorXd gradient(const ValueField& field, size_t node);

/// Field CSV: header `# n=<n> counts=<c,...> lower=<...> upper=<...> alpha=<...>`,
/// a metadata comment `# params_hash=<hex> converged=<0|1> iterations=<k>
/// final_change=<r>`, then one row `i1,...,in,w` per node in row-major order.
/// Reals use shortest round-trip formatting, so a re-read field is bit-identical.
void write_field_csv(std::ostream& os, const ValueField& field, double alpha);

struct FieldFile {
  Eigen::VectorXd lower, upper;
  std::vector<int> counts;
  double alpha = 0.0;
  std::string params_hash;
  bool converged = false;
  int iterations = 0;
  double final_change = 0.0;
  std::vector<double> w;
};

/// Throws InputError on malformed content.
FieldFile read_field_csv(std::istream& is);

/// Attaches file values to a grid; throws InputError if the layout differs.
ValueField bind_field(const FieldFile& file, std::shared_ptr<const Grid> grid);

}  // namespace clbf
