#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "wlsremap/mesh.hpp"
#include "wlsremap/numerics.hpp"

namespace wlsr {

struct DetectorConfig {
  double ring = 1.5;        // stencil size of the node-centered quadratic fits
  double eps_beta = 1e-3;
  double kappa = 0.3;
  double c_local = 0.5;
  double c_global = 0.05;
  bool absolute_alpha = true;  // compare |alpha_e| against tau instead of alpha_e
};

struct IndicatorField {
  std::vector<double> alpha;          // per element
  std::vector<double> beta;           // per node
  std::vector<double> max_abs_alpha;  // per node, over incident elements
  std::vector<double> delta_f_local;  // per node
  double delta_f_global = 0.0;
};

struct MarkerSet {
  std::vector<std::uint8_t> source;
  std::vector<std::uint8_t> target;
  std::vector<double> tau;  // per source node
  double kappa = 0.0;
  double c_local = 0.0;
  double c_global = 0.0;

  std::size_t source_count() const;
  std::size_t target_count() const;
};

/// Elements x nodes operator: row e maps nodal values to the mean of the
/// node-centered quadratic fits at the element center minus the mean of
/// the element's nodal values.
SparseOperator build_alpha_operator(const SurfaceMesh& mesh, double ring = 1.5);

/// Node indicator from element indicators. `h_global` is the mesh-wide
/// mean edge length.
std::vector<double> compute_beta(const SurfaceMesh& mesh, std::span<const double> alpha, double delta_f_global,
                                 double h_global, double eps_beta = 1e-3);

/// Ranges of `values` over each node's ring neighborhood (node included).
std::vector<double> local_ranges(const SurfaceMesh& mesh, std::span<const double> values, double ring);

/// Mean uv edge length of the elements incident to each node, measured in
/// the node's tangent frame.
std::vector<double> local_edge_lengths(const SurfaceMesh& mesh);

/// Per-node markers: beta_v > kappa and some incident element exceeds tau.
std::vector<std::uint8_t> dual_threshold(const SurfaceMesh& mesh, const IndicatorField& ind,
                                         std::span<const double> h_local, double h_global,
                                         const DetectorConfig& config, std::vector<double>* tau_out = nullptr);

/// Marks each target whose stencil (row of `stencils`) contains a marked source node.
std::vector<std::uint8_t> transfer_markers(std::span<const std::uint8_t> source_markers,
                                           const SparseOperator& stencils);

/// Precomputed detector for one source mesh.
class Detector {
 public:
  explicit Detector(const SurfaceMesh& mesh, DetectorConfig config = {});

  const DetectorConfig& config() const noexcept { return config_; }
  const SparseOperator& alpha_operator() const noexcept { return alpha_op_; }
  std::span<const double> h_local() const noexcept { return h_local_; }
  double h_global() const noexcept { return h_global_; }

  IndicatorField indicators(std::span<const double> values) const;
  std::vector<std::uint8_t> mark(const IndicatorField& ind, std::vector<double>* tau_out = nullptr) const;

 private:
  const SurfaceMesh* mesh_;
  DetectorConfig config_;
  SparseOperator alpha_op_;
  std::vector<double> h_local_;
  double h_global_ = 0.0;
  std::vector<std::int64_t> ring_offsets_;  // CSR of each node's ring neighborhood
  std::vector<NodeId> ring_nodes_;
};

/// CSV dumps keyed by element or node index.
void write_element_indicators_csv(std::ostream& out, const IndicatorField& ind);
void write_node_indicators_csv(std::ostream& out, const IndicatorField& ind, const MarkerSet& markers);

}  // namespace wlsr
