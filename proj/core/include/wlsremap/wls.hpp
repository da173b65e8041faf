#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "wlsremap/locate.hpp"
#include "wlsremap/mesh.hpp"
#include "wlsremap/numerics.hpp"

namespace wlsr {

/// Orthonormal tangent frame (t1, t2, normal) centered at `origin`.
struct LocalFrame {
  Vec3 origin;
  Vec3 t1;
  Vec3 t2;
  Vec3 normal;

  Vec2 project(const Vec3& x) const {
    const Vec3 d = x - origin;
    return {dot(d, t1), dot(d, t2)};
  }
};

/// Gram-Schmidt frame: t1 orthogonalizes the global axis least aligned with
/// the normal, t2 = normal x t1. Throws DegenerateNormal for |normal| < 1e-14.
LocalFrame build_frame(const Vec3& point, const Vec3& normal);

enum class StencilPurpose {
  Smooth,    // floor(1.5 p) / 2 rings
  Eno,       // q + 1 rings (3 rings for quadratic WLS-ENO)
  Detector,  // 1.5 rings around a source node
};

/// Minimum stencil size ceil(0.75 (p + 1)(p + 2)).
std::size_t min_stencil_size(int degree);

/// Starting ring size for a stencil of the given purpose and degree.
double initial_ring(int degree, StencilPurpose purpose);

/// Number of monomials (p + 1)(p + 2) / 2.
std::size_t num_monomials(int degree);

struct Stencil {
  std::vector<NodeId> node_ids;
  std::vector<Vec2> uv;
  std::vector<double> r;           // |uv|
  std::vector<double> gamma_plus;  // max(0, m_j . m_0)
  LocalFrame frame;
  double h_bar = 0.0;  // mean uv edge length around the stencil center
  double R = 0.0;      // distance of the min_stencil_size-th closest node
  double ring = 0.0;
  bool exhausted = false;

  std::size_t size() const noexcept { return node_ids.size(); }
};

/// Stencil for a target point located in a source element: union of
/// k-rings of the element's nodes, grown in half-ring steps until it
/// reaches min_stencil_size(degree). `ring` <= 0 selects initial_ring().
Stencil build_stencil(const SurfaceMesh& source, const ElementLocation& location, const Vec3& target, int degree,
                      StencilPurpose purpose, double ring = 0.0);

Stencil build_stencil(const SurfaceMesh& source, const PointLocator& locator, const Vec3& target, int degree,
                      StencilPurpose purpose);

/// Stencil centered at a source node (frame at the node, node normal).
Stencil build_node_stencil(const SurfaceMesh& mesh, NodeId node, int degree, double ring);

/// Generalized Vandermonde matrix, graded lexicographic columns
/// 1, u, v, u^2, uv, v^2, u^3, ...
DenseMatrix vandermonde(std::span<const Vec2> uv, int degree);

/// Monomial values at one point, in vandermonde() column order.
std::vector<double> monomials(const Vec2& uv, int degree);

/// Total degree of the monomial in column `col`.
int monomial_degree(std::size_t col);

/// Column scaling T_jj = 1 / ||A(:, j)||_2 (1 for zero columns).
std::vector<double> equilibrate(const DenseMatrix& a);

enum class WeightKind { InverseDistance, ScaledBuhmann, WuC4, WendlandC4, WlsEno };

WeightKind weight_kind_from_name(const std::string& name);
std::string to_string(WeightKind kind);

struct WeightScheme {
  WeightKind kind = WeightKind::ScaledBuhmann;
  double sigma = 0.0;         // cut-off radius ratio; <= 0 means default_sigma(degree)
  double eps_id_scale = 0.01; // eps_ID = eps_id_scale * h_bar^2
  double c0 = 1.0;
  double c1 = 0.05;
  double eps_eno = 1e-3;
};

/// Optimized radius ratios: p=2 -> 2.0, p=3 -> 1.2, p=4 -> 1.6, p=6 -> 1.4.
double default_sigma(int degree);

/// Buhmann's C^3 compactly supported radial function.
double buhmann(double r);
/// Wu's C^4 function phi_{2,0}.
double wu_c4(double r);
/// Wendland's C^4 function psi_{4,2}.
double wendland_c4(double r);

/// Field data required by WLS-ENO weights.
struct EnoContext {
  std::span<const double> source_values;
  std::span<const double> max_incident_alpha;  // per source node, max |alpha_e| over incident elements
  double g0 = 0.0;                             // linear interpolation at the target
  double delta_f_global = 0.0;                 // global range of the source field
};

/// Weight of stencil node j. `ctx` is required for WlsEno (MissingContext otherwise).
double eval_weight(const WeightScheme& scheme, const Stencil& stencil, std::size_t j, int degree,
                   const EnoContext* ctx = nullptr);

std::vector<double> compute_weights(const WeightScheme& scheme, const Stencil& stencil, int degree,
                                    const EnoContext* ctx = nullptr);

struct WlsConfig {
  int degree = 4;
  WeightScheme scheme;
  double cond_threshold = 1e8;
  int max_enlargements = 3;  // half-ring enlargements before dropping columns

  double sigma() const { return scheme.sigma > 0.0 ? scheme.sigma : default_sigma(degree); }
};

std::string to_text(const WlsConfig& config);
WlsConfig wls_config_from_text(const std::string& text);

struct FitDiagnostics {
  int final_degree = 0;
  int dropped_columns = 0;
  double cond_estimate = 0.0;
  int enlargements = 0;
  std::size_t stencil_size = 0;
};

struct TransferRow {
  std::vector<SparseOperator::Entry> entries;  // source node -> coefficient
  FitDiagnostics diagnostics;
  Stencil stencil;

  double apply(std::span<const double> source_values) const;
};

/// WLS fit at the target evaluated at the frame origin (the constant
/// coefficient), expressed as a row over source nodes. If the estimated
/// condition number exceeds the threshold the stencil is enlarged by half
/// rings up to `max_enlargements` times, then trailing pivoted columns are
/// dropped. The constant column is never dropped.
TransferRow build_transfer_row(const SurfaceMesh& source, const ElementLocation& location, const Vec3& target,
                               const WlsConfig& config, StencilPurpose purpose = StencilPurpose::Smooth,
                               const EnoContext* ctx = nullptr);

TransferRow build_transfer_row(const SurfaceMesh& source, const PointLocator& locator, const Vec3& target,
                               const WlsConfig& config, const EnoContext* ctx = nullptr);

/// Node-centered fit evaluated at `point` (detector building block). The
/// row's stencil is left empty.
TransferRow build_node_fit_row(const SurfaceMesh& mesh, NodeId node, const Vec3& point, const WlsConfig& config,
                               double ring);

/// As build_node_fit_row for several points sharing one factorization.
std::vector<TransferRow> build_node_fit_rows(const SurfaceMesh& mesh, NodeId node, std::span<const Vec3> points,
                                             const WlsConfig& config, double ring);

}  // namespace wlsr
