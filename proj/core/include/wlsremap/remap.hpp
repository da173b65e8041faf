#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "wlsremap/detector.hpp"
#include "wlsremap/fields.hpp"
#include "wlsremap/locate.hpp"
#include "wlsremap/mesh.hpp"
#include "wlsremap/numerics.hpp"
#include "wlsremap/wls.hpp"

namespace wlsr {

enum class RemapMethod { WlsEnor, Wls, Linear };

RemapMethod remap_method_from_name(const std::string& name);
std::string to_string(RemapMethod method);

struct RemapConfig {
  RemapMethod method = RemapMethod::WlsEnor;
  int degree = 4;      // smooth-region degree p
  int eno_degree = 2;  // degree q near discontinuities
  double sigma = 0.0;  // <= 0 selects default_sigma(degree)
  WeightKind smooth_weights = WeightKind::ScaledBuhmann;
  double cond_threshold = 1e8;
  int max_enlargements = 3;
  bool limiter = true;
  DetectorConfig detector;

  WlsConfig smooth_config() const;
  WlsConfig eno_config() const;
};

struct RemapResult {
  std::vector<double> values;
  MarkerSet markers;
  std::vector<std::uint8_t> limited;  // per target node
  std::size_t eno_rows = 0;
  std::size_t limiter_activations = 0;
};

struct PlanDiagnostics {
  std::size_t rows_with_dropped_columns = 0;
  std::size_t enlarged_rows = 0;
  int min_final_degree = 0;
  double max_cond_estimate = 0.0;
};

/// Transfer operator from `source` to `target`. Both meshes must outlive the plan.
class RemapPlan {
 public:
  RemapPlan(const SurfaceMesh& source, const SurfaceMesh& target, RemapConfig config = {});

  const SurfaceMesh& source() const noexcept { return *source_; }
  const SurfaceMesh& target() const noexcept { return *target_; }
  const RemapConfig& config() const noexcept { return config_; }

  /// Degree-p WLS rows (empty for the linear method).
  const SparseOperator& smooth_operator() const noexcept { return smooth_; }
  /// Linear/bilinear interpolation in the containing source element.
  const SparseOperator& linear_operator() const noexcept { return linear_; }
  /// Stencil membership: row t lists the source nodes of target t's stencil.
  const SparseOperator& stencils() const noexcept { return stencils_; }
  std::span<const ElementLocation> locations() const noexcept { return locations_; }
  const PlanDiagnostics& diagnostics() const noexcept { return diagnostics_; }
  /// Null unless the method is WlsEnor.
  const Detector* detector() const noexcept { return detector_.get(); }

  RemapResult apply(std::span<const double> source_values) const;

  /// Versioned binary form: CSR arrays, locations and configuration.
  void save(std::ostream& out) const;
  static RemapPlan load(std::istream& in, const SurfaceMesh& source, const SurfaceMesh& target);

 private:
  RemapPlan() = default;
  void init_detector();

  const SurfaceMesh* source_ = nullptr;
  const SurfaceMesh* target_ = nullptr;
  RemapConfig config_;
  SparseOperator smooth_;
  SparseOperator linear_;
  SparseOperator stencils_;
  std::vector<ElementLocation> locations_;
  PlanDiagnostics diagnostics_;
  std::shared_ptr<const Detector> detector_;
};

/// Consistent interpolation: barycentric in triangles, bilinear in quads.
std::vector<double> linear_interp_remap(const SurfaceMesh& source, const SurfaceMesh& target,
                                        std::span<const double> values);

/// Weights w with integrate_sphere(mesh, f) = w . f for nodal values f.
/// Quadrature points use node-centered WLS fits of the given degree blended
/// with the element's shape functions.
std::vector<double> integration_weights(const SurfaceMesh& mesh, int degree);

/// Reconstruction degree used for nodal integrands of a degree-p transfer.
int integration_degree(int transfer_degree);

double integrate_sphere(const SurfaceMesh& mesh, const AnalyticField& field);
double integrate_sphere(std::span<const double> weights, std::span<const double> values);

/// |integral(exact) - integral(values)| on `mesh`.
double conservation_error(const SurfaceMesh& mesh, std::span<const double> weights, std::span<const double> values,
                          const AnalyticField& exact);

struct RoundTripRecord {
  int step = 0;
  ErrorNorms error;  // against the exact field, if given
  double min = 0.0;
  double max = 0.0;
  double integral = 0.0;            // if integration weights were given
  double conservation_error = 0.0;  // if both exact field and weights were given
};

struct RepeatOptions {
  const AnalyticField* exact = nullptr;
  std::span<const double> weights;  // integration weights on mesh A
  std::function<void(int step, std::span<const double> values)> on_step;
};

struct RepeatResult {
  std::vector<RoundTripRecord> records;
  std::vector<double> final_values;
};

/// n_steps round trips A -> B -> A.
RepeatResult repeated_transfer(const RemapPlan& ab, const RemapPlan& ba, std::span<const double> f0, int n_steps,
                               const RepeatOptions& options = {});

}  // namespace wlsr
