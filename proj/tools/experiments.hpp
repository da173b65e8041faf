#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "wlsremap/detector.hpp"
#include "wlsremap/fields.hpp"
#include "wlsremap/mesh.hpp"
#include "wlsremap/remap.hpp"

namespace wlsr::experiments {

enum class MeshFamily { Icosphere, Cubed };

MeshFamily mesh_family_from_name(const std::string& name);
std::string to_string(MeshFamily family);

/// Experiment level L: icosphere subdivision depth L + 3, cubed sphere
/// with 13 * 2^(L - 1) cells per panel edge.
SurfaceMesh make_level_mesh(MeshFamily family, int level);

/// Simple table for CSV/JSON output.
struct Table {
  using Cell = std::variant<long long, double, std::string>;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add(std::vector<Cell> row) { rows.push_back(std::move(row)); }
};

void write_csv(std::ostream& out, const Table& table);
/// JSON object {"meta": {...}, "rows": [{col: value, ...}, ...]}.
void write_json(std::ostream& out, const Table& table, const std::map<std::string, std::string>& meta);
void write_meta_json(std::ostream& out, const std::map<std::string, std::string>& meta);

struct ConvergenceRow {
  std::string direction;
  int level = 0;
  std::size_t n_source = 0;
  std::size_t n_target = 0;
  ErrorNorms error;
  double rate = 0.0;  // NaN on the coarsest level
};

/// Transfers `field` between matched meshes for levels [lo, hi];
/// icosphere to cubed sphere, and the reverse if requested.
std::vector<ConvergenceRow> run_convergence(const AnalyticField& field, const RemapConfig& config, int lo, int hi,
                                            bool reverse = true);

struct SigmaRow {
  int degree = 0;
  double sigma = 0.0;
  double l2 = 0.0;
};

std::vector<double> default_sigma_grid();  // 1.0, 1.1, ..., 3.0

/// l2 error of icosphere -> cubed-sphere WLS transfer for each (degree, sigma).
std::vector<SigmaRow> run_sigma_sweep(const AnalyticField& field, const std::vector<int>& degrees, int level,
                                      const std::vector<double>& sigmas, WeightKind kind = WeightKind::ScaledBuhmann);

/// Sigma with the smallest error for `degree`.
double argmin_sigma(const std::vector<SigmaRow>& rows, int degree);

/// Same transfer as run_sigma_sweep with inverse-distance weights.
double inverse_distance_error(const AnalyticField& field, int degree, int level);

struct TracePoint {
  NodeId node = kInvalidId;
  double arc = 0.0;  // position along the great circle, 0 at the north pole
  double theta = 0.0;
  double value = 0.0;
};

/// Nodes within half an average edge of the great circle through the
/// poles at azimuth `phi`, ordered along the circle.
std::vector<TracePoint> great_circle_trace(const SurfaceMesh& mesh, std::span<const double> values, double phi);

struct RepeatRun {
  RepeatResult result;
  std::size_t nodes_a = 0;
  std::size_t nodes_b = 0;
  std::map<int, std::vector<TracePoint>> traces;  // keyed by step
};

/// Round trips icosphere(level) -> cubed(level) -> icosphere(level).
RepeatRun run_repeat(const AnalyticField& field, const RemapConfig& config, int level, int steps,
                     const std::vector<int>& trace_steps = {}, double trace_phi = 0.0);

struct DetectRun {
  IndicatorField indicators;
  MarkerSet markers;
  std::size_t source_nodes = 0;
  std::size_t target_nodes = 0;
};

/// Detector on the source level mesh, markers transferred to the target
/// mesh of the other family through the smooth stencils.
DetectRun run_detect(const SurfaceMesh& source, const SurfaceMesh& target, const AnalyticField& field,
                     const RemapConfig& config);

}  // namespace wlsr::experiments
