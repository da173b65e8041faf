#include "experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

#include "json.hpp"
#include "wlsremap/error.hpp"

namespace wlsr::experiments {

MeshFamily mesh_family_from_name(const std::string& name) {
  if (name == "icosphere" || name == "ico") return MeshFamily::Icosphere;
  if (name == "cubed" || name == "cubed-sphere") return MeshFamily::Cubed;
  throw Error(ErrorCode::InvalidArgument, "unknown mesh family '" + name + "'");
}

std::string to_string(MeshFamily family) { return family == MeshFamily::Icosphere ? "icosphere" : "cubed"; }

SurfaceMesh make_level_mesh(MeshFamily family, int level) {
  if (level < 1 || level > 8) throw Error(ErrorCode::InvalidArgument, "mesh level must be in [1, 8]");
  return family == MeshFamily::Icosphere ? gen_icosphere(level + 3) : gen_cubed_sphere(13 << (level - 1));
}

namespace {

void write_cell(std::ostream& out, const Table::Cell& cell) {
  if (const auto* i = std::get_if<long long>(&cell)) {
    out << *i;
  } else if (const auto* d = std::get_if<double>(&cell)) {
    if (std::isfinite(*d)) {
      out << *d;
    } else {
      out << "nan";
    }
  } else {
    out << std::get<std::string>(cell);
  }
}

nlohmann::json to_json(const Table::Cell& cell) {
  if (const auto* i = std::get_if<long long>(&cell)) return *i;
  if (const auto* d = std::get_if<double>(&cell)) return std::isfinite(*d) ? nlohmann::json(*d) : nlohmann::json();
  return std::get<std::string>(cell);
}

}  // namespace

void write_csv(std::ostream& out, const Table& table) {
  const auto old = out.precision(17);
  for (std::size_t c = 0; c < table.columns.size(); ++c) out << (c ? "," : "") << table.columns[c];
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out << ',';
      write_cell(out, row[c]);
    }
    out << '\n';
  }
  out.precision(old);
}

void write_json(std::ostream& out, const Table& table, const std::map<std::string, std::string>& meta) {
  nlohmann::json doc;
  doc["meta"] = meta;
  doc["rows"] = nlohmann::json::array();
  for (const auto& row : table.rows) {
    nlohmann::json obj = nlohmann::json::object();
    for (std::size_t c = 0; c < row.size() && c < table.columns.size(); ++c) obj[table.columns[c]] = to_json(row[c]);
    doc["rows"].push_back(std::move(obj));
  }
  out << doc.dump(2) << '\n';
}

void write_meta_json(std::ostream& out, const std::map<std::string, std::string>& meta) {
  out << nlohmann::json(meta).dump(2) << '\n';
}

std::vector<ConvergenceRow> run_convergence(const AnalyticField& field, const RemapConfig& config, int lo, int hi,
                                            bool reverse) {
  if (hi <= lo) throw Error(ErrorCode::InvalidArgument, "convergence needs at least two levels");
  std::vector<ConvergenceRow> rows;
  for (int dir = 0; dir < (reverse ? 2 : 1); ++dir) {
    const MeshFamily src_family = dir == 0 ? MeshFamily::Icosphere : MeshFamily::Cubed;
    const MeshFamily tgt_family = dir == 0 ? MeshFamily::Cubed : MeshFamily::Icosphere;
    const ConvergenceRow* prev = nullptr;
    for (int level = lo; level <= hi; ++level) {
      const SurfaceMesh src = make_level_mesh(src_family, level);
      const SurfaceMesh tgt = make_level_mesh(tgt_family, level);
      const RemapPlan plan(src, tgt, config);
      const RemapResult res = plan.apply(field.sample(src));
      ConvergenceRow row;
      row.direction = to_string(src_family) + "->" + to_string(tgt_family);
      row.level = level;
      row.n_source = src.num_nodes();
      row.n_target = tgt.num_nodes();
      row.error = error_norms(res.values, field.sample(tgt));
      row.rate = std::numeric_limits<double>::quiet_NaN();
      if (prev && prev->error.l2 > 0.0 && row.error.l2 > 0.0) {
        row.rate = convergence_rate(prev->error.l2, prev->n_target, row.error.l2, row.n_target);
      }
      rows.push_back(row);
      prev = &rows.back();
    }
  }
  return rows;
}

std::vector<double> default_sigma_grid() {
  std::vector<double> grid;
  for (int i = 10; i <= 30; ++i) grid.push_back(i / 10.0);
  return grid;
}

std::vector<SigmaRow> run_sigma_sweep(const AnalyticField& field, const std::vector<int>& degrees, int level,
                                      const std::vector<double>& sigmas, WeightKind kind) {
  const SurfaceMesh src = make_level_mesh(MeshFamily::Icosphere, level);
  const SurfaceMesh tgt = make_level_mesh(MeshFamily::Cubed, level);
  const auto f = field.sample(src);
  const auto exact = field.sample(tgt);
  std::vector<SigmaRow> rows;
  for (int p : degrees) {
    for (double s : sigmas) {
      RemapConfig c;
      c.method = RemapMethod::Wls;
      c.degree = p;
      c.sigma = s;
      c.smooth_weights = kind;
      const RemapPlan plan(src, tgt, c);
      rows.push_back({p, s, error_norms(plan.apply(f).values, exact).l2});
    }
  }
  return rows;
}

double argmin_sigma(const std::vector<SigmaRow>& rows, int degree) {
  double best = std::numeric_limits<double>::infinity();
  double arg = std::numeric_limits<double>::quiet_NaN();
  for (const auto& r : rows) {
    if (r.degree == degree && r.l2 < best) {
      best = r.l2;
      arg = r.sigma;
    }
  }
  return arg;
}

double inverse_distance_error(const AnalyticField& field, int degree, int level) {
  return run_sigma_sweep(field, {degree}, level, {1.0}, WeightKind::InverseDistance).front().l2;
}

std::vector<TracePoint> great_circle_trace(const SurfaceMesh& mesh, std::span<const double> values, double phi) {
  if (values.size() != mesh.num_nodes()) throw Error(ErrorCode::DimensionMismatch, "trace values do not match mesh");
  const Vec3 dir{std::cos(phi), std::sin(phi), 0.0};
  const Vec3 plane_normal{-std::sin(phi), std::cos(phi), 0.0};
  const double band = 0.5 * mesh_metrics(mesh).h_g;
  std::vector<TracePoint> out;
  for (std::size_t v = 0; v < mesh.num_nodes(); ++v) {
    const Vec3& x = mesh.node(static_cast<NodeId>(v));
    if (std::abs(dot(x, plane_normal)) > band) continue;
    TracePoint t;
    t.node = static_cast<NodeId>(v);
    t.theta = std::acos(std::clamp(x[2], -1.0, 1.0));
    t.arc = dot(x, dir) >= 0.0 ? t.theta : 2.0 * std::numbers::pi - t.theta;
    t.value = values[v];
    out.push_back(t);
  }
  std::sort(out.begin(), out.end(), [](const TracePoint& a, const TracePoint& b) {
    return a.arc < b.arc || (a.arc == b.arc && a.node < b.node);
  });
  return out;
}

RepeatRun run_repeat(const AnalyticField& field, const RemapConfig& config, int level, int steps,
                     const std::vector<int>& trace_steps, double trace_phi) {
  const SurfaceMesh a = make_level_mesh(MeshFamily::Icosphere, level);
  const SurfaceMesh b = make_level_mesh(MeshFamily::Cubed, level);
  const RemapPlan ab(a, b, config);
  const RemapPlan ba(b, a, config);
  const int degree = config.method == RemapMethod::Linear ? 2 : integration_degree(config.degree);
  const auto weights = integration_weights(a, degree);
  RepeatRun run;
  run.nodes_a = a.num_nodes();
  run.nodes_b = b.num_nodes();
  RepeatOptions opts;
  opts.exact = &field;
  opts.weights = weights;
  opts.on_step = [&](int step, std::span<const double> values) {
    if (std::find(trace_steps.begin(), trace_steps.end(), step) != trace_steps.end()) {
      run.traces[step] = great_circle_trace(a, values, trace_phi);
    }
  };
  run.result = repeated_transfer(ab, ba, field.sample(a), steps, opts);
  return run;
}

DetectRun run_detect(const SurfaceMesh& source, const SurfaceMesh& target, const AnalyticField& field,
                     const RemapConfig& config) {
  RemapConfig c = config;
  c.method = RemapMethod::WlsEnor;
  const RemapPlan plan(source, target, c);
  const auto f = field.sample(source);
  DetectRun run;
  run.indicators = plan.detector()->indicators(f);
  run.markers.source = plan.detector()->mark(run.indicators, &run.markers.tau);
  run.markers.target = transfer_markers(run.markers.source, plan.stencils());
  run.markers.kappa = c.detector.kappa;
  run.markers.c_local = c.detector.c_local;
  run.markers.c_global = c.detector.c_global;
  run.source_nodes = source.num_nodes();
  run.target_nodes = target.num_nodes();
  return run;
}

}  // namespace wlsr::experiments
