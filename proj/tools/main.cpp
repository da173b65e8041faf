#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "experiments.hpp"
#include "wlsremap/error.hpp"
#include "wlsremap/mesh_io.hpp"

namespace {

using namespace wlsr;
using namespace wlsr::experiments;

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr const char* kSchemaVersion = "1";

struct Options {
  int source_level = 1;
  int target_level = 0;  // 0: same as source
  std::string source_family = "icosphere";
  std::string field = "f1";
  std::string method = "wls-enor";
  int degree = 4;
  int eno_degree = 2;
  double sigma = 0.0;
  int steps = 100;
  std::string out = "-";
  std::vector<int> trace_at;
  std::string format = "csv";
  double phi = 0.0;
  std::vector<int> degrees;
  std::string plan_path;
  bool exact_trace = false;
};

RemapConfig remap_config(const Options& o) {
  RemapConfig c;
  c.method = remap_method_from_name(o.method);
  c.degree = o.degree;
  c.eno_degree = o.eno_degree;
  c.sigma = o.sigma;
  return c;
}

std::map<std::string, std::string> base_meta(const std::string& command, const Options& o) {
  const RemapConfig c = remap_config(o);
  char sigma[32];
  std::snprintf(sigma, sizeof sigma, "%.6g", o.sigma > 0.0 ? o.sigma : default_sigma(o.degree));
  return {{"schema", kSchemaVersion},
          {"command", command},
          {"field", o.field},
          {"method", o.method},
          {"degree", std::to_string(o.degree)},
          {"eno_degree", std::to_string(o.eno_degree)},
          {"sigma", sigma},
          {"source_level", std::to_string(o.source_level)},
          {"target_level", std::to_string(o.target_level > 0 ? o.target_level : o.source_level)},
          {"kappa", std::to_string(c.detector.kappa)},
          {"c_local", std::to_string(c.detector.c_local)},
          {"c_global", std::to_string(c.detector.c_global)},
          {"cond_threshold", std::to_string(c.cond_threshold)}};
}

// Writes `table` to --out (or stdout) in the requested format; CSV output to
// a file gets a JSON metadata sidecar.
void emit(const Options& o, const Table& table, const std::map<std::string, std::string>& meta,
          const std::string& suffix = "") {
  const bool to_stdout = o.out == "-";
  std::ofstream file;
  if (!to_stdout) {
    file.open(o.out + suffix);
    if (!file) throw Error(ErrorCode::Io, "cannot open '" + o.out + suffix + "' for writing");
  }
  std::ostream& out = to_stdout ? std::cout : file;
  if (o.format == "json") {
    write_json(out, table, meta);
  } else {
    write_csv(out, table);
    if (!to_stdout && suffix.empty()) {
      std::ofstream side(o.out + ".meta.json");
      if (!side) throw Error(ErrorCode::Io, "cannot write metadata sidecar");
      write_meta_json(side, meta);
    }
  }
  if (!to_stdout && !out) throw Error(ErrorCode::Io, "failed writing '" + o.out + suffix + "'");
}

int cmd_gen_mesh(const Options& o) {
  const SurfaceMesh mesh = make_level_mesh(mesh_family_from_name(o.source_family), o.source_level);
  if (o.out == "-") {
    write_mesh(std::cout, mesh);
  } else {
    save_mesh(o.out, mesh);
  }
  const auto m = mesh_metrics(mesh);
  std::cerr << o.source_family << " level " << o.source_level << ": " << m.num_nodes << " nodes, "
            << m.num_elements << " elements, mean edge " << m.h_g << '\n';
  return 0;
}

MeshFamily other(MeshFamily f) { return f == MeshFamily::Icosphere ? MeshFamily::Cubed : MeshFamily::Icosphere; }

int cmd_remap(const Options& o) {
  const MeshFamily sf = mesh_family_from_name(o.source_family);
  const SurfaceMesh src = make_level_mesh(sf, o.source_level);
  const SurfaceMesh tgt = make_level_mesh(other(sf), o.target_level > 0 ? o.target_level : o.source_level);
  const AnalyticField field = AnalyticField::from_name(o.field);
  const RemapPlan plan(src, tgt, remap_config(o));
  if (!o.plan_path.empty()) {
    std::ofstream pf(o.plan_path, std::ios::binary);
    if (!pf) throw Error(ErrorCode::Io, "cannot open plan file '" + o.plan_path + "'");
    plan.save(pf);
  }
  const RemapResult res = plan.apply(field.sample(src));
  const auto exact = field.sample(tgt);
  Table t;
  t.columns = {"node", "theta", "phi", "value", "exact", "error", "marked", "limited"};
  for (std::size_t v = 0; v < tgt.num_nodes(); ++v) {
    const auto s = to_spherical(tgt.node(static_cast<NodeId>(v)));
    t.add({static_cast<long long>(v), s.theta, s.phi, res.values[v], exact[v], res.values[v] - exact[v],
           static_cast<long long>(res.markers.target[v]), static_cast<long long>(res.limited[v])});
  }
  auto meta = base_meta("remap", o);
  const ErrorNorms e = error_norms(res.values, exact);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", e.l2);
  meta["l2_error"] = buf;
  std::snprintf(buf, sizeof buf, "%.17g", e.linf);
  meta["linf_error"] = buf;
  meta["marked_targets"] = std::to_string(res.markers.target_count());
  meta["source_nodes"] = std::to_string(src.num_nodes());
  meta["target_nodes"] = std::to_string(tgt.num_nodes());
  emit(o, t, meta);
  return 0;
}

int cmd_convergence(const Options& o) {
  const int hi = o.target_level > 0 ? o.target_level : 3;
  const auto rows = run_convergence(AnalyticField::from_name(o.field), remap_config(o), o.source_level, hi);
  Table t;
  t.columns = {"direction", "level", "n_source", "n_target", "l2", "linf", "rate"};
  for (const auto& r : rows) {
    t.add({r.direction, static_cast<long long>(r.level), static_cast<long long>(r.n_source),
           static_cast<long long>(r.n_target), r.error.l2, r.error.linf, r.rate});
  }
  emit(o, t, base_meta("convergence", o));
  return 0;
}

int cmd_sweep_sigma(const Options& o) {
  std::vector<int> degrees = o.degrees;
  if (degrees.empty()) degrees = {2, 4, 6};
  const auto rows =
      run_sigma_sweep(AnalyticField::from_name(o.field), degrees, o.source_level, default_sigma_grid());
  Table t;
  t.columns = {"degree", "sigma", "l2"};
  for (const auto& r : rows) t.add({static_cast<long long>(r.degree), r.sigma, r.l2});
  auto meta = base_meta("sweep-sigma", o);
  for (int p : degrees) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", argmin_sigma(rows, p));
    meta["argmin_sigma_p" + std::to_string(p)] = buf;
    std::snprintf(buf, sizeof buf, "%.6e",
                  inverse_distance_error(AnalyticField::from_name(o.field), p, o.source_level));
    meta["inverse_distance_l2_p" + std::to_string(p)] = buf;
  }
  emit(o, t, meta);
  return 0;
}

Table trace_table(const std::map<int, std::vector<TracePoint>>& traces) {
  Table t;
  t.columns = {"step", "node", "arc", "theta", "value"};
  for (const auto& [step, pts] : traces) {
    for (const auto& p : pts) {
      t.add({static_cast<long long>(step), static_cast<long long>(p.node), p.arc, p.theta, p.value});
    }
  }
  return t;
}

int cmd_repeat(const Options& o) {
  if (o.steps < 1) throw Error(ErrorCode::InvalidArgument, "--steps must be at least 1");
  const RepeatRun run =
      run_repeat(AnalyticField::from_name(o.field), remap_config(o), o.source_level, o.steps, o.trace_at, o.phi);
  Table t;
  t.columns = {"step", "l2", "linf", "l1", "min", "max", "integral", "conservation_error"};
  for (const auto& r : run.result.records) {
    t.add({static_cast<long long>(r.step), r.error.l2, r.error.linf, r.error.l1, r.min, r.max, r.integral,
           r.conservation_error});
  }
  auto meta = base_meta("repeat", o);
  meta["steps"] = std::to_string(o.steps);
  meta["nodes_a"] = std::to_string(run.nodes_a);
  meta["nodes_b"] = std::to_string(run.nodes_b);
  emit(o, t, meta);
  if (!run.traces.empty()) {
    if (o.out == "-") std::cout << '\n';
    emit(o, trace_table(run.traces), meta, ".trace.csv");
  }
  return 0;
}

int cmd_detect(const Options& o) {
  const MeshFamily sf = mesh_family_from_name(o.source_family);
  const SurfaceMesh src = make_level_mesh(sf, o.source_level);
  const SurfaceMesh tgt = make_level_mesh(other(sf), o.target_level > 0 ? o.target_level : o.source_level);
  const DetectRun run = run_detect(src, tgt, AnalyticField::from_name(o.field), remap_config(o));
  Table t;
  t.columns = {"node", "theta", "phi", "beta", "delta_f_local", "tau", "marked"};
  for (std::size_t v = 0; v < src.num_nodes(); ++v) {
    const auto s = to_spherical(src.node(static_cast<NodeId>(v)));
    t.add({static_cast<long long>(v), s.theta, s.phi, run.indicators.beta[v], run.indicators.delta_f_local[v],
           run.markers.tau[v], static_cast<long long>(run.markers.source[v])});
  }
  auto meta = base_meta("detect", o);
  meta["source_markers"] = std::to_string(run.markers.source_count());
  meta["target_markers"] = std::to_string(run.markers.target_count());
  meta["source_nodes"] = std::to_string(run.source_nodes);
  meta["target_nodes"] = std::to_string(run.target_nodes);
  emit(o, t, meta);

  Table alpha;
  alpha.columns = {"element", "alpha"};
  for (std::size_t e = 0; e < run.indicators.alpha.size(); ++e) {
    alpha.add({static_cast<long long>(e), run.indicators.alpha[e]});
  }
  Table targets;
  targets.columns = {"node", "theta", "phi", "marked"};
  for (std::size_t v = 0; v < tgt.num_nodes(); ++v) {
    const auto s = to_spherical(tgt.node(static_cast<NodeId>(v)));
    targets.add({static_cast<long long>(v), s.theta, s.phi, static_cast<long long>(run.markers.target[v])});
  }
  if (o.out != "-") {
    emit(o, alpha, meta, ".alpha.csv");
    emit(o, targets, meta, ".target.csv");
  }
  std::cerr << "source markers " << run.markers.source_count() << ", target markers "
            << run.markers.target_count() << '\n';
  return 0;
}

int cmd_trace(const Options& o) {
  const MeshFamily sf = mesh_family_from_name(o.source_family);
  const SurfaceMesh src = make_level_mesh(sf, o.source_level);
  const SurfaceMesh tgt = make_level_mesh(other(sf), o.target_level > 0 ? o.target_level : o.source_level);
  const AnalyticField field = AnalyticField::from_name(o.field);
  const auto exact = field.sample(tgt);
  std::vector<double> values = exact;
  if (!o.exact_trace) values = RemapPlan(src, tgt, remap_config(o)).apply(field.sample(src)).values;
  const auto pts = great_circle_trace(tgt, values, o.phi);
  Table t;
  t.columns = {"node", "arc", "theta", "value", "exact"};
  for (const auto& p : pts) {
    t.add({static_cast<long long>(p.node), p.arc, p.theta, p.value, exact[static_cast<std::size_t>(p.node)]});
  }
  auto meta = base_meta("trace", o);
  meta["phi"] = std::to_string(o.phi);
  meta["points"] = std::to_string(pts.size());
  emit(o, t, meta);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"High-order remapping of nodal fields between spherical meshes"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub, bool remap_opts) {
    sub->add_option("--source-level", o.source_level, "Source mesh level (1 = coarsest)")->check(CLI::Range(1, 8));
    sub->add_option("--target-level", o.target_level, "Target mesh level (default: source level)")
        ->check(CLI::Range(1, 8));
    sub->add_option("--source-family", o.source_family, "Source mesh family")
        ->check(CLI::IsMember({"icosphere", "ico", "cubed", "cubed-sphere"}));
    sub->add_option("--out", o.out, "Output path ('-' for stdout)");
    sub->add_option("--format", o.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
    if (!remap_opts) return;
    sub->add_option("--field", o.field, "Field: f1, f2, f3, f4, const or const:VALUE");
    sub->add_option("--method", o.method, "Remap method")->check(CLI::IsMember({"wls-enor", "wls", "linear"}));
    sub->add_option("--degree", o.degree, "Smooth-region WLS degree")->check(CLI::Range(1, 8));
    sub->add_option("--eno-degree", o.eno_degree, "WLS-ENO degree near discontinuities")->check(CLI::Range(1, 3));
    sub->add_option("--sigma", o.sigma, "Cut-off radius ratio (default depends on degree)")
        ->check(CLI::PositiveNumber);
  };

  auto* gen = app.add_subcommand("gen-mesh", "Write a level mesh in text form");
  common(gen, false);
  gen->add_option("--level", o.source_level, "Alias of --source-level")->check(CLI::Range(1, 8));

  auto* remap = app.add_subcommand("remap", "One transfer between level meshes");
  common(remap, true);
  remap->add_option("--plan", o.plan_path, "Also save the transfer plan to this file");

  auto* conv = app.add_subcommand("convergence", "Errors and rates over levels source..target");
  common(conv, true);

  auto* sweep = app.add_subcommand("sweep-sigma", "Error versus cut-off radius ratio");
  common(sweep, true);
  sweep->add_option("--degrees", o.degrees, "Degrees to sweep (default 2 4 6)");

  auto* repeat = app.add_subcommand("repeat", "Repeated round-trip transfer");
  common(repeat, true);
  repeat->add_option("--steps", o.steps, "Number of round trips");
  repeat->add_option("--trace-at", o.trace_at, "Steps at which to record a great-circle trace")->delimiter(',');
  repeat->add_option("--phi", o.phi, "Azimuth of the traced great circle");

  auto* detect = app.add_subcommand("detect", "Discontinuity indicators and markers");
  common(detect, true);

  auto* trace = app.add_subcommand("trace", "Remapped values along a great circle through the poles");
  common(trace, true);
  trace->add_option("--phi", o.phi, "Azimuth of the great circle");
  trace->add_flag("--exact", o.exact_trace, "Trace the exact field instead of the remapped one");
  trace->add_option("--steps", o.steps, "Ignored; accepted for symmetry with repeat");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (gen->parsed()) return cmd_gen_mesh(o);
    if (remap->parsed()) return cmd_remap(o);
    if (conv->parsed()) return cmd_convergence(o);
    if (sweep->parsed()) return cmd_sweep_sigma(o);
    if (repeat->parsed()) return cmd_repeat(o);
    if (detect->parsed()) return cmd_detect(o);
    if (trace->parsed()) return cmd_trace(o);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.is_numerical() ? kExitNumerical : kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
  return kExitConfig;
}
