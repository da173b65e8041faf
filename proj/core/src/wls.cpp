#include "wlsremap/wls.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "wlsremap/error.hpp"

namespace wlsr {

// ---------------------------------------------------------------------------
// Frames and stencils

LocalFrame build_frame(const Vec3& point, const Vec3& normal) {
  const double len = norm(normal);
  if (!(len >= 1e-14)) throw Error(ErrorCode::DegenerateNormal, "normal vector is (nearly) zero");
  LocalFrame f;
  f.origin = point;
  f.normal = normal / len;
  int axis = 0;
  for (int i = 1; i < 3; ++i) {
    if (std::abs(f.normal[i]) < std::abs(f.normal[axis])) axis = i;
  }
  const Vec3 seed{axis == 0 ? 1.0 : 0.0, axis == 1 ? 1.0 : 0.0, axis == 2 ? 1.0 : 0.0};
  f.t1 = normalized(seed - dot(seed, f.normal) * f.normal);
  f.t2 = cross(f.normal, f.t1);
  return f;
}

std::size_t num_monomials(int degree) {
  return static_cast<std::size_t>((degree + 1) * (degree + 2) / 2);
}

std::size_t min_stencil_size(int degree) {
  // ceil(0.75 (p+1)(p+2)) in integer arithmetic.
  const int twelve = 3 * (degree + 1) * (degree + 2);
  return static_cast<std::size_t>((twelve + 3) / 4);
}

double initial_ring(int degree, StencilPurpose purpose) {
  switch (purpose) {
    case StencilPurpose::Smooth: return std::floor(1.5 * degree) / 2.0;
    case StencilPurpose::Eno: return static_cast<double>(degree + 1);
    case StencilPurpose::Detector: return 1.5;
  }
  return 1.0;
}

namespace {

// Mean uv length of the unique edges of the elements around `seeds`.
double mean_uv_edge_length(const SurfaceMesh& mesh, std::span<const NodeId> seeds, const LocalFrame& frame) {
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (NodeId v : seeds) {
    for (ElemId e : mesh.incident_elements(v)) {
      const Element& el = mesh.element(e);
      for (std::size_t i = 0; i < el.arity; ++i) {
        const NodeId a = el[i];
        const NodeId b = el[(i + 1) % el.arity];
        edges.emplace_back(std::min(a, b), std::max(a, b));
      }
    }
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  double total = 0.0;
  for (const auto& [a, b] : edges) {
    const Vec2 pa = frame.project(mesh.node(a));
    const Vec2 pb = frame.project(mesh.node(b));
    total += std::hypot(pa.u - pb.u, pa.v - pb.v);
  }
  return edges.empty() ? 0.0 : total / static_cast<double>(edges.size());
}

Stencil assemble_stencil(const SurfaceMesh& mesh, std::span<const NodeId> seeds, const LocalFrame& frame, int degree,
                         double ring) {
  const std::size_t needed = min_stencil_size(degree);
  RingResult rr = grow_ring(mesh, seeds, ring);
  while (rr.nodes.size() < needed && !rr.exhausted) {
    ring += 0.5;
    rr = grow_ring(mesh, seeds, ring);
  }
  if (rr.nodes.size() < needed) {
    throw Error(ErrorCode::InsufficientStencil, "mesh has " + std::to_string(mesh.num_nodes()) +
                                                    " nodes, stencil needs " + std::to_string(needed));
  }
  Stencil s;
  s.frame = frame;
  s.ring = ring;
  s.exhausted = rr.exhausted;
  s.node_ids = std::move(rr.nodes);
  const std::size_t n = s.node_ids.size();
  s.uv.resize(n);
  s.r.resize(n);
  s.gamma_plus.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    const NodeId v = s.node_ids[j];
    s.uv[j] = frame.project(mesh.node(v));
    s.r[j] = std::hypot(s.uv[j].u, s.uv[j].v);
    s.gamma_plus[j] = std::max(0.0, dot(mesh.normal(v), frame.normal));
  }
  std::vector<double> sorted = s.r;
  const std::size_t k = std::min(needed, n) - 1;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k), sorted.end());
  s.R = sorted[k];
  s.h_bar = mean_uv_edge_length(mesh, seeds, frame);
  return s;
}

LocalFrame frame_at_location(const SurfaceMesh& source, const ElementLocation& location, const Vec3& target) {
  const auto w = location.shape_weights();
  return build_frame(target, source.normal_at(location.element, std::span<const double>(w.data(), location.arity),
                                              target));
}

}  // namespace

Stencil build_stencil(const SurfaceMesh& source, const ElementLocation& location, const Vec3& target, int degree,
                      StencilPurpose purpose, double ring) {
  if (ring <= 0.0) ring = initial_ring(degree, purpose);
  const LocalFrame frame = frame_at_location(source, location, target);
  return assemble_stencil(source, source.element(location.element).view(), frame, degree, ring);
}

Stencil build_stencil(const SurfaceMesh& source, const PointLocator& locator, const Vec3& target, int degree,
                      StencilPurpose purpose) {
  return build_stencil(source, locator.locate(target), target, degree, purpose);
}

Stencil build_node_stencil(const SurfaceMesh& mesh, NodeId node, int degree, double ring) {
  const LocalFrame frame = build_frame(mesh.node(node), mesh.normal(node));
  const NodeId seed[1] = {node};
  return assemble_stencil(mesh, seed, frame, degree, ring);
}

// ---------------------------------------------------------------------------
// Vandermonde systems

std::vector<double> monomials(const Vec2& uv, int degree) {
  std::vector<double> out(num_monomials(degree));
  // Powers u^i and v^i, then graded lexicographic order u^j v^(d-j), j = d..0.
  std::vector<double> up(static_cast<std::size_t>(degree) + 1, 1.0), vp(up);
  for (int i = 1; i <= degree; ++i) {
    up[static_cast<std::size_t>(i)] = up[static_cast<std::size_t>(i - 1)] * uv.u;
    vp[static_cast<std::size_t>(i)] = vp[static_cast<std::size_t>(i - 1)] * uv.v;
  }
  std::size_t c = 0;
  for (int d = 0; d <= degree; ++d) {
    for (int j = d; j >= 0; --j) out[c++] = up[static_cast<std::size_t>(j)] * vp[static_cast<std::size_t>(d - j)];
  }
  return out;
}

int monomial_degree(std::size_t col) {
  int d = 0;
  std::size_t first = 0;
  while (first + static_cast<std::size_t>(d) + 1 <= col) {
    first += static_cast<std::size_t>(d) + 1;
    ++d;
  }
  return d;
}

DenseMatrix vandermonde(std::span<const Vec2> uv, int degree) {
  if (degree < 0) throw Error(ErrorCode::InvalidArgument, "negative polynomial degree");
  DenseMatrix a(uv.size(), num_monomials(degree));
  for (std::size_t i = 0; i < uv.size(); ++i) {
    const auto row = monomials(uv[i], degree);
    std::copy(row.begin(), row.end(), a.row(i).begin());
  }
  return a;
}

std::vector<double> equilibrate(const DenseMatrix& a) {
  std::vector<double> t(a.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) t[j] += a(i, j) * a(i, j);
  }
  for (double& x : t) x = x > 0.0 ? 1.0 / std::sqrt(x) : 1.0;
  return t;
}

// ---------------------------------------------------------------------------
// Weights

WeightKind weight_kind_from_name(const std::string& name) {
  if (name == "inverse-distance") return WeightKind::InverseDistance;
  if (name == "buhmann") return WeightKind::ScaledBuhmann;
  if (name == "wu") return WeightKind::WuC4;
  if (name == "wendland") return WeightKind::WendlandC4;
  if (name == "wls-eno") return WeightKind::WlsEno;
  throw Error(ErrorCode::InvalidArgument, "unknown weight scheme '" + name + "'");
}

std::string to_string(WeightKind kind) {
  switch (kind) {
    case WeightKind::InverseDistance: return "inverse-distance";
    case WeightKind::ScaledBuhmann: return "buhmann";
    case WeightKind::WuC4: return "wu";
    case WeightKind::WendlandC4: return "wendland";
    case WeightKind::WlsEno: return "wls-eno";
  }
  return "unknown";
}

double default_sigma(int degree) {
  switch (degree) {
    case 2: return 2.0;
    case 3: return 1.2;
    case 4: return 1.6;
    case 6: return 1.4;
    default: return 1.6;
  }
}

double buhmann(double r) {
  if (r < 0.0 || r > 1.0) return 0.0;
  const double sr = std::sqrt(r);
  const double r2 = r * r;
  const double r3 = r2 * r;
  return 112.0 / 45.0 * r2 * r2 * sr + 16.0 / 3.0 * r3 * sr - 7.0 * r2 * r2 - 14.0 / 15.0 * r2 + 1.0 / 9.0;
}

double wu_c4(double r) {
  if (r < 0.0 || r >= 1.0) return 0.0;
  const double s = 1.0 - r;
  const double s5 = s * s * s * s * s;
  return s5 * ((((r + 5.0) * r + 9.0) * r + 5.0) * r + 1.0);
}

double wendland_c4(double r) {
  if (r < 0.0 || r >= 1.0) return 0.0;
  const double s = 1.0 - r;
  const double s3 = s * s * s;
  return s3 * s3 * ((35.0 * r + 18.0) * r + 3.0);
}

double eval_weight(const WeightScheme& scheme, const Stencil& st, std::size_t j, int degree, const EnoContext* ctx) {
  const double gamma = st.gamma_plus[j];
  const double r = st.r[j];
  const double eps_id = scheme.eps_id_scale * st.h_bar * st.h_bar;
  const double sigma = scheme.sigma > 0.0 ? scheme.sigma : default_sigma(degree);
  const double rho = sigma * st.R;
  switch (scheme.kind) {
    case WeightKind::InverseDistance:
      return gamma * std::pow(r * r + eps_id, -0.25 * degree);
    case WeightKind::ScaledBuhmann:
      return rho > 0.0 && r < rho ? gamma * buhmann(r / rho) : 0.0;
    case WeightKind::WuC4:
      return rho > 0.0 ? gamma * wu_c4(r / rho) : 0.0;
    case WeightKind::WendlandC4:
      return rho > 0.0 ? gamma * wendland_c4(r / rho) : 0.0;
    case WeightKind::WlsEno: {
      if (ctx == nullptr || ctx->source_values.empty() || ctx->max_incident_alpha.empty()) {
        throw Error(ErrorCode::MissingContext, "WLS-ENO weights need field values and alpha indicators");
      }
      const auto v = static_cast<std::size_t>(st.node_ids[j]);
      const double numerator = gamma * std::pow(r * r + eps_id, -0.25);
      const double dfg = ctx->delta_f_global;
      if (dfg <= 0.0) return numerator;  // constant field: nothing to deprioritize
      const double jump = ctx->source_values[v] - ctx->g0;
      const double denominator = scheme.c0 * jump * jump + scheme.c1 * dfg * ctx->max_incident_alpha[v] +
                                 scheme.eps_eno * dfg * dfg * st.h_bar * st.h_bar;
      return numerator / denominator;
    }
  }
  return 0.0;
}

std::vector<double> compute_weights(const WeightScheme& scheme, const Stencil& st, int degree, const EnoContext* ctx) {
  std::vector<double> w(st.size());
  for (std::size_t j = 0; j < st.size(); ++j) w[j] = eval_weight(scheme, st, j, degree, ctx);
  return w;
}

// ---------------------------------------------------------------------------
// Configuration text form

std::string to_text(const WlsConfig& c) {
  nlohmann::json j;
  j["degree"] = c.degree;
  j["scheme"] = to_string(c.scheme.kind);
  j["sigma"] = c.scheme.sigma;
  j["eps_id_scale"] = c.scheme.eps_id_scale;
  j["c0"] = c.scheme.c0;
  j["c1"] = c.scheme.c1;
  j["eps_eno"] = c.scheme.eps_eno;
  j["cond_threshold"] = c.cond_threshold;
  j["max_enlargements"] = c.max_enlargements;
  return j.dump();
}

WlsConfig wls_config_from_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("bad WLS configuration: ") + e.what());
  }
  WlsConfig c;
  c.degree = j.value("degree", c.degree);
  c.scheme.kind = weight_kind_from_name(j.value("scheme", to_string(c.scheme.kind)));
  c.scheme.sigma = j.value("sigma", c.scheme.sigma);
  c.scheme.eps_id_scale = j.value("eps_id_scale", c.scheme.eps_id_scale);
  c.scheme.c0 = j.value("c0", c.scheme.c0);
  c.scheme.c1 = j.value("c1", c.scheme.c1);
  c.scheme.eps_eno = j.value("eps_eno", c.scheme.eps_eno);
  c.cond_threshold = j.value("cond_threshold", c.cond_threshold);
  c.max_enlargements = j.value("max_enlargements", c.max_enlargements);
  return c;
}

// ---------------------------------------------------------------------------
// Transfer rows

double TransferRow::apply(std::span<const double> source_values) const {
  double s = 0.0;
  for (const auto& [node, coeff] : entries) s += coeff * source_values[static_cast<std::size_t>(node)];
  return s;
}

namespace {

// Factored weighted, equilibrated Vandermonde system for one stencil.
struct FactoredFit {
  Stencil stencil;
  std::vector<std::size_t> active;  // stencil positions with nonzero weight
  std::vector<double> weights;      // full stencil weights
  std::vector<double> scaling;      // column equilibration
  QrcpFactors factors;
  std::size_t keep = 0;
  FitDiagnostics diagnostics;

  TransferRow row(std::span<const double> functional) const {
    const std::vector<double> g = solution_functional(factors, scaling, functional, keep);
    TransferRow out;
    out.entries.reserve(active.size());
    for (std::size_t i = 0; i < active.size(); ++i) {
      out.entries.emplace_back(stencil.node_ids[active[i]], weights[active[i]] * g[i]);
    }
    out.diagnostics = diagnostics;
    return out;
  }
};

template <class MakeStencil>
FactoredFit factor_fit(MakeStencil&& make_stencil, double ring, const WlsConfig& config, const EnoContext* ctx) {
  const int degree = config.degree;
  const std::size_t n = num_monomials(degree);
  int enlargements = 0;
  for (;;) {
    FactoredFit fit;
    fit.stencil = make_stencil(ring);
    const Stencil& st = fit.stencil;
    fit.weights = compute_weights(config.scheme, st, degree, ctx);
    for (std::size_t j = 0; j < fit.weights.size(); ++j) {
      if (fit.weights[j] > 0.0) fit.active.push_back(j);
    }
    if (fit.active.empty()) throw Error(ErrorCode::InsufficientStencil, "all stencil weights vanish");

    DenseMatrix wa(fit.active.size(), n);
    for (std::size_t i = 0; i < fit.active.size(); ++i) {
      const std::size_t j = fit.active[i];
      const auto mono = monomials(st.uv[j], degree);
      for (std::size_t c = 0; c < n; ++c) wa(i, c) = fit.weights[j] * mono[c];
    }
    fit.scaling = equilibrate(wa);
    for (std::size_t i = 0; i < wa.rows(); ++i) {
      for (std::size_t c = 0; c < n; ++c) wa(i, c) *= fit.scaling[c];
    }
    // The constant column stays in front so condition control never drops it.
    fit.factors = qrcp(wa, 1);
    const std::size_t kmax = fit.factors.rank_bound();
    double cond = kmax == n ? cond_estimate_1norm(fit.factors.r, n) : std::numeric_limits<double>::infinity();
    if (cond > config.cond_threshold && enlargements < config.max_enlargements && !st.exhausted) {
      ring += 0.5;
      ++enlargements;
      continue;
    }
    fit.keep = kmax;
    if (fit.keep < n) cond = cond_estimate_1norm(fit.factors.r, fit.keep);
    while (fit.keep > 1 && cond > config.cond_threshold) {
      --fit.keep;
      cond = cond_estimate_1norm(fit.factors.r, fit.keep);
    }
    if (!std::isfinite(cond)) throw Error(ErrorCode::Singular, "WLS system is singular");

    fit.diagnostics.cond_estimate = cond;
    fit.diagnostics.dropped_columns = static_cast<int>(n - fit.keep);
    fit.diagnostics.enlargements = enlargements;
    fit.diagnostics.stencil_size = st.size();
    for (std::size_t i = 0; i < fit.keep; ++i) {
      fit.diagnostics.final_degree = std::max(fit.diagnostics.final_degree, monomial_degree(fit.factors.perm[i]));
    }
    return fit;
  }
}

}  // namespace

TransferRow build_transfer_row(const SurfaceMesh& source, const ElementLocation& location, const Vec3& target,
                               const WlsConfig& config, StencilPurpose purpose, const EnoContext* ctx) {
  const LocalFrame frame = frame_at_location(source, location, target);
  const auto seeds = source.element(location.element).view();
  auto make = [&](double ring) { return assemble_stencil(source, seeds, frame, config.degree, ring); };
  FactoredFit fit = factor_fit(make, initial_ring(config.degree, purpose), config, ctx);
  std::vector<double> e0(num_monomials(config.degree), 0.0);
  e0[0] = 1.0;
  TransferRow row = fit.row(e0);
  row.stencil = std::move(fit.stencil);
  return row;
}

TransferRow build_transfer_row(const SurfaceMesh& source, const PointLocator& locator, const Vec3& target,
                               const WlsConfig& config, const EnoContext* ctx) {
  const StencilPurpose purpose =
      config.scheme.kind == WeightKind::WlsEno ? StencilPurpose::Eno : StencilPurpose::Smooth;
  return build_transfer_row(source, locator.locate(target), target, config, purpose, ctx);
}

std::vector<TransferRow> build_node_fit_rows(const SurfaceMesh& mesh, NodeId node, std::span<const Vec3> points,
                                             const WlsConfig& config, double ring) {
  const LocalFrame frame = build_frame(mesh.node(node), mesh.normal(node));
  const NodeId seed[1] = {node};
  auto make = [&](double k) { return assemble_stencil(mesh, seed, frame, config.degree, k); };
  const FactoredFit fit = factor_fit(make, ring, config, nullptr);
  std::vector<TransferRow> rows;
  rows.reserve(points.size());
  for (const Vec3& p : points) rows.push_back(fit.row(monomials(frame.project(p), config.degree)));
  return rows;
}

TransferRow build_node_fit_row(const SurfaceMesh& mesh, NodeId node, const Vec3& point, const WlsConfig& config,
                               double ring) {
  const Vec3 pts[1] = {point};
  return std::move(build_node_fit_rows(mesh, node, pts, config, ring).front());
}

}  // namespace wlsr
