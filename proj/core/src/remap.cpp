#include "wlsremap/remap.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <exception>
#include <istream>
#include <limits>
#include <ostream>

#include "wlsremap/error.hpp"

namespace wlsr {

RemapMethod remap_method_from_name(const std::string& name) {
  if (name == "wls-enor") return RemapMethod::WlsEnor;
  if (name == "wls") return RemapMethod::Wls;
  if (name == "linear") return RemapMethod::Linear;
  throw Error(ErrorCode::InvalidArgument, "unknown remap method '" + name + "'");
}

std::string to_string(RemapMethod method) {
  switch (method) {
    case RemapMethod::WlsEnor: return "wls-enor";
    case RemapMethod::Wls: return "wls";
    case RemapMethod::Linear: return "linear";
  }
  return "unknown";
}

WlsConfig RemapConfig::smooth_config() const {
  WlsConfig c;
  c.degree = degree;
  c.scheme.kind = smooth_weights;
  c.scheme.sigma = sigma;
  c.cond_threshold = cond_threshold;
  c.max_enlargements = max_enlargements;
  return c;
}

WlsConfig RemapConfig::eno_config() const {
  WlsConfig c;
  c.degree = eno_degree;
  c.scheme.kind = WeightKind::WlsEno;
  c.cond_threshold = cond_threshold;
  c.max_enlargements = max_enlargements;
  return c;
}

namespace {

// Drops the "<code>: " prefix an Error adds to its message.
std::string bare_message(const Error& e) {
  const std::string w = e.what();
  const auto pos = w.find(": ");
  return pos == std::string::npos ? w : w.substr(pos + 2);
}

// Runs body(i) for i in [0, n), collecting the first exception.
template <class Body>
void parallel_for(std::size_t n, Body&& body) {
  std::exception_ptr failure;
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 64)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(wlsr_parallel_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

void check_values(std::span<const double> values, std::size_t expected) {
  if (values.size() != expected) {
    throw Error(ErrorCode::DimensionMismatch, "field has " + std::to_string(values.size()) + " values, mesh has " +
                                                  std::to_string(expected) + " nodes");
  }
  for (double x : values) {
    if (!std::isfinite(x)) throw Error(ErrorCode::NonFinite, "source field contains non-finite values");
  }
}

void validate(const RemapConfig& c) {
  if (c.method != RemapMethod::Linear && (c.degree < 1 || c.degree > 8)) {
    throw Error(ErrorCode::InvalidArgument, "degree must be in [1, 8]");
  }
  if (c.method == RemapMethod::WlsEnor && (c.eno_degree < 1 || c.eno_degree > 3)) {
    throw Error(ErrorCode::InvalidArgument, "ENO degree must be in [1, 3]");
  }
}

std::vector<SparseOperator::Entry> linear_entries(const SurfaceMesh& mesh, const ElementLocation& loc) {
  const Element& el = mesh.element(loc.element);
  const auto w = loc.shape_weights();
  std::vector<SparseOperator::Entry> row;
  for (std::size_t i = 0; i < el.arity; ++i) row.emplace_back(el[i], w[i]);
  return row;
}

}  // namespace

RemapPlan::RemapPlan(const SurfaceMesh& source, const SurfaceMesh& target, RemapConfig config)
    : source_(&source), target_(&target), config_(config) {
  validate(config_);
  const std::size_t nt = target.num_nodes();
  const PointLocator locator(source);
  locations_.resize(nt);
  parallel_for(nt, [&](std::size_t t) { locations_[t] = locator.locate(target.node(static_cast<NodeId>(t))); });

  std::vector<std::vector<SparseOperator::Entry>> lin_rows(nt);
  for (std::size_t t = 0; t < nt; ++t) lin_rows[t] = linear_entries(source, locations_[t]);

  std::vector<std::vector<SparseOperator::Entry>> members(nt);
  if (config_.method == RemapMethod::Linear) {
    members = lin_rows;
    for (auto& row : members) {
      for (auto& e : row) e.second = 1.0;
    }
  } else {
    const WlsConfig wc = config_.smooth_config();
    std::vector<std::vector<SparseOperator::Entry>> rows(nt);
    std::vector<FitDiagnostics> diags(nt);
    parallel_for(nt, [&](std::size_t t) {
      try {
        TransferRow row = build_transfer_row(source, locations_[t], target.node(static_cast<NodeId>(t)), wc);
        rows[t] = std::move(row.entries);
        diags[t] = row.diagnostics;
        members[t].reserve(row.stencil.size());
        for (NodeId v : row.stencil.node_ids) members[t].emplace_back(v, 1.0);
      } catch (const Error& e) {
        throw Error(e.code(), "target node " + std::to_string(t) + ": " + bare_message(e));
      }
    });
    smooth_ = SparseOperator::from_rows(source.num_nodes(), std::move(rows));
    diagnostics_.min_final_degree = config_.degree;
    for (const auto& d : diags) {
      if (d.dropped_columns > 0) ++diagnostics_.rows_with_dropped_columns;
      if (d.enlargements > 0) ++diagnostics_.enlarged_rows;
      diagnostics_.min_final_degree = std::min(diagnostics_.min_final_degree, d.final_degree);
      diagnostics_.max_cond_estimate = std::max(diagnostics_.max_cond_estimate, d.cond_estimate);
    }
  }
  linear_ = SparseOperator::from_rows(source.num_nodes(), std::move(lin_rows));
  stencils_ = SparseOperator::from_rows(source.num_nodes(), std::move(members));
  init_detector();
}

void RemapPlan::init_detector() {
  if (config_.method == RemapMethod::WlsEnor) detector_ = std::make_shared<const Detector>(*source_, config_.detector);
}

RemapResult RemapPlan::apply(std::span<const double> f) const {
  check_values(f, source_->num_nodes());
  RemapResult res;
  const std::size_t nt = target_->num_nodes();
  res.limited.assign(nt, 0);
  if (config_.method == RemapMethod::Linear) {
    res.values = spmv(linear_, f);
    res.markers.target.assign(nt, 0);
    res.markers.source.assign(source_->num_nodes(), 0);
    return res;
  }
  res.values = spmv(smooth_, f);
  if (config_.method == RemapMethod::Wls) {
    res.markers.target.assign(nt, 0);
    res.markers.source.assign(source_->num_nodes(), 0);
    return res;
  }

  const IndicatorField ind = detector_->indicators(f);
  res.markers.source = detector_->mark(ind, &res.markers.tau);
  res.markers.kappa = config_.detector.kappa;
  res.markers.c_local = config_.detector.c_local;
  res.markers.c_global = config_.detector.c_global;
  res.markers.target = transfer_markers(res.markers.source, stencils_);

  std::vector<std::size_t> marked;
  for (std::size_t t = 0; t < nt; ++t) {
    if (res.markers.target[t]) marked.push_back(t);
  }
  res.eno_rows = marked.size();
  const WlsConfig ec = config_.eno_config();
  parallel_for(marked.size(), [&](std::size_t k) {
    const std::size_t t = marked[k];
    EnoContext ctx;
    ctx.source_values = f;
    ctx.max_incident_alpha = ind.max_abs_alpha;
    ctx.g0 = row_dot(linear_, t, f);
    ctx.delta_f_global = ind.delta_f_global;
    double value;
    try {
      value = build_transfer_row(*source_, locations_[t], target_->node(static_cast<NodeId>(t)), ec,
                                 StencilPurpose::Eno, &ctx)
                  .apply(f);
    } catch (const Error& e) {
      throw Error(e.code(), "target node " + std::to_string(t) + ": " + bare_message(e));
    }
    if (config_.limiter) {
      double lo = std::numeric_limits<double>::infinity();
      double hi = -lo;
      for (NodeId v : source_->element(locations_[t].element).view()) {
        lo = std::min(lo, f[static_cast<std::size_t>(v)]);
        hi = std::max(hi, f[static_cast<std::size_t>(v)]);
      }
      const double clamped = std::clamp(value, lo, hi);
      if (clamped != value) res.limited[t] = 1;
      value = clamped;
    }
    res.values[t] = value;
  });
  res.limiter_activations = static_cast<std::size_t>(std::count(res.limited.begin(), res.limited.end(), 1));
  return res;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

constexpr char kPlanMagic[8] = {'W', 'L', 'S', 'R', 'P', 'L', 'A', 'N'};
constexpr std::uint32_t kPlanVersion = 1;

std::uint64_t fingerprint(const SurfaceMesh& mesh) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 1099511628211ull;
    }
  };
  for (const Vec3& x : mesh.nodes()) mix(&x, sizeof(double) * 3);
  for (const Element& e : mesh.elements()) mix(e.nodes.data(), sizeof(NodeId) * e.arity);
  return h;
}

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}
  template <class T>
  void pod(const T& x) {
    out_.write(reinterpret_cast<const char*>(&x), sizeof(T));
  }
  template <class T>
  void array(std::span<const T> xs) {
    pod(static_cast<std::uint64_t>(xs.size()));
    out_.write(reinterpret_cast<const char*>(xs.data()), static_cast<std::streamsize>(xs.size_bytes()));
  }
  void op(const SparseOperator& a) {
    pod(static_cast<std::uint64_t>(a.rows()));
    pod(static_cast<std::uint64_t>(a.cols()));
    array(a.offsets());
    array(a.indices());
    array(a.values());
  }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}
  template <class T>
  T pod() {
    T x{};
    in_.read(reinterpret_cast<char*>(&x), sizeof(T));
    if (!in_) throw Error(ErrorCode::Io, "truncated plan file");
    return x;
  }
  template <class T>
  std::vector<T> array() {
    const auto n = pod<std::uint64_t>();
    if (n > (std::uint64_t{1} << 36)) throw Error(ErrorCode::Io, "corrupt plan file");
    std::vector<T> xs(static_cast<std::size_t>(n));
    in_.read(reinterpret_cast<char*>(xs.data()), static_cast<std::streamsize>(n * sizeof(T)));
    if (!in_) throw Error(ErrorCode::Io, "truncated plan file");
    return xs;
  }
  SparseOperator op() {
    const auto rows = pod<std::uint64_t>();
    const auto cols = pod<std::uint64_t>();
    auto offsets = array<std::int64_t>();
    auto indices = array<std::int32_t>();
    auto values = array<double>();
    return SparseOperator(rows, cols, std::move(offsets), std::move(indices), std::move(values));
  }

 private:
  std::istream& in_;
};

}  // namespace

void RemapPlan::save(std::ostream& out) const {
  Writer w(out);
  out.write(kPlanMagic, sizeof kPlanMagic);
  w.pod(kPlanVersion);
  w.pod(static_cast<std::uint64_t>(source_->num_nodes()));
  w.pod(static_cast<std::uint64_t>(target_->num_nodes()));
  w.pod(fingerprint(*source_));
  w.pod(fingerprint(*target_));
  w.pod(static_cast<std::int32_t>(config_.method));
  w.pod(static_cast<std::int32_t>(config_.degree));
  w.pod(static_cast<std::int32_t>(config_.eno_degree));
  w.pod(config_.sigma);
  w.pod(static_cast<std::int32_t>(config_.smooth_weights));
  w.pod(config_.cond_threshold);
  w.pod(static_cast<std::int32_t>(config_.max_enlargements));
  w.pod(static_cast<std::uint8_t>(config_.limiter));
  w.pod(config_.detector);
  w.op(smooth_);
  w.op(linear_);
  w.op(stencils_);
  std::vector<ElemId> elems;
  std::vector<double> nat;
  for (const auto& loc : locations_) {
    elems.push_back(loc.element);
    nat.insert(nat.end(), loc.natural.begin(), loc.natural.end());
  }
  w.array(std::span<const ElemId>(elems));
  w.array(std::span<const double>(nat));
  w.pod(diagnostics_);
  if (!out) throw Error(ErrorCode::Io, "failed to write plan");
}

RemapPlan RemapPlan::load(std::istream& in, const SurfaceMesh& source, const SurfaceMesh& target) {
  char magic[sizeof kPlanMagic];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kPlanMagic, sizeof magic) != 0) throw Error(ErrorCode::Io, "not a plan file");
  Reader r(in);
  if (r.pod<std::uint32_t>() != kPlanVersion) throw Error(ErrorCode::Io, "unsupported plan version");
  if (r.pod<std::uint64_t>() != source.num_nodes() || r.pod<std::uint64_t>() != target.num_nodes()) {
    throw Error(ErrorCode::DimensionMismatch, "plan was built for meshes of different size");
  }
  if (r.pod<std::uint64_t>() != fingerprint(source) || r.pod<std::uint64_t>() != fingerprint(target)) {
    throw Error(ErrorCode::InvalidArgument, "plan was built for different meshes");
  }
  RemapPlan plan;
  plan.source_ = &source;
  plan.target_ = &target;
  plan.config_.method = static_cast<RemapMethod>(r.pod<std::int32_t>());
  plan.config_.degree = r.pod<std::int32_t>();
  plan.config_.eno_degree = r.pod<std::int32_t>();
  plan.config_.sigma = r.pod<double>();
  plan.config_.smooth_weights = static_cast<WeightKind>(r.pod<std::int32_t>());
  plan.config_.cond_threshold = r.pod<double>();
  plan.config_.max_enlargements = r.pod<std::int32_t>();
  plan.config_.limiter = r.pod<std::uint8_t>() != 0;
  plan.config_.detector = r.pod<DetectorConfig>();
  validate(plan.config_);
  plan.smooth_ = r.op();
  plan.linear_ = r.op();
  plan.stencils_ = r.op();
  const auto elems = r.array<ElemId>();
  const auto nat = r.array<double>();
  if (elems.size() != target.num_nodes() || nat.size() != 3 * elems.size()) {
    throw Error(ErrorCode::Io, "corrupt plan file");
  }
  plan.locations_.resize(elems.size());
  for (std::size_t t = 0; t < elems.size(); ++t) {
    if (elems[t] < 0 || static_cast<std::size_t>(elems[t]) >= source.num_elements()) {
      throw Error(ErrorCode::Io, "corrupt plan file");
    }
    auto& loc = plan.locations_[t];
    loc.element = elems[t];
    loc.arity = source.element(elems[t]).arity;
    std::copy_n(nat.begin() + static_cast<std::ptrdiff_t>(3 * t), 3, loc.natural.begin());
  }
  plan.diagnostics_ = r.pod<PlanDiagnostics>();
  plan.init_detector();
  return plan;
}

// ---------------------------------------------------------------------------
// Interpolation, integration, repeated transfer

std::vector<double> linear_interp_remap(const SurfaceMesh& source, const SurfaceMesh& target,
                                        std::span<const double> values) {
  check_values(values, source.num_nodes());
  const PointLocator locator(source);
  std::vector<double> out(target.num_nodes());
  parallel_for(target.num_nodes(), [&](std::size_t t) {
    const ElementLocation loc = locator.locate(target.node(static_cast<NodeId>(t)));
    double acc = 0.0;
    for (const auto& [v, w] : linear_entries(source, loc)) acc += w * values[static_cast<std::size_t>(v)];
    out[t] = acc;
  });
  return out;
}

namespace {

struct QuadPoint {
  Vec3 x;         // on the sphere
  double weight;  // spherical-area weight
  ElementLocation loc;
};

// Symmetric 6-point rule, exact for degree 4 on a triangle (weights sum to 1).
constexpr std::array<std::array<double, 4>, 6> kRule = {{
    {0.445948490915965, 0.445948490915965, 0.108103018168070, 0.223381589678011},
    {0.445948490915965, 0.108103018168070, 0.445948490915965, 0.223381589678011},
    {0.108103018168070, 0.445948490915965, 0.445948490915965, 0.223381589678011},
    {0.091576213509771, 0.091576213509771, 0.816847572980459, 0.109951743655322},
    {0.091576213509771, 0.816847572980459, 0.091576213509771, 0.109951743655322},
    {0.816847572980459, 0.091576213509771, 0.091576213509771, 0.109951743655322},
}};

double arc(const Vec3& a, const Vec3& b) { return std::atan2(norm(cross(a, b)), dot(a, b)); }

// Spherical excess by L'Huilier's formula.
double spherical_triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) {
  const double la = arc(b, c), lb = arc(c, a), lc = arc(a, b);
  const double s = 0.5 * (la + lb + lc);
  const double t = std::tan(0.5 * s) * std::tan(0.5 * (s - la)) * std::tan(0.5 * (s - lb)) * std::tan(0.5 * (s - lc));
  return 4.0 * std::atan(std::sqrt(std::max(t, 0.0)));
}

void check_sphere(const SurfaceMesh& mesh) {
  if (!mesh.is_closed()) throw Error(ErrorCode::OpenMesh, "integration needs a closed mesh");
  if (!mesh.is_sphere()) throw Error(ErrorCode::NotOnSphere, "integration needs a unit-sphere mesh");
}

// Quadrature points of element e: one or two sub-triangles with the flat
// rule mapped radially, rescaled to the exact spherical area.
std::vector<QuadPoint> element_quadrature(const SurfaceMesh& mesh, ElemId e) {
  const Element& el = mesh.element(e);
  std::vector<std::array<NodeId, 3>> tris;
  if (el.arity == 3) {
    tris.push_back({el[0], el[1], el[2]});
  } else {
    tris.push_back({el[0], el[1], el[2]});
    tris.push_back({el[0], el[2], el[3]});
  }
  std::vector<QuadPoint> pts;
  for (const auto& tri : tris) {
    const Vec3 &a = mesh.node(tri[0]), &b = mesh.node(tri[1]), &c = mesh.node(tri[2]);
    const Vec3 n = cross(b - a, c - a);
    const double flat = 0.5 * norm(n);
    const double d = std::abs(dot(n / norm(n), a));
    const double exact = spherical_triangle_area(a, b, c);
    const std::size_t first = pts.size();
    double raw = 0.0;
    for (const auto& q : kRule) {
      const Vec3 x = q[0] * a + q[1] * b + q[2] * c;
      const double len = norm(x);
      QuadPoint p;
      p.x = x / len;
      p.weight = q[3] * flat * d / (len * len * len);
      raw += p.weight;
      if (el.arity == 3) {
        p.loc.element = e;
        p.loc.arity = 3;
        p.loc.natural = {q[0], q[1], q[2]};
      } else {
        auto loc = natural_coordinates(mesh, e, p.x, 1e-9);
        if (!loc) throw Error(ErrorCode::NotFound, "quadrature point outside its quad");
        p.loc = *loc;
      }
      pts.push_back(p);
    }
    for (std::size_t i = first; i < pts.size(); ++i) pts[i].weight *= exact / raw;
  }
  return pts;
}

}  // namespace

int integration_degree(int transfer_degree) { return transfer_degree == 4 || transfer_degree == 6 ? transfer_degree : 2; }

std::vector<double> integration_weights(const SurfaceMesh& mesh, int degree) {
  check_sphere(mesh);
  std::vector<std::vector<QuadPoint>> quad(mesh.num_elements());
  parallel_for(mesh.num_elements(), [&](std::size_t e) { quad[e] = element_quadrature(mesh, static_cast<ElemId>(e)); });

  WlsConfig fit;
  fit.degree = degree;
  const double ring = initial_ring(degree, StencilPurpose::Smooth);
  std::vector<double> weights(mesh.num_nodes(), 0.0);
  parallel_for(mesh.num_nodes(), [&](std::size_t v) {
    const auto node = static_cast<NodeId>(v);
    std::vector<Vec3> pts;
    std::vector<double> scale;  // quadrature weight times the node's shape weight
    for (ElemId e : mesh.incident_elements(node)) {
      const Element& el = mesh.element(e);
      const std::size_t local = static_cast<std::size_t>(std::find(el.view().begin(), el.view().end(), node) -
                                                         el.view().begin());
      for (const QuadPoint& q : quad[static_cast<std::size_t>(e)]) {
        pts.push_back(q.x);
        scale.push_back(q.weight * q.loc.shape_weights()[local]);
      }
    }
    const auto rows = build_node_fit_rows(mesh, node, pts, fit, ring);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (const auto& [col, w] : rows[i].entries) {
#pragma omp atomic
        weights[static_cast<std::size_t>(col)] += scale[i] * w;
      }
    }
  });
  return weights;
}

double integrate_sphere(const SurfaceMesh& mesh, const AnalyticField& field) {
  check_sphere(mesh);
  double total = 0.0;
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    for (const QuadPoint& q : element_quadrature(mesh, static_cast<ElemId>(e))) total += q.weight * field(q.x);
  }
  return total;
}

double integrate_sphere(std::span<const double> weights, std::span<const double> values) {
  if (weights.size() != values.size()) throw Error(ErrorCode::DimensionMismatch, "weights and values differ in size");
  double total = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) total += weights[i] * values[i];
  return total;
}

double conservation_error(const SurfaceMesh& mesh, std::span<const double> weights, std::span<const double> values,
                          const AnalyticField& exact) {
  return std::abs(integrate_sphere(mesh, exact) - integrate_sphere(weights, values));
}

RepeatResult repeated_transfer(const RemapPlan& ab, const RemapPlan& ba, std::span<const double> f0, int n_steps,
                               const RepeatOptions& options) {
  if (n_steps < 1) throw Error(ErrorCode::InvalidArgument, "step count must be positive");
  if (&ab.source() != &ba.target() || &ab.target() != &ba.source()) {
    throw Error(ErrorCode::InvalidArgument, "plans do not form a round trip");
  }
  const SurfaceMesh& a = ab.source();
  std::vector<double> exact;
  double exact_integral = 0.0;
  if (options.exact) {
    exact = options.exact->sample(a);
    if (!options.weights.empty()) exact_integral = integrate_sphere(a, *options.exact);
  }
  RepeatResult out;
  out.final_values.assign(f0.begin(), f0.end());
  out.records.reserve(static_cast<std::size_t>(n_steps));
  for (int step = 1; step <= n_steps; ++step) {
    try {
      const RemapResult on_b = ab.apply(out.final_values);
      out.final_values = ba.apply(on_b.values).values;
    } catch (const Error& e) {
      throw Error(e.code(), "round trip " + std::to_string(step) + ": " + bare_message(e));
    }
    RoundTripRecord rec;
    rec.step = step;
    const auto [lo, hi] = std::minmax_element(out.final_values.begin(), out.final_values.end());
    rec.min = *lo;
    rec.max = *hi;
    if (options.exact) rec.error = error_norms(out.final_values, exact);
    if (!options.weights.empty()) {
      rec.integral = integrate_sphere(options.weights, out.final_values);
      if (options.exact) rec.conservation_error = std::abs(exact_integral - rec.integral);
    }
    out.records.push_back(rec);
    if (options.on_step) options.on_step(step, out.final_values);
  }
  return out;
}

}  // namespace wlsr
