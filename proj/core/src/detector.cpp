#include "wlsremap/detector.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "wlsremap/wls.hpp"

namespace wlsr {

std::size_t MarkerSet::source_count() const {
  return static_cast<std::size_t>(std::count(source.begin(), source.end(), std::uint8_t{1}));
}

std::size_t MarkerSet::target_count() const {
  return static_cast<std::size_t>(std::count(target.begin(), target.end(), std::uint8_t{1}));
}

SparseOperator build_alpha_operator(const SurfaceMesh& mesh, double ring) {
  WlsConfig fit;
  fit.degree = 2;
  fit.scheme.kind = WeightKind::InverseDistance;

  const auto n_nodes = static_cast<std::ptrdiff_t>(mesh.num_nodes());
  // rows_per_node[v][i] is the fit of node v evaluated at the center of its i-th incident element.
  std::vector<std::vector<TransferRow>> rows_per_node(mesh.num_nodes());
#pragma omp parallel for schedule(dynamic, 64)
  for (std::ptrdiff_t v = 0; v < n_nodes; ++v) {
    const auto inc = mesh.incident_elements(static_cast<NodeId>(v));
    std::vector<Vec3> centers;
    centers.reserve(inc.size());
    for (ElemId e : inc) centers.push_back(mesh.element_center(e));
    rows_per_node[static_cast<std::size_t>(v)] =
        build_node_fit_rows(mesh, static_cast<NodeId>(v), centers, fit, ring);
  }

  std::vector<std::vector<SparseOperator::Entry>> rows(mesh.num_elements());
  for (std::size_t v = 0; v < mesh.num_nodes(); ++v) {
    const auto inc = mesh.incident_elements(static_cast<NodeId>(v));
    for (std::size_t i = 0; i < inc.size(); ++i) {
      const ElemId e = inc[i];
      const double inv = 1.0 / mesh.element(e).arity;
      auto& row = rows[static_cast<std::size_t>(e)];
      for (const auto& [col, w] : rows_per_node[v][i].entries) row.emplace_back(col, inv * w);
      row.emplace_back(static_cast<std::int32_t>(v), -inv);
    }
  }
  return SparseOperator::from_rows(mesh.num_nodes(), std::move(rows));
}

std::vector<double> compute_beta(const SurfaceMesh& mesh, std::span<const double> alpha, double delta_f_global,
                                 double h_global, double eps_beta) {
  const double safeguard = eps_beta * delta_f_global * h_global * h_global + std::numeric_limits<double>::min();
  std::vector<double> beta(mesh.num_nodes(), 0.0);
  const auto n = static_cast<std::ptrdiff_t>(mesh.num_nodes());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t v = 0; v < n; ++v) {
    const auto inc = mesh.incident_elements(static_cast<NodeId>(v));
    if (inc.empty()) continue;
    double sum = 0.0;
    for (ElemId e : inc) sum += alpha[static_cast<std::size_t>(e)];
    const double mean = sum / static_cast<double>(inc.size());
    double dev = 0.0;
    for (ElemId e : inc) dev += std::abs(alpha[static_cast<std::size_t>(e)] - mean);
    beta[static_cast<std::size_t>(v)] = dev / (std::abs(sum) + safeguard);
  }
  return beta;
}

std::vector<double> local_ranges(const SurfaceMesh& mesh, std::span<const double> values, double ring) {
  std::vector<double> out(mesh.num_nodes(), 0.0);
  const auto n = static_cast<std::ptrdiff_t>(mesh.num_nodes());
#pragma omp parallel for schedule(dynamic, 256)
  for (std::ptrdiff_t v = 0; v < n; ++v) {
    const NodeId seed[1] = {static_cast<NodeId>(v)};
    const RingResult rr = grow_ring(mesh, seed, ring);
    double lo = values[static_cast<std::size_t>(v)];
    double hi = lo;
    for (NodeId u : rr.nodes) {
      lo = std::min(lo, values[static_cast<std::size_t>(u)]);
      hi = std::max(hi, values[static_cast<std::size_t>(u)]);
    }
    out[static_cast<std::size_t>(v)] = hi - lo;
  }
  return out;
}

std::vector<double> local_edge_lengths(const SurfaceMesh& mesh) {
  std::vector<double> out(mesh.num_nodes(), 0.0);
  const auto n = static_cast<std::ptrdiff_t>(mesh.num_nodes());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t v = 0; v < n; ++v) {
    const LocalFrame frame = build_frame(mesh.node(static_cast<NodeId>(v)), mesh.normal(static_cast<NodeId>(v)));
    std::vector<std::pair<NodeId, NodeId>> edges;
    for (ElemId e : mesh.incident_elements(static_cast<NodeId>(v))) {
      const Element& el = mesh.element(e);
      for (std::size_t i = 0; i < el.arity; ++i) {
        const NodeId a = el[i];
        const NodeId b = el[(i + 1) % el.arity];
        edges.emplace_back(std::min(a, b), std::max(a, b));
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
    if (!edges.empty()) out[static_cast<std::size_t>(v)] = total / static_cast<double>(edges.size());
  }
  return out;
}

std::vector<std::uint8_t> dual_threshold(const SurfaceMesh& mesh, const IndicatorField& ind,
                                         std::span<const double> h_local, double h_global,
                                         const DetectorConfig& config, std::vector<double>* tau_out) {
  std::vector<std::uint8_t> marked(mesh.num_nodes(), 0);
  if (tau_out) tau_out->assign(mesh.num_nodes(), 0.0);
  const double tau_g = config.c_global * ind.delta_f_global * std::pow(h_global, 1.5);
  if (!(ind.delta_f_global > 0.0)) return marked;
  for (std::size_t v = 0; v < mesh.num_nodes(); ++v) {
    const double tau = std::max(config.c_local * ind.delta_f_local[v] * std::sqrt(h_local[v]), tau_g);
    if (tau_out) (*tau_out)[v] = tau;
    if (!(ind.beta[v] > config.kappa)) continue;
    for (ElemId e : mesh.incident_elements(static_cast<NodeId>(v))) {
      const double a = ind.alpha[static_cast<std::size_t>(e)];
      if ((config.absolute_alpha ? std::abs(a) : a) > tau) {
        marked[v] = 1;
        break;
      }
    }
  }
  return marked;
}

std::vector<std::uint8_t> transfer_markers(std::span<const std::uint8_t> source_markers,
                                           const SparseOperator& stencils) {
  std::vector<std::uint8_t> out(stencils.rows(), 0);
  for (std::size_t t = 0; t < stencils.rows(); ++t) {
    for (std::int32_t s : stencils.row_indices(t)) {
      if (source_markers[static_cast<std::size_t>(s)]) {
        out[t] = 1;
        break;
      }
    }
  }
  return out;
}

Detector::Detector(const SurfaceMesh& mesh, DetectorConfig config)
    : mesh_(&mesh),
      config_(config),
      alpha_op_(build_alpha_operator(mesh, config.ring)),
      h_local_(local_edge_lengths(mesh)),
      h_global_(mesh_metrics(mesh).h_g) {
  ring_offsets_.reserve(mesh.num_nodes() + 1);
  ring_offsets_.push_back(0);
  for (std::size_t v = 0; v < mesh.num_nodes(); ++v) {
    const NodeId seed[1] = {static_cast<NodeId>(v)};
    const RingResult rr = grow_ring(mesh, seed, config_.ring);
    ring_nodes_.push_back(static_cast<NodeId>(v));
    ring_nodes_.insert(ring_nodes_.end(), rr.nodes.begin(), rr.nodes.end());
    ring_offsets_.push_back(static_cast<std::int64_t>(ring_nodes_.size()));
  }
}

IndicatorField Detector::indicators(std::span<const double> values) const {
  IndicatorField ind;
  ind.alpha = spmv(alpha_op_, values);
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  ind.delta_f_global = values.empty() ? 0.0 : *hi - *lo;
  // A constant field has no discontinuities; drop the rounding noise of the fits.
  if (!(ind.delta_f_global > 0.0)) std::fill(ind.alpha.begin(), ind.alpha.end(), 0.0);
  ind.beta = compute_beta(*mesh_, ind.alpha, ind.delta_f_global, h_global_, config_.eps_beta);
  ind.delta_f_local.assign(mesh_->num_nodes(), 0.0);
  for (std::size_t v = 0; v < mesh_->num_nodes(); ++v) {
    double lo = values[v];
    double hi = lo;
    for (auto k = ring_offsets_[v]; k < ring_offsets_[v + 1]; ++k) {
      const double x = values[static_cast<std::size_t>(ring_nodes_[static_cast<std::size_t>(k)])];
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
    ind.delta_f_local[v] = hi - lo;
  }
  ind.max_abs_alpha.assign(mesh_->num_nodes(), 0.0);
  for (std::size_t v = 0; v < mesh_->num_nodes(); ++v) {
    for (ElemId e : mesh_->incident_elements(static_cast<NodeId>(v))) {
      ind.max_abs_alpha[v] = std::max(ind.max_abs_alpha[v], std::abs(ind.alpha[static_cast<std::size_t>(e)]));
    }
  }
  return ind;
}

std::vector<std::uint8_t> Detector::mark(const IndicatorField& ind, std::vector<double>* tau_out) const {
  return dual_threshold(*mesh_, ind, h_local_, h_global_, config_, tau_out);
}

void write_element_indicators_csv(std::ostream& out, const IndicatorField& ind) {
  out << "element,alpha\n";
  out.precision(17);
  for (std::size_t e = 0; e < ind.alpha.size(); ++e) out << e << ',' << ind.alpha[e] << '\n';
}

void write_node_indicators_csv(std::ostream& out, const IndicatorField& ind, const MarkerSet& markers) {
  out << "node,beta,delta_f_local,tau,marked\n";
  out.precision(17);
  for (std::size_t v = 0; v < ind.beta.size(); ++v) {
    out << v << ',' << ind.beta[v] << ',' << ind.delta_f_local[v] << ','
        << (v < markers.tau.size() ? markers.tau[v] : 0.0) << ','
        << (v < markers.source.size() ? int(markers.source[v]) : 0) << '\n';
  }
}

}  // namespace wlsr
