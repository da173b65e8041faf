#include "wlsremap/locate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "wlsremap/error.hpp"

namespace wlsr {

namespace {

constexpr int kMaxNewton = 20;

// Signed distance-like measure of `q` relative to the directed edge a->b:
// positive on the element's (left) side. Sphere edges are great circles.
double edge_side(const SurfaceMesh& mesh, const Vec3& a, const Vec3& b, const Vec3& q) {
  if (mesh.kind() == SurfaceKind::Plane) {
    const double ex = b.x - a.x, ey = b.y - a.y;
    const double len = std::hypot(ex, ey);
    return (ex * (q.y - a.y) - ey * (q.x - a.x)) / len;
  }
  const Vec3 n = cross(a, b);
  return dot(n, q) / norm(n);
}

std::array<double, 3> triangle_barycentric(const SurfaceMesh& mesh, const Vec3& a, const Vec3& b,
                                           const Vec3& c, const Vec3& q) {
  if (mesh.kind() == SurfaceKind::Plane) {
    const double det = (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y);
    const double l1 = ((q.x - a.x) * (c.y - a.y) - (c.x - a.x) * (q.y - a.y)) / det;
    const double l2 = ((b.x - a.x) * (q.y - a.y) - (q.x - a.x) * (b.y - a.y)) / det;
    return {1.0 - l1 - l2, l1, l2};
  }
  // Ray from the origin through q meets the plane of (a, b, c) at
  // (mu0 a + mu1 b + mu2 c) / (mu0 + mu1 + mu2).
  const double m0 = triple(q, b, c);
  const double m1 = triple(a, q, c);
  const double m2 = triple(a, b, q);
  const double s = m0 + m1 + m2;
  return {m0 / s, m1 / s, m2 / s};
}

Vec3 bilinear(const std::array<Vec3, 4>& c, double xi, double eta) {
  return (1 - xi) * (1 - eta) * c[0] + xi * (1 - eta) * c[1] + xi * eta * c[2] + (1 - xi) * eta * c[3];
}

// Inverse bilinear map by Newton iteration. For spheres the unknowns are
// (xi, eta, t) with X(xi, eta) = t q; for planes (xi, eta) with X = q in xy.
std::array<double, 2> quad_reference(const SurfaceMesh& mesh, const std::array<Vec3, 4>& c, const Vec3& q) {
  double xi = 0.5, eta = 0.5;
  const bool plane = mesh.kind() == SurfaceKind::Plane;
  double t = plane ? 0.0 : dot(bilinear(c, xi, eta), q) / dot(q, q);
  for (int it = 0; it < kMaxNewton; ++it) {
    const Vec3 x = bilinear(c, xi, eta);
    const Vec3 dxi = (1 - eta) * (c[1] - c[0]) + eta * (c[2] - c[3]);
    const Vec3 deta = (1 - xi) * (c[3] - c[0]) + xi * (c[2] - c[1]);
    double step_xi = 0.0, step_eta = 0.0;
    if (plane) {
      const double rx = x.x - q.x, ry = x.y - q.y;
      const double det = dxi.x * deta.y - deta.x * dxi.y;
      step_xi = (rx * deta.y - deta.x * ry) / det;
      step_eta = (dxi.x * ry - rx * dxi.y) / det;
    } else {
      const Vec3 r = x - t * q;
      const Vec3 col2 = -q;
      const double det = triple(dxi, deta, col2);
      step_xi = triple(r, deta, col2) / det;
      step_eta = triple(dxi, r, col2) / det;
      const double step_t = triple(dxi, deta, r) / det;
      t -= step_t;
    }
    xi -= step_xi;
    eta -= step_eta;
    if (std::abs(step_xi) + std::abs(step_eta) < 1e-15) break;
  }
  return {xi, eta};
}

}  // namespace

std::array<double, 4> ElementLocation::shape_weights() const {
  if (arity == 3) return {natural[0], natural[1], natural[2], 0.0};
  const double xi = natural[0], eta = natural[1];
  return {(1 - xi) * (1 - eta), xi * (1 - eta), xi * eta, (1 - xi) * eta};
}

std::optional<ElementLocation> natural_coordinates(const SurfaceMesh& mesh, ElemId e, const Vec3& point,
                                                   double tol) {
  const Element& el = mesh.element(e);
  for (std::size_t i = 0; i < el.arity; ++i) {
    const Vec3& a = mesh.node(el[i]);
    const Vec3& b = mesh.node(el[(i + 1) % el.arity]);
    if (edge_side(mesh, a, b, point) < -tol) return std::nullopt;
  }
  ElementLocation loc;
  loc.element = e;
  loc.arity = el.arity;
  if (el.arity == 3) {
    auto l = triangle_barycentric(mesh, mesh.node(el[0]), mesh.node(el[1]), mesh.node(el[2]), point);
    // Guard against round-off just outside [0, 1].
    double sum = 0.0;
    for (double& x : l) {
      x = std::clamp(x, 0.0, 1.0);
      sum += x;
    }
    for (double& x : l) x /= sum;
    loc.natural = l;
  } else {
    const std::array<Vec3, 4> corners = {mesh.node(el[0]), mesh.node(el[1]), mesh.node(el[2]), mesh.node(el[3])};
    const auto ref = quad_reference(mesh, corners, point);
    loc.natural = {std::clamp(ref[0], 0.0, 1.0), std::clamp(ref[1], 0.0, 1.0), 0.0};
  }
  return loc;
}

Vec3 interpolate_position(const SurfaceMesh& mesh, const ElementLocation& loc) {
  const Element& el = mesh.element(loc.element);
  const auto w = loc.shape_weights();
  Vec3 p;
  for (std::size_t i = 0; i < el.arity; ++i) p += w[i] * mesh.node(el[i]);
  return p;
}

PointLocator::PointLocator(const SurfaceMesh& mesh) : mesh_(&mesh) {
  const std::size_t ne = mesh.num_elements();
  centroids_.resize(ne);
  for (std::size_t e = 0; e < ne; ++e) centroids_[e] = mesh.element_center(static_cast<ElemId>(e));

  if (mesh.kind() == SurfaceKind::Plane) {
    double x1 = -std::numeric_limits<double>::infinity(), y1 = x1;
    x0_ = y0_ = std::numeric_limits<double>::infinity();
    for (const Vec3& p : mesh.nodes()) {
      x0_ = std::min(x0_, p.x);
      y0_ = std::min(y0_, p.y);
      x1 = std::max(x1, p.x);
      y1 = std::max(y1, p.y);
    }
    rows_ = cols_ = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(ne))));
    dx_ = std::max(x1 - x0_, 1e-300) / cols_;
    dy_ = std::max(y1 - y0_, 1e-300) / rows_;
  } else {
    // Latitude rows by longitude columns, about one centroid per bucket.
    rows_ = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(ne) / 2.0)));
    cols_ = 2 * rows_;
  }
  const auto nb = static_cast<std::size_t>(rows_) * static_cast<std::size_t>(cols_);
  bucket_offsets_.assign(nb + 1, 0);
  std::vector<std::size_t> owner(ne);
  for (std::size_t e = 0; e < ne; ++e) {
    owner[e] = bucket_of(centroids_[e]);
    ++bucket_offsets_[owner[e] + 1];
  }
  for (std::size_t b = 0; b < nb; ++b) bucket_offsets_[b + 1] += bucket_offsets_[b];
  bucket_elements_.resize(ne);
  std::vector<std::int32_t> cursor(bucket_offsets_.begin(), bucket_offsets_.end() - 1);
  for (std::size_t e = 0; e < ne; ++e) {
    bucket_elements_[static_cast<std::size_t>(cursor[owner[e]]++)] = static_cast<ElemId>(e);
  }
}

std::size_t PointLocator::bucket_of(const Vec3& q) const {
  int row = 0, col = 0;
  if (mesh_->kind() == SurfaceKind::Plane) {
    col = static_cast<int>(std::floor((q.x - x0_) / dx_));
    row = static_cast<int>(std::floor((q.y - y0_) / dy_));
  } else {
    const double r = norm(q);
    const double theta = std::acos(std::clamp(q.z / r, -1.0, 1.0));
    double phi = std::atan2(q.y, q.x);
    if (phi < 0) phi += 2 * std::numbers::pi;
    row = static_cast<int>(theta / std::numbers::pi * rows_);
    col = static_cast<int>(phi / (2 * std::numbers::pi) * cols_);
  }
  row = std::clamp(row, 0, rows_ - 1);
  col = std::clamp(col, 0, cols_ - 1);
  return static_cast<std::size_t>(row) * static_cast<std::size_t>(cols_) + static_cast<std::size_t>(col);
}

ElemId PointLocator::start_element(const Vec3& query) const {
  const std::size_t home = bucket_of(query);
  const int row0 = static_cast<int>(home / static_cast<std::size_t>(cols_));
  const int col0 = static_cast<int>(home % static_cast<std::size_t>(cols_));
  const bool wrap = mesh_->kind() != SurfaceKind::Plane;
  const Vec3 target = mesh_->project_to_surface(query);
  ElemId best = kInvalidId;
  double best_d = std::numeric_limits<double>::infinity();
  // Expand square shells of buckets until something is found, then one more shell.
  int found_at = -1;
  for (int radius = 0; radius <= std::max(rows_, cols_); ++radius) {
    for (int dr = -radius; dr <= radius; ++dr) {
      for (int dc = -radius; dc <= radius; ++dc) {
        if (std::max(std::abs(dr), std::abs(dc)) != radius) continue;
        const int r = row0 + dr;
        int c = col0 + dc;
        if (r < 0 || r >= rows_) continue;
        if (wrap) {
          c = ((c % cols_) + cols_) % cols_;
        } else if (c < 0 || c >= cols_) {
          continue;
        }
        const std::size_t b = static_cast<std::size_t>(r) * static_cast<std::size_t>(cols_) + static_cast<std::size_t>(c);
        for (auto i = bucket_offsets_[b]; i < bucket_offsets_[b + 1]; ++i) {
          const ElemId e = bucket_elements_[static_cast<std::size_t>(i)];
          const Vec3 d = centroids_[static_cast<std::size_t>(e)] - target;
          const double dist = dot(d, d);
          if (dist < best_d) {
            best_d = dist;
            best = e;
          }
        }
      }
    }
    if (best != kInvalidId && found_at < 0) found_at = radius;
    if (found_at >= 0 && radius >= found_at + 1) break;
  }
  return best == kInvalidId ? 0 : best;
}

std::optional<ElementLocation> PointLocator::resolve_ties(ElemId found, const Vec3& query) const {
  // Any other element containing the point shares at least a node with `found`.
  ElemId lowest = found;
  for (NodeId v : mesh_->element(found).view()) {
    for (ElemId e : mesh_->incident_elements(v)) {
      if (e < lowest && natural_coordinates(*mesh_, e, query)) lowest = e;
    }
  }
  return natural_coordinates(*mesh_, lowest, query);
}

std::optional<ElementLocation> PointLocator::try_locate(const Vec3& point) const {
  if (mesh_->is_sphere() && norm(point) == 0.0) {
    throw Error(ErrorCode::InvalidArgument, "cannot radially project the origin");
  }
  ElemId e = start_element(point);
  const auto max_steps = static_cast<std::size_t>(4.0 * std::sqrt(static_cast<double>(mesh_->num_elements()))) + 64;
  for (std::size_t step = 0; step < max_steps; ++step) {
    const Element& el = mesh_->element(e);
    int worst = -1;
    double worst_side = -1e-12;
    for (std::size_t i = 0; i < el.arity; ++i) {
      const double s = edge_side(*mesh_, mesh_->node(el[i]), mesh_->node(el[(i + 1) % el.arity]), point);
      if (s < worst_side) {
        worst_side = s;
        worst = static_cast<int>(i);
      }
    }
    if (worst < 0) return resolve_ties(e, point);
    const ElemId next = mesh_->neighbor_across(e, worst);
    if (next == kInvalidId) break;
    e = next;
  }
  return locate_exhaustive(point);
}

ElementLocation PointLocator::locate(const Vec3& point) const {
  auto loc = try_locate(point);
  if (!loc) throw Error(ErrorCode::NotFound, "no source element contains the query point");
  return *loc;
}

std::optional<ElementLocation> PointLocator::locate_exhaustive(const Vec3& point) const {
  for (std::size_t e = 0; e < mesh_->num_elements(); ++e) {
    if (auto loc = natural_coordinates(*mesh_, static_cast<ElemId>(e), point)) return loc;
  }
  return std::nullopt;
}

ElementLocation locate_element(const SurfaceMesh& source, const Vec3& point) {
  return PointLocator(source).locate(point);
}

}  // namespace wlsr
