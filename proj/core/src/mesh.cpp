#include "wlsremap/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <unordered_map>

#include "wlsremap/error.hpp"

namespace wlsr {

namespace {

std::uint64_t edge_key(NodeId a, NodeId b) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
         static_cast<std::uint32_t>(b);
}

// Reorders element nodes so that the element is counter-clockwise seen
// from outside the sphere.
void orient_outward(const std::vector<Vec3>& nodes, Element& el) {
  const Vec3& a = nodes[static_cast<std::size_t>(el.nodes[0])];
  const Vec3& b = nodes[static_cast<std::size_t>(el.nodes[1])];
  const Vec3& c = nodes[static_cast<std::size_t>(el.nodes[2])];
  Vec3 centroid = a + b + c;
  if (el.arity == 4) centroid += nodes[static_cast<std::size_t>(el.nodes[3])];
  if (dot(cross(b - a, c - a), centroid) < 0.0) {
    std::reverse(el.nodes.begin(), el.nodes.begin() + el.arity);
  }
}

}  // namespace

SurfaceMesh::SurfaceMesh(std::vector<Vec3> nodes, std::vector<Element> elements, SurfaceKind kind)
    : kind_(kind), nodes_(std::move(nodes)), elements_(std::move(elements)) {
  if (nodes_.empty() || elements_.empty()) {
    throw Error(ErrorCode::InvalidArgument, "mesh must have nodes and elements");
  }
  const auto n = static_cast<NodeId>(nodes_.size());
  for (const Element& el : elements_) {
    if (el.arity != 3 && el.arity != 4) {
      throw Error(ErrorCode::InvalidArgument, "element arity must be 3 or 4");
    }
    for (NodeId v : el.view()) {
      if (v < 0 || v >= n) throw Error(ErrorCode::InvalidArgument, "element references invalid node");
    }
  }
  for (const Vec3& p : nodes_) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z)) {
      throw Error(ErrorCode::NonFinite, "node coordinates must be finite");
    }
  }
  build_half_edges();
  build_incidence();
  build_normals();
}

void SurfaceMesh::build_half_edges() {
  std::size_t total = 0;
  he_first_.resize(elements_.size());
  for (std::size_t e = 0; e < elements_.size(); ++e) {
    he_first_[e] = static_cast<HalfEdgeId>(total);
    total += elements_[e].arity;
  }
  he_origin_.resize(total);
  he_next_.resize(total);
  he_face_.resize(total);
  he_opposite_.assign(total, kInvalidId);

  std::unordered_map<std::uint64_t, HalfEdgeId> by_endpoints;
  by_endpoints.reserve(total);
  for (std::size_t e = 0; e < elements_.size(); ++e) {
    const Element& el = elements_[e];
    const HalfEdgeId first = he_first_[e];
    for (int i = 0; i < el.arity; ++i) {
      const HalfEdgeId h = first + i;
      he_origin_[static_cast<std::size_t>(h)] = el.nodes[static_cast<std::size_t>(i)];
      he_next_[static_cast<std::size_t>(h)] = first + (i + 1) % el.arity;
      he_face_[static_cast<std::size_t>(h)] = static_cast<ElemId>(e);
      const NodeId a = el.nodes[static_cast<std::size_t>(i)];
      const NodeId b = el.nodes[static_cast<std::size_t>((i + 1) % el.arity)];
      if (!by_endpoints.emplace(edge_key(a, b), h).second) {
        throw Error(ErrorCode::InvalidArgument,
                    "inconsistent orientation or non-manifold edge at nodes " + std::to_string(a) +
                        "-" + std::to_string(b));
      }
    }
  }
  num_edges_ = 0;
  num_border_ = 0;
  for (std::size_t h = 0; h < total; ++h) {
    const NodeId a = he_origin_[h];
    const NodeId b = he_origin_[static_cast<std::size_t>(he_next_[h])];
    auto it = by_endpoints.find(edge_key(b, a));
    if (it != by_endpoints.end()) {
      he_opposite_[h] = it->second;
      if (static_cast<HalfEdgeId>(h) < it->second) ++num_edges_;
    } else {
      ++num_edges_;
      ++num_border_;
    }
  }
}

void SurfaceMesh::build_incidence() {
  incident_offsets_.assign(nodes_.size() + 1, 0);
  for (const Element& el : elements_) {
    for (NodeId v : el.view()) ++incident_offsets_[static_cast<std::size_t>(v) + 1];
  }
  for (std::size_t i = 0; i < nodes_.size(); ++i) incident_offsets_[i + 1] += incident_offsets_[i];
  incident_.resize(static_cast<std::size_t>(incident_offsets_.back()));
  std::vector<std::int32_t> cursor(incident_offsets_.begin(), incident_offsets_.end() - 1);
  for (std::size_t e = 0; e < elements_.size(); ++e) {
    for (NodeId v : elements_[e].view()) {
      incident_[static_cast<std::size_t>(cursor[static_cast<std::size_t>(v)]++)] = static_cast<ElemId>(e);
    }
  }
}

void SurfaceMesh::build_normals() {
  normals_.resize(nodes_.size());
  switch (kind_) {
    case SurfaceKind::UnitSphere:
      for (std::size_t i = 0; i < nodes_.size(); ++i) normals_[i] = normalized(nodes_[i]);
      return;
    case SurfaceKind::Plane:
      std::fill(normals_.begin(), normals_.end(), Vec3{0.0, 0.0, 1.0});
      return;
    case SurfaceKind::General:
      break;
  }
  std::fill(normals_.begin(), normals_.end(), Vec3{});
  for (const Element& el : elements_) {
    // Twice the vector area; for quads this is the cross product of the diagonals.
    Vec3 area;
    if (el.arity == 3) {
      area = cross(node(el[1]) - node(el[0]), node(el[2]) - node(el[0]));
    } else {
      area = cross(node(el[2]) - node(el[0]), node(el[3]) - node(el[1]));
    }
    for (NodeId v : el.view()) normals_[static_cast<std::size_t>(v)] += area;
  }
  for (Vec3& m : normals_) {
    const double len = norm(m);
    if (len > 0.0) m /= len;
  }
}

ElemId SurfaceMesh::neighbor_across(ElemId e, int local_edge) const {
  const HalfEdgeId opp = he_opposite(first_half_edge(e) + local_edge);
  return opp == kInvalidId ? kInvalidId : he_face(opp);
}

std::span<const ElemId> SurfaceMesh::incident_elements(NodeId v) const {
  const auto begin = static_cast<std::size_t>(incident_offsets_[static_cast<std::size_t>(v)]);
  const auto end = static_cast<std::size_t>(incident_offsets_[static_cast<std::size_t>(v) + 1]);
  return {incident_.data() + begin, end - begin};
}

Vec3 SurfaceMesh::element_center(ElemId e) const {
  const Element& el = element(e);
  Vec3 c;
  for (NodeId v : el.view()) c += node(v);
  c /= static_cast<double>(el.arity);
  return project_to_surface(c);
}

Vec3 SurfaceMesh::project_to_surface(const Vec3& p) const {
  switch (kind_) {
    case SurfaceKind::UnitSphere: return normalized(p);
    case SurfaceKind::Plane: return {p.x, p.y, 0.0};
    case SurfaceKind::General: return p;
  }
  return p;
}

Vec3 SurfaceMesh::normal_at(ElemId e, std::span<const double> shape_weights, const Vec3& point) const {
  switch (kind_) {
    case SurfaceKind::UnitSphere: return normalized(point);
    case SurfaceKind::Plane: return {0.0, 0.0, 1.0};
    case SurfaceKind::General: break;
  }
  const Element& el = element(e);
  Vec3 m;
  for (std::size_t i = 0; i < el.arity; ++i) m += shape_weights[i] * normal(el[i]);
  return normalized(m);
}

// ---------------------------------------------------------------------------
// Generators

SurfaceMesh gen_cubed_sphere(int cells_per_edge) {
  if (cells_per_edge < 1) throw Error(ErrorCode::InvalidArgument, "cubed sphere needs n >= 1");
  const int n = cells_per_edge;
  // Equidistant gnomonic coordinate of lattice index i in [0, n].
  std::vector<double> gnomonic(static_cast<std::size_t>(n) + 1);
  for (int i = 0; i <= n; ++i) {
    if (i == 0) {
      gnomonic[0] = -1.0;
    } else if (i == n) {
      gnomonic[static_cast<std::size_t>(n)] = 1.0;
    } else if (2 * i == n) {
      gnomonic[static_cast<std::size_t>(i)] = 0.0;
    } else {
      gnomonic[static_cast<std::size_t>(i)] = std::tan(-std::numbers::pi / 4 + i * std::numbers::pi / (2.0 * n));
    }
  }

  std::vector<Vec3> nodes;
  nodes.reserve(6 * static_cast<std::size_t>(n) * n + 2);
  std::unordered_map<std::uint64_t, NodeId> lattice_to_node;
  auto node_at = [&](int i, int j, int k) {
    const std::uint64_t key = (static_cast<std::uint64_t>(i) << 42) |
                              (static_cast<std::uint64_t>(j) << 21) | static_cast<std::uint64_t>(k);
    auto [it, inserted] = lattice_to_node.emplace(key, static_cast<NodeId>(nodes.size()));
    if (inserted) {
      nodes.push_back(normalized(Vec3{gnomonic[static_cast<std::size_t>(i)],
                                      gnomonic[static_cast<std::size_t>(j)],
                                      gnomonic[static_cast<std::size_t>(k)]}));
    }
    return it->second;
  };

  std::vector<Element> elements;
  elements.reserve(6 * static_cast<std::size_t>(n) * n);
  // Each face fixes one lattice axis at 0 or n; (a, b) walk the other two.
  for (int axis = 0; axis < 3; ++axis) {
    for (int side = 0; side < 2; ++side) {
      const int fixed = side == 0 ? 0 : n;
      auto lattice = [&](int a, int b) {
        std::array<int, 3> ijk{};
        ijk[static_cast<std::size_t>(axis)] = fixed;
        ijk[static_cast<std::size_t>((axis + 1) % 3)] = a;
        ijk[static_cast<std::size_t>((axis + 2) % 3)] = b;
        return node_at(ijk[0], ijk[1], ijk[2]);
      };
      for (int b = 0; b < n; ++b) {
        for (int a = 0; a < n; ++a) {
          Element q = Element::quad(lattice(a, b), lattice(a + 1, b), lattice(a + 1, b + 1), lattice(a, b + 1));
          orient_outward(nodes, q);
          elements.push_back(q);
        }
      }
    }
  }
  return SurfaceMesh(std::move(nodes), std::move(elements), SurfaceKind::UnitSphere);
}

SurfaceMesh gen_icosphere(int level) {
  if (level < 0) throw Error(ErrorCode::InvalidArgument, "icosphere level must be >= 0");
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> nodes = {
      {-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
      {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1},
  };
  for (Vec3& p : nodes) p = normalized(p);
  std::vector<std::array<NodeId, 3>> faces = {
      {0, 11, 5}, {0, 5, 1}, {0, 1, 7}, {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
      {11, 10, 2}, {10, 7, 6}, {7, 1, 8}, {3, 9, 4}, {3, 4, 2}, {3, 2, 6}, {3, 6, 8},
      {3, 8, 9}, {4, 9, 5}, {2, 4, 11}, {6, 2, 10}, {8, 6, 7}, {9, 8, 1},
  };
  for (int l = 0; l < level; ++l) {
    std::unordered_map<std::uint64_t, NodeId> midpoint;
    auto mid = [&](NodeId a, NodeId b) {
      const std::uint64_t key = edge_key(std::min(a, b), std::max(a, b));
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      const auto id = static_cast<NodeId>(nodes.size());
      nodes.push_back(normalized(nodes[static_cast<std::size_t>(a)] + nodes[static_cast<std::size_t>(b)]));
      midpoint.emplace(key, id);
      return id;
    };
    std::vector<std::array<NodeId, 3>> refined;
    refined.reserve(faces.size() * 4);
    for (const auto& f : faces) {
      const NodeId ab = mid(f[0], f[1]);
      const NodeId bc = mid(f[1], f[2]);
      const NodeId ca = mid(f[2], f[0]);
      refined.push_back({f[0], ab, ca});
      refined.push_back({f[1], bc, ab});
      refined.push_back({f[2], ca, bc});
      refined.push_back({ab, bc, ca});
    }
    faces = std::move(refined);
  }
  std::vector<Element> elements;
  elements.reserve(faces.size());
  for (const auto& f : faces) {
    Element tri = Element::triangle(f[0], f[1], f[2]);
    orient_outward(nodes, tri);
    elements.push_back(tri);
  }
  return SurfaceMesh(std::move(nodes), std::move(elements), SurfaceKind::UnitSphere);
}

SurfaceMesh gen_planar_grid(int nx, int ny, ElementKind kind) {
  if (nx < 1 || ny < 1) throw Error(ErrorCode::InvalidArgument, "planar grid needs nx, ny >= 1");
  std::vector<Vec3> nodes;
  nodes.reserve(static_cast<std::size_t>(nx + 1) * (ny + 1));
  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i <= nx; ++i) {
      nodes.push_back({static_cast<double>(i) / nx, static_cast<double>(j) / ny, 0.0});
    }
  }
  auto id = [nx](int i, int j) { return static_cast<NodeId>(j * (nx + 1) + i); };
  std::vector<Element> elements;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const NodeId a = id(i, j), b = id(i + 1, j), c = id(i + 1, j + 1), d = id(i, j + 1);
      if (kind == ElementKind::Quad) {
        elements.push_back(Element::quad(a, b, c, d));
      } else {
        elements.push_back(Element::triangle(a, b, c));
        elements.push_back(Element::triangle(a, c, d));
      }
    }
  }
  return SurfaceMesh(std::move(nodes), std::move(elements), SurfaceKind::Plane);
}

MeshMetrics mesh_metrics(const SurfaceMesh& mesh) {
  MeshMetrics m;
  m.num_nodes = mesh.num_nodes();
  m.num_elements = mesh.num_elements();
  m.num_edges = mesh.num_edges();
  double total = 0.0;
  for (HalfEdgeId h = 0; h < static_cast<HalfEdgeId>(mesh.num_half_edges()); ++h) {
    const HalfEdgeId opp = mesh.he_opposite(h);
    if (opp != kInvalidId && opp < h) continue;
    total += norm(mesh.node(mesh.he_dest(h)) - mesh.node(mesh.he_origin(h)));
  }
  m.h_g = total / static_cast<double>(m.num_edges);
  return m;
}

// ---------------------------------------------------------------------------
// Rings

namespace {

int half_steps(double k) {
  const double twice = 2.0 * k;
  const double rounded = std::round(twice);
  if (k < 0.5 || std::abs(twice - rounded) > 1e-12) {
    throw Error(ErrorCode::InvalidArgument, "ring size must be a positive multiple of 0.5");
  }
  return static_cast<int>(rounded);
}

// Per-thread distance stamps, sized to the largest mesh seen so far.
struct RingScratch {
  std::vector<std::int32_t> distance;
  std::vector<std::uint32_t> stamp;
  std::uint32_t generation = 0;

  void prepare(std::size_t n) {
    if (stamp.size() < n) {
      stamp.assign(n, 0);
      distance.assign(n, 0);
      generation = 0;
    }
    if (++generation == 0) {
      std::fill(stamp.begin(), stamp.end(), 0);
      generation = 1;
    }
  }
  bool has(NodeId v) const { return stamp[static_cast<std::size_t>(v)] == generation; }
  void set(NodeId v, std::int32_t d) {
    stamp[static_cast<std::size_t>(v)] = generation;
    distance[static_cast<std::size_t>(v)] = d;
  }
  std::int32_t dist(NodeId v) const { return distance[static_cast<std::size_t>(v)]; }
};

thread_local RingScratch g_scratch;

}  // namespace

RingResult grow_ring(const SurfaceMesh& mesh, std::span<const NodeId> seeds, double k) {
  const int steps = half_steps(k);
  RingScratch& s = g_scratch;
  s.prepare(mesh.num_nodes());

  RingResult out;
  for (NodeId v : seeds) {
    if (v < 0 || static_cast<std::size_t>(v) >= mesh.num_nodes()) {
      throw Error(ErrorCode::InvalidArgument, "ring seed is not a valid node");
    }
    if (!s.has(v)) {
      s.set(v, 0);
      out.nodes.push_back(v);
    }
  }
  std::sort(out.nodes.begin(), out.nodes.end());

  std::size_t frontier_begin = 0;
  const int full = steps / 2;
  for (int d = 1; d <= full; ++d) {
    const std::size_t frontier_end = out.nodes.size();
    for (std::size_t i = frontier_begin; i < frontier_end; ++i) {
      for (ElemId e : mesh.incident_elements(out.nodes[i])) {
        for (NodeId w : mesh.element(e).view()) {
          if (!s.has(w)) {
            s.set(w, d);
            out.nodes.push_back(w);
          }
        }
      }
    }
    std::sort(out.nodes.begin() + static_cast<std::ptrdiff_t>(frontier_end), out.nodes.end());
    frontier_begin = frontier_end;
  }

  if (steps % 2 == 1) {
    const std::size_t before = out.nodes.size();
    const int d = full + 1;
    // Only elements touching the outermost layer can gain nodes.
    for (std::size_t i = frontier_begin; i < before; ++i) {
      for (ElemId e : mesh.incident_elements(out.nodes[i])) {
        const Element& el = mesh.element(e);
        bool has_edge = false;
        for (std::size_t j = 0; j < el.arity && !has_edge; ++j) {
          const NodeId a = el[j];
          const NodeId b = el[(j + 1) % el.arity];
          has_edge = s.has(a) && s.dist(a) < d && s.has(b) && s.dist(b) < d;
        }
        if (!has_edge) continue;
        for (NodeId w : el.view()) {
          if (!s.has(w)) {
            s.set(w, d);
            out.nodes.push_back(w);
          }
        }
      }
    }
    std::sort(out.nodes.begin() + static_cast<std::ptrdiff_t>(before), out.nodes.end());
  }
  out.exhausted = out.nodes.size() == mesh.num_nodes();
  return out;
}

std::vector<NodeId> k_ring(const SurfaceMesh& mesh, NodeId node, double k, bool include_self) {
  if (node < 0 || static_cast<std::size_t>(node) >= mesh.num_nodes()) {
    throw Error(ErrorCode::InvalidArgument, "invalid node id " + std::to_string(node));
  }
  const NodeId seed[1] = {node};
  RingResult r = grow_ring(mesh, seed, k);
  if (!include_self) r.nodes.erase(r.nodes.begin());
  return std::move(r.nodes);
}

}  // namespace wlsr
