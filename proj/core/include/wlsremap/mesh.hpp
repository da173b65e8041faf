#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "wlsremap/vec3.hpp"

namespace wlsr {

using NodeId = std::int32_t;
using ElemId = std::int32_t;
using HalfEdgeId = std::int32_t;

inline constexpr std::int32_t kInvalidId = -1;

enum class SurfaceKind : std::uint8_t {
  UnitSphere,  // nodes on the unit sphere, exact radial normals
  Plane,       // nodes in the z = 0 plane, normals (0, 0, 1)
  General,     // arbitrary surface, area-weighted normals
};

enum class ElementKind : std::uint8_t { Triangle, Quad };

/// Triangle or quadrilateral, counter-clockwise seen from outside.
struct Element {
  std::array<NodeId, 4> nodes{kInvalidId, kInvalidId, kInvalidId, kInvalidId};
  std::uint8_t arity = 0;

  static Element triangle(NodeId a, NodeId b, NodeId c) { return {{a, b, c, kInvalidId}, 3}; }
  static Element quad(NodeId a, NodeId b, NodeId c, NodeId d) { return {{a, b, c, d}, 4}; }

  std::span<const NodeId> view() const { return {nodes.data(), arity}; }
  NodeId operator[](std::size_t i) const { return nodes[i]; }
};

/// Immutable discrete surface with array-based half-edge connectivity.
///
/// Half-edges of element e occupy the contiguous range
/// [first_half_edge(e), first_half_edge(e) + arity); half-edge i of an
/// element runs from its i-th node to node (i + 1) mod arity. Border
/// half-edges have opposite == kInvalidId.
class SurfaceMesh {
 public:
  SurfaceMesh() = default;
  SurfaceMesh(std::vector<Vec3> nodes, std::vector<Element> elements, SurfaceKind kind);

  SurfaceKind kind() const noexcept { return kind_; }
  bool is_sphere() const noexcept { return kind_ == SurfaceKind::UnitSphere; }

  std::size_t num_nodes() const noexcept { return nodes_.size(); }
  std::size_t num_elements() const noexcept { return elements_.size(); }
  std::size_t num_half_edges() const noexcept { return he_origin_.size(); }
  std::size_t num_edges() const noexcept { return num_edges_; }
  bool is_closed() const noexcept { return num_border_ == 0; }

  const Vec3& node(NodeId v) const { return nodes_[static_cast<std::size_t>(v)]; }
  std::span<const Vec3> nodes() const noexcept { return nodes_; }
  const Element& element(ElemId e) const { return elements_[static_cast<std::size_t>(e)]; }
  std::span<const Element> elements() const noexcept { return elements_; }
  const Vec3& normal(NodeId v) const { return normals_[static_cast<std::size_t>(v)]; }
  std::span<const Vec3> normals() const noexcept { return normals_; }

  HalfEdgeId first_half_edge(ElemId e) const { return he_first_[static_cast<std::size_t>(e)]; }
  NodeId he_origin(HalfEdgeId h) const { return he_origin_[static_cast<std::size_t>(h)]; }
  NodeId he_dest(HalfEdgeId h) const { return he_origin(he_next(h)); }
  HalfEdgeId he_next(HalfEdgeId h) const { return he_next_[static_cast<std::size_t>(h)]; }
  HalfEdgeId he_opposite(HalfEdgeId h) const { return he_opposite_[static_cast<std::size_t>(h)]; }
  ElemId he_face(HalfEdgeId h) const { return he_face_[static_cast<std::size_t>(h)]; }

  /// Element sharing local edge `local_edge` of `e`, or kInvalidId on the border.
  ElemId neighbor_across(ElemId e, int local_edge) const;

  /// Elements incident on node v, in increasing index order.
  std::span<const ElemId> incident_elements(NodeId v) const;

  /// Mean of the element's nodes, projected back onto the surface for spheres.
  Vec3 element_center(ElemId e) const;

  /// Radial projection for spheres, orthogonal projection for planes.
  Vec3 project_to_surface(const Vec3& p) const;

  /// Surface normal at a point located inside element e with the given shape weights.
  Vec3 normal_at(ElemId e, std::span<const double> shape_weights, const Vec3& point) const;

 private:
  void build_half_edges();
  void build_incidence();
  void build_normals();

  SurfaceKind kind_ = SurfaceKind::General;
  std::vector<Vec3> nodes_;
  std::vector<Element> elements_;
  std::vector<Vec3> normals_;

  std::vector<HalfEdgeId> he_first_;
  std::vector<NodeId> he_origin_;
  std::vector<HalfEdgeId> he_next_;
  std::vector<HalfEdgeId> he_opposite_;
  std::vector<ElemId> he_face_;
  std::size_t num_edges_ = 0;
  std::size_t num_border_ = 0;

  std::vector<std::int32_t> incident_offsets_;
  std::vector<ElemId> incident_;
};

SurfaceMesh gen_cubed_sphere(int cells_per_edge);
SurfaceMesh gen_icosphere(int level);
SurfaceMesh gen_planar_grid(int nx, int ny, ElementKind kind);

struct MeshMetrics {
  double h_g = 0.0;  // mean chord length over unique edges
  std::size_t num_nodes = 0;
  std::size_t num_elements = 0;
  std::size_t num_edges = 0;
};

MeshMetrics mesh_metrics(const SurfaceMesh& mesh);

/// Nodes within ring distance `k` of `node` (k a positive multiple of 0.5),
/// ordered by graph distance and then node index.
std::vector<NodeId> k_ring(const SurfaceMesh& mesh, NodeId node, double k, bool include_self = false);

struct RingResult {
  std::vector<NodeId> nodes;  // seeds first, then by graph distance, ties by index
  bool exhausted = false;     // true once the ring covers the whole mesh
};

/// Multi-source ring: the union of k-rings of `seeds`, seeds included.
///
/// An integer step adds every node sharing an element with the current
/// frontier; a half step adds the nodes of every element having a full
/// edge inside the current set.
RingResult grow_ring(const SurfaceMesh& mesh, std::span<const NodeId> seeds, double k);

}  // namespace wlsr
