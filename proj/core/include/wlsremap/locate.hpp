#pragma once

#include <array>
#include <optional>
#include <vector>

#include "wlsremap/mesh.hpp"

namespace wlsr {

/// Containing element of a query point plus its natural coordinates:
/// barycentric (l0, l1, l2) for triangles, bilinear reference (xi, eta)
/// in [0, 1]^2 for quads with corners at (0,0), (1,0), (1,1), (0,1).
struct ElementLocation {
  ElemId element = kInvalidId;
  std::uint8_t arity = 0;
  std::array<double, 3> natural{};

  /// Interpolation weights of the element's nodes (convex combination).
  std::array<double, 4> shape_weights() const;
};

/// Point location on a source mesh: coarse bucket over element centroids,
/// then a walk across half-edge neighbors, with an exhaustive scan as the
/// fallback. Sphere queries use radial projection, plane queries orthogonal
/// projection. Points on shared edges resolve to the lowest element index.
class PointLocator {
 public:
  explicit PointLocator(const SurfaceMesh& mesh);

  /// Throws Error(NotFound) if no element contains the point.
  ElementLocation locate(const Vec3& point) const;
  std::optional<ElementLocation> try_locate(const Vec3& point) const;

  /// Reference implementation scanning every element.
  std::optional<ElementLocation> locate_exhaustive(const Vec3& point) const;

  const SurfaceMesh& mesh() const noexcept { return *mesh_; }

 private:
  std::optional<ElementLocation> resolve_ties(ElemId found, const Vec3& query) const;
  ElemId start_element(const Vec3& query) const;
  std::size_t bucket_of(const Vec3& query) const;

  const SurfaceMesh* mesh_;
  std::vector<Vec3> centroids_;
  int rows_ = 1;
  int cols_ = 1;
  double x0_ = 0.0, y0_ = 0.0, dx_ = 1.0, dy_ = 1.0;  // planar bucket geometry
  std::vector<std::int32_t> bucket_offsets_;
  std::vector<ElemId> bucket_elements_;
};

/// One-shot convenience; builds a locator per call.
ElementLocation locate_element(const SurfaceMesh& source, const Vec3& point);

/// Natural coordinates of `point` in element e if it lies inside
/// (within `tol` in signed edge distance), std::nullopt otherwise.
std::optional<ElementLocation> natural_coordinates(const SurfaceMesh& mesh, ElemId e, const Vec3& point,
                                                   double tol = 1e-12);

/// Position reconstructed from natural coordinates (before surface projection).
Vec3 interpolate_position(const SurfaceMesh& mesh, const ElementLocation& loc);

}  // namespace wlsr
