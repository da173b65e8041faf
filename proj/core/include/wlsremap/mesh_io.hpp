#pragma once

#include <iosfwd>
#include <string>

#include "wlsremap/mesh.hpp"

namespace wlsr {

/// Versioned text mesh format. Coordinates are written as hex floats so a
/// write/read cycle reproduces every double bit for bit:
///
///   wlsremap-mesh 1
///   kind sphere|plane|general
///   nodes N
///   <x> <y> <z>            (N lines)
///   elements M
///   <arity> <i0> <i1> ...  (M lines, 0-based)
void write_mesh(std::ostream& out, const SurfaceMesh& mesh);
SurfaceMesh read_mesh(std::istream& in);

void save_mesh(const std::string& path, const SurfaceMesh& mesh);
SurfaceMesh load_mesh(const std::string& path);

}  // namespace wlsr
