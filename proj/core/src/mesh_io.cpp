#include "wlsremap/mesh_io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>

#include "wlsremap/error.hpp"

namespace wlsr {

namespace {

constexpr const char* kMagic = "wlsremap-mesh";
constexpr int kVersion = 1;

std::string hex(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", x);
  return buf;
}

double parse_double(const std::string& token) {
  char* end = nullptr;
  const double v = std::strtod(token.c_str(), &end);
  if (end == token.c_str() || *end != '\0') throw Error(ErrorCode::Io, "bad number '" + token + "'");
  return v;
}

void expect(std::istream& in, const std::string& word) {
  std::string got;
  if (!(in >> got) || got != word) throw Error(ErrorCode::Io, "expected '" + word + "', got '" + got + "'");
}

}  // namespace

void write_mesh(std::ostream& out, const SurfaceMesh& mesh) {
  out << kMagic << ' ' << kVersion << '\n';
  const char* kind = mesh.kind() == SurfaceKind::UnitSphere ? "sphere"
                     : mesh.kind() == SurfaceKind::Plane    ? "plane"
                                                            : "general";
  out << "kind " << kind << '\n';
  out << "nodes " << mesh.num_nodes() << '\n';
  for (const Vec3& p : mesh.nodes()) out << hex(p.x) << ' ' << hex(p.y) << ' ' << hex(p.z) << '\n';
  out << "elements " << mesh.num_elements() << '\n';
  for (const Element& el : mesh.elements()) {
    out << static_cast<int>(el.arity);
    for (NodeId v : el.view()) out << ' ' << v;
    out << '\n';
  }
}

SurfaceMesh read_mesh(std::istream& in) {
  expect(in, kMagic);
  int version = 0;
  if (!(in >> version) || version != kVersion) throw Error(ErrorCode::Io, "unsupported mesh version");
  expect(in, "kind");
  std::string kind_name;
  in >> kind_name;
  SurfaceKind kind = SurfaceKind::General;
  if (kind_name == "sphere") {
    kind = SurfaceKind::UnitSphere;
  } else if (kind_name == "plane") {
    kind = SurfaceKind::Plane;
  } else if (kind_name != "general") {
    throw Error(ErrorCode::Io, "unknown surface kind '" + kind_name + "'");
  }
  expect(in, "nodes");
  std::size_t n = 0;
  if (!(in >> n)) throw Error(ErrorCode::Io, "missing node count");
  std::vector<Vec3> nodes(n);
  std::string tx, ty, tz;
  for (Vec3& p : nodes) {
    if (!(in >> tx >> ty >> tz)) throw Error(ErrorCode::Io, "truncated node block");
    p = {parse_double(tx), parse_double(ty), parse_double(tz)};
  }
  expect(in, "elements");
  std::size_t m = 0;
  if (!(in >> m)) throw Error(ErrorCode::Io, "missing element count");
  std::vector<Element> elements(m);
  for (Element& el : elements) {
    int arity = 0;
    if (!(in >> arity) || (arity != 3 && arity != 4)) throw Error(ErrorCode::Io, "bad element arity");
    el.arity = static_cast<std::uint8_t>(arity);
    for (int i = 0; i < arity; ++i) {
      if (!(in >> el.nodes[static_cast<std::size_t>(i)])) throw Error(ErrorCode::Io, "truncated element block");
    }
  }
  return SurfaceMesh(std::move(nodes), std::move(elements), kind);
}

void save_mesh(const std::string& path, const SurfaceMesh& mesh) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot open " + path + " for writing");
  write_mesh(out, mesh);
}

SurfaceMesh load_mesh(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  return read_mesh(in);
}

}  // namespace wlsr
