#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>
#include <utility>

#include "doctest.h"
#include "wlsremap/error.hpp"
#include "wlsremap/locate.hpp"
#include "wlsremap/mesh.hpp"
#include "wlsremap/mesh_io.hpp"

using namespace wlsr;

namespace {

std::set<std::pair<NodeId, NodeId>> unique_edges(const SurfaceMesh& m) {
  std::set<std::pair<NodeId, NodeId>> edges;
  for (const Element& e : m.elements()) {
    for (int i = 0; i < e.arity; ++i) {
      const NodeId a = e[static_cast<std::size_t>(i)];
      const NodeId b = e[static_cast<std::size_t>((i + 1) % e.arity)];
      edges.insert({std::min(a, b), std::max(a, b)});
    }
  }
  return edges;
}

}  // namespace

TEST_SUITE("mesh") {
  TEST_CASE("cubed sphere counts") {
    const auto m1 = gen_cubed_sphere(1);
    CHECK(m1.num_nodes() == 8);
    CHECK(m1.num_elements() == 6);
    const auto m13 = gen_cubed_sphere(13);
    CHECK(m13.num_nodes() == 1016);
    CHECK(m13.num_elements() == 1014);
    const auto m26 = gen_cubed_sphere(26);
    CHECK(m26.num_nodes() == 4058);
    CHECK(m26.num_elements() == 4056);
    CHECK(m13.is_closed());
    for (const Vec3& p : m13.nodes()) CHECK(norm(p) == doctest::Approx(1.0).epsilon(1e-14));
  }

  TEST_CASE("icosphere counts") {
    CHECK(gen_icosphere(0).num_nodes() == 12);
    CHECK(gen_icosphere(0).num_elements() == 20);
    CHECK(gen_icosphere(1).num_nodes() == 42);
    CHECK(gen_icosphere(1).num_elements() == 80);
    const auto m5 = gen_icosphere(5);
    CHECK(m5.num_nodes() == 10242);
    CHECK(m5.num_elements() == 20480);
    CHECK(m5.is_closed());
  }

  TEST_CASE("planar grid counts") {
    const auto q11 = gen_planar_grid(1, 1, ElementKind::Quad);
    CHECK(q11.num_nodes() == 4);
    CHECK(q11.num_elements() == 1);
    const auto t22 = gen_planar_grid(2, 2, ElementKind::Triangle);
    CHECK(t22.num_nodes() == 9);
    CHECK(t22.num_elements() == 8);
    const auto q31 = gen_planar_grid(3, 1, ElementKind::Quad);
    CHECK(q31.num_nodes() == 8);
    CHECK(q31.num_elements() == 3);
    CHECK_FALSE(q31.is_closed());
  }

  TEST_CASE("half-edge connectivity is consistent") {
    for (const auto& m : {gen_icosphere(2), gen_cubed_sphere(4), gen_planar_grid(3, 2, ElementKind::Triangle)}) {
      for (HalfEdgeId h = 0; h < static_cast<HalfEdgeId>(m.num_half_edges()); ++h) {
        const HalfEdgeId o = m.he_opposite(h);
        if (o == kInvalidId) continue;
        CHECK(m.he_opposite(o) == h);
        CHECK(m.he_origin(o) == m.he_dest(h));
        CHECK(m.he_dest(o) == m.he_origin(h));
      }
      CHECK(m.num_edges() == unique_edges(m).size());
    }
  }

  TEST_CASE("sphere normals are radial") {
    const auto m = gen_icosphere(2);
    for (std::size_t v = 0; v < m.num_nodes(); ++v) {
      const Vec3 d = m.normal(static_cast<NodeId>(v)) - m.node(static_cast<NodeId>(v));
      CHECK(norm(d) < 1e-14);
    }
  }

  TEST_CASE("k-ring sizes") {
    const auto ico = gen_icosphere(0);
    for (NodeId v = 0; v < 12; ++v) {
      CHECK(k_ring(ico, v, 1.0).size() == 5);
      // The antipodal vertex is three edges away.
      CHECK(k_ring(ico, v, 2.0).size() == 10);
      CHECK(k_ring(ico, v, 3.0).size() == 11);
    }
    const auto grid = gen_planar_grid(4, 4, ElementKind::Quad);
    CHECK(k_ring(grid, 12, 1.0).size() == 8);
    CHECK(k_ring(grid, 12, 1.0, true).size() == 9);
    CHECK_THROWS_AS(k_ring(grid, 999, 1.0), Error);
  }

  TEST_CASE("k-ring matches breadth-first search") {
    const auto m = gen_icosphere(2);
    const NodeId start = 17;
    std::vector<int> dist(m.num_nodes(), -1);
    std::vector<NodeId> queue{start};
    dist[static_cast<std::size_t>(start)] = 0;
    for (std::size_t i = 0; i < queue.size(); ++i) {
      const NodeId v = queue[i];
      for (ElemId e : m.incident_elements(v)) {
        for (NodeId u : m.element(e).view()) {
          if (dist[static_cast<std::size_t>(u)] < 0) {
            dist[static_cast<std::size_t>(u)] = dist[static_cast<std::size_t>(v)] + 1;
            queue.push_back(u);
          }
        }
      }
    }
    for (int k = 1; k <= 3; ++k) {
      const auto ring = k_ring(m, start, k);
      std::set<NodeId> got(ring.begin(), ring.end());
      std::set<NodeId> expected;
      for (std::size_t v = 0; v < m.num_nodes(); ++v) {
        if (dist[v] >= 1 && dist[v] <= k) expected.insert(static_cast<NodeId>(v));
      }
      CHECK(got == expected);
    }
  }

  TEST_CASE("half rings lie between integer rings") {
    const auto m = gen_icosphere(2);
    const auto r1 = k_ring(m, 5, 1.0);
    const auto r15 = k_ring(m, 5, 1.5);
    const auto r2 = k_ring(m, 5, 2.0);
    CHECK(r1.size() < r15.size());
    CHECK(r15.size() < r2.size());
    std::set<NodeId> s2(r2.begin(), r2.end());
    for (NodeId v : r15) CHECK(s2.count(v) == 1);
  }

  TEST_CASE("metrics") {
    CHECK(mesh_metrics(gen_planar_grid(1, 1, ElementKind::Quad)).h_g == doctest::Approx(1.0));

    const auto cube = gen_cubed_sphere(1);
    const auto edges = unique_edges(cube);
    REQUIRE(edges.size() == 12);
    const double first = norm(cube.node(edges.begin()->first) - cube.node(edges.begin()->second));
    for (const auto& [a, b] : edges) CHECK(norm(cube.node(a) - cube.node(b)) == doctest::Approx(first));
    CHECK(mesh_metrics(cube).h_g == doctest::Approx(first));

    const auto ico = gen_icosphere(1);
    const auto ico_edges = unique_edges(ico);
    REQUIRE(ico_edges.size() == 120);
    double sum = 0.0;
    for (const auto& [a, b] : ico_edges) sum += norm(ico.node(a) - ico.node(b));
    const auto mm = mesh_metrics(ico);
    CHECK(mm.h_g == doctest::Approx(sum / 120.0).epsilon(1e-14));
    CHECK(mm.num_edges == 120);
  }

  TEST_CASE("locate at a source node") {
    const auto m = gen_icosphere(2);
    const PointLocator loc(m);
    for (NodeId v = 0; v < static_cast<NodeId>(m.num_nodes()); v += 7) {
      const auto l = loc.locate(m.node(v));
      const Element& e = m.element(l.element);
      const auto w = l.shape_weights();
      bool found = false;
      for (std::size_t i = 0; i < e.arity; ++i) {
        if (e[i] == v) {
          found = true;
          CHECK(w[i] == doctest::Approx(1.0).epsilon(1e-12));
        }
      }
      CHECK(found);
    }
  }

  TEST_CASE("locate a face center on the cube") {
    const auto m = gen_cubed_sphere(1);
    const PointLocator loc(m);
    const Vec3 dirs[] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
    std::set<ElemId> faces;
    for (const Vec3& d : dirs) {
      const auto l = loc.locate(d);
      CHECK(l.arity == 4);
      CHECK(l.natural[0] == doctest::Approx(0.5).epsilon(1e-12));
      CHECK(l.natural[1] == doctest::Approx(0.5).epsilon(1e-12));
      CHECK(dot(m.element_center(l.element), d) > 0.99);
      faces.insert(l.element);
    }
    CHECK(faces.size() == 6);
  }

  TEST_CASE("random queries agree with an exhaustive scan") {
    const auto m = gen_icosphere(2);
    const PointLocator loc(m);
    std::mt19937_64 rng(7);
    std::normal_distribution<double> g;
    for (int i = 0; i < 1000; ++i) {
      const Vec3 p = normalized(Vec3{g(rng), g(rng), g(rng)});
      const auto l = loc.locate(p);
      const auto ref = loc.locate_exhaustive(p);
      REQUIRE(ref.has_value());
      CHECK(l.element == ref->element);
      for (double w : l.shape_weights()) {
        CHECK(w >= -1e-12);
        CHECK(w <= 1.0 + 1e-12);
      }
    }
  }

  TEST_CASE("planar locate outside the grid") {
    const auto m = gen_planar_grid(2, 2, ElementKind::Quad);
    const PointLocator loc(m);
    CHECK_FALSE(loc.try_locate({5.0, 5.0, 0.0}).has_value());
    CHECK_THROWS_AS(loc.locate({5.0, 5.0, 0.0}), Error);
  }

  TEST_CASE("mesh text round trip is exact") {
    for (const auto& m : {gen_icosphere(1), gen_cubed_sphere(3), gen_planar_grid(2, 3, ElementKind::Triangle)}) {
      std::stringstream ss;
      write_mesh(ss, m);
      const auto r = read_mesh(ss);
      REQUIRE(r.num_nodes() == m.num_nodes());
      REQUIRE(r.num_elements() == m.num_elements());
      CHECK(r.kind() == m.kind());
      for (std::size_t v = 0; v < m.num_nodes(); ++v) CHECK(r.nodes()[v] == m.nodes()[v]);
      for (std::size_t e = 0; e < m.num_elements(); ++e) {
        CHECK(r.elements()[e].nodes == m.elements()[e].nodes);
      }
    }
    std::stringstream bad("not-a-mesh 1\n");
    CHECK_THROWS_AS(read_mesh(bad), Error);
  }
}
