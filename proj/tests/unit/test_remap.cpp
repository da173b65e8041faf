#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "wlsremap/error.hpp"
#include "wlsremap/fields.hpp"
#include "wlsremap/mesh.hpp"
#include "wlsremap/remap.hpp"

using namespace wlsr;

namespace {

constexpr double kPi = std::numbers::pi;

RemapConfig config_for(RemapMethod method, int degree = 4) {
  RemapConfig c;
  c.method = method;
  c.degree = degree;
  return c;
}

}  // namespace

TEST_SUITE("remap") {
  TEST_CASE("method names") {
    CHECK(remap_method_from_name("wls-enor") == RemapMethod::WlsEnor);
    CHECK(remap_method_from_name("wls") == RemapMethod::Wls);
    CHECK(remap_method_from_name("linear") == RemapMethod::Linear);
    CHECK(to_string(RemapMethod::WlsEnor) == "wls-enor");
    CHECK_THROWS_AS(remap_method_from_name("cubic"), Error);
  }

  TEST_CASE("identical meshes reproduce polynomials at coincident nodes") {
    for (ElementKind kind : {ElementKind::Triangle, ElementKind::Quad}) {
      const auto m = gen_planar_grid(9, 9, kind);
      const RemapPlan plan(m, m, config_for(RemapMethod::Wls, 2));
      const auto f = AnalyticField::polynomial({0.5, -1.0, 2.0, 3.0, -4.0, 1.5});
      const auto src = f.sample(m);
      const auto out = plan.apply(src).values;
      for (std::size_t v = 0; v < m.num_nodes(); ++v) CHECK(std::abs(out[v] - src[v]) <= 1e-9);
    }
  }

  TEST_CASE("constants are preserved by every method") {
    const auto a = gen_icosphere(3);
    const auto b = gen_cubed_sphere(8);
    for (RemapMethod method : {RemapMethod::WlsEnor, RemapMethod::Wls, RemapMethod::Linear}) {
      const RemapPlan plan(a, b, config_for(method));
      const std::vector<double> ones(a.num_nodes(), 1.0);
      const auto res = plan.apply(ones);
      for (double x : res.values) CHECK(std::abs(x - 1.0) <= 1e-10);
      CHECK(res.markers.source_count() == 0);
    }
  }

  TEST_CASE("smooth fields bypass the detector path") {
    const auto a = gen_icosphere(4);
    const auto b = gen_cubed_sphere(13);
    const RemapPlan plan(a, b, config_for(RemapMethod::WlsEnor));
    REQUIRE(plan.detector() != nullptr);
    const auto src = AnalyticField::f1().sample(a);
    const auto res = plan.apply(src);
    CHECK(res.markers.source_count() == 0);
    CHECK(res.markers.target_count() == 0);
    CHECK(res.eno_rows == 0);
    CHECK(res.limiter_activations == 0);
    CHECK(res.values == spmv(plan.smooth_operator(), src));
  }

  TEST_CASE("one-step f3 transfer stays within the field bounds") {
    const auto a = gen_icosphere(5);
    const auto b = gen_cubed_sphere(26);
    const RemapPlan ab(a, b, config_for(RemapMethod::WlsEnor));
    const auto res = ab.apply(AnalyticField::f3().sample(a));
    CHECK(res.markers.source_count() > 0);
    CHECK(res.markers.target_count() > 0);
    const auto [lo, hi] = std::minmax_element(res.values.begin(), res.values.end());
    CHECK(*lo >= 0.12 - 1e-9);
    CHECK(*hi <= 1.0 + 1e-9);
  }

  TEST_CASE("shift and scale equivariance") {
    const auto a = gen_icosphere(4);
    const auto b = gen_cubed_sphere(13);
    const RemapPlan plan(a, b, config_for(RemapMethod::WlsEnor));
    const auto f = AnalyticField::f4().sample(a);
    std::vector<double> g(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) g[i] = 1e-3 * f[i] + 5.0;
    const auto rf = plan.apply(f);
    const auto rg = plan.apply(g);
    CHECK(rf.markers.source == rg.markers.source);
    CHECK(rf.markers.target == rg.markers.target);
    for (std::size_t t = 0; t < b.num_nodes(); ++t) {
      const double expected = 1e-3 * rf.values[t] + 5.0;
      CHECK(std::abs(rg.values[t] - expected) <= 1e-9 * std::abs(expected));
    }
  }

  TEST_CASE("linear interpolation") {
    const auto a = gen_icosphere(2);
    const auto f = AnalyticField::f1().sample(a);
    const auto same = linear_interp_remap(a, a, f);
    for (std::size_t v = 0; v < a.num_nodes(); ++v) CHECK(same[v] == doctest::Approx(f[v]).epsilon(1e-12).scale(1.0));

    const SurfaceMesh tri({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, {Element::triangle(0, 1, 2)}, SurfaceKind::Plane);
    const SurfaceMesh centroid({{1.0 / 3, 1.0 / 3, 0}, {0.5, 0.1, 0}, {0.1, 0.5, 0}}, {Element::triangle(0, 1, 2)},
                               SurfaceKind::Plane);
    const std::vector<double> vals{1, 2, 3};
    CHECK(linear_interp_remap(tri, centroid, vals)[0] == doctest::Approx(2.0));
  }

  TEST_CASE("sphere integration") {
    for (const auto& m : {gen_icosphere(5), gen_cubed_sphere(26)}) {
      for (int p : {2, 4}) {
        const auto w = integration_weights(m, p);
        const std::vector<double> ones(m.num_nodes(), 1.0);
        CHECK(integrate_sphere(w, ones) == doctest::Approx(4 * kPi).epsilon(1e-6));
        std::vector<double> z(m.num_nodes());
        for (std::size_t v = 0; v < m.num_nodes(); ++v) z[v] = m.nodes()[v].z;
        CHECK(std::abs(integrate_sphere(w, z)) < 1e-8);
      }
      CHECK(integrate_sphere(m, AnalyticField::constant(2.0)) == doctest::Approx(8 * kPi).epsilon(1e-6));
    }
    const auto fine = gen_icosphere(6);
    CHECK(std::abs(integrate_sphere(fine, AnalyticField::f2())) <= 1e-5 * 4 * kPi);
    CHECK(integration_degree(4) == 4);
    CHECK(integration_degree(6) == 6);
    CHECK(integration_degree(2) == 2);
    CHECK_THROWS_AS(integration_weights(gen_planar_grid(2, 2, ElementKind::Quad), 2), Error);
  }

  TEST_CASE("conservation error") {
    const auto m = gen_icosphere(5);
    const auto w = integration_weights(m, 4);
    const auto f1 = AnalyticField::f1();
    CHECK(conservation_error(m, w, f1.sample(m), f1) < 1e-6);

    const auto b = gen_cubed_sphere(26);
    const RemapPlan ab(m, b, config_for(RemapMethod::WlsEnor));
    const RemapPlan ba(b, m, config_for(RemapMethod::WlsEnor));
    const std::vector<double> c(m.num_nodes(), 3.0);
    const auto back = ba.apply(ab.apply(c).values).values;
    CHECK(conservation_error(m, w, back, AnalyticField::constant(3.0)) <= 1e-8 * 4 * kPi * 3.0);
  }

  TEST_CASE("constant survives many round trips") {
    const auto a = gen_icosphere(2);
    const auto b = gen_cubed_sphere(6);
    for (RemapMethod method : {RemapMethod::WlsEnor, RemapMethod::Wls, RemapMethod::Linear}) {
      const RemapPlan ab(a, b, config_for(method, 2));
      const RemapPlan ba(b, a, config_for(method, 2));
      const std::vector<double> c(a.num_nodes(), 7.0);
      const auto res = repeated_transfer(ab, ba, c, 1000);
      CHECK(res.records.size() == 1000);
      for (double x : res.final_values) CHECK(std::abs(x - 7.0) <= 1e-8);
    }
  }

  TEST_CASE("repeated transfer records") {
    const auto a = gen_icosphere(3);
    const auto b = gen_cubed_sphere(8);
    const RemapPlan ab(a, b);
    const RemapPlan ba(b, a);
    const auto f3 = AnalyticField::f3();
    const auto w = integration_weights(a, 4);
    RepeatOptions opts;
    opts.exact = &f3;
    opts.weights = w;
    int calls = 0;
    opts.on_step = [&](int, std::span<const double>) { ++calls; };
    const auto res = repeated_transfer(ab, ba, f3.sample(a), 3, opts);
    REQUIRE(res.records.size() == 3);
    CHECK(calls == 3);
    CHECK(res.records[0].step == 1);
    CHECK(res.records[2].error.l2 > 0.0);
    const auto [lo, hi] = std::minmax_element(res.final_values.begin(), res.final_values.end());
    CHECK(res.records[2].min == *lo);
    CHECK(res.records[2].max == *hi);
    CHECK(res.records[2].integral == doctest::Approx(integrate_sphere(w, res.final_values)));
    CHECK_THROWS_AS(repeated_transfer(ab, ba, f3.sample(a), 0), Error);
    CHECK_THROWS_AS(repeated_transfer(ab, ab, f3.sample(a), 1), Error);
  }

  TEST_CASE("plan save and load") {
    const auto a = gen_icosphere(3);
    const auto b = gen_cubed_sphere(8);
    const RemapPlan plan(a, b);
    std::stringstream ss;
    plan.save(ss);
    const RemapPlan loaded = RemapPlan::load(ss, a, b);
    CHECK(loaded.config().degree == plan.config().degree);
    CHECK(loaded.smooth_operator().nonzeros() == plan.smooth_operator().nonzeros());
    const auto f = AnalyticField::f3().sample(a);
    const auto r1 = plan.apply(f);
    const auto r2 = loaded.apply(f);
    CHECK(r1.values == r2.values);
    CHECK(r1.markers.target == r2.markers.target);

    std::stringstream again;
    plan.save(again);
    const auto other = gen_cubed_sphere(9);
    CHECK_THROWS_AS(RemapPlan::load(again, a, other), Error);
    std::stringstream junk("definitely not a plan");
    CHECK_THROWS_AS(RemapPlan::load(junk, a, b), Error);
  }

  TEST_CASE("input validation") {
    const auto a = gen_icosphere(2);
    const auto b = gen_cubed_sphere(5);
    const RemapPlan plan(a, b, config_for(RemapMethod::Wls, 2));
    std::vector<double> bad(a.num_nodes(), 1.0);
    bad[3] = std::numeric_limits<double>::quiet_NaN();
    try {
      plan.apply(bad);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::NonFinite);
      CHECK(e.is_numerical());
    }
    const std::vector<double> shorter(5, 1.0);
    try {
      plan.apply(shorter);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::DimensionMismatch);
      CHECK_FALSE(e.is_numerical());
    }
    CHECK_THROWS_AS(RemapPlan(a, b, config_for(RemapMethod::Wls, 12)), Error);
  }

  TEST_CASE("plan diagnostics") {
    const auto a = gen_icosphere(4);
    const auto b = gen_cubed_sphere(13);
    const RemapPlan plan(a, b, config_for(RemapMethod::Wls, 6));
    const auto& d = plan.diagnostics();
    CHECK(d.min_final_degree >= 1);
    CHECK(d.max_cond_estimate <= 1e8);
    CHECK(plan.stencils().rows() == b.num_nodes());
    CHECK(plan.locations().size() == b.num_nodes());
  }
}
