#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <vector>

#include "doctest.h"
#include "wlsremap/detector.hpp"
#include "wlsremap/fields.hpp"
#include "wlsremap/mesh.hpp"
#include "wlsremap/numerics.hpp"

using namespace wlsr;

namespace {

constexpr double kPi = std::numbers::pi;

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

TEST_SUITE("detector") {
  TEST_CASE("alpha vanishes for linear fields on a plane") {
    for (ElementKind kind : {ElementKind::Triangle, ElementKind::Quad}) {
      const auto m = gen_planar_grid(10, 10, kind);
      const auto op = build_alpha_operator(m);
      CHECK(op.rows() == m.num_elements());
      CHECK(op.cols() == m.num_nodes());
      std::vector<double> f(m.num_nodes());
      for (std::size_t v = 0; v < m.num_nodes(); ++v) f[v] = 2.0 - 3.0 * m.nodes()[v].x + 0.5 * m.nodes()[v].y;
      CHECK(max_abs(spmv(op, f)) < 1e-12);
    }
  }

  TEST_CASE("alpha vanishes for constants on spheres") {
    for (const auto& m : {gen_icosphere(3), gen_cubed_sphere(8)}) {
      const auto op = build_alpha_operator(m);
      const std::vector<double> c(m.num_nodes(), 4.2);
      CHECK(max_abs(spmv(op, c)) < 1e-12);
    }
  }

  TEST_CASE("beta of a constant field is zero") {
    const auto m = gen_icosphere(2);
    const std::vector<double> alpha(m.num_elements(), 0.0);
    for (double b : compute_beta(m, alpha, 0.0, 0.1)) CHECK(b == 0.0);
  }

  TEST_CASE("beta with equal incident alpha is zero") {
    const auto m = gen_icosphere(2);
    const std::vector<double> alpha(m.num_elements(), 0.37);
    for (double b : compute_beta(m, alpha, 1.0, 0.1)) CHECK(b == doctest::Approx(0.0).scale(1.0));
  }

  TEST_CASE("beta with alternating incident alpha is governed by the safeguard") {
    const auto m = gen_icosphere(2);
    const NodeId v = 20;
    const auto inc = m.incident_elements(v);
    REQUIRE(inc.size() == 6);
    std::vector<double> alpha(m.num_elements(), 0.0);
    const double a = 0.5;
    for (std::size_t i = 0; i < inc.size(); ++i) alpha[static_cast<std::size_t>(inc[i])] = i % 2 == 0 ? a : -a;
    const double dfg = 1.0, h = 0.1, eps = 1e-3;
    const auto beta = compute_beta(m, alpha, dfg, h, eps);
    const double safeguard = eps * dfg * h * h;
    CHECK(beta[static_cast<std::size_t>(v)] == doctest::Approx(6 * a / safeguard).epsilon(1e-12));
    const auto beta_small = compute_beta(m, alpha, dfg, h, 1e-9);
    CHECK(beta_small[static_cast<std::size_t>(v)] > 1e3 * beta[static_cast<std::size_t>(v)]);
  }

  TEST_CASE("kappa gate blocks every marker") {
    const auto m = gen_icosphere(2);
    IndicatorField ind;
    ind.alpha.assign(m.num_elements(), 1e6);
    ind.beta.assign(m.num_nodes(), 0.2);
    ind.max_abs_alpha.assign(m.num_nodes(), 1e6);
    ind.delta_f_local.assign(m.num_nodes(), 1.0);
    ind.delta_f_global = 1.0;
    const auto h = local_edge_lengths(m);
    const auto marks = dual_threshold(m, ind, h, 0.1, DetectorConfig{});
    CHECK(std::count(marks.begin(), marks.end(), 1) == 0);
    ind.beta.assign(m.num_nodes(), 0.4);
    const auto all = dual_threshold(m, ind, h, 0.1, DetectorConfig{});
    CHECK(static_cast<std::size_t>(std::count(all.begin(), all.end(), 1)) == m.num_nodes());
  }

  TEST_CASE("threshold combines local and global scales") {
    const auto m = gen_icosphere(2);
    IndicatorField ind;
    ind.alpha.assign(m.num_elements(), 0.0);
    ind.beta.assign(m.num_nodes(), 0.0);
    ind.max_abs_alpha.assign(m.num_nodes(), 0.0);
    ind.delta_f_local.assign(m.num_nodes(), 2.0);
    ind.delta_f_global = 3.0;
    const std::vector<double> h(m.num_nodes(), 0.04);
    std::vector<double> tau;
    dual_threshold(m, ind, h, 0.05, DetectorConfig{}, &tau);
    const double expected = std::max(0.5 * 2.0 * std::sqrt(0.04), 0.05 * 3.0 * std::pow(0.05, 1.5));
    for (double t : tau) CHECK(t == doctest::Approx(expected));
  }

  TEST_CASE("local ranges") {
    const auto m = gen_planar_grid(4, 4, ElementKind::Quad);
    std::vector<double> f(m.num_nodes(), 0.0);
    f[12] = 5.0;  // grid center
    const auto r = local_ranges(m, f, 1.0);
    CHECK(r[12] == 5.0);
    CHECK(r[0] == 0.0);
    CHECK(r[6] == 5.0);
  }

  TEST_CASE("local edge lengths on a uniform grid") {
    const auto m = gen_planar_grid(5, 5, ElementKind::Quad);
    for (double h : local_edge_lengths(m)) CHECK(h == doctest::Approx(0.2));
  }

  TEST_CASE("marker transfer") {
    std::vector<std::vector<SparseOperator::Entry>> rows{{{0, 1}, {1, 1}}, {{1, 1}, {2, 1}}, {{3, 1}}, {{0, 1}, {3, 1}}};
    const auto st = SparseOperator::from_rows(4, rows);
    const std::vector<std::uint8_t> none(4, 0), all(4, 1);
    for (auto t : transfer_markers(none, st)) CHECK(t == 0);
    for (auto t : transfer_markers(all, st)) CHECK(t == 1);
    for (std::int32_t s = 0; s < 4; ++s) {
      std::vector<std::uint8_t> one(4, 0);
      one[static_cast<std::size_t>(s)] = 1;
      const auto t = transfer_markers(one, st);
      for (std::size_t row = 0; row < rows.size(); ++row) {
        const auto idx = st.row_indices(row);
        const bool contains = std::find(idx.begin(), idx.end(), s) != idx.end();
        CHECK(static_cast<bool>(t[row]) == contains);
      }
    }
  }

  TEST_CASE("smooth fields produce no markers") {
    for (const auto& m : {gen_icosphere(4), gen_icosphere(5), gen_cubed_sphere(13), gen_cubed_sphere(26)}) {
      const Detector det(m);
      for (const auto& f : {AnalyticField::f1(), AnalyticField::f2()}) {
        const auto marks = det.mark(det.indicators(f.sample(m)));
        CHECK(std::count(marks.begin(), marks.end(), 1) == 0);
      }
    }
  }

  TEST_CASE("f3 markers stay near the breakpoints") {
    const auto m = gen_icosphere(7);
    const Detector det(m);
    const auto marks = det.mark(det.indicators(AnalyticField::f3().sample(m)));
    const double breaks[] = {0.87, kPi / 2, 2.27, 2.83};
    const double h = det.h_global();
    std::size_t near[4] = {0, 0, 0, 0};
    for (std::size_t v = 0; v < m.num_nodes(); ++v) {
      if (!marks[v]) continue;
      const double theta = to_spherical(m.nodes()[v]).theta;
      double d = kPi;
      for (int i = 0; i < 4; ++i) {
        const double di = std::abs(theta - breaks[i]);
        d = std::min(d, di);
        if (di <= h) ++near[i];
      }
      CHECK(d <= 3.0 * h);
    }
    for (std::size_t count : near) CHECK(count > 0);
  }

  TEST_CASE("f4 C2 band is not marked") {
    const auto m = gen_icosphere(7);
    const Detector det(m);
    const auto marks = det.mark(det.indicators(AnalyticField::f4().sample(m)));
    const double h = det.h_global();
    std::size_t c2 = 0, total = 0;
    for (std::size_t v = 0; v < m.num_nodes(); ++v) {
      if (!marks[v]) continue;
      ++total;
      const auto s = to_spherical(m.nodes()[v]);
      const double d_phi = std::min({std::abs(s.phi - kPi), s.phi, 2 * kPi - s.phi});
      if (std::abs(s.theta - 7 * kPi / 8) <= h && d_phi * std::sin(s.theta) > 6 * h) ++c2;
    }
    CHECK(total > 0);
    CHECK(c2 == 0);
  }

  TEST_CASE("indicators are shift and scale equivariant") {
    const auto m = gen_icosphere(4);
    const Detector det(m);
    const auto f = AnalyticField::f4().sample(m);
    std::vector<double> g(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) g[i] = 1e-3 * f[i] + 5.0;
    const auto a = det.indicators(f);
    const auto b = det.indicators(g);
    CHECK(b.delta_f_global == doctest::Approx(1e-3 * a.delta_f_global));
    for (std::size_t e = 0; e < a.alpha.size(); ++e) {
      CHECK(std::abs(b.alpha[e] - 1e-3 * a.alpha[e]) <= 1e-9 * a.delta_f_global * 1e-3);
    }
    CHECK(det.mark(a) == det.mark(b));
  }
}
