#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "wlsremap/numerics.hpp"

using namespace wlsr;

namespace {

DenseMatrix random_matrix(std::size_t m, std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  DenseMatrix a(m, n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) = u(rng);
  return a;
}

DenseMatrix permuted(const DenseMatrix& a, const std::vector<std::size_t>& perm) {
  DenseMatrix out(a.rows(), perm.size());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < perm.size(); ++j) out(i, j) = a(i, perm[j]);
  return out;
}

double max_diff(const DenseMatrix& a, const DenseMatrix& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) d = std::max(d, std::abs(a(i, j) - b(i, j)));
  return d;
}

// Gaussian elimination with partial pivoting; returns x with A x = b.
std::vector<double> dense_solve(DenseMatrix a, std::vector<double> b) {
  const std::size_t n = a.rows();
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(a(i, k)) > std::abs(a(p, k))) p = i;
    for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(p, j));
    std::swap(b[k], b[p]);
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = a(i, k) / a(k, k);
      for (std::size_t j = k; j < n; ++j) a(i, j) -= f * a(k, j);
      b[i] -= f * b[k];
    }
  }
  std::vector<double> x(n);
  for (std::size_t k = n; k-- > 0;) {
    double s = b[k];
    for (std::size_t j = k + 1; j < n; ++j) s -= a(k, j) * x[j];
    x[k] = s / a(k, k);
  }
  return x;
}

double residual_norm(const DenseMatrix& a, const std::vector<double>& x, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double r = -b[i];
    for (std::size_t j = 0; j < a.cols(); ++j) r += a(i, j) * x[j];
    s += r * r;
  }
  return std::sqrt(s);
}

double one_norm(const DenseMatrix& a) {
  double best = 0.0;
  for (std::size_t j = 0; j < a.cols(); ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) s += std::abs(a(i, j));
    best = std::max(best, s);
  }
  return best;
}

}  // namespace

TEST_SUITE("numerics") {
  TEST_CASE("qrcp of the identity") {
    const auto f = qrcp(DenseMatrix::identity(3));
    CHECK(max_diff(f.q, DenseMatrix::identity(3)) < 1e-15);
    CHECK(max_diff(f.r, DenseMatrix::identity(3)) < 1e-15);
    CHECK(f.perm == std::vector<std::size_t>{0, 1, 2});
    CHECK(f.numerical_rank == 3);
  }

  TEST_CASE("qrcp pivots by column norm") {
    DenseMatrix a(3, 3);
    a(0, 0) = 1.0;
    a(1, 1) = 3.0;
    a(2, 2) = 2.0;
    const auto f = qrcp(a);
    CHECK(f.perm[0] == 1);
    CHECK(f.perm[1] == 2);
    CHECK(f.perm[2] == 0);
    CHECK(std::abs(f.r(0, 0)) == doctest::Approx(3.0));
    CHECK(std::abs(f.r(1, 1)) == doctest::Approx(2.0));
    CHECK(std::abs(f.r(2, 2)) == doctest::Approx(1.0));
  }

  TEST_CASE("qrcp keeps fixed leading columns in place") {
    DenseMatrix a(4, 3);
    for (std::size_t i = 0; i < 4; ++i) {
      a(i, 0) = 1e-3;
      a(i, 1) = static_cast<double>(i);
      a(i, 2) = 10.0 * static_cast<double>(i * i);
    }
    const auto f = qrcp(a, 1);
    CHECK(f.perm[0] == 0);
  }

  TEST_CASE("qrcp reconstruction residual") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
      const auto a = random_matrix(20, 6, rng);
      const auto f = qrcp(a);
      const auto ap = permuted(a, f.perm);
      CHECK(max_diff(ap, multiply(f.q, f.r)) < 5e-14 * a.max_abs());
      const auto qtq = multiply(transpose(f.q), f.q);
      CHECK(max_diff(qtq, DenseMatrix::identity(6)) < 1e-14);
      for (std::size_t i = 1; i < 6; ++i) CHECK(std::abs(f.r(i, i)) <= std::abs(f.r(i - 1, i - 1)) * (1 + 1e-12));
    }
  }

  TEST_CASE("condition estimate") {
    CHECK(cond_estimate_1norm(DenseMatrix::identity(4)) == doctest::Approx(1.0));
    DenseMatrix d(2, 2);
    d(0, 0) = 1.0;
    d(1, 1) = 1e-8;
    const double c = cond_estimate_1norm(d);
    CHECK(c >= 1e8 / 3.0);
    CHECK(c <= 3e8);
    DenseMatrix z(2, 2);
    z(0, 0) = 1.0;
    CHECK(std::isinf(cond_estimate_1norm(z)));

    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 50; ++trial) {
      auto r = random_matrix(6, 6, rng);
      for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t j = 0; j < i; ++j) r(i, j) = 0.0;
      DenseMatrix inv(6, 6);
      for (std::size_t j = 0; j < 6; ++j) {
        std::vector<double> e(6, 0.0);
        e[j] = 1.0;
        const auto col = dense_solve(r, e);
        for (std::size_t i = 0; i < 6; ++i) inv(i, j) = col[i];
      }
      const double exact = one_norm(r) * one_norm(inv);
      const double est = cond_estimate_1norm(r);
      CHECK(est <= exact * (1 + 1e-10));
      CHECK(est >= exact / 3.0);
    }
  }

  TEST_CASE("square solve") {
    std::mt19937_64 rng(5);
    const auto a = random_matrix(5, 5, rng);
    const std::vector<double> b{1, 2, 3, 4, 5};
    const auto f = qrcp(a);
    const std::vector<double> ones(5, 1.0);
    const auto x = solve_truncated(f, ones, b, 5);
    CHECK(residual_norm(a, x, b) < 1e-12);
  }

  TEST_CASE("overdetermined consistent solve recovers the coefficients") {
    std::mt19937_64 rng(6);
    const auto a = random_matrix(12, 4, rng);
    const std::vector<double> x0{0.5, -2.0, 3.0, 1.25};
    std::vector<double> b(12, 0.0);
    for (std::size_t i = 0; i < 12; ++i)
      for (std::size_t j = 0; j < 4; ++j) b[i] += a(i, j) * x0[j];
    const std::vector<double> scale{2.0, 0.5, 1.0, 4.0};
    DenseMatrix as(12, 4);
    for (std::size_t i = 0; i < 12; ++i)
      for (std::size_t j = 0; j < 4; ++j) as(i, j) = a(i, j) * scale[j];
    // Factor the scaled matrix; the returned coefficients are in unscaled units.
    const auto fs = qrcp(as);
    const auto x = solve_truncated(fs, scale, b, 4);
    for (std::size_t j = 0; j < 4; ++j) CHECK(x[j] == doctest::Approx(x0[j]).epsilon(1e-10));
  }

  TEST_CASE("rank deficient solve matches the reduced least-squares residual") {
    std::mt19937_64 rng(8);
    const auto base = random_matrix(10, 3, rng);
    DenseMatrix a(10, 4);
    for (std::size_t i = 0; i < 10; ++i) {
      for (std::size_t j = 0; j < 3; ++j) a(i, j) = base(i, j);
      a(i, 3) = base(i, 1);
    }
    std::vector<double> b(10);
    std::uniform_real_distribution<double> u(-1, 1);
    for (double& x : b) x = u(rng);
    const auto f = qrcp(a);
    CHECK(f.numerical_rank == 3);
    const std::vector<double> ones(4, 1.0);
    const auto x = solve_truncated(f, ones, b, 3);

    // Normal equations on the independent block.
    const auto ata = multiply(transpose(base), base);
    std::vector<double> atb(3, 0.0);
    for (std::size_t j = 0; j < 3; ++j)
      for (std::size_t i = 0; i < 10; ++i) atb[j] += base(i, j) * b[i];
    const auto y = dense_solve(ata, atb);
    CHECK(residual_norm(a, x, b) == doctest::Approx(residual_norm(base, y, b)).epsilon(1e-10));
  }

  TEST_CASE("solution functional reproduces the fitted evaluation") {
    std::mt19937_64 rng(9);
    const auto a = random_matrix(9, 4, rng);
    const auto f = qrcp(a);
    const std::vector<double> ones(4, 1.0);
    const std::vector<double> functional{1.0, 0.3, -0.2, 0.7};
    const auto g = solution_functional(f, ones, functional, 4);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int trial = 0; trial < 5; ++trial) {
      std::vector<double> b(9);
      for (double& x : b) x = u(rng);
      const auto x = solve_truncated(f, ones, b, 4);
      double lhs = 0.0, rhs = 0.0;
      for (std::size_t j = 0; j < 4; ++j) lhs += functional[j] * x[j];
      for (std::size_t i = 0; i < 9; ++i) rhs += g[i] * b[i];
      CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
    }
  }

  TEST_CASE("sparse identity and row sums") {
    const auto id = SparseOperator::identity(4);
    const std::vector<double> x{1.5, -2.0, 3.0, 0.25};
    CHECK(spmv(id, x) == x);

    std::vector<std::vector<SparseOperator::Entry>> rows(1);
    for (std::int32_t j = 0; j < 4; ++j) rows[0].push_back({j, 1.0});
    const auto ones = SparseOperator::from_rows(4, rows);
    CHECK(spmv(ones, x)[0] == doctest::Approx(2.75));
    CHECK(row_dot(ones, 0, x) == doctest::Approx(2.75));
  }

  TEST_CASE("from_rows sorts and merges duplicates") {
    std::vector<std::vector<SparseOperator::Entry>> rows{{{3, 1.0}, {1, 2.0}, {3, 0.5}}};
    const auto op = SparseOperator::from_rows(5, rows);
    const auto idx = op.row_indices(0);
    const auto val = op.row_values(0);
    REQUIRE(idx.size() == 2);
    CHECK(idx[0] == 1);
    CHECK(idx[1] == 3);
    CHECK(val[1] == doctest::Approx(1.5));
  }

  TEST_CASE("sparse product against a dense oracle") {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(-1, 1);
    std::bernoulli_distribution keep(0.2);
    DenseMatrix dense(50, 30);
    std::vector<std::vector<SparseOperator::Entry>> rows(50);
    for (std::size_t i = 0; i < 50; ++i) {
      for (std::int32_t j = 0; j < 30; ++j) {
        if (keep(rng)) {
          dense(i, static_cast<std::size_t>(j)) = u(rng);
          rows[i].push_back({j, dense(i, static_cast<std::size_t>(j))});
        }
      }
    }
    const auto op = SparseOperator::from_rows(30, rows);
    std::vector<double> x(30);
    for (double& v : x) v = u(rng);
    const auto y = spmv(op, x);
    double xmax = 0.0;
    for (double v : x) xmax = std::max(xmax, std::abs(v));
    for (std::size_t i = 0; i < 50; ++i) {
      double s = 0.0, rs = 0.0;
      for (std::size_t j = 0; j < 30; ++j) {
        s += dense(i, j) * x[j];
        rs += std::abs(dense(i, j));
      }
      CHECK(std::abs(y[i] - s) <= 1e-14 * xmax * std::max(rs, 1.0) + 1e-300);
    }
  }
}
