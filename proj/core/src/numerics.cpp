#include "wlsremap/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "wlsremap/error.hpp"

namespace wlsr {

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

double DenseMatrix::max_abs() const {
  double m = 0.0;
  for (double x : data_) m = std::max(m, std::abs(x));
  return m;
}

DenseMatrix multiply(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) throw Error(ErrorCode::DimensionMismatch, "matrix product shapes");
  DenseMatrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  }
  return c;
}

DenseMatrix transpose(const DenseMatrix& a) {
  DenseMatrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  }
  return t;
}

// ---------------------------------------------------------------------------
// QRCP

QrcpFactors qrcp(const DenseMatrix& a, std::size_t fixed_leading) {
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  if (m == 0 || n == 0) throw Error(ErrorCode::InvalidArgument, "qrcp of an empty matrix");
  for (double x : a.data()) {
    if (!std::isfinite(x)) throw Error(ErrorCode::NonFinite, "qrcp input contains non-finite entries");
  }
  const std::size_t k = std::min(m, n);

  // Column-major working copy: w[j*m + i].
  std::vector<double> w(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) w[j * m + i] = a(i, j);
  }
  auto col = [&](std::size_t j) { return w.data() + j * m; };
  auto tail_norm = [&](std::size_t j, std::size_t from) {
    double s = 0.0;
    const double* c = col(j);
    for (std::size_t i = from; i < m; ++i) s += c[i] * c[i];
    return std::sqrt(s);
  };

  std::vector<std::size_t> perm(n);
  for (std::size_t j = 0; j < n; ++j) perm[j] = j;
  std::vector<double> vn1(n), vn2(n);
  for (std::size_t j = 0; j < n; ++j) vn1[j] = vn2[j] = tail_norm(j, 0);

  std::vector<double> tau(k, 0.0);
  const double tol3z = std::sqrt(std::numeric_limits<double>::epsilon());

  for (std::size_t i = 0; i < k; ++i) {
    if (i >= fixed_leading) {
      std::size_t pvt = i;
      for (std::size_t j = i + 1; j < n; ++j) {
        if (vn1[j] > vn1[pvt]) pvt = j;
      }
      if (pvt != i) {
        std::swap_ranges(col(i), col(i) + m, col(pvt));
        std::swap(perm[i], perm[pvt]);
        std::swap(vn1[i], vn1[pvt]);
        std::swap(vn2[i], vn2[pvt]);
      }
    }

    // Householder reflector zeroing w[i+1:m, i].
    double* ci = col(i);
    const double alpha = ci[i];
    const double xnorm = tail_norm(i, i + 1);
    if (xnorm != 0.0) {
      const double beta = -std::copysign(std::hypot(alpha, xnorm), alpha);
      tau[i] = (beta - alpha) / beta;
      const double scale = 1.0 / (alpha - beta);
      for (std::size_t r = i + 1; r < m; ++r) ci[r] *= scale;
      ci[i] = beta;
      // Apply H = I - tau v v^T, v = [1; ci[i+1:m]], to trailing columns.
      for (std::size_t j = i + 1; j < n; ++j) {
        double* cj = col(j);
        double s = cj[i];
        for (std::size_t r = i + 1; r < m; ++r) s += ci[r] * cj[r];
        s *= tau[i];
        cj[i] -= s;
        for (std::size_t r = i + 1; r < m; ++r) cj[r] -= s * ci[r];
      }
    }

    for (std::size_t j = i + 1; j < n; ++j) {
      if (vn1[j] == 0.0) continue;
      double t = std::abs(col(j)[i]) / vn1[j];
      t = std::max(0.0, (1.0 + t) * (1.0 - t));
      const double ratio = vn1[j] / vn2[j];
      if (t * ratio * ratio <= tol3z) {
        vn1[j] = vn2[j] = tail_norm(j, i + 1);
      } else {
        vn1[j] *= std::sqrt(t);
      }
    }
  }

  QrcpFactors f;
  f.perm = std::move(perm);
  f.r = DenseMatrix(k, n);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i; j < n; ++j) f.r(i, j) = col(j)[i];
  }
  // Q = H_0 H_1 ... H_{k-1} applied to the first k columns of the identity.
  std::vector<double> q(m * k, 0.0);  // column-major
  for (std::size_t j = 0; j < k; ++j) q[j * m + j] = 1.0;
  for (std::size_t ii = k; ii-- > 0;) {
    if (tau[ii] == 0.0) continue;
    const double* v = col(ii);
    for (std::size_t j = ii; j < k; ++j) {
      double* qj = q.data() + j * m;
      double s = qj[ii];
      for (std::size_t r = ii + 1; r < m; ++r) s += v[r] * qj[r];
      s *= tau[ii];
      qj[ii] -= s;
      for (std::size_t r = ii + 1; r < m; ++r) qj[r] -= s * v[r];
    }
  }
  f.q = DenseMatrix(m, k);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < k; ++j) f.q(i, j) = q[j * m + i];
  }

  const double r00 = std::abs(f.r(0, 0));
  const double cutoff = static_cast<double>(std::max(m, n)) * std::numeric_limits<double>::epsilon() * r00;
  f.numerical_rank = 0;
  for (std::size_t i = 0; i < k; ++i) {
    if (std::abs(f.r(i, i)) > cutoff) ++f.numerical_rank;
  }
  return f;
}

// ---------------------------------------------------------------------------
// Condition estimation

namespace {

// Solves R(0:n,0:n) y = b in place.
void back_substitute(const DenseMatrix& r, std::size_t n, std::vector<double>& b) {
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t j = i + 1; j < n; ++j) s -= r(i, j) * b[j];
    b[i] = s / r(i, i);
  }
}

// Solves R(0:n,0:n)^T y = b in place.
void forward_substitute_transposed(const DenseMatrix& r, std::size_t n, std::vector<double>& b) {
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t j = 0; j < i; ++j) s -= r(j, i) * b[j];
    b[i] = s / r(i, i);
  }
}

double norm1(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += std::abs(v);
  return s;
}

}  // namespace

double cond_estimate_1norm(const DenseMatrix& r, std::size_t order) {
  const std::size_t n = std::min({order, r.rows(), r.cols()});
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "condition estimate of an empty matrix");
  for (std::size_t i = 0; i < n; ++i) {
    if (r(i, i) == 0.0) return std::numeric_limits<double>::infinity();
  }
  double r_norm = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i <= j; ++i) s += std::abs(r(i, j));
    r_norm = std::max(r_norm, s);
  }

  // Hager's method with Higham's refinements for ||R^-1||_1.
  std::vector<double> x(n, 1.0 / static_cast<double>(n));
  std::vector<double> y, z;
  double est = 0.0;
  std::size_t last_j = n;
  for (int iter = 0; iter < 5; ++iter) {
    y = x;
    back_substitute(r, n, y);
    const double ny = norm1(y);
    if (iter > 0 && ny <= est) break;
    est = ny;
    z.resize(n);
    for (std::size_t i = 0; i < n; ++i) z[i] = y[i] >= 0.0 ? 1.0 : -1.0;
    forward_substitute_transposed(r, n, z);
    std::size_t j = 0;
    for (std::size_t i = 1; i < n; ++i) {
      if (std::abs(z[i]) > std::abs(z[j])) j = i;
    }
    double ztx = 0.0;
    for (std::size_t i = 0; i < n; ++i) ztx += z[i] * x[i];
    if (iter > 0 && (std::abs(z[j]) <= ztx || j == last_j)) break;
    std::fill(x.begin(), x.end(), 0.0);
    x[j] = 1.0;
    last_j = j;
  }
  // Alternating-sign probe guards against the cases Hager's method misses.
  std::vector<double> alt(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double mag = 1.0 + (n > 1 ? static_cast<double>(i) / static_cast<double>(n - 1) : 0.0);
    alt[i] = (i % 2 == 0) ? mag : -mag;
  }
  back_substitute(r, n, alt);
  est = std::max(est, 2.0 * norm1(alt) / (3.0 * static_cast<double>(n)));
  return r_norm * est;
}

// ---------------------------------------------------------------------------
// Truncated solves

namespace {

void check_truncation(const QrcpFactors& f, std::span<const double> col_scaling, std::size_t drop_to) {
  const std::size_t n = f.r.cols();
  if (col_scaling.size() != n) throw Error(ErrorCode::DimensionMismatch, "column scaling length");
  if (drop_to == 0 || drop_to > f.rank_bound()) {
    throw Error(ErrorCode::InvalidArgument, "retained column count out of range");
  }
  for (std::size_t i = 0; i < drop_to; ++i) {
    if (f.r(i, i) == 0.0) throw Error(ErrorCode::Singular, "zero diagonal in retained R block");
  }
}

}  // namespace

std::vector<double> solve_truncated(const QrcpFactors& f, std::span<const double> col_scaling,
                                    std::span<const double> rhs, std::size_t drop_to) {
  check_truncation(f, col_scaling, drop_to);
  const std::size_t m = f.q.rows();
  if (rhs.size() != m) throw Error(ErrorCode::DimensionMismatch, "rhs length");
  std::vector<double> y(drop_to, 0.0);
  for (std::size_t j = 0; j < drop_to; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) s += f.q(i, j) * rhs[i];
    y[j] = s;
  }
  back_substitute(f.r, drop_to, y);
  std::vector<double> x(f.r.cols(), 0.0);
  for (std::size_t i = 0; i < drop_to; ++i) x[f.perm[i]] = col_scaling[f.perm[i]] * y[i];
  return x;
}

std::vector<double> solution_functional(const QrcpFactors& f, std::span<const double> col_scaling,
                                        std::span<const double> functional, std::size_t drop_to) {
  check_truncation(f, col_scaling, drop_to);
  if (functional.size() != f.r.cols()) throw Error(ErrorCode::DimensionMismatch, "functional length");
  std::vector<double> w(drop_to);
  for (std::size_t i = 0; i < drop_to; ++i) w[i] = functional[f.perm[i]] * col_scaling[f.perm[i]];
  forward_substitute_transposed(f.r, drop_to, w);
  const std::size_t m = f.q.rows();
  std::vector<double> g(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < drop_to; ++j) s += f.q(i, j) * w[j];
    g[i] = s;
  }
  return g;
}

// ---------------------------------------------------------------------------
// Sparse operators

SparseOperator::SparseOperator(std::size_t rows, std::size_t cols, std::vector<std::int64_t> offsets,
                               std::vector<std::int32_t> indices, std::vector<double> values)
    : rows_(rows), cols_(cols), offsets_(std::move(offsets)), indices_(std::move(indices)),
      values_(std::move(values)) {
  if (offsets_.size() != rows_ + 1 || offsets_.front() != 0 ||
      static_cast<std::size_t>(offsets_.back()) != indices_.size() || indices_.size() != values_.size()) {
    throw Error(ErrorCode::InvalidArgument, "inconsistent CSR arrays");
  }
  for (std::size_t r = 0; r < rows_; ++r) {
    if (offsets_[r + 1] < offsets_[r]) throw Error(ErrorCode::InvalidArgument, "CSR offsets decrease");
    for (auto k = offsets_[r]; k < offsets_[r + 1]; ++k) {
      const auto c = indices_[static_cast<std::size_t>(k)];
      if (c < 0 || static_cast<std::size_t>(c) >= cols_) {
        throw Error(ErrorCode::InvalidArgument, "CSR column index out of bounds");
      }
      if (k > offsets_[r] && indices_[static_cast<std::size_t>(k - 1)] >= c) {
        throw Error(ErrorCode::InvalidArgument, "CSR column indices not strictly increasing");
      }
    }
  }
}

SparseOperator SparseOperator::from_rows(std::size_t cols, std::vector<std::vector<Entry>> rows) {
  std::vector<std::int64_t> offsets(rows.size() + 1, 0);
  std::vector<std::int32_t> indices;
  std::vector<double> values;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    auto& entries = rows[r];
    std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) { return a.first < b.first; });
    for (std::size_t k = 0; k < entries.size(); ++k) {
      if (!indices.empty() && static_cast<std::int64_t>(indices.size()) > offsets[r] &&
          indices.back() == entries[k].first) {
        values.back() += entries[k].second;
      } else {
        indices.push_back(entries[k].first);
        values.push_back(entries[k].second);
      }
    }
    offsets[r + 1] = static_cast<std::int64_t>(indices.size());
  }
  return SparseOperator(rows.size(), cols, std::move(offsets), std::move(indices), std::move(values));
}

SparseOperator SparseOperator::identity(std::size_t n) {
  std::vector<std::int64_t> offsets(n + 1);
  std::vector<std::int32_t> indices(n);
  for (std::size_t i = 0; i <= n; ++i) offsets[i] = static_cast<std::int64_t>(i);
  for (std::size_t i = 0; i < n; ++i) indices[i] = static_cast<std::int32_t>(i);
  return SparseOperator(n, n, std::move(offsets), std::move(indices), std::vector<double>(n, 1.0));
}

std::span<const std::int32_t> SparseOperator::row_indices(std::size_t i) const {
  const auto b = static_cast<std::size_t>(offsets_[i]);
  const auto e = static_cast<std::size_t>(offsets_[i + 1]);
  return {indices_.data() + b, e - b};
}

std::span<const double> SparseOperator::row_values(std::size_t i) const {
  const auto b = static_cast<std::size_t>(offsets_[i]);
  const auto e = static_cast<std::size_t>(offsets_[i + 1]);
  return {values_.data() + b, e - b};
}

double row_dot(const SparseOperator& op, std::size_t row, std::span<const double> x) {
  const auto idx = op.row_indices(row);
  const auto val = op.row_values(row);
  double s = 0.0;
  for (std::size_t k = 0; k < idx.size(); ++k) s += val[k] * x[static_cast<std::size_t>(idx[k])];
  return s;
}

std::vector<double> spmv(const SparseOperator& op, std::span<const double> x) {
  if (x.size() != op.cols()) {
    throw Error(ErrorCode::DimensionMismatch,
                "spmv: vector length " + std::to_string(x.size()) + " vs " + std::to_string(op.cols()) + " columns");
  }
  std::vector<double> y(op.rows());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(op.rows()); ++i) {
    y[static_cast<std::size_t>(i)] = row_dot(op, static_cast<std::size_t>(i), x);
  }
  return y;
}

}  // namespace wlsr
