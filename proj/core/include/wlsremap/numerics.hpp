#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <utility>
#include <vector>

namespace wlsr {

/// Row-major dense matrix of doubles.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static DenseMatrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> data() const noexcept { return data_; }

  double max_abs() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

DenseMatrix multiply(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix transpose(const DenseMatrix& a);

/// A P = Q R with Q (m x k) orthonormal columns, R (k x n) upper
/// triangular, k = min(m, n). perm[i] is the original column placed at
/// pivoted position i.
struct QrcpFactors {
  DenseMatrix q;
  DenseMatrix r;
  std::vector<std::size_t> perm;
  std::size_t numerical_rank = 0;

  std::size_t rank_bound() const noexcept { return r.rows(); }
};

/// Householder QR with column pivoting on column norms. Norms are
/// downdated after each step and recomputed when cancellation makes the
/// downdate unreliable. The first `fixed_leading` columns are factored in
/// place without pivoting.
QrcpFactors qrcp(const DenseMatrix& a, std::size_t fixed_leading = 0);

/// Estimate of the 1-norm condition number of the leading `order` x `order`
/// block of upper-triangular R (whole matrix by default). Exact ||R||_1 times
/// a Hager/Higham estimate of ||R^-1||_1. Returns +inf if a diagonal entry is zero.
double cond_estimate_1norm(const DenseMatrix& r, std::size_t order = std::numeric_limits<std::size_t>::max());

/// Least-squares solution using only the first `drop_to` pivoted columns;
/// remaining coefficients are zero. The result is multiplied by the column
/// scaling and returned in original column order.
std::vector<double> solve_truncated(const QrcpFactors& factors, std::span<const double> col_scaling,
                                    std::span<const double> rhs, std::size_t drop_to);

/// Vector g with dot(functional, solve_truncated(f, T, b, k)) == dot(g, b)
/// for every b. Used to turn a fitted polynomial evaluation into an
/// operator row.
std::vector<double> solution_functional(const QrcpFactors& factors, std::span<const double> col_scaling,
                                        std::span<const double> functional, std::size_t drop_to);

/// Compressed sparse rows with strictly increasing column indices per row.
class SparseOperator {
 public:
  using Entry = std::pair<std::int32_t, double>;

  SparseOperator() = default;
  SparseOperator(std::size_t rows, std::size_t cols, std::vector<std::int64_t> offsets,
                 std::vector<std::int32_t> indices, std::vector<double> values);

  /// Builds from unsorted per-row entries; duplicate columns are summed.
  static SparseOperator from_rows(std::size_t cols, std::vector<std::vector<Entry>> rows);
  static SparseOperator identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t nonzeros() const noexcept { return values_.size(); }

  std::span<const std::int32_t> row_indices(std::size_t i) const;
  std::span<const double> row_values(std::size_t i) const;

  std::span<const std::int64_t> offsets() const noexcept { return offsets_; }
  std::span<const std::int32_t> indices() const noexcept { return indices_; }
  std::span<const double> values() const noexcept { return values_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::int64_t> offsets_{0};
  std::vector<std::int32_t> indices_;
  std::vector<double> values_;
};

std::vector<double> spmv(const SparseOperator& op, std::span<const double> x);

/// Dot product of a single operator row with x.
double row_dot(const SparseOperator& op, std::size_t row, std::span<const double> x);

}  // namespace wlsr
