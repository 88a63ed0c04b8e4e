#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace chiral {

struct Triplet {
  std::size_t row;
  std::size_t col;
  double value;
};

/// Real symmetric sparse matrix in CSR layout, both triangles stored.
///
/// With g real every sector Hamiltonian here is real symmetric, so values are
/// real; complex vectors are supported by the matrix-vector products.
/// Exact zeros are never stored.
class SparseOperator {
 public:
  SparseOperator() = default;

  /// Duplicates are summed; entries that sum to exactly zero are dropped.
  /// Throws ConsistencyError when the result is not exactly symmetric.
  static SparseOperator from_triplets(std::size_t dim, std::vector<Triplet> entries);

  /// One row of (col, value) pairs per call; rows are generated in parallel and
  /// assembled in row order, so the result does not depend on thread count.
  using RowGenerator = std::function<void(std::size_t row, std::vector<std::pair<std::size_t, double>>& out)>;
  static SparseOperator from_rows(std::size_t dim, const RowGenerator& gen);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t nnz() const noexcept { return values_.size(); }

  std::span<const std::size_t> row_ptr() const noexcept { return row_ptr_; }
  std::span<const std::uint32_t> cols() const noexcept { return cols_; }
  std::span<const double> values() const noexcept { return values_; }

  /// H(i, j), zero when not stored.
  double at(std::size_t i, std::size_t j) const;

  /// Maximum absolute row sum; an upper bound on the spectral radius.
  double norm_bound() const;
  /// max |H_ij - H_ji| over stored entries.
  double asymmetry() const;

  void apply(std::span<const double> x, std::span<double> y) const;
  void apply(std::span<const std::complex<double>> x, std::span<std::complex<double>> y) const;

  /// Dense row-major copy.
  std::vector<double> to_dense() const;
  static SparseOperator from_dense(std::size_t dim, std::span<const double> row_major);

  /// Principal submatrix on the given (distinct) indices, in that order.
  SparseOperator restrict_to(std::span<const std::size_t> indices) const;

 private:
  std::size_t dim_ = 0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<std::uint32_t> cols_;
  std::vector<double> values_;
};

/// <x|H|x> / <x|x> for complex x.
double expectation(const SparseOperator& h, std::span<const std::complex<double>> x);

}  // namespace chiral
