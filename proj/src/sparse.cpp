#include "chiral/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <unordered_map>

#include <omp.h>

#include "chiral/errors.hpp"
#include "chiral/kernels.hpp"

namespace chiral {

namespace {

void check_index_width(std::size_t dim) {
  if (dim > std::numeric_limits<std::uint32_t>::max()) {
    throw BudgetExceeded("sparse operator dimension exceeds 32-bit column indices", dim,
                         std::numeric_limits<std::uint32_t>::max());
  }
}

}  // namespace

SparseOperator SparseOperator::from_triplets(std::size_t dim, std::vector<Triplet> entries) {
  check_index_width(dim);
  for (const auto& t : entries) {
    if (t.row >= dim || t.col >= dim) throw InvalidArgument("triplet index out of range");
  }
  std::sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  SparseOperator op;
  op.dim_ = dim;
  op.row_ptr_.assign(dim + 1, 0);
  std::size_t i = 0;
  while (i < entries.size()) {
    std::size_t j = i;
    double sum = 0.0;
    while (j < entries.size() && entries[j].row == entries[i].row && entries[j].col == entries[i].col) {
      sum += entries[j].value;
      ++j;
    }
    if (sum != 0.0) {
      op.cols_.push_back(static_cast<std::uint32_t>(entries[i].col));
      op.values_.push_back(sum);
      ++op.row_ptr_[entries[i].row + 1];
    }
    i = j;
  }
  for (std::size_t r = 0; r < dim; ++r) op.row_ptr_[r + 1] += op.row_ptr_[r];
  if (op.asymmetry() != 0.0) {
    std::ostringstream msg;
    msg << "assembled operator is not symmetric (max deviation " << op.asymmetry() << ")";
    throw ConsistencyError(msg.str());
  }
  return op;
}

SparseOperator SparseOperator::from_rows(std::size_t dim, const RowGenerator& gen) {
  check_index_width(dim);
  SparseOperator op;
  op.dim_ = dim;
  op.row_ptr_.assign(dim + 1, 0);

  // Rows are produced in fixed chunks; each chunk is filled independently and
  // chunks are concatenated in order.
  constexpr std::size_t chunk = 8192;
  const std::size_t nchunks = (dim + chunk - 1) / chunk;
  std::vector<std::vector<std::uint32_t>> chunk_cols(nchunks);
  std::vector<std::vector<double>> chunk_vals(nchunks);

  bool bad_index = false;
#pragma omp parallel
  {
    std::vector<std::pair<std::size_t, double>> row;
#pragma omp for schedule(dynamic, 1)
    for (std::size_t c = 0; c < nchunks; ++c) {
      const std::size_t begin = c * chunk;
      const std::size_t end = std::min(dim, begin + chunk);
      auto& cc = chunk_cols[c];
      auto& cv = chunk_vals[c];
      for (std::size_t r = begin; r < end; ++r) {
        row.clear();
        gen(r, row);
        std::sort(row.begin(), row.end());
        std::size_t count = 0;
        for (std::size_t k = 0; k < row.size();) {
          std::size_t m = k;
          double sum = 0.0;
          while (m < row.size() && row[m].first == row[k].first) sum += row[m++].second;
          if (row[k].first >= dim) {
#pragma omp atomic write
            bad_index = true;
          } else if (sum != 0.0) {
            cc.push_back(static_cast<std::uint32_t>(row[k].first));
            cv.push_back(sum);
            ++count;
          }
          k = m;
        }
        op.row_ptr_[r + 1] = count;
      }
    }
  }
  if (bad_index) throw InvalidArgument("row generator produced an out-of-range column");
  for (std::size_t r = 0; r < dim; ++r) op.row_ptr_[r + 1] += op.row_ptr_[r];
  op.cols_.reserve(op.row_ptr_[dim]);
  op.values_.reserve(op.row_ptr_[dim]);
  for (std::size_t c = 0; c < nchunks; ++c) {
    op.cols_.insert(op.cols_.end(), chunk_cols[c].begin(), chunk_cols[c].end());
    op.values_.insert(op.values_.end(), chunk_vals[c].begin(), chunk_vals[c].end());
  }
  if (op.asymmetry() != 0.0) {
    std::ostringstream msg;
    msg << "assembled operator is not symmetric (max deviation " << op.asymmetry() << ")";
    throw ConsistencyError(msg.str());
  }
  return op;
}

double SparseOperator::at(std::size_t i, std::size_t j) const {
  const auto begin = cols_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i]);
  const auto end = cols_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i + 1]);
  const auto it = std::lower_bound(begin, end, static_cast<std::uint32_t>(j));
  if (it == end || *it != j) return 0.0;
  return values_[static_cast<std::size_t>(it - cols_.begin())];
}

double SparseOperator::norm_bound() const {
  double best = 0.0;
  for (std::size_t r = 0; r < dim_; ++r) {
    double s = 0.0;
    for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) s += std::abs(values_[k]);
    best = std::max(best, s);
  }
  return best;
}

double SparseOperator::asymmetry() const {
  double worst = 0.0;
  for (std::size_t r = 0; r < dim_; ++r) {
    for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
      worst = std::max(worst, std::abs(values_[k] - at(cols_[k], r)));
    }
  }
  return worst;
}

void SparseOperator::apply(std::span<const double> x, std::span<double> y) const {
  parallel::spmv(*this, x, y);
}

void SparseOperator::apply(std::span<const std::complex<double>> x,
                           std::span<std::complex<double>> y) const {
  parallel::spmv(*this, x, y);
}

std::vector<double> SparseOperator::to_dense() const {
  std::vector<double> d(dim_ * dim_, 0.0);
  for (std::size_t r = 0; r < dim_; ++r) {
    for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) d[r * dim_ + cols_[k]] = values_[k];
  }
  return d;
}

SparseOperator SparseOperator::from_dense(std::size_t dim, std::span<const double> row_major) {
  if (row_major.size() != dim * dim) throw InvalidArgument("dense matrix has the wrong size");
  std::vector<Triplet> t;
  for (std::size_t r = 0; r < dim; ++r) {
    for (std::size_t c = 0; c < dim; ++c) {
      const double v = row_major[r * dim + c];
      if (v != 0.0) t.push_back({r, c, v});
    }
  }
  return from_triplets(dim, std::move(t));
}

SparseOperator SparseOperator::restrict_to(std::span<const std::size_t> indices) const {
  std::unordered_map<std::size_t, std::size_t> position;
  position.reserve(indices.size());
  for (std::size_t k = 0; k < indices.size(); ++k) position.emplace(indices[k], k);
  std::vector<Triplet> t;
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const std::size_t r = indices[k];
    for (std::size_t p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p) {
      const auto it = position.find(cols_[p]);
      if (it != position.end()) t.push_back({k, it->second, values_[p]});
    }
  }
  return from_triplets(indices.size(), std::move(t));
}

double expectation(const SparseOperator& h, std::span<const std::complex<double>> x) {
  std::vector<std::complex<double>> hx(x.size());
  h.apply(x, hx);
  return parallel::dot(x, hx).real() / parallel::dot(x, x).real();
}

}  // namespace chiral
