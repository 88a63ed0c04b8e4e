#include "chiral/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <omp.h>

#include "chiral/errors.hpp"
#include "chiral/sparse.hpp"

namespace chiral {

namespace {

template <typename T>
void check_spmv(const SparseOperator& h, std::span<const T> x, std::span<T> y) {
  if (x.size() != h.dim() || y.size() != h.dim()) throw InvalidArgument("spmv dimension mismatch");
}

template <typename T>
void spmv_serial(const SparseOperator& h, std::span<const T> x, std::span<T> y) {
  check_spmv(h, x, y);
  const auto rp = h.row_ptr();
  const auto cols = h.cols();
  const auto vals = h.values();
  for (std::size_t r = 0; r < h.dim(); ++r) {
    T acc{};
    for (std::size_t k = rp[r]; k < rp[r + 1]; ++k) acc += vals[k] * x[cols[k]];
    y[r] = acc;
  }
}

// Row-parallel: each output element is computed by exactly one thread in the
// same order as the serial loop, so results match `reference` bitwise.
template <typename T>
void spmv_omp(const SparseOperator& h, std::span<const T> x, std::span<T> y) {
  check_spmv(h, x, y);
  const auto rp = h.row_ptr();
  const auto cols = h.cols();
  const auto vals = h.values();
  const auto n = static_cast<std::ptrdiff_t>(h.dim());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < n; ++r) {
    T acc{};
    for (std::size_t k = rp[static_cast<std::size_t>(r)]; k < rp[static_cast<std::size_t>(r) + 1]; ++k) {
      acc += vals[k] * x[cols[k]];
    }
    y[static_cast<std::size_t>(r)] = acc;
  }
}

inline double conj_mul(double a, double b) { return a * b; }
inline std::complex<double> conj_mul(std::complex<double> a, std::complex<double> b) {
  return std::conj(a) * b;
}

template <typename T>
T blocked_dot(std::span<const T> x, std::span<const T> y) {
  if (x.size() != y.size()) throw InvalidArgument("dot dimension mismatch");
  constexpr std::size_t block = parallel::kReductionBlock;
  const std::size_t n = x.size();
  const std::size_t nblocks = (n + block - 1) / block;
  std::vector<T> partial(nblocks);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(nblocks); ++b) {
    const std::size_t begin = static_cast<std::size_t>(b) * block;
    const std::size_t end = std::min(n, begin + block);
    T acc{};
    for (std::size_t i = begin; i < end; ++i) acc += conj_mul(x[i], y[i]);
    partial[static_cast<std::size_t>(b)] = acc;
  }
  T total{};
  for (const T& p : partial) total += p;
  return total;
}

template <typename T>
void blocked_multi_dot(std::span<const T> basis, std::size_t k, std::span<const T> w, std::span<T> out) {
  const std::size_t n = w.size();
  if (basis.size() < n * k || out.size() < k) throw InvalidArgument("multi_dot dimension mismatch");
  constexpr std::size_t block = parallel::kReductionBlock;
  const std::size_t nblocks = (n + block - 1) / block;
  std::vector<T> partial(nblocks * k);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(nblocks); ++b) {
    const std::size_t begin = static_cast<std::size_t>(b) * block;
    const std::size_t end = std::min(n, begin + block);
    for (std::size_t j = 0; j < k; ++j) {
      const T* v = basis.data() + j * n;
      T acc{};
      for (std::size_t i = begin; i < end; ++i) acc += conj_mul(v[i], w[i]);
      partial[static_cast<std::size_t>(b) * k + j] = acc;
    }
  }
  for (std::size_t j = 0; j < k; ++j) {
    T total{};
    for (std::size_t b = 0; b < nblocks; ++b) total += partial[b * k + j];
    out[j] = total;
  }
}

template <typename T>
void combination(std::span<const T> basis, std::size_t k, std::span<const T> coeff, std::span<T> w,
                 bool subtract) {
  const std::size_t n = w.size();
  if (basis.size() < n * k || coeff.size() < k) throw InvalidArgument("combination dimension mismatch");
  constexpr std::size_t block = parallel::kReductionBlock;
  const std::size_t nblocks = (n + block - 1) / block;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(nblocks); ++b) {
    const std::size_t begin = static_cast<std::size_t>(b) * block;
    const std::size_t end = std::min(n, begin + block);
    if (!subtract) {
      for (std::size_t i = begin; i < end; ++i) w[i] = T{};
    }
    for (std::size_t j = 0; j < k; ++j) {
      const T* v = basis.data() + j * n;
      const T c = subtract ? -coeff[j] : coeff[j];
      for (std::size_t i = begin; i < end; ++i) w[i] += c * v[i];
    }
  }
}

}  // namespace

namespace reference {

void spmv(const SparseOperator& h, std::span<const double> x, std::span<double> y) {
  spmv_serial(h, x, y);
}
void spmv(const SparseOperator& h, std::span<const std::complex<double>> x,
          std::span<std::complex<double>> y) {
  spmv_serial(h, x, y);
}

double dot(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw InvalidArgument("dot dimension mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * y[i];
  return acc;
}

std::complex<double> dot(std::span<const std::complex<double>> x,
                         std::span<const std::complex<double>> y) {
  if (x.size() != y.size()) throw InvalidArgument("dot dimension mismatch");
  std::complex<double> acc{};
  for (std::size_t i = 0; i < x.size(); ++i) acc += std::conj(x[i]) * y[i];
  return acc;
}

double norm(std::span<const double> x) { return std::sqrt(dot(x, x)); }
double norm(std::span<const std::complex<double>> x) { return std::sqrt(dot(x, x).real()); }

void multi_dot(std::span<const double> basis, std::size_t k, std::span<const double> w,
               std::span<double> out) {
  for (std::size_t j = 0; j < k; ++j) out[j] = dot(basis.subspan(j * w.size(), w.size()), w);
}

void multi_dot(std::span<const std::complex<double>> basis, std::size_t k,
               std::span<const std::complex<double>> w, std::span<std::complex<double>> out) {
  for (std::size_t j = 0; j < k; ++j) out[j] = dot(basis.subspan(j * w.size(), w.size()), w);
}

}  // namespace reference

namespace parallel {

void spmv(const SparseOperator& h, std::span<const double> x, std::span<double> y) {
  spmv_omp(h, x, y);
}
void spmv(const SparseOperator& h, std::span<const std::complex<double>> x,
          std::span<std::complex<double>> y) {
  spmv_omp(h, x, y);
}

double dot(std::span<const double> x, std::span<const double> y) { return blocked_dot(x, y); }
std::complex<double> dot(std::span<const std::complex<double>> x,
                         std::span<const std::complex<double>> y) {
  return blocked_dot(x, y);
}

double norm(std::span<const double> x) { return std::sqrt(dot(x, x)); }
double norm(std::span<const std::complex<double>> x) { return std::sqrt(dot(x, x).real()); }

void axpy(double a, std::span<const double> x, std::span<double> y) {
  const auto n = static_cast<std::ptrdiff_t>(x.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) y[static_cast<std::size_t>(i)] += a * x[static_cast<std::size_t>(i)];
}

void axpy(std::complex<double> a, std::span<const std::complex<double>> x,
          std::span<std::complex<double>> y) {
  const auto n = static_cast<std::ptrdiff_t>(x.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) y[static_cast<std::size_t>(i)] += a * x[static_cast<std::size_t>(i)];
}

void scale(double a, std::span<double> x) {
  const auto n = static_cast<std::ptrdiff_t>(x.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) x[static_cast<std::size_t>(i)] *= a;
}

void scale(std::complex<double> a, std::span<std::complex<double>> x) {
  const auto n = static_cast<std::ptrdiff_t>(x.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) x[static_cast<std::size_t>(i)] *= a;
}

void multi_dot(std::span<const double> basis, std::size_t k, std::span<const double> w,
               std::span<double> out) {
  blocked_multi_dot(basis, k, w, out);
}
void multi_dot(std::span<const std::complex<double>> basis, std::size_t k,
               std::span<const std::complex<double>> w, std::span<std::complex<double>> out) {
  blocked_multi_dot(basis, k, w, out);
}

void subtract_combination(std::span<const double> basis, std::size_t k, std::span<const double> coeff,
                          std::span<double> w) {
  combination(basis, k, coeff, w, true);
}
void subtract_combination(std::span<const std::complex<double>> basis, std::size_t k,
                          std::span<const std::complex<double>> coeff, std::span<std::complex<double>> w) {
  combination(basis, k, coeff, w, true);
}

void combine(std::span<const double> basis, std::size_t k, std::span<const double> coeff,
             std::span<double> out) {
  combination(basis, k, coeff, out, false);
}
void combine(std::span<const std::complex<double>> basis, std::size_t k,
             std::span<const std::complex<double>> coeff, std::span<std::complex<double>> out) {
  combination(basis, k, coeff, out, false);
}

}  // namespace parallel

int worker_count() { return omp_get_max_threads(); }

void set_worker_count(int n) {
  if (n < 1) throw InvalidArgument("worker count must be >= 1");
  omp_set_num_threads(n);
}

}  // namespace chiral
