#pragma once

// Data-parallel vector kernels.
//
// Every kernel exists twice: a plain serial loop in `reference` that the test
// suite treats as ground truth, and an OpenMP version in `parallel` used by
// the solvers. Reductions in `parallel` sum fixed-size blocks and then combine
// the block partials in index order, so their result is bitwise identical for
// any thread count (it may differ from `reference` in the last bits).

#include <complex>
#include <cstddef>
#include <span>

namespace chiral {

class SparseOperator;

namespace reference {

void spmv(const SparseOperator& h, std::span<const double> x, std::span<double> y);
void spmv(const SparseOperator& h, std::span<const std::complex<double>> x,
          std::span<std::complex<double>> y);
double dot(std::span<const double> x, std::span<const double> y);
std::complex<double> dot(std::span<const std::complex<double>> x,
                         std::span<const std::complex<double>> y);
double norm(std::span<const double> x);
double norm(std::span<const std::complex<double>> x);
void multi_dot(std::span<const double> basis, std::size_t k, std::span<const double> w,
               std::span<double> out);
void multi_dot(std::span<const std::complex<double>> basis, std::size_t k,
               std::span<const std::complex<double>> w, std::span<std::complex<double>> out);

}  // namespace reference

namespace parallel {

/// Reduction block length; fixes the summation tree.
inline constexpr std::size_t kReductionBlock = 4096;

void spmv(const SparseOperator& h, std::span<const double> x, std::span<double> y);
void spmv(const SparseOperator& h, std::span<const std::complex<double>> x,
          std::span<std::complex<double>> y);
double dot(std::span<const double> x, std::span<const double> y);
/// Hermitian inner product <x|y> (conjugates x).
std::complex<double> dot(std::span<const std::complex<double>> x,
                         std::span<const std::complex<double>> y);
double norm(std::span<const double> x);
double norm(std::span<const std::complex<double>> x);

/// y += a * x
void axpy(double a, std::span<const double> x, std::span<double> y);
void axpy(std::complex<double> a, std::span<const std::complex<double>> x,
          std::span<std::complex<double>> y);
void scale(double a, std::span<double> x);
void scale(std::complex<double> a, std::span<std::complex<double>> x);

/// out[j] = <basis_j | w> for the first k columns of a column-major basis
/// whose column length is w.size().
void multi_dot(std::span<const double> basis, std::size_t k, std::span<const double> w,
               std::span<double> out);
void multi_dot(std::span<const std::complex<double>> basis, std::size_t k,
               std::span<const std::complex<double>> w, std::span<std::complex<double>> out);

/// w -= sum_j coeff[j] * basis_j
void subtract_combination(std::span<const double> basis, std::size_t k, std::span<const double> coeff,
                          std::span<double> w);
void subtract_combination(std::span<const std::complex<double>> basis, std::size_t k,
                          std::span<const std::complex<double>> coeff, std::span<std::complex<double>> w);

/// out = sum_j coeff[j] * basis_j
void combine(std::span<const double> basis, std::size_t k, std::span<const double> coeff,
             std::span<double> out);
void combine(std::span<const std::complex<double>> basis, std::size_t k,
             std::span<const std::complex<double>> coeff, std::span<std::complex<double>> out);

}  // namespace parallel

/// Threads used by the parallel kernels (OpenMP max threads).
int worker_count();
void set_worker_count(int n);

}  // namespace chiral
