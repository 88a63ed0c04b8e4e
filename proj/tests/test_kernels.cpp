#include <doctest.h>

#include <random>

#include "chiral/hilbert.hpp"
#include "chiral/kernels.hpp"
#include "chiral/lattice.hpp"
#include "chiral/sparse.hpp"

using namespace chiral;

namespace {

SparseOperator lattice_operator() {
  ModelParams p;
  p.g = 0.5;
  p.J = 0.2;
  p.L = 6;
  return assemble_lattice_hamiltonian(p, build_lattice_sector_basis(p, 1, 2));
}

std::vector<std::complex<double>> random_vector(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  std::vector<std::complex<double>> v(n);
  for (auto& x : v) x = {nd(rng), nd(rng)};
  return v;
}

}  // namespace

TEST_CASE("parallel kernels agree with the serial reference") {
  const auto h = lattice_operator();
  const std::size_t n = h.dim();
  const auto z = random_vector(n, 1);
  const auto w = random_vector(n, 2);
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = z[i].real();
    y[i] = w[i].real();
  }

  std::vector<double> r1(n), r2(n);
  reference::spmv(h, x, r1);
  parallel::spmv(h, x, r2);
  CHECK(r1 == r2);

  std::vector<std::complex<double>> c1(n), c2(n);
  reference::spmv(h, z, c1);
  parallel::spmv(h, z, c2);
  CHECK(c1 == c2);

  CHECK(parallel::dot(x, y) == doctest::Approx(reference::dot(x, y)).epsilon(1e-12));
  CHECK(std::abs(parallel::dot(z, w) - reference::dot(z, w)) < 1e-10 * std::abs(reference::dot(z, w)) + 1e-9);
  CHECK(parallel::norm(z) == doctest::Approx(reference::norm(z)).epsilon(1e-13));

  const std::size_t k = 3;
  std::vector<double> basis(k * n);
  for (std::size_t j = 0; j < k; ++j)
    for (std::size_t i = 0; i < n; ++i) basis[j * n + i] = z[(i + 7 * j) % n].imag();
  std::vector<double> o1(k), o2(k);
  reference::multi_dot(basis, k, x, o1);
  parallel::multi_dot(basis, k, x, o2);
  for (std::size_t j = 0; j < k; ++j) CHECK(o2[j] == doctest::Approx(o1[j]).epsilon(1e-12));
}

TEST_CASE("parallel reductions are bitwise identical across thread counts") {
  const auto h = lattice_operator();
  const auto z = random_vector(h.dim(), 5);
  const auto w = random_vector(h.dim(), 6);
  const int saved = worker_count();
  std::vector<std::complex<double>> results;
  std::vector<std::vector<std::complex<double>>> products;
  for (int threads : {1, 2, 3, 4}) {
    set_worker_count(threads);
    results.push_back(parallel::dot(z, w));
    std::vector<std::complex<double>> y(h.dim());
    parallel::spmv(h, z, y);
    products.push_back(y);
  }
  set_worker_count(saved);
  for (std::size_t i = 1; i < results.size(); ++i) {
    CHECK(results[i] == results[0]);
    CHECK(products[i] == products[0]);
  }
}

TEST_CASE("axpy, scale, combine and subtract_combination") {
  const std::size_t n = 9000;
  const auto z = random_vector(n, 11);
  const auto w = random_vector(n, 12);
  const std::complex<double> a{0.3, -0.7};
  auto y = w;
  parallel::axpy(a, z, y);
  for (std::size_t i = 0; i < n; i += 101) CHECK(std::abs(y[i] - (w[i] + a * z[i])) < 1e-14);
  parallel::scale(a, y);
  for (std::size_t i = 0; i < n; i += 101) CHECK(std::abs(y[i] - a * (w[i] + a * z[i])) < 1e-13);

  std::vector<std::complex<double>> basis(2 * n);
  std::copy(z.begin(), z.end(), basis.begin());
  std::copy(w.begin(), w.end(), basis.begin() + n);
  const std::vector<std::complex<double>> coeff{{1, 2}, {-0.5, 0}};
  std::vector<std::complex<double>> out(n);
  parallel::combine(basis, 2, coeff, out);
  for (std::size_t i = 0; i < n; i += 101) CHECK(std::abs(out[i] - (coeff[0] * z[i] + coeff[1] * w[i])) < 1e-13);
  parallel::subtract_combination(basis, 2, coeff, out);
  for (std::size_t i = 0; i < n; i += 101) CHECK(std::abs(out[i]) < 1e-13);
}
