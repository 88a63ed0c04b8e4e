#include <doctest.h>

#include <cmath>
#include <random>

#include "chiral/eigensolvers.hpp"
#include "chiral/errors.hpp"
#include "chiral/lattice.hpp"
#include "chiral/single_cavity.hpp"
#include "support/oracles.hpp"

using namespace chiral;

namespace {

std::vector<double> random_symmetric(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  std::vector<double> a(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) a[i * n + j] = a[j * n + i] = nd(rng);
  return a;
}

void check_orthonormal(const EigenSolution& s, double tol) {
  for (std::size_t i = 0; i < s.count(); ++i)
    for (std::size_t j = i; j < s.count(); ++j) {
      double d = 0;
      for (std::size_t r = 0; r < s.dim; ++r) d += s.vector(i)[r] * s.vector(j)[r];
      CHECK(std::abs(d - (i == j ? 1.0 : 0.0)) < tol);
    }
}

}  // namespace

TEST_CASE("dense backend self-check passes") { CHECK(dense_backend_ok()); }

TEST_CASE("dense eigensolve of trivial matrices") {
  const auto one = dense_eigensolve(SparseOperator::from_dense(1, std::vector<double>{2.5}));
  REQUIRE(one.count() == 1);
  CHECK(one.energies[0] == 2.5);
  CHECK(one.vector(0)[0] == 1.0);

  const double w0 = 1.0, g = 0.3;
  const std::vector<double> jc{-w0 / 2 + w0, g, g, w0 / 2};
  const auto s = dense_eigensolve(SparseOperator::from_dense(2, jc));
  CHECK(s.energies[0] == doctest::Approx(w0 / 2 - g).epsilon(1e-14));
  CHECK(s.energies[1] == doctest::Approx(w0 / 2 + g).epsilon(1e-14));
}

TEST_CASE("dense eigensolve matches the Jacobi oracle on a random 50x50 matrix") {
  const std::size_t n = 50;
  const auto a = random_symmetric(n, 42);
  const auto s = dense_eigensolve(SparseOperator::from_dense(n, a));
  const auto ref = testing::jacobi_eigen(a, n, false);
  CHECK(testing::max_abs_diff(s.energies, ref.values) < 1e-10);
  check_orthonormal(s, 1e-10);
  double hnorm = 0;
  for (double v : a) hnorm = std::max(hnorm, std::abs(v));
  for (double r : s.residuals) CHECK(r < 1e-10 * n * hnorm);
}

TEST_CASE("dense eigensolve above the budget points to Lanczos") {
  DenseOptions opt;
  opt.budget = 10;
  CHECK_THROWS_AS(dense_eigensolve(SparseOperator::from_dense(11, std::vector<double>(121, 0.0)), opt),
                  BudgetExceeded);
}

TEST_CASE("canonicalized degenerate vectors are reproducible") {
  // two-fold degenerate spectrum, eigenvectors fixed up to a rotation
  const std::vector<double> a{1, 0, 0, 0, 1, 0, 0, 0, 3};
  auto s1 = dense_eigensolve(SparseOperator::from_dense(3, a));
  auto s2 = dense_eigensolve(SparseOperator::from_dense(3, a));
  CHECK(s1.vectors == s2.vectors);
  for (std::size_t k = 0; k < 3; ++k) {
    const auto v = s1.vector(k);
    auto first = std::find_if(v.begin(), v.end(), [](double x) { return std::abs(x) > 1e-12; });
    REQUIRE(first != v.end());
    CHECK(*first > 0);
  }
}

TEST_CASE("Lanczos on a diagonal matrix") {
  std::vector<Triplet> t;
  for (std::size_t i = 0; i < 100; ++i) t.push_back({i, i, double(i)});
  LanczosOptions opt;
  opt.k = 3;
  const auto s = lanczos_lowest(SparseOperator::from_triplets(100, t), opt);
  REQUIRE(s.count() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(s.energies[i] == doctest::Approx(double(i)).epsilon(1e-10));
}

TEST_CASE("Lanczos agrees with dense on a lattice sector") {
  ModelParams p;
  p.g = 0.5;
  p.J = 0.2;
  p.L = 8;
  const auto h = assemble_lattice_hamiltonian(p, build_lattice_sector_basis(p, 0, 1));
  const auto dense = dense_eigensolve(h);
  LanczosOptions opt;
  opt.k = 4;
  const auto lz = lanczos_lowest(h, opt);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(std::abs(lz.energies[i] - dense.energies[i]) < std::max(1e-8, lz.residuals[i]));
    CHECK(lz.residuals[i] <= 1e-8 * h.norm_bound());
  }
  check_orthonormal(lz, 1e-10);
}

TEST_CASE("Lanczos on the single-cavity l=1 sector in the JC limit") {
  ModelParams p;
  p.g = 0.01;
  const auto h = assemble_single_hamiltonian(p, build_single_sector_basis(1, 60));
  const auto s = lanczos_lowest(h);
  CHECK(std::abs(s.energies[0] - (0.5 - p.g)) < 2 * p.g * p.g);
}

TEST_CASE("Lanczos reports non-convergence with the best residual") {
  const std::size_t n = 400;
  const auto a = random_symmetric(n, 9);
  LanczosOptions opt;
  opt.k = 5;
  opt.tol = 1e-30;
  opt.max_restarts = 2;
  try {
    lanczos_lowest(SparseOperator::from_dense(n, a), opt);
    FAIL("expected ConvergenceError");
  } catch (const ConvergenceError& e) {
    CHECK(e.achieved() > 0);
  }
}

TEST_CASE("tridiagonal and small symmetric eigen helpers") {
  const std::vector<double> d{2, 2, 2, 2}, off{-1, -1, -1};
  std::vector<double> vals, vecs;
  tridiagonal_eigen(d, off, vals, vecs);
  for (int k = 1; k <= 4; ++k) CHECK(vals[k - 1] == doctest::Approx(2 - 2 * std::cos(k * M_PI / 5)));
  small_symmetric_eigen(2, {0, 1, 1, 0}, vals, vecs);
  CHECK(vals[0] == doctest::Approx(-1.0));
  CHECK(vals[1] == doctest::Approx(1.0));
}
