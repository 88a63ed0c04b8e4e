#include <doctest.h>

#include <cmath>
#include <random>

#include "chiral/errors.hpp"
#include "chiral/krylov.hpp"
#include "chiral/lattice.hpp"
#include "support/oracles.hpp"

using namespace chiral;
using cplx = std::complex<double>;

TEST_CASE("diagonal operator gives pure phases") {
  const std::vector<double> w{0.3, -1.2, 2.0, 0.0};
  std::vector<Triplet> t;
  for (std::size_t i = 0; i < w.size(); ++i)
    if (w[i] != 0) t.push_back({i, i, w[i]});
  const auto h = SparseOperator::from_triplets(w.size(), t);
  std::vector<cplx> psi(4, 0.0);
  psi[0] = 1.0;
  const double dt = 3.7;
  krylov_propagate(h, psi, dt);
  CHECK(std::abs(psi[0] - std::exp(cplx(0, -w[0] * dt))) < 1e-10);
  for (std::size_t i = 1; i < 4; ++i) CHECK(std::abs(psi[i]) < 1e-12);
}

TEST_CASE("JC doublet gives cos^2 Rabi oscillations") {
  const double g = 0.1;
  const auto h = SparseOperator::from_dense(2, std::vector<double>{0.5, g, g, 0.5});
  std::vector<cplx> psi{1.0, 0.0};
  double t = 0;
  for (int step = 0; step < 50; ++step) {
    krylov_propagate(h, psi, 0.7);
    t += 0.7;
    CHECK(std::abs(std::norm(psi[0]) - std::pow(std::cos(g * t), 2)) < 1e-9);
  }
}

TEST_CASE("random 200-dim sparse operator matches the dense exponential") {
  const std::size_t n = 200;
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<double> a(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j)
      if (i == j || u(rng) > 0.9) a[i * n + j] = a[j * n + i] = u(rng);
  std::vector<cplx> psi(n);
  double nrm = 0;
  for (auto& x : psi) {
    x = {u(rng), u(rng)};
    nrm += std::norm(x);
  }
  for (auto& x : psi) x /= std::sqrt(nrm);
  const auto ref = testing::expm_apply(a, n, 1.0, psi);
  KrylovStats stats;
  krylov_propagate(SparseOperator::from_dense(n, a), psi, 1.0, {}, &stats);
  double err = 0, norm = 0;
  for (std::size_t i = 0; i < n; ++i) {
    err = std::max(err, std::abs(psi[i] - ref[i]));
    norm += std::norm(psi[i]);
  }
  CHECK(err < 1e-8);
  CHECK(std::abs(norm - 1) < 1e-9);
  CHECK(stats.error_bound <= 1e-10);
}

TEST_CASE("propagation conserves norm and energy on a lattice sector") {
  ModelParams p;
  p.g = 0.5;
  p.J = 0.2;
  p.L = 6;
  const auto basis = build_lattice_sector_basis(p, 1, 2);
  const auto h = assemble_lattice_hamiltonian(p, basis);
  std::vector<cplx> psi(h.dim(), 0.0);
  psi[*basis.index_of(Branch::E, std::vector<std::uint8_t>(6, 0), std::vector<std::uint8_t>(6, 0))] = 1.0;
  const double e0 = expectation(h, psi);
  for (int step = 0; step < 20; ++step) {
    krylov_propagate(h, psi, 1.5);
    double norm = 0;
    for (auto x : psi) norm += std::norm(x);
    CHECK(std::abs(norm - 1) < 1e-9);
    CHECK(std::abs(expectation(h, psi) - e0) < 1e-8 * std::abs(e0));
  }
}

TEST_CASE("krylov_propagate argument checks") {
  const auto h = SparseOperator::from_dense(2, std::vector<double>{0, 1, 1, 0});
  std::vector<cplx> psi{2.0, 0.0};
  CHECK_THROWS_AS(krylov_propagate(h, psi, 1.0), InvalidArgument);
  std::vector<Triplet> t;
  for (std::size_t i = 0; i + 1 < 100; ++i) {
    t.push_back({i, i + 1, 1.0});
    t.push_back({i + 1, i, 1.0});
  }
  const auto chain = SparseOperator::from_triplets(100, t);
  std::vector<cplx> phi(100, 0.0);
  phi[50] = 1.0;
  KrylovOptions opt;
  opt.max_dim = 4;
  opt.max_substeps = 3;
  CHECK_THROWS_AS(krylov_propagate(chain, phi, 100.0, opt), ConvergenceError);
}
