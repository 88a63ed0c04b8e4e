#include <doctest.h>

#include <cmath>

#include "chiral/errors.hpp"
#include "chiral/krylov.hpp"
#include "chiral/oracle.hpp"
#include "chiral/single_cavity.hpp"

using namespace chiral;

namespace {

ModelParams at(double g) {
  ModelParams p;
  p.g = g;
  return p;
}

SectorState ground(double g, int l, int n_max = 60) {
  return sector_spectrum(at(g), l, n_max).eigenstate(0);
}

}  // namespace

TEST_CASE("assembled l=0, n_max=1 matrix") {
  const auto b = build_single_sector_basis(0, 1);
  const auto h = assemble_single_hamiltonian(at(0.1), b);
  REQUIRE(h.dim() == 3);
  // order G(0), G(1), E(1)
  CHECK(h.at(0, 0) == doctest::Approx(-0.5));
  CHECK(h.at(1, 1) == doctest::Approx(1.5));
  CHECK(h.at(2, 2) == doctest::Approx(1.5));
  CHECK(h.at(0, 2) == doctest::Approx(0.1));
  CHECK(h.at(1, 2) == doctest::Approx(0.1));
  CHECK(h.at(0, 1) == 0.0);
  CHECK(assemble_single_hamiltonian(at(0.0), b).nnz() == 3);  // diagonal only
}

TEST_CASE("sector matrices follow the coupled recurrences row by row") {
  ModelParams p;
  p.omega0 = 1.0;
  p.omega_c = 0.8;
  p.g = 0.37;
  for (int l = -2; l <= 3; ++l) {
    const int n_max = 12;
    const auto b = build_single_sector_basis(l, n_max);
    const auto h = assemble_single_hamiltonian(p, b);
    auto entry = [&](Branch r, int nr, Branch c, int nc) {
      const auto i = b.index_of(r, nr), j = b.index_of(c, nc);
      return i && j ? h.at(*i, *j) : 0.0;
    };
    for (int n = -1; n <= n_max + 1; ++n) {
      if (auto i = b.index_of(Branch::G, n)) {
        CHECK(h.at(*i, *i) == doctest::Approx(p.omega_c * (2 * n + l) - p.omega0 / 2));
        if (b.index_of(Branch::E, n)) CHECK(entry(Branch::G, n, Branch::E, n) == doctest::Approx(p.g * std::sqrt(n + l)));
        if (b.index_of(Branch::E, n + 1))
          CHECK(entry(Branch::G, n, Branch::E, n + 1) == doctest::Approx(p.g * std::sqrt(n + 1)));
        std::size_t row_nnz = h.row_ptr()[*i + 1] - h.row_ptr()[*i];
        CHECK(row_nnz <= 3);
      }
      if (auto i = b.index_of(Branch::E, n)) {
        CHECK(h.at(*i, *i) == doctest::Approx(p.omega_c * (2 * n + l - 1) + p.omega0 / 2));
        if (b.index_of(Branch::G, n - 1))
          CHECK(entry(Branch::E, n, Branch::G, n - 1) == doctest::Approx(p.g * std::sqrt(n)));
      }
    }
  }
}

TEST_CASE("sector spectrum basics and JC limit") {
  const auto s0 = sector_spectrum(at(0.0), 0, 20);
  CHECK(s0.solution.energies[0] == doctest::Approx(-0.5));
  CHECK(std::abs(s0.eigenstate(0).amplitudes[0]) == doctest::Approx(1.0));

  const double g = 0.01;
  const auto s1 = sector_spectrum(at(g), 1, 20);
  CHECK(std::abs(s1.solution.energies[0] - (0.5 - g)) < 1e-3);
  CHECK(std::abs(s1.solution.energies[1] - (0.5 + g)) < 1e-3);
  CHECK(s1.truncation_drift <= 1e-10);
}

TEST_CASE("sector spectrum at g = 1 agrees with the full-space oracle") {
  const int cap = 40;
  const auto o = brute_force_two_mode_oracle(at(1.0), cap, OracleMethod::Components);
  const auto s = sector_spectrum(at(1.0), 0, 60);
  CHECK(std::abs(s.solution.energies[0] - o.sector_energies(0)[0]) < 1e-8);
}

TEST_CASE("lowest energies are non-increasing in n_max") {
  for (double g : {0.5, 1.5, 3.0}) {
    for (int l : {0, 1, 2}) {
      double prev = 1e300;
      for (int n_max = 5; n_max <= 80; n_max += 5) {
        const double e = sector_spectrum_fixed(at(g), l, n_max).solution.energies[0];
        CHECK(e <= prev + 1e-12);
        prev = e;
      }
    }
  }
}

TEST_CASE("observables of simple states") {
  SectorState vac{build_single_sector_basis(0, 3), {}, {}};
  vac.amplitudes.assign(vac.basis.size(), 0.0);
  vac.amplitudes[0] = 1.0;
  const auto o = observables(vac);
  CHECK(o.pop_e == 0.0);
  CHECK(o.n_a == 0.0);
  CHECK(o.n_b == 0.0);
  CHECK(o.var_sum == 0.0);
  CHECK(o.var_diff == 0.0);
  CHECK(o.entropy == 0.0);

  // (|g>|1,0> - |e>|0,0>)/sqrt2
  SectorState bell{build_single_sector_basis(1, 0), {}, {}};
  bell.amplitudes.assign(bell.basis.size(), 0.0);
  bell.amplitudes[*bell.basis.index_of(Branch::G, 0)] = 1 / std::sqrt(2.0);
  bell.amplitudes[*bell.basis.index_of(Branch::E, 0)] = -1 / std::sqrt(2.0);
  CHECK(entanglement_entropy(bell) == doctest::Approx(1.0).epsilon(1e-15));

  vac.amplitudes[0] = 2.0;
  CHECK_THROWS_AS(observables(vac), InvalidArgument);
}

TEST_CASE("eigenstate moments and quadrature identities") {
  for (double g : {0.3, 1.0, 2.5}) {
    for (int l : {-1, 0, 1, 2}) {
      const auto spec = sector_spectrum(at(g), l, 80);
      for (std::size_t k = 0; k < 3; ++k) {
        const auto o = observables(spec.eigenstate(k));
        CHECK(std::abs(o.a) < 1e-10);
        CHECK(std::abs(o.b) < 1e-10);
        CHECK(std::abs(o.a2) < 1e-10);
        CHECK(std::abs(o.b2) < 1e-10);
        CHECK(std::abs(o.adag_b) < 1e-10);
        CHECK(std::abs(o.var_sum + o.var_diff - (o.n_a + o.n_b)) < 1e-10);
        CHECK(std::abs(o.var_sum - o.var_p_diff) < 1e-10);
        CHECK(std::abs(o.var_diff - o.var_p_sum) < 1e-10);
        CHECK(std::abs(o.var_xa - o.n_a / 2) < 1e-12);
        CHECK(std::abs(o.var_sum - (o.n_a / 2 + o.n_b / 2 + 2 * o.covar_xx)) < 1e-12);
        CHECK(std::abs(o.covar_xx - o.m_ab.real() / 2) < 1e-12);
        CHECK(o.pop_e >= 0);
        CHECK(o.pop_e <= 1);
        CHECK(std::abs(o.lz - (l - 0.5)) < 1e-12);
      }
    }
  }
}

TEST_CASE("weak-coupling correlation <ab> of the l=0 ground state") {
  // second-order perturbation theory: <ab> = g^2/4 for w0 = wc
  const double g = 0.01;
  const auto o = observables(ground(g, 0, 20));
  CHECK(o.m_ab.real() == doctest::Approx(g * g / 4).epsilon(1e-3));
}

TEST_CASE("entanglement entropy trends") {
  CHECK(entanglement_entropy(ground(1e-3, 1)) == doctest::Approx(1.0).epsilon(1e-6));
  double prev = 0;
  for (double g = 0.2; g <= 3.0 + 1e-9; g += 0.2) {
    const double s = entanglement_entropy(ground(g, 0, 150));
    CHECK(s > prev);
    prev = s;
  }
  CHECK(prev > 0.9);
}

TEST_CASE("excited-vacuum projection") {
  std::vector<SectorSpectrum> spectra;
  for (int l : {0, 1, 2}) spectra.push_back(sector_spectrum_fixed(at(0.0), l, 10));
  auto ov = project_excited_vacuum(spectra);
  double one = 0;
  for (double x : ov[1]) one += x * x;
  CHECK(one == doctest::Approx(1.0));
  CHECK(std::count_if(ov[1].begin(), ov[1].end(), [](double x) { return std::abs(x) > 1e-14; }) == 1);
  for (int l : {0, 2})
    for (double x : ov[l]) CHECK(x == 0.0);

  spectra.clear();
  spectra.push_back(sector_spectrum(at(1.0), 1, 100));
  ov = project_excited_vacuum(spectra);
  double total = 0;
  for (double x : ov[1]) total += x * x;
  CHECK(std::abs(total - 1) < 1e-9);
}

TEST_CASE("spectral dynamics") {
  const FockState excited{{1, 0, 0, 1.0}};
  std::vector<double> times;
  for (int i = 0; i <= 200; ++i) times.push_back(0.1 * i);

  const auto free = spectral_evolve(at(0.0), excited, times, {20, true, 1e-6});
  for (const auto& r : free.records) CHECK(r.pop_e == doctest::Approx(1.0));

  const double g = 0.02;
  std::vector<double> rabi;
  for (int i = 0; i <= 400; ++i) rabi.push_back(i * 4 * M_PI / g / 400);
  const auto ts = spectral_evolve(at(g), excited, rabi, {30, true, 1e-6});
  for (std::size_t i = 0; i < rabi.size(); ++i) {
    CHECK(std::abs(ts.records[i].pop_e - std::pow(std::cos(g * rabi[i]), 2)) < 1e-2);
    CHECK(std::abs(ts.records[i].norm - 1) < 1e-9);
    CHECK(std::abs(ts.records[i].lz - 0.5) < 1e-8);
    CHECK(std::abs(ts.energy[i] - ts.energy[0]) < 1e-8 * std::abs(ts.energy[0]));
  }
}

TEST_CASE("spectral dynamics matches Krylov propagation on the same matrix") {
  const double g = 2.0;
  const int n_max = 120;
  const auto spec = sector_spectrum_fixed(at(g), 1, n_max);
  std::vector<SectorState> parts(1);
  parts[0].basis = spec.basis;
  parts[0].amplitudes.assign(spec.basis.size(), 0.0);
  parts[0].amplitudes[*spec.basis.index_of(Branch::E, 0)] = 1.0;
  auto psi = parts[0].amplitudes;
  double t = 0;
  for (int step = 1; step <= 20; ++step) {
    krylov_propagate(spec.hamiltonian, psi, 2 * M_PI / g * 0.2, {1e-11, 40, 200000});
    t += 2 * M_PI / g * 0.2;
    const auto s = spectral_state(std::span<const SectorSpectrum>(&spec, 1), parts, t);
    double dev = 0;
    for (std::size_t i = 0; i < psi.size(); ++i) dev = std::max(dev, std::abs(psi[i] - s[0].amplitudes[i]));
    CHECK(dev < 1e-8);
  }
}

TEST_CASE("initial states outside the truncation are rejected") {
  const FockState far{{0, 50, 50, 1.0}};
  const std::vector<double> times{0.0};
  CHECK_THROWS_AS(spectral_evolve(at(0.1), far, times, {10, false, 1e-6}), InvalidArgument);
}

TEST_CASE("collapse and revival analysis on a synthetic trace") {
  std::vector<double> t, sz;
  for (int i = 0; i <= 4000; ++i) {
    const double x = 0.01 * i;
    t.push_back(x);
    // revivals at x = 10, 20, 30 with decreasing height
    double v = std::exp(-x * x);
    for (int k = 1; k <= 3; ++k) v += (1.0 - 0.05 * k) * std::exp(-std::pow(x - 10 * k, 2));
    sz.push_back(v);
  }
  const auto cr = analyze_collapse_revival(t, sz, 0.5);
  CHECK(cr.revival_times.size() == 0);  // the trace never drops below 0

  for (auto& v : sz) v = 2 * v - 1;
  const auto cr2 = analyze_collapse_revival(t, sz, 0.5);
  REQUIRE(cr2.revival_times.size() == 3);
  CHECK(cr2.revival_times[0] == doctest::Approx(10.0).epsilon(1e-3));
  CHECK(cr2.max_after_collapse < 1.0);
}
