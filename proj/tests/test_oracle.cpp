#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "chiral/errors.hpp"
#include "chiral/oracle.hpp"
#include "chiral/single_cavity.hpp"
#include "chiral/vlevel.hpp"

using namespace chiral;

namespace {

ModelParams at(double g) {
  ModelParams p;
  p.g = g;
  return p;
}

}  // namespace

TEST_CASE("g = 0 oracle spectrum is the bare spectrum") {
  const int cap = 6;
  const auto o = brute_force_two_mode_oracle(at(0.0), cap);
  std::vector<double> bare;
  for (int s : {-1, 1})
    for (int na = 0; na <= cap; ++na)
      for (int nb = 0; nb <= cap; ++nb) bare.push_back(0.5 * s + na + nb);
  std::sort(bare.begin(), bare.end());
  REQUIRE(o.solution.energies.size() == bare.size());
  for (std::size_t i = 0; i < bare.size(); ++i) CHECK(std::abs(o.solution.energies[i] - bare[i]) < 1e-12);
}

TEST_CASE("oracle eigenvectors carry half-integer L_z") {
  const auto o = brute_force_two_mode_oracle(at(0.7), 8);
  REQUIRE(o.lz.size() == o.solution.count());
  for (std::size_t k = 0; k < o.lz.size(); ++k) {
    CHECK(std::abs(o.lz[k] + 0.5 - std::round(o.lz[k] + 0.5)) < 1e-8);
    CHECK(o.label[k] == int(std::lround(o.lz[k] + 0.5)));
  }
  CHECK(o.max_mixing < 1e-8);
}

TEST_CASE("full-space Hamiltonians are block diagonal in the conserved quantity") {
  const auto o = brute_force_two_mode_oracle(at(1.3), 7);
  CHECK(offblock_norm(o.hamiltonian, o.lz_diagonal) == 0.0);
  ModelParams v = at(0.4);
  v.delta = 0.2;
  const auto ov = brute_force_vlevel_oracle(v, 5);
  CHECK(offblock_norm(ov.hamiltonian, ov.lz_diagonal) == 0.0);
  ModelParams lat = at(0.5);
  lat.J = 0.2;
  lat.L = 2;
  const auto ol = brute_force_lattice_oracle(lat, 2);
  CHECK(offblock_norm(ol.hamiltonian, ol.lz_diagonal) == 0.0);
}

TEST_CASE("Clusters and Components resolutions agree") {
  for (double g : {0.25, 1.0, 2.0}) {
    const auto a = brute_force_two_mode_oracle(at(g), 12, OracleMethod::Clusters);
    const auto b = brute_force_two_mode_oracle(at(g), 12, OracleMethod::Components);
    REQUIRE(b.full_spectrum_deviation.has_value());
    CHECK(*b.full_spectrum_deviation < 1e-10);
    for (int l = -12; l <= 13; ++l) {
      const auto ea = a.sector_energies(l), eb = b.sector_energies(l);
      REQUIRE(ea.size() == eb.size());
      for (std::size_t i = 0; i < ea.size(); ++i) CHECK(std::abs(ea[i] - eb[i]) < 1e-10);
    }
  }
}

TEST_CASE("single-cavity sector matrices are restrictions of the full-space Hamiltonian") {
  const int cap = 9;
  for (double g : {0.0, 0.6, 2.2}) {
    const auto full = two_mode_full_hamiltonian(at(g), cap);
    for (int l = -3; l <= 3; ++l) {
      const auto basis = build_single_sector_basis(l, cap);
      std::vector<std::size_t> keep, full_index;
      for (std::size_t i = 0; i < basis.size(); ++i) {
        if (basis[i].n_a > cap) continue;
        keep.push_back(i);
        full_index.push_back(two_mode_index(basis[i].branch == Branch::E, basis[i].n_a, basis[i].n_b, cap));
      }
      const auto h = assemble_single_hamiltonian(at(g), basis).restrict_to(keep);
      const auto ref = full.restrict_to(full_index);
      CHECK(h.to_dense() == ref.to_dense());
    }
  }
}

TEST_CASE("V-level oracle labels are integers and match sector assembly") {
  ModelParams p = at(0.5);
  p.delta = 0.0;
  const int cap = 8;
  const auto o = brute_force_vlevel_oracle(p, cap, OracleMethod::Components);
  for (int l = -2; l <= 2; ++l) {
    const VSectorBasis basis(l, cap + 1);
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < basis.size(); ++i)
      if (basis[i].n_a <= cap && basis[i].n_b <= cap) keep.push_back(i);
    const auto e = dense_eigensolve(assemble_v_hamiltonian(p, basis).restrict_to(keep), {20000, false});
    const auto ref = o.sector_energies(l);
    REQUIRE(ref.size() == e.count());
    for (std::size_t i = 0; i < ref.size(); ++i) CHECK(std::abs(ref[i] - e.energies[i]) < 1e-8);
  }
}

TEST_CASE("product-space helpers") {
  ProductSpace s({2, 3, 4});
  CHECK(s.dim() == 24);
  const std::vector<std::size_t> d{1, 2, 3};
  CHECK(s.digits(s.index(d)) == d);
  CHECK(two_mode_index(1, 2, 3, 4) == (1 * 5 + 2) * 5 + 3);
  CHECK_THROWS_AS(two_mode_full_hamiltonian(at(0.1), -1), InvalidArgument);
}
