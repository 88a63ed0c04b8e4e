#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "chiral/errors.hpp"
#include "chiral/hilbert.hpp"

using namespace chiral;

namespace {

PolarizationVector vec(cplx x, cplx y, cplx z) { return {{x, y, z}}; }

void check_entries(const SingleSectorBasis& b, std::initializer_list<std::pair<Branch, std::pair<int, int>>> want) {
  REQUIRE(b.size() == want.size());
  std::size_t i = 0;
  for (const auto& [br, occ] : want) {
    CHECK(b[i].branch == br);
    CHECK(b[i].n_a == occ.first);
    CHECK(b[i].n_b == occ.second);
    ++i;
  }
}

}  // namespace

TEST_CASE("coupling coefficients for linear and circular polarizations") {
  const double s = 1.0 / std::sqrt(2.0);
  const cplx i{0, 1};

  auto c = coupling_coefficients(vec(1, 0, 0), vec(1, 0, 0));
  CHECK(std::abs(c.rotating - 1.0) < 1e-15);
  CHECK(std::abs(c.counter_rotating - 1.0) < 1e-15);

  c = coupling_coefficients(vec(s, i * s, 0), vec(s, i * s, 0));
  CHECK(std::abs(c.rotating - 1.0) < 1e-15);
  CHECK(std::abs(c.counter_rotating) < 1e-15);

  c = coupling_coefficients(vec(s, i * s, 0), vec(s, -i * s, 0));
  CHECK(std::abs(c.rotating) < 1e-15);
  CHECK(std::abs(c.counter_rotating - 1.0) < 1e-15);
}

TEST_CASE("coupling coefficient identities on random vectors") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> nd;
  const cplx i{0, 1};
  for (int trial = 0; trial < 50; ++trial) {
    PolarizationVector d = vec(nd(rng), nd(rng), nd(rng));
    PolarizationVector e = vec(nd(rng), nd(rng), nd(rng));
    auto c = coupling_coefficients(d, e);
    CHECK(std::abs(c.rotating - c.counter_rotating) < 1e-12);

    // circular E in a plane containing the real d
    const double amp = std::abs(nd(rng)) + 0.1;
    const double phi = nd(rng);
    const double dx = nd(rng), dy = nd(rng);
    d = vec(dx, dy, 0);
    e = vec(amp * std::exp(i * phi), amp * i * std::exp(i * phi), 0);
    c = coupling_coefficients(d, e);
    const double lhs = std::norm(c.rotating) + std::norm(c.counter_rotating);
    const double rhs = (dx * dx + dy * dy) * 2 * amp * amp;
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
  }
}

TEST_CASE("single sector bases") {
  check_entries(build_single_sector_basis(0, 2), {{Branch::G, {0, 0}},
                                                  {Branch::G, {1, 1}},
                                                  {Branch::G, {2, 2}},
                                                  {Branch::E, {0, 1}},
                                                  {Branch::E, {1, 2}}});
  check_entries(build_single_sector_basis(1, 1),
                {{Branch::G, {1, 0}}, {Branch::G, {2, 1}}, {Branch::E, {0, 0}}, {Branch::E, {1, 1}}});
  check_entries(build_single_sector_basis(-1, 2), {{Branch::G, {0, 1}}, {Branch::G, {1, 2}}, {Branch::E, {0, 2}}});
  CHECK_THROWS_AS(build_single_sector_basis(0, -1), InvalidArgument);
}

TEST_CASE("single sector states carry L_z = l - 1/2 and index_of inverts the enumeration") {
  for (int l = -4; l <= 4; ++l) {
    const auto b = build_single_sector_basis(l, 7);
    for (std::size_t k = 0; k < b.size(); ++k) {
      const auto& s = b[k];
      CHECK(s.n_a >= 0);
      CHECK(s.n_b >= 0);
      CHECK(s.n_b == s.n);
      const double sz = s.branch == Branch::E ? 0.5 : -0.5;
      CHECK(s.n_a - s.n_b + sz == doctest::Approx(l - 0.5));
      CHECK(b.index_of(s.branch, s.n) == k);
    }
  }
}

TEST_CASE("lattice sector basis examples") {
  ModelParams p;
  p.L = 2;
  const auto b = build_lattice_sector_basis(p, 1, 0);
  REQUIRE(b.size() == 3);
  CHECK(b.branch(0) == Branch::G);
  CHECK(b.a_occ(0)[0] == 1);
  CHECK(b.a_occ(0)[1] == 0);
  CHECK(b.branch(1) == Branch::G);
  CHECK(b.a_occ(1)[1] == 1);
  CHECK(b.branch(2) == Branch::E);
  CHECK(b.total_a(2) == 0);

  CHECK(LatticeSectorBasis::dimension(20, 1, 2) == 372121);
  CHECK(count_compositions(1, 20) == 20);
  CHECK(count_compositions(2, 20) * count_compositions(1, 20) == 4200);
  CHECK(count_compositions(3, 20) * count_compositions(2, 20) == 323400);
  CHECK(count_compositions(1, 20) * count_compositions(1, 20) == 400);
  CHECK(count_compositions(2, 20) * count_compositions(2, 20) == 44100);
}

TEST_CASE("L=20 enumeration matches the closed form and satisfies the sector constraints") {
  ModelParams p;
  p.L = 20;
  const auto b = build_lattice_sector_basis(p, 1, 2);
  REQUIRE(b.size() == 372121);
  std::size_t g_count = 0;
  for (std::size_t i = 0; i < b.size(); i += 97) {
    int na = 0, nb = 0;
    for (auto v : b.a_occ(i)) na += v;
    for (auto v : b.b_occ(i)) nb += v;
    CHECK(nb == b.total_b(i));
    CHECK(nb <= 2);
    CHECK(na - nb == (b.branch(i) == Branch::G ? 1 : 0));
    CHECK(b.index_of(b.branch(i), b.a_occ(i), b.b_occ(i)) == i);
  }
  for (std::size_t i = 0; i < b.size(); ++i) g_count += b.branch(i) == Branch::G;
  CHECK(g_count == 20 + 4200 + 323400);
}

TEST_CASE("lattice enumeration is deterministic and canonically ordered") {
  ModelParams p;
  p.L = 4;
  const auto a = build_lattice_sector_basis(p, 0, 3);
  const auto b = build_lattice_sector_basis(p, 0, 3);
  REQUIRE(a.size() == b.size());
  CHECK(a.size() == LatticeSectorBasis::dimension(4, 0, 3));
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.branch(i) == b.branch(i));
    CHECK(std::equal(a.a_occ(i).begin(), a.a_occ(i).end(), b.a_occ(i).begin()));
    CHECK(std::equal(a.b_occ(i).begin(), a.b_occ(i).end(), b.b_occ(i).begin()));
    if (i > 0) {
      const auto key = [&](std::size_t k) { return std::pair{int(a.branch(k)), a.total_b(k)}; };
      CHECK(key(i - 1) <= key(i));
    }
  }
}

TEST_CASE("one-site lattice basis is the single-cavity basis") {
  ModelParams p;
  p.L = 1;
  for (int l = -3; l <= 3; ++l) {
    for (int n_max = 0; n_max <= 5; ++n_max) {
      const auto lat = build_lattice_sector_basis(p, l, n_max);
      const auto one = build_single_sector_basis(l, n_max);
      REQUIRE(lat.size() == one.size());
      for (std::size_t i = 0; i < one.size(); ++i) {
        CHECK(lat.branch(i) == one[i].branch);
        CHECK(lat.total_b(i) == one[i].n);
        CHECK(lat.a_occ(i)[0] == one[i].n_a);
      }
    }
  }
}

TEST_CASE("lattice basis budget and argument checks") {
  ModelParams p;
  p.L = 20;
  CHECK_THROWS_AS(build_lattice_sector_basis(p, 1, 2, 1000), BudgetExceeded);
  CHECK_THROWS_AS(build_lattice_sector_basis(p, 1, -1), InvalidArgument);
  p.L = 0;
  CHECK_THROWS_AS(build_lattice_sector_basis(p, 1, 1), InvalidArgument);
}

TEST_CASE("model parameter validation") {
  ModelParams p;
  CHECK_NOTHROW(p.validate());
  p.g = -0.1;
  CHECK_THROWS_AS(p.validate(), InvalidArgument);
  p.g = 0.1;
  p.J = std::nan("");
  CHECK_THROWS_AS(p.validate(), InvalidArgument);
}
