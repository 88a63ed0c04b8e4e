#include "chiral/hilbert.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "chiral/errors.hpp"

namespace chiral {

void ModelParams::validate() const {
  for (double v : {omega0, omega_c, g, J, delta}) {
    if (!std::isfinite(v)) throw InvalidArgument("model parameters must be finite");
  }
  if (g < 0.0) throw InvalidArgument("coupling g must be >= 0");
  if (J < 0.0) throw InvalidArgument("hopping J must be >= 0");
  if (L < 1) throw InvalidArgument("lattice size L must be >= 1");
}

Couplings coupling_coefficients(const PolarizationVector& d, const PolarizationVector& e) {
  Couplings out{};
  for (std::size_t k = 0; k < 3; ++k) {
    out.rotating += d.c[k] * std::conj(e.c[k]);
    out.counter_rotating += d.c[k] * e.c[k];
  }
  return out;
}

const char* to_string(Branch b) { return b == Branch::G ? "G" : "E"; }

// ---------------------------------------------------------------------------
// Single cavity

SingleSectorBasis::SingleSectorBasis(int l, int n_max) : l_(l), n_max_(n_max) {
  if (n_max < 0) throw InvalidArgument("n_max must be >= 0");
  g_first_n_ = std::max(0, -l);
  e_first_n_ = std::max(0, 1 - l);
  for (int n = g_first_n_; n <= n_max; ++n) {
    states_.push_back({Branch::G, n, n + l, n});
  }
  e_offset_ = states_.size();
  for (int n = e_first_n_; n <= n_max; ++n) {
    states_.push_back({Branch::E, n, n + l - 1, n});
  }
}

std::optional<std::size_t> SingleSectorBasis::index_of(Branch b, int n) const {
  if (n > n_max_) return std::nullopt;
  if (b == Branch::G) {
    if (n < g_first_n_) return std::nullopt;
    return static_cast<std::size_t>(n - g_first_n_);
  }
  if (n < e_first_n_) return std::nullopt;
  return e_offset_ + static_cast<std::size_t>(n - e_first_n_);
}

SingleSectorBasis build_single_sector_basis(int l, int n_max) { return {l, n_max}; }

// ---------------------------------------------------------------------------
// Lattice

namespace {

constexpr std::uint64_t kSaturated = std::numeric_limits<std::uint64_t>::max();

std::uint64_t sat_add(std::uint64_t a, std::uint64_t b) {
  return (a > kSaturated - b) ? kSaturated : a + b;
}

std::uint64_t sat_mul(std::uint64_t a, std::uint64_t b) {
  if (a == 0 || b == 0) return 0;
  return (a > kSaturated / b) ? kSaturated : a * b;
}

// Compositions of `photons` into `sites` parts, via Pascal's rule.
std::vector<std::uint64_t> composition_table(int max_photons, int max_sites) {
  const int cols = max_sites + 1;
  std::vector<std::uint64_t> t(static_cast<std::size_t>((max_photons + 1) * cols), 0);
  auto at = [&](int p, int s) -> std::uint64_t& { return t[static_cast<std::size_t>(p * cols + s)]; };
  at(0, 0) = 1;
  for (int s = 1; s <= max_sites; ++s) {
    for (int p = 0; p <= max_photons; ++p) {
      at(p, s) = sat_add(at(p, s - 1), p > 0 ? at(p - 1, s) : 0);
    }
  }
  return t;
}

// All compositions of `total` into `sites` parts, descending lexicographic.
std::vector<std::uint8_t> enumerate_compositions(int total, int sites) {
  std::vector<std::uint8_t> out;
  std::vector<int> occ(static_cast<std::size_t>(sites), 0);
  occ[0] = total;
  while (true) {
    for (int v : occ) out.push_back(static_cast<std::uint8_t>(v));
    int i = sites - 2;
    while (i >= 0 && occ[static_cast<std::size_t>(i)] == 0) --i;
    if (i < 0) break;
    int tail = 0;
    for (int k = i + 1; k < sites; ++k) {
      tail += occ[static_cast<std::size_t>(k)];
      occ[static_cast<std::size_t>(k)] = 0;
    }
    --occ[static_cast<std::size_t>(i)];
    occ[static_cast<std::size_t>(i + 1)] = tail + 1;
  }
  return out;
}

int a_photons(Branch b, int n, int l) { return b == Branch::G ? n + l : n + l - 1; }

}  // namespace

std::uint64_t count_compositions(int photons, int sites) {
  if (photons < 0 || sites < 0) return 0;
  if (sites == 0) return photons == 0 ? 1 : 0;
  return composition_table(photons, sites)[static_cast<std::size_t>(photons * (sites + 1) + sites)];
}

std::uint64_t LatticeSectorBasis::dimension(int L, int l, int n_max) {
  if (L < 1 || n_max < 0) return 0;
  const int max_photons = n_max + std::max(l, 0) + 1;
  const auto table = composition_table(max_photons, L);
  auto comp = [&](int p) -> std::uint64_t {
    if (p < 0) return 0;
    return table[static_cast<std::size_t>(p * (L + 1) + L)];
  };
  std::uint64_t total = 0;
  for (Branch b : {Branch::G, Branch::E}) {
    for (int n = 0; n <= n_max; ++n) {
      total = sat_add(total, sat_mul(comp(a_photons(b, n, l)), comp(n)));
    }
  }
  return total;
}

LatticeSectorBasis::LatticeSectorBasis(int L, int l, int n_max, std::size_t budget)
    : L_(L), l_(l), n_max_(n_max) {
  if (L < 1) throw InvalidArgument("lattice size L must be >= 1");
  if (n_max < 0) throw InvalidArgument("n_max must be >= 0");
  if (n_max + std::max(l, 0) > 255) throw InvalidArgument("occupations above 255 are not supported");

  const std::uint64_t dim = dimension(L, l, n_max);
  if (dim > budget) {
    std::ostringstream msg;
    msg << "lattice sector (L=" << L << ", l=" << l << ", n_max=" << n_max << ") has " << dim
        << " states, above the budget of " << budget << " (~"
        << (static_cast<double>(dim) * (2.0 * L + 3.0)) / 1e6 << " MB for the basis alone)";
    throw BudgetExceeded(msg.str(), dim, budget);
  }

  binom_photons_ = n_max + std::max(l, 0) + 1;
  binom_ = composition_table(binom_photons_, L);

  branch_.reserve(dim);
  total_b_.reserve(dim);
  occ_.reserve(dim * 2 * static_cast<std::size_t>(L));

  std::uint64_t offset = 0;
  for (Branch b : {Branch::G, Branch::E}) {
    auto& offs = offsets_[static_cast<int>(b)];
    offs.assign(static_cast<std::size_t>(n_max + 2), 0);
    for (int n = 0; n <= n_max; ++n) {
      offs[static_cast<std::size_t>(n)] = offset;
      const int na = a_photons(b, n, l);
      if (na < 0) continue;
      const auto a_cfg = enumerate_compositions(na, L);
      const auto b_cfg = enumerate_compositions(n, L);
      const std::size_t ca = a_cfg.size() / static_cast<std::size_t>(L);
      const std::size_t cb = b_cfg.size() / static_cast<std::size_t>(L);
      for (std::size_t ia = 0; ia < ca; ++ia) {
        for (std::size_t ib = 0; ib < cb; ++ib) {
          branch_.push_back(static_cast<std::uint8_t>(b));
          total_b_.push_back(static_cast<std::uint16_t>(n));
          occ_.insert(occ_.end(), a_cfg.begin() + static_cast<std::ptrdiff_t>(ia * L),
                      a_cfg.begin() + static_cast<std::ptrdiff_t>((ia + 1) * L));
          occ_.insert(occ_.end(), b_cfg.begin() + static_cast<std::ptrdiff_t>(ib * L),
                      b_cfg.begin() + static_cast<std::ptrdiff_t>((ib + 1) * L));
        }
      }
      offset += ca * cb;
    }
    offs[static_cast<std::size_t>(n_max + 1)] = offset;
  }
}

int LatticeSectorBasis::total_a(std::size_t i) const {
  return a_photons(branch(i), total_b(i), l_);
}

std::uint64_t LatticeSectorBasis::comp(int photons, int sites) const {
  if (photons < 0) return 0;
  return binom_[static_cast<std::size_t>(photons * (L_ + 1) + sites)];
}

std::uint64_t LatticeSectorBasis::rank(std::span<const std::uint8_t> occ, int total) const {
  std::uint64_t r = 0;
  int remaining = total;
  for (int i = 0; i + 1 < L_; ++i) {
    const int v = occ[static_cast<std::size_t>(i)];
    r += comp(remaining - v - 1, L_ - i);
    remaining -= v;
  }
  return r;
}

std::optional<std::size_t> LatticeSectorBasis::index_of(Branch b, std::span<const std::uint8_t> a,
                                                        std::span<const std::uint8_t> bocc) const {
  const int na = std::accumulate(a.begin(), a.end(), 0);
  const int nb = std::accumulate(bocc.begin(), bocc.end(), 0);
  if (nb > n_max_ || a_photons(b, nb, l_) != na) return std::nullopt;
  const std::uint64_t per_a = comp(nb, L_);
  return static_cast<std::size_t>(offsets_[static_cast<int>(b)][static_cast<std::size_t>(nb)] +
                                  rank(a, na) * per_a + rank(bocc, nb));
}

LatticeSectorBasis build_lattice_sector_basis(const ModelParams& params, int l, int n_max,
                                              std::size_t budget) {
  params.validate();
  return {params.L, l, n_max, budget};
}

}  // namespace chiral
