#pragma once

// Model parameters, polarization-derived couplings and the deterministic
// enumeration of fixed angular-momentum sectors.
//
// Sector label convention: a sector is labelled by the integer l used in the
// ansatz; the actual L_z eigenvalue of every state in it is l - 1/2.

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace chiral {

using cplx = std::complex<double>;

/// Physical parameters, hbar = 1. Energies are conventionally in units of omega0.
struct ModelParams {
  double omega0 = 1.0;   ///< TLS transition frequency
  double omega_c = 1.0;  ///< degenerate cavity frequency of both modes
  double g = 0.0;        ///< light-matter coupling (real, >= 0)
  double J = 0.0;        ///< inter-cavity hopping (lattice only)
  double delta = 0.0;    ///< |2> detuning (V-level only)
  int L = 1;             ///< number of lattice sites (lattice only)

  /// Throws InvalidArgument on non-finite energies, negative g/J or L < 1.
  void validate() const;
};

struct PolarizationVector {
  std::array<cplx, 3> c{};
};

struct Couplings {
  cplx rotating;          ///< g_R  = d . conj(E)
  cplx counter_rotating;  ///< g_cR = d . E
};

Couplings coupling_coefficients(const PolarizationVector& d, const PolarizationVector& e);

enum class Branch : std::uint8_t { G = 0, E = 1 };

const char* to_string(Branch b);

/// One state of a single-cavity sector: |g>|n+l, n> (G) or |e>|n+l-1, n> (E).
struct SectorEntry {
  Branch branch;
  int n;    ///< b-mode photon number
  int n_a;  ///< a-mode photon number
  int n_b;  ///< equals n
};

class SingleSectorBasis {
 public:
  SingleSectorBasis(int l, int n_max);

  int l() const noexcept { return l_; }
  int n_max() const noexcept { return n_max_; }
  double lz() const noexcept { return l_ - 0.5; }
  std::size_t size() const noexcept { return states_.size(); }
  const SectorEntry& operator[](std::size_t i) const { return states_[i]; }
  const std::vector<SectorEntry>& states() const noexcept { return states_; }

  std::optional<std::size_t> index_of(Branch b, int n) const;

 private:
  int l_;
  int n_max_;
  std::size_t e_offset_;  // index of the first E entry
  int g_first_n_;         // smallest admissible n in each branch
  int e_first_n_;
  std::vector<SectorEntry> states_;
};

/// All admissible (branch, n <= n_max); G entries first, each branch ascending in n.
SingleSectorBasis build_single_sector_basis(int l, int n_max);

/// Number of ways to distribute `photons` bosons over `sites` sites.
std::uint64_t count_compositions(int photons, int sites);

/// Default cap on lattice sector dimension.
inline constexpr std::size_t kDefaultBasisBudget = 5'000'000;

/// Fixed-L_z sector of the coupled-cavity array, in occupation representation.
///
/// States are ordered by branch (G, E), then by total b-photon number n, then
/// by (a-occupations, b-occupations) in descending lexicographic order, so a
/// single photon on site 0 precedes a single photon on site 1.
class LatticeSectorBasis {
 public:
  LatticeSectorBasis(int L, int l, int n_max, std::size_t budget = kDefaultBasisBudget);

  int L() const noexcept { return L_; }
  int l() const noexcept { return l_; }
  int n_max() const noexcept { return n_max_; }
  double lz() const noexcept { return l_ - 0.5; }
  std::size_t size() const noexcept { return branch_.size(); }

  Branch branch(std::size_t i) const { return static_cast<Branch>(branch_[i]); }
  /// Total b-photon number of state i.
  int total_b(std::size_t i) const { return total_b_[i]; }
  int total_a(std::size_t i) const;
  std::span<const std::uint8_t> a_occ(std::size_t i) const {
    return {occ_.data() + 2 * L_ * i, static_cast<std::size_t>(L_)};
  }
  std::span<const std::uint8_t> b_occ(std::size_t i) const {
    return {occ_.data() + 2 * L_ * i + L_, static_cast<std::size_t>(L_)};
  }

  /// Index of a state from its occupations; nullopt when outside the sector
  /// or beyond the truncation.
  std::optional<std::size_t> index_of(Branch b, std::span<const std::uint8_t> a,
                                      std::span<const std::uint8_t> bocc) const;

  /// Closed-form dimension for (L, l, n_max); independent of enumeration.
  static std::uint64_t dimension(int L, int l, int n_max);

 private:
  std::uint64_t rank(std::span<const std::uint8_t> occ, int total) const;

  int L_;
  int l_;
  int n_max_;
  // offsets_[branch][n], number of states before block (branch, n)
  std::array<std::vector<std::uint64_t>, 2> offsets_;
  std::vector<std::uint64_t> binom_;  // comp table, (photons, sites) row-major
  int binom_photons_;
  std::vector<std::uint8_t> branch_;
  std::vector<std::uint16_t> total_b_;
  std::vector<std::uint8_t> occ_;  // per state: L a-occupations then L b-occupations

  std::uint64_t comp(int photons, int sites) const;
};

LatticeSectorBasis build_lattice_sector_basis(const ModelParams& params, int l, int n_max,
                                              std::size_t budget = kDefaultBasisBudget);

}  // namespace chiral
