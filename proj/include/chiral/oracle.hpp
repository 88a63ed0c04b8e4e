#pragma once

// Brute-force full-Hilbert-space constructions used to cross-check the sector
// code. They share nothing with the sector assembly: operators are built as
// sums of Kronecker products of single-factor matrices on a box truncation.

#include <cstddef>
#include <optional>
#include <vector>

#include "chiral/eigensolvers.hpp"
#include "chiral/hilbert.hpp"
#include "chiral/sparse.hpp"

namespace chiral {

/// Sparse operator on a tensor product of factors with the given dimensions,
/// accumulated term by term. Factor 0 is the slowest-varying index.
class ProductSpace {
 public:
  struct LocalEntry {
    std::size_t row;
    std::size_t col;
    double value;
  };
  using LocalMatrix = std::vector<LocalEntry>;
  struct Factor {
    std::size_t site;
    LocalMatrix matrix;
  };

  explicit ProductSpace(std::vector<std::size_t> dims);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t index(const std::vector<std::size_t>& digits) const;
  std::vector<std::size_t> digits(std::size_t index) const;

  /// Adds coefficient * (prod over factors), identity on the other sites.
  void add(double coefficient, const std::vector<Factor>& factors);
  SparseOperator build() const;

  static LocalMatrix annihilation(std::size_t cap);
  static LocalMatrix creation(std::size_t cap);
  static LocalMatrix number(std::size_t cap);
  /// |to><from| on a d-level factor
  static LocalMatrix projector(std::size_t to, std::size_t from);

 private:
  std::vector<std::size_t> dims_;
  std::vector<std::size_t> strides_;
  std::size_t dim_;
  std::vector<Triplet> triplets_;
};

/// Full-space eigen-decomposition with each eigenvector assigned to a sector.
struct OracleSpectrum {
  SparseOperator hamiltonian;
  std::vector<double> lz_diagonal;  ///< conserved quantity on each product state
  EigenSolution solution;
  std::vector<double> lz;           ///< <L> per eigenvector
  std::vector<int> label;           ///< sector label per eigenvector
  double max_mixing = 0.0;          ///< largest sqrt(<L^2> - <L>^2)
  /// Components method only: largest deviation between the block spectra and an
  /// eigenvalues-only diagonalization of the whole matrix (skipped above
  /// kWholeSpectrumCheckLimit).
  std::optional<double> full_spectrum_deviation;

  /// Energies of one sector, ascending.
  std::vector<double> sector_energies(int l) const;
};

/// How the full-space spectrum is split into sectors.
///  Clusters: dense eigenvectors of the whole matrix, with near-degenerate
///            clusters re-diagonalized in the conserved quantity.
///  Components: the matrix is split into the connected components of its
///            nonzero pattern, each diagonalized densely and labeled by the
///            conserved quantity, which must be constant on it. No eigenvectors
///            are kept.
enum class OracleMethod { Clusters, Components };

inline constexpr std::size_t kWholeSpectrumCheckLimit = 1500;

/// Index of |tls, n_a, n_b> in the two-mode box space (tls 0 = g, 1 = e).
std::size_t two_mode_index(int tls, int n_a, int n_b, int cap);

/// The chiral Rabi Hamiltonian on {|g/e> x |n_a> x |n_b> : n_a, n_b <= cap}.
SparseOperator two_mode_full_hamiltonian(const ModelParams& params, int cap);

/// Dense diagonalization of the full two-mode space. Labels are l = <L_z> + 1/2,
/// which must be within 1e-8 of an integer; sector mixing above 1e-8 throws
/// ConsistencyError.
OracleSpectrum brute_force_two_mode_oracle(const ModelParams& params, int cap,
                                           OracleMethod method = OracleMethod::Clusters);

/// Index of |level, n_a, n_b> (level 0 = g, 1 = |1>, 2 = |2>).
std::size_t vlevel_index(int level, int n_a, int n_b, int cap);
SparseOperator vlevel_full_hamiltonian(const ModelParams& params, int cap);
/// As above for the V-level atom; labels are the integer eigenvalues of L_V.
OracleSpectrum brute_force_vlevel_oracle(const ModelParams& params, int cap,
                                         OracleMethod method = OracleMethod::Clusters);

/// Index of a lattice product state with per-site cap.
std::size_t lattice_full_index(int tls, const std::vector<int>& a, const std::vector<int>& b, int L, int site_cap);
/// Coupled-cavity Hamiltonian on the full product space with per-site boson cap.
/// `counter_rotating` scales the sigma_+ b_0^dagger + h.c. term.
SparseOperator lattice_full_hamiltonian(const ModelParams& params, int site_cap, double counter_rotating = 1.0);
OracleSpectrum brute_force_lattice_oracle(const ModelParams& params, int site_cap);

/// Frobenius norm of the entries of h that connect product states with
/// different values of the conserved quantity.
double offblock_norm(const SparseOperator& h, const std::vector<double>& lz_diagonal);

/// Dense eigen-decomposition of h followed by sector resolution: clusters of
/// nearly degenerate eigenvalues are re-diagonalized in the conserved quantity.
/// `label_offset` maps <L> to the integer label (0.5 for the TLS models).
OracleSpectrum resolve_sectors(SparseOperator h, std::vector<double> lz_diagonal, double label_offset);

/// The Components method; see OracleMethod.
OracleSpectrum resolve_components(SparseOperator h, std::vector<double> lz_diagonal, double label_offset);

}  // namespace chiral
