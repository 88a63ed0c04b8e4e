#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "chiral/sparse.hpp"

namespace chiral {

/// Eigenpairs of a real symmetric operator, energies ascending.
struct EigenSolution {
  std::size_t dim = 0;
  std::vector<double> energies;
  std::vector<double> vectors;    ///< column-major, dim x energies.size(); empty if not requested
  std::vector<double> residuals;  ///< ||H v - E v|| per pair
  std::string solver;
  int sector = 0;
  int n_max = -1;

  std::size_t count() const noexcept { return energies.size(); }
  bool has_vectors() const noexcept { return !vectors.empty(); }
  std::span<const double> vector(std::size_t k) const {
    return {vectors.data() + k * dim, dim};
  }
  std::span<double> vector(std::size_t k) { return {vectors.data() + k * dim, dim}; }
};

struct DenseOptions {
  std::size_t budget = 20'000;    ///< largest dimension accepted
  bool want_vectors = true;
  double residual_factor = 1e-10; ///< residual tolerance relative to ||H||
};

/// Full spectrum via LAPACK (dsyevd). Throws BudgetExceeded above the budget.
EigenSolution dense_eigensolve(const SparseOperator& h, const DenseOptions& options = {});

struct LanczosOptions {
  std::size_t k = 1;
  double tol = -1.0;            ///< absolute residual; negative means 1e-8 * ||H||
  std::size_t basis_size = 0;   ///< Krylov basis before restart; 0 picks max(2k + 30, 60)
  std::size_t max_restarts = 2000;
  std::uint64_t seed = 0x5eed;  ///< start vector seed when `start` is empty
  std::vector<double> start;
};

/// k lowest eigenpairs by thick-restart Lanczos with full reorthogonalization.
///
/// Every basis vector is orthogonalized against the whole basis (with a
/// second pass whenever the first loses more than a 1/sqrt(2) factor), so no
/// spurious copies of converged Ritz values appear; convergence is declared on
/// the explicitly recomputed residual ||H x - theta x||. Throws ConvergenceError
/// carrying the best residual when `max_restarts` is exhausted.
EigenSolution lanczos_lowest(const SparseOperator& h, const LanczosOptions& options = {});

/// Makes eigenvectors reproducible: each cluster of (near-)degenerate energies
/// (gap < gap_tol) is replaced by the canonical orthonormal basis of its span,
/// and every vector's first significant component is made positive.
void canonicalize(EigenSolution& sol, double gap_tol);

/// Eigen-decomposition of a small symmetric tridiagonal matrix.
/// `diag` has n entries, `off` n-1; eigenvectors returned column-major.
void tridiagonal_eigen(std::span<const double> diag, std::span<const double> off,
                       std::vector<double>& values, std::vector<double>& vectors);

/// Eigen-decomposition of a small dense symmetric matrix (column-major, n x n).
void small_symmetric_eigen(std::size_t n, std::vector<double> a, std::vector<double>& values,
                           std::vector<double>& vectors);


/// Runs a 160 x 160 dense eigensolve and checks its residuals; false when the
/// linked LAPACK/BLAS returns wrong eigenvectors on this machine.
bool dense_backend_ok();

/// For executables: when the dense backend fails its check, pins OpenBLAS to
/// its Haswell kernels and re-executes the program once. Throws Error if the
/// backend is still broken afterwards.
void ensure_dense_backend(char** argv);

}  // namespace chiral
