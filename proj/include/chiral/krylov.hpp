#pragma once

#include <complex>
#include <cstddef>
#include <span>

#include "chiral/sparse.hpp"

namespace chiral {

struct KrylovOptions {
  double err_tol = 1e-10;           ///< bound on the local error of one krylov_propagate call
  std::size_t max_dim = 40;         ///< Krylov subspace dimension per substep
  std::size_t max_substeps = 200'000;
};

struct KrylovStats {
  std::size_t substeps = 0;
  std::size_t rejected = 0;    ///< trial substeps shortened because the estimate was too large
  std::size_t matvecs = 0;
  double error_bound = 0.0;    ///< sum of accepted substep error estimates
};

/// psi <- exp(-i H dt) psi.
///
/// Each substep builds a Lanczos basis of the current vector and exponentiates
/// the projected tridiagonal matrix. The substep error estimate is
/// beta_m * |[exp(-i T tau) e_1]_m|; a substep of length tau is accepted when
/// this is at most err_tol * tau / dt, so the accepted estimates sum to at most
/// err_tol. Rejected substeps are halved and reuse the same basis.
///
/// Throws InvalidArgument when psi is not normalized to 1e-12 and
/// ConvergenceError (carrying the estimate reached) when the tolerance cannot
/// be met within max_substeps.
void krylov_propagate(const SparseOperator& h, std::span<std::complex<double>> psi, double dt,
                      const KrylovOptions& options = {}, KrylovStats* stats = nullptr);

}  // namespace chiral
