#include <algorithm>
#include <cmath>
#include <sstream>
#include <cstdlib>

#include <unistd.h>

#include <lapacke.h>

#include "chiral/eigensolvers.hpp"
#include "chiral/errors.hpp"
#include "chiral/kernels.hpp"

namespace chiral {

namespace {

void compute_residuals(const SparseOperator& h, EigenSolution& sol) {
  sol.residuals.assign(sol.count(), 0.0);
  if (!sol.has_vectors()) return;
  std::vector<double> hv(sol.dim);
  for (std::size_t k = 0; k < sol.count(); ++k) {
    const auto v = sol.vector(k);
    h.apply(v, hv);
    parallel::axpy(-sol.energies[k], v, hv);
    sol.residuals[k] = parallel::norm(std::span<const double>(hv));
  }
}

}  // namespace

void small_symmetric_eigen(std::size_t n, std::vector<double> a, std::vector<double>& values,
                           std::vector<double>& vectors) {
  values.assign(n, 0.0);
  if (n == 0) {
    vectors.clear();
    return;
  }
  const lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'U', static_cast<lapack_int>(n),
                                         a.data(), static_cast<lapack_int>(n), values.data());
  if (info != 0) throw ConvergenceError("LAPACK dsyevd failed (info=" + std::to_string(info) + ")", 0.0);
  vectors = std::move(a);
}

void tridiagonal_eigen(std::span<const double> diag, std::span<const double> off,
                       std::vector<double>& values, std::vector<double>& vectors) {
  const std::size_t n = diag.size();
  values.assign(diag.begin(), diag.end());
  std::vector<double> e(off.begin(), off.end());
  e.resize(n > 0 ? n - 1 : 0);
  vectors.assign(n * n, 0.0);
  if (n == 0) return;
  const lapack_int info = LAPACKE_dstev(LAPACK_COL_MAJOR, 'V', static_cast<lapack_int>(n), values.data(),
                                        e.data(), vectors.data(), static_cast<lapack_int>(n));
  if (info != 0) throw ConvergenceError("LAPACK dstev failed (info=" + std::to_string(info) + ")", 0.0);
}

EigenSolution dense_eigensolve(const SparseOperator& h, const DenseOptions& options) {
  const std::size_t n = h.dim();
  if (n > options.budget) {
    std::ostringstream msg;
    msg << "dense eigensolve of dimension " << n << " exceeds the budget of " << options.budget
        << "; use lanczos_lowest for extremal eigenpairs";
    throw BudgetExceeded(msg.str(), n, options.budget);
  }
  EigenSolution sol;
  sol.dim = n;
  sol.solver = "dense";
  if (n == 0) return sol;

  std::vector<double> a = h.to_dense();  // symmetric: row- and column-major agree
  sol.energies.assign(n, 0.0);
  const char jobz = options.want_vectors ? 'V' : 'N';
  const lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, jobz, 'U', static_cast<lapack_int>(n), a.data(),
                                         static_cast<lapack_int>(n), sol.energies.data());
  if (info != 0) throw ConvergenceError("LAPACK dsyevd failed (info=" + std::to_string(info) + ")", 0.0);
  if (options.want_vectors) {
    sol.vectors = std::move(a);
    const double hnorm = h.norm_bound();
    canonicalize(sol, 1e-10 * std::max(hnorm, 1.0));
    compute_residuals(h, sol);
    const double tol = options.residual_factor * std::max(hnorm, 1.0);
    const double worst = *std::max_element(sol.residuals.begin(), sol.residuals.end());
    if (worst > tol) {
      std::ostringstream msg;
      msg << "dense eigensolve residual " << worst << " above tolerance " << tol;
      throw ConvergenceError(msg.str(), worst);
    }
  } else {
    sol.residuals.assign(n, 0.0);
  }
  return sol;
}

void canonicalize(EigenSolution& sol, double gap_tol) {
  if (!sol.has_vectors()) return;
  const std::size_t n = sol.dim;
  std::size_t start = 0;
  while (start < sol.count()) {
    std::size_t end = start + 1;
    while (end < sol.count() && sol.energies[end] - sol.energies[end - 1] < gap_tol) ++end;
    const std::size_t k = end - start;
    if (k > 1) {
      // Reduced row echelon form of the cluster (rows = vectors) is unique for
      // a given span; Gram-Schmidt on its rows in order gives the canonical basis.
      std::vector<double> w(sol.vectors.begin() + static_cast<std::ptrdiff_t>(start * n),
                            sol.vectors.begin() + static_cast<std::ptrdiff_t>(end * n));
      auto row = [&](std::size_t r) { return w.data() + r * n; };
      std::size_t pivot = 0;
      for (std::size_t col = 0; col < n && pivot < k; ++col) {
        std::size_t best = pivot;
        for (std::size_t r = pivot + 1; r < k; ++r) {
          if (std::abs(row(r)[col]) > std::abs(row(best)[col])) best = r;
        }
        if (std::abs(row(best)[col]) < 1e-7) continue;
        if (best != pivot) std::swap_ranges(row(best), row(best) + n, row(pivot));
        const double inv = 1.0 / row(pivot)[col];
        for (std::size_t c = 0; c < n; ++c) row(pivot)[c] *= inv;
        for (std::size_t r = 0; r < k; ++r) {
          if (r == pivot) continue;
          const double f = row(r)[col];
          if (f == 0.0) continue;
          for (std::size_t c = 0; c < n; ++c) row(r)[c] -= f * row(pivot)[c];
        }
        ++pivot;
      }
      if (pivot == k) {
        for (std::size_t r = 0; r < k; ++r) {
          for (int pass = 0; pass < 2; ++pass) {
            for (std::size_t q = 0; q < r; ++q) {
              double d = 0.0;
              for (std::size_t c = 0; c < n; ++c) d += row(q)[c] * row(r)[c];
              for (std::size_t c = 0; c < n; ++c) row(r)[c] -= d * row(q)[c];
            }
          }
          double nrm = 0.0;
          for (std::size_t c = 0; c < n; ++c) nrm += row(r)[c] * row(r)[c];
          nrm = std::sqrt(nrm);
          for (std::size_t c = 0; c < n; ++c) row(r)[c] /= nrm;
        }
        std::copy(w.begin(), w.end(), sol.vectors.begin() + static_cast<std::ptrdiff_t>(start * n));
      }
    }
    start = end;
  }
  for (std::size_t c = 0; c < sol.count(); ++c) {
    auto v = sol.vector(c);
    double vmax = 0.0;
    for (double x : v) vmax = std::max(vmax, std::abs(x));
    for (double x : v) {
      if (std::abs(x) > 1e-8 * vmax) {
        if (x < 0) {
          for (double& y : v) y = -y;
        }
        break;
      }
    }
  }
}

}  // namespace chiral

namespace chiral {

bool dense_backend_ok() {
  // Large enough to reach the blocked (level-3) code paths of dsyevd.
  constexpr std::size_t n = 160;
  std::vector<double> a(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      a[i * n + j] = a[j * n + i] = std::sin(1.0 + 7.0 * double(i) + 3.0 * double(j));
    }
  }
  std::vector<double> values, vectors;
  try {
    small_symmetric_eigen(n, a, values, vectors);
  } catch (const Error&) {
    return false;
  }
  double worst = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    double r2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double s = -values[k] * vectors[k * n + i];
      for (std::size_t j = 0; j < n; ++j) s += a[i * n + j] * vectors[k * n + j];
      r2 += s * s;
    }
    worst = std::max(worst, std::sqrt(r2));
  }
  return worst < 1e-10;
}

void ensure_dense_backend(char** argv) {
  if (dense_backend_ok()) return;
  if (!std::getenv("CHIRAL_BACKEND_RETRY")) {
    // OpenBLAS reads its kernel choice only at process start.
    setenv("CHIRAL_BACKEND_RETRY", "1", 1);
    setenv("OPENBLAS_CORETYPE", "Haswell", 1);
    execv("/proc/self/exe", argv);
  }
  throw Error("the linked LAPACK/BLAS returns incorrect eigenvectors on this machine");
}

}  // namespace chiral
