#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "chiral/eigensolvers.hpp"
#include "chiral/errors.hpp"
#include "chiral/kernels.hpp"

namespace chiral {

namespace {

std::vector<double> random_unit(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = dist(rng);
  parallel::scale(1.0 / parallel::norm(std::span<const double>(v)), v);
  return v;
}

// Orthogonalizes w against the first `count` basis columns (classical
// Gram-Schmidt, repeated when the norm drops by more than 1/sqrt(2)).
// Accumulates the projection coefficients into `coeff`; returns ||w||.
double orthogonalize(std::span<const double> basis, std::size_t count, std::span<double> w,
                     std::span<double> coeff, std::vector<double>& scratch) {
  scratch.assign(count, 0.0);
  std::fill(coeff.begin(), coeff.begin() + static_cast<std::ptrdiff_t>(count), 0.0);
  double before = parallel::norm(std::span<const double>(w));
  for (int pass = 0; pass < 3; ++pass) {
    parallel::multi_dot(basis, count, w, scratch);
    parallel::subtract_combination(basis, count, scratch, w);
    for (std::size_t i = 0; i < count; ++i) coeff[i] += scratch[i];
    const double after = parallel::norm(std::span<const double>(w));
    if (after > 0.7071 * before) return after;
    before = after;
  }
  return before;
}

}  // namespace

EigenSolution lanczos_lowest(const SparseOperator& h, const LanczosOptions& options) {
  const std::size_t n = h.dim();
  if (options.k < 1) throw InvalidArgument("lanczos_lowest needs k >= 1");
  if (n == 0) throw InvalidArgument("lanczos_lowest on an empty operator");
  const std::size_t k = std::min(options.k, n);
  const double hnorm = std::max(h.norm_bound(), 1e-300);
  const double tol = options.tol > 0 ? options.tol : 1e-8 * hnorm;
  std::size_t m = options.basis_size ? options.basis_size : std::max<std::size_t>(2 * k + 30, 60);
  m = std::min(m, n);
  if (m <= k && m < n) m = std::min(n, k + 1);

  std::vector<double> basis((m + 1) * n, 0.0);
  auto col = [&](std::size_t j) { return std::span<double>(basis.data() + j * n, n); };
  std::vector<double> T(m * m, 0.0);  // projected matrix, column-major
  std::vector<double> coeff(m + 1), scratch, w(n);

  {
    std::vector<double> v0 = options.start.empty() ? random_unit(n, options.seed) : options.start;
    if (v0.size() != n) throw InvalidArgument("lanczos start vector has the wrong dimension");
    const double nv = parallel::norm(std::span<const double>(v0));
    if (!(nv > 0)) throw InvalidArgument("lanczos start vector is zero");
    parallel::scale(1.0 / nv, v0);
    std::copy(v0.begin(), v0.end(), col(0).begin());
  }

  std::size_t jstart = 0;
  std::uint64_t reseed = options.seed;
  double best_residual = std::numeric_limits<double>::infinity();
  std::vector<double> theta, S;

  for (std::size_t restart = 0; restart <= options.max_restarts; ++restart) {
    double beta = 0.0;
    std::size_t size = m;
    for (std::size_t j = jstart; j < m; ++j) {
      h.apply(col(j), w);
      beta = orthogonalize(basis, j + 1, w, coeff, scratch);
      for (std::size_t i = 0; i <= j; ++i) {
        T[i + j * m] = coeff[i];
        T[j + i * m] = coeff[i];
      }
      if (j + 1 == n) {  // Krylov space is the whole space
        beta = 0.0;
        size = j + 1;
        break;
      }
      if (beta < 1e-12 * hnorm) {
        // Invariant subspace: continue with a fresh direction, decoupled in T.
        std::vector<double> fresh = random_unit(n, ++reseed);
        const double nf = orthogonalize(basis, j + 1, fresh, coeff, scratch);
        parallel::scale(1.0 / nf, fresh);
        std::copy(fresh.begin(), fresh.end(), col(j + 1).begin());
        beta = 0.0;
        if (j + 1 < m) {
          T[(j + 1) + j * m] = 0.0;
          T[j + (j + 1) * m] = 0.0;
        }
        continue;
      }
      parallel::scale(1.0 / beta, w);
      std::copy(w.begin(), w.end(), col(j + 1).begin());
    }

    std::vector<double> Ts(size * size);
    for (std::size_t c = 0; c < size; ++c) {
      for (std::size_t r = 0; r < size; ++r) Ts[r + c * size] = T[r + c * m];
    }
    small_symmetric_eigen(size, std::move(Ts), theta, S);

    bool estimates_ok = true;
    for (std::size_t i = 0; i < k; ++i) {
      const double est = std::abs(beta * S[(size - 1) + i * size]);
      if (est > 0.5 * tol) estimates_ok = false;
    }

    if (estimates_ok || size == n) {
      EigenSolution sol;
      sol.dim = n;
      sol.solver = "lanczos";
      sol.energies.assign(theta.begin(), theta.begin() + static_cast<std::ptrdiff_t>(k));
      sol.vectors.assign(k * n, 0.0);
      sol.residuals.assign(k, 0.0);
      for (std::size_t i = 0; i < k; ++i) {
        auto x = sol.vector(i);
        parallel::combine(basis, size, std::span<const double>(S.data() + i * size, size), x);
        parallel::scale(1.0 / parallel::norm(std::span<const double>(x)), x);
        h.apply(x, w);
        sol.energies[i] = parallel::dot(std::span<const double>(x), std::span<const double>(w));
        parallel::axpy(-sol.energies[i], x, w);
        sol.residuals[i] = parallel::norm(std::span<const double>(w));
      }
      const double worst = *std::max_element(sol.residuals.begin(), sol.residuals.end());
      best_residual = std::min(best_residual, worst);
      if (worst <= tol) {
        canonicalize(sol, 1e-10 * hnorm);
        return sol;
      }
    } else {
      for (std::size_t i = 0; i < k; ++i) {
        best_residual = std::min(best_residual, std::abs(beta * S[(size - 1) + i * size]));
      }
    }

    // Thick restart: keep the lowest q Ritz vectors plus the residual direction.
    const std::size_t q = std::min(size - 1, std::max(k + 10, size / 2));
    std::vector<double> kept(q * n);
    for (std::size_t i = 0; i < q; ++i) {
      parallel::combine(basis, size, std::span<const double>(S.data() + i * size, size),
                        std::span<double>(kept.data() + i * n, n));
    }
    std::copy(col(size).begin(), col(size).end(), col(q).begin());
    std::copy(kept.begin(), kept.end(), basis.begin());
    std::fill(T.begin(), T.end(), 0.0);
    for (std::size_t i = 0; i < q; ++i) {
      T[i + i * m] = theta[i];
      const double coupling = beta * S[(size - 1) + i * size];
      T[i + q * m] = coupling;
      T[q + i * m] = coupling;
    }
    jstart = q;
  }
  std::ostringstream msg;
  msg << "lanczos_lowest did not converge in " << options.max_restarts << " restarts (best residual "
      << best_residual << ", tolerance " << tol << ")";
  throw ConvergenceError(msg.str(), best_residual);
}

}  // namespace chiral
