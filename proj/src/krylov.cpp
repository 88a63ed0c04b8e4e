#include "chiral/krylov.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "chiral/eigensolvers.hpp"
#include "chiral/errors.hpp"
#include "chiral/kernels.hpp"

namespace chiral {

namespace {

using cplx = std::complex<double>;

struct ProjectedExp {
  std::vector<double> theta;
  std::vector<double> s;  // column-major eigenvectors of T
  std::size_t m = 0;

  // c = exp(-i T tau) e_1
  void apply(double tau, std::vector<cplx>& c) const {
    c.assign(m, cplx{});
    for (std::size_t k = 0; k < m; ++k) {
      const cplx w = std::polar(s[k * m], -theta[k] * tau);
      for (std::size_t i = 0; i < m; ++i) c[i] += s[i + k * m] * w;
    }
  }
};

}  // namespace

void krylov_propagate(const SparseOperator& h, std::span<cplx> psi, double dt, const KrylovOptions& options,
                      KrylovStats* stats) {
  const std::size_t n = h.dim();
  if (psi.size() != n) throw InvalidArgument("krylov_propagate: state dimension mismatch");
  if (!std::isfinite(dt)) throw InvalidArgument("krylov_propagate: dt must be finite");
  if (!(options.err_tol > 0)) throw InvalidArgument("krylov_propagate: err_tol must be positive");
  if (options.max_dim < 2) throw InvalidArgument("krylov_propagate: max_dim must be >= 2");
  const double norm0 = parallel::norm(std::span<const cplx>(psi));
  if (std::abs(norm0 - 1.0) > 1e-12) {
    std::ostringstream msg;
    msg << "krylov_propagate: input norm " << norm0 << " differs from 1 by more than 1e-12";
    throw InvalidArgument(msg.str());
  }
  KrylovStats local;
  KrylovStats& st = stats ? *stats : local;
  if (dt == 0.0 || n == 0) return;

  const double direction = dt > 0 ? 1.0 : -1.0;
  const double total = std::abs(dt);
  const double hnorm = std::max(h.norm_bound(), 1e-300);
  const std::size_t mmax = std::min(options.max_dim, n);

  // Reused across calls; grows on demand so short bases touch little memory.
  thread_local std::vector<cplx> basis;
  thread_local std::vector<cplx> w;
  if (basis.size() < 2 * n) basis.resize(2 * n);
  w.resize(n);
  std::vector<cplx> coeff(mmax + 1), c;
  std::vector<double> alpha, beta;

  double done = 0.0;
  double tau_guess = total;
  while (done < total) {
    if (st.substeps >= options.max_substeps) {
      std::ostringstream msg;
      msg << "krylov_propagate: exceeded " << options.max_substeps << " substeps at t=" << done << " of "
          << total;
      throw ConvergenceError(msg.str(), st.error_bound);
    }
    // Lanczos basis of the current vector, fully reorthogonalized.
    const double nrm = parallel::norm(std::span<const cplx>(psi));
    std::copy(psi.begin(), psi.end(), basis.begin());
    parallel::scale(cplx(1.0 / nrm), std::span<cplx>(basis.data(), n));
    alpha.clear();
    beta.clear();
    std::size_t m = 0;
    double beta_last = 0.0;
    const double tau_target = std::min(tau_guess, total - done);
    ProjectedExp pe;
    for (std::size_t j = 0; j < mmax; ++j) {
      std::span<const cplx> vj(basis.data() + j * n, n);
      h.apply(vj, w);
      ++st.matvecs;
      for (int pass = 0; pass < 2; ++pass) {
        parallel::multi_dot(std::span<const cplx>(basis.data(), (j + 1) * n), j + 1, w, coeff);
        parallel::subtract_combination(std::span<const cplx>(basis.data(), (j + 1) * n), j + 1, coeff, w);
        if (pass == 0) alpha.push_back(coeff[j].real());
        else alpha.back() += coeff[j].real();
      }
      m = j + 1;
      const double b = parallel::norm(std::span<const cplx>(w));
      beta_last = b;
      if (b < 1e-13 * hnorm) {  // invariant subspace: projection is exact
        beta_last = 0.0;
        break;
      }
      // Stop growing the basis once it already meets the tolerance for the target step.
      if (m >= 4 && m < mmax) {
        pe.m = m;
        tridiagonal_eigen(alpha, beta, pe.theta, pe.s);
        pe.apply(direction * tau_target, c);
        if (nrm * b * std::abs(c[m - 1]) <= 0.5 * options.err_tol * tau_target / total) break;
      }
      if (j + 1 < mmax) beta.push_back(b);
      if (basis.size() < (j + 2) * n) basis.resize(std::min(2 * (j + 2), mmax + 1) * n);
      parallel::scale(cplx(1.0 / b), w);
      std::copy(w.begin(), w.end(), basis.begin() + static_cast<std::ptrdiff_t>((j + 1) * n));
    }
    beta.resize(m - 1);

    pe.m = m;
    tridiagonal_eigen(alpha, beta, pe.theta, pe.s);

    double tau = std::min(tau_guess, total - done);
    double err = 0.0;
    bool first_try = true;
    for (;;) {
      pe.apply(direction * tau, c);
      err = nrm * beta_last * std::abs(c[m - 1]);
      if (err <= options.err_tol * tau / total) break;
      first_try = false;
      ++st.rejected;
      tau *= 0.5;
      if (tau < total * 1e-15) {
        std::ostringstream msg;
        msg << "krylov_propagate: error estimate " << err << " cannot meet tolerance " << options.err_tol
            << " with subspace dimension " << m;
        throw ConvergenceError(msg.str(), err);
      }
    }
    for (auto& x : c) x *= nrm;
    parallel::combine(std::span<const cplx>(basis.data(), m * n), m, c, psi);
    st.error_bound += err;
    ++st.substeps;
    done += tau;
    if (total - done <= total * 1e-15) done = total;
    tau_guess = first_try ? 2.0 * tau : tau;
  }
}

}  // namespace chiral
