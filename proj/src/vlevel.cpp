#include "chiral/vlevel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "chiral/errors.hpp"

namespace chiral {

namespace {

constexpr int kAShift[3] = {0, -1, 1};  // n_a = n + l + shift

}  // namespace

VSectorBasis::VSectorBasis(int l, int n_max) : l_(l), n_max_(n_max) {
  if (n_max < 0) throw InvalidArgument("n_max must be >= 0");
  for (int b = 0; b < 3; ++b) {
    offset_.push_back(states_.size());
    const int first = std::max(0, -(l + kAShift[b]));
    first_n_.push_back(first);
    for (int n = first; n <= n_max; ++n) {
      states_.push_back({static_cast<VBranch>(b), n, n + l + kAShift[b], n});
    }
  }
  offset_.push_back(states_.size());
}

std::optional<std::size_t> VSectorBasis::index_of(VBranch b, int n) const {
  const auto k = static_cast<std::size_t>(b);
  if (n < first_n_[k] || n > n_max_) return std::nullopt;
  return offset_[k] + static_cast<std::size_t>(n - first_n_[k]);
}

SparseOperator assemble_v_hamiltonian(const ModelParams& params, const VSectorBasis& basis) {
  params.validate();
  std::vector<Triplet> t;
  const double level[3] = {0.0, params.omega0, params.omega0 + params.delta};
  auto couple = [&](std::size_t i, std::optional<std::size_t> j, double amplitude) {
    if (!j) return;
    t.push_back({i, *j, params.g * amplitude});
    t.push_back({*j, i, params.g * amplitude});
  };
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const auto& s = basis[i];
    t.push_back({i, i, params.omega_c * (s.n_a + s.n_b) + level[static_cast<int>(s.branch)]});
    if (s.branch != VBranch::G) continue;
    const double na = s.n_a, nb = s.n_b;
    // |1><g| a and |1><g| b^dagger
    if (na >= 1) couple(i, basis.index_of(VBranch::One, s.n), std::sqrt(na));
    couple(i, basis.index_of(VBranch::One, s.n + 1), std::sqrt(nb + 1));
    // |2><g| b and |2><g| a^dagger
    if (nb >= 1) couple(i, basis.index_of(VBranch::Two, s.n - 1), std::sqrt(nb));
    couple(i, basis.index_of(VBranch::Two, s.n), std::sqrt(na + 1));
  }
  return SparseOperator::from_triplets(basis.size(), std::move(t));
}

VSectorSpectrum v_sector_spectrum_fixed(const ModelParams& params, int l, int n_max) {
  VSectorSpectrum out;
  out.l = l;
  out.basis = VSectorBasis(l, n_max);
  out.solution = dense_eigensolve(assemble_v_hamiltonian(params, out.basis));
  out.solution.sector = l;
  out.solution.n_max = n_max;
  return out;
}

VSectorSpectrum v_sector_spectrum(const ModelParams& params, int l, int n_max, const SectorSpectrumOptions& options) {
  if (options.step < 1) throw InvalidArgument("v_sector_spectrum step must be >= 1");
  VSectorSpectrum prev = v_sector_spectrum_fixed(params, l, n_max);
  double drift = std::numeric_limits<double>::infinity();
  for (int n = n_max; n + options.step <= options.n_max_ceiling; n += options.step) {
    VSectorSpectrum next = v_sector_spectrum_fixed(params, l, n + options.step);
    const std::size_t k = std::min({options.track, prev.solution.count(), next.solution.count()});
    drift = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      drift = std::max(drift, std::abs(prev.solution.energies[i] - next.solution.energies[i]));
    }
    if (drift <= options.tol) {
      next.truncation_drift = drift;
      return next;
    }
    prev = std::move(next);
  }
  std::ostringstream msg;
  msg << "V-level sector l=" << l << " not converged at n_max ceiling " << options.n_max_ceiling << " (drift "
      << drift << ")";
  throw ConvergenceError(msg.str(), drift);
}

}  // namespace chiral
