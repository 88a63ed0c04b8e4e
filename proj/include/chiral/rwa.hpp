#pragma once

// Single-excitation rotating-wave analytics of the emitter at the end of an
// open coupled-cavity chain.

#include <optional>
#include <utility>
#include <vector>

#include "chiral/hilbert.hpp"

namespace chiral {

/// Continuum-limit bound-state energies
///   E_pm = w0/2 pm (g^2/J) / sqrt(g^2/J^2 - 1),
/// which exist only for g > sqrt(2) J. Requires w0 = wc; J = 0 throws.
std::optional<std::pair<double, double>> rwa_bound_state_energies(const ModelParams& params);

struct RwaSpectrum {
  std::vector<double> energies;  ///< ascending, L + 1 levels
  double band_bottom = 0;        ///< infinite-chain band edges
  double band_top = 0;
  double spacing = 0;            ///< mean level spacing 4 J / L
  std::vector<double> below;     ///< levels below band_bottom - spacing
  std::vector<double> above;     ///< levels above band_top + spacing
};

/// Dense diagonalization of the (L+1)-level single-excitation problem in the
/// normalized sine-mode basis sqrt(2/(L+1)) sin(pi k j/(L+1)).
RwaSpectrum rwa_finite_oracle(const ModelParams& params, int L);

}  // namespace chiral
