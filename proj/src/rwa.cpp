#include "chiral/rwa.hpp"

#include <cmath>
#include <numbers>

#include "chiral/eigensolvers.hpp"
#include "chiral/errors.hpp"

namespace chiral {

std::optional<std::pair<double, double>> rwa_bound_state_energies(const ModelParams& params) {
  params.validate();
  if (params.J == 0.0) throw InvalidArgument("rwa_bound_state_energies: J = 0 has no photon band");
  if (std::abs(params.omega0 - params.omega_c) > 1e-12 * std::max(1.0, std::abs(params.omega0))) {
    throw InvalidArgument("rwa_bound_state_energies assumes omega0 = omega_c");
  }
  const double r = params.g / params.J;
  if (!(params.g > std::numbers::sqrt2 * params.J)) return std::nullopt;
  const double shift = (params.g * r) / std::sqrt(r * r - 1.0);
  return std::make_pair(0.5 * params.omega0 - shift, 0.5 * params.omega0 + shift);
}

RwaSpectrum rwa_finite_oracle(const ModelParams& params, int L) {
  params.validate();
  if (L < 2) throw InvalidArgument("rwa_finite_oracle needs L >= 2");
  const auto n = static_cast<std::size_t>(L) + 1;
  const double pi = std::numbers::pi;
  const double norm = std::sqrt(2.0 / (L + 1));
  const double photon = -0.5 * params.omega0 + params.omega_c;
  // level 0: |e, vacuum>; level k: |g, one photon in sine mode k>
  std::vector<double> a(n * n, 0.0);
  a[0] = 0.5 * params.omega0;
  for (int k = 1; k <= L; ++k) {
    const double q = pi * k / (L + 1);
    const auto kk = static_cast<std::size_t>(k);
    a[kk + kk * n] = photon - 2.0 * params.J * std::cos(q);
    const double c = params.g * norm * std::sin(q);
    a[kk] = c;
    a[kk * n] = c;
  }
  RwaSpectrum out;
  std::vector<double> vecs;
  small_symmetric_eigen(n, std::move(a), out.energies, vecs);
  out.band_bottom = photon - 2.0 * params.J;
  out.band_top = photon + 2.0 * params.J;
  out.spacing = 4.0 * params.J / L;
  for (double e : out.energies) {
    if (e < out.band_bottom - out.spacing) out.below.push_back(e);
    if (e > out.band_top + out.spacing) out.above.push_back(e);
  }
  return out;
}

}  // namespace chiral
