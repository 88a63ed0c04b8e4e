#include "chiral/single_cavity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <unordered_map>

#include "chiral/errors.hpp"
#include "chiral/kernels.hpp"

namespace chiral {

namespace {

std::uint64_t fock_key(int tls, int n_a, int n_b) {
  return (static_cast<std::uint64_t>(tls) << 62) | (static_cast<std::uint64_t>(n_a) << 31) |
         static_cast<std::uint64_t>(n_b);
}

double xlog2x(double p) { return p > 0 ? p * std::log2(p) : 0.0; }

std::optional<std::size_t> sector_index(const SingleSectorBasis& basis, int tls, int n_a, int n_b) {
  const Branch br = tls ? Branch::E : Branch::G;
  const int expected_a = tls ? n_b + basis.l() - 1 : n_b + basis.l();
  if (n_a != expected_a || n_a < 0 || n_b < 0) return std::nullopt;
  return basis.index_of(br, n_b);
}

}  // namespace

double SectorState::norm() const { return parallel::norm(std::span<const cplx>(amplitudes)); }

FockState to_fock(const SectorState& s) {
  if (s.amplitudes.size() != s.basis.size()) throw InvalidArgument("sector state length does not match its basis");
  FockState out;
  out.reserve(s.basis.size());
  for (std::size_t i = 0; i < s.basis.size(); ++i) {
    const auto& e = s.basis[i];
    out.push_back({e.branch == Branch::E ? 1 : 0, e.n_a, e.n_b, s.amplitudes[i]});
  }
  return out;
}

FockState to_fock(std::span<const SectorState> parts) {
  FockState out;
  for (const auto& p : parts) {
    auto f = to_fock(p);
    out.insert(out.end(), f.begin(), f.end());
  }
  return out;
}

double entanglement_entropy(const FockState& state) {
  std::unordered_map<std::uint64_t, cplx> amp;
  double pg = 0, pe = 0;
  for (const auto& c : state) {
    amp[fock_key(c.tls, c.n_a, c.n_b)] += c.amplitude;
  }
  cplx coherence{};
  for (const auto& [key, a] : amp) {
    const bool excited = (key >> 62) != 0;
    if (excited) {
      pe += std::norm(a);
    } else {
      pg += std::norm(a);
      const auto it = amp.find(key | (std::uint64_t{1} << 62));
      if (it != amp.end()) coherence += a * std::conj(it->second);
    }
  }
  const double total = pg + pe;
  if (!(total > 0)) throw InvalidArgument("entanglement_entropy of a zero state");
  const double half_gap = std::sqrt(0.25 * (pg - pe) * (pg - pe) + std::norm(coherence)) / total;
  const double p1 = 0.5 + half_gap;
  const double p2 = std::max(0.0, 0.5 - half_gap);
  return -xlog2x(p1) - xlog2x(p2);
}

double entanglement_entropy(const SectorState& state) { return entanglement_entropy(to_fock(state)); }

ObservableRecord observables(const FockState& state) {
  std::unordered_map<std::uint64_t, cplx> amp;
  amp.reserve(state.size() * 2);
  for (const auto& c : state) {
    if (c.tls < 0 || c.tls > 1 || c.n_a < 0 || c.n_b < 0) throw InvalidArgument("invalid Fock component");
    amp[fock_key(c.tls, c.n_a, c.n_b)] += c.amplitude;
  }
  auto lookup = [&](int tls, int na, int nb) -> cplx {
    if (na < 0 || nb < 0) return {};
    const auto it = amp.find(fock_key(tls, na, nb));
    return it == amp.end() ? cplx{} : it->second;
  };

  ObservableRecord r;
  double sz_na_nb = 0, sz_na = 0, sz_nb = 0, na_nb = 0;
  for (const auto& [key, c] : amp) {
    const int tls = static_cast<int>(key >> 62);
    const int na = static_cast<int>((key >> 31) & 0x7fffffff);
    const int nb = static_cast<int>(key & 0x7fffffff);
    const double p = std::norm(c);
    const double sz = tls ? 1.0 : -1.0;
    r.norm += p;
    if (tls) r.pop_e += p;
    r.sigma_z += sz * p;
    r.n_a += na * p;
    r.n_b += nb * p;
    r.lz += (na - nb + 0.5 * sz) * p;
    sz_na_nb += sz * na * nb * p;
    sz_na += sz * na * p;
    sz_nb += sz * nb * p;
    na_nb += static_cast<double>(na) * nb * p;
    if (na >= 1) r.a += std::conj(lookup(tls, na - 1, nb)) * std::sqrt(double(na)) * c;
    if (nb >= 1) r.b += std::conj(lookup(tls, na, nb - 1)) * std::sqrt(double(nb)) * c;
    if (na >= 2) r.a2 += std::conj(lookup(tls, na - 2, nb)) * std::sqrt(double(na) * (na - 1)) * c;
    if (nb >= 2) r.b2 += std::conj(lookup(tls, na, nb - 2)) * std::sqrt(double(nb) * (nb - 1)) * c;
    if (na >= 1 && nb >= 1) r.m_ab += std::conj(lookup(tls, na - 1, nb - 1)) * std::sqrt(double(na) * nb) * c;
    if (nb >= 1) r.adag_b += std::conj(lookup(tls, na + 1, nb - 1)) * std::sqrt(double(na + 1) * nb) * c;
  }
  if (std::abs(std::sqrt(r.norm) - 1.0) > 1e-9) {
    std::ostringstream msg;
    msg << "observables need a normalized state (norm " << std::sqrt(r.norm) << ")";
    throw InvalidArgument(msg.str());
  }
  const double xa = r.a.real(), xb = r.b.real();
  const double pa = r.a.imag(), pb = r.b.imag();
  r.var_xa = 0.5 * (r.a2.real() + r.n_a) - xa * xa;
  r.var_xb = 0.5 * (r.b2.real() + r.n_b) - xb * xb;
  r.covar_xx = 0.5 * (r.m_ab.real() + r.adag_b.real()) - xa * xb;
  r.var_sum = r.var_xa + r.var_xb + 2 * r.covar_xx;
  r.var_diff = r.var_xa + r.var_xb - 2 * r.covar_xx;
  const double var_pa = 0.5 * (r.n_a - r.a2.real()) - pa * pa;
  const double var_pb = 0.5 * (r.n_b - r.b2.real()) - pb * pb;
  const double covar_pp = 0.5 * (-r.m_ab.real() + r.adag_b.real()) - pa * pb;
  r.var_p_sum = var_pa + var_pb + 2 * covar_pp;
  r.var_p_diff = var_pa + var_pb - 2 * covar_pp;
  r.cumulant3 = sz_na_nb - sz_na * r.n_b - r.sigma_z * na_nb - sz_nb * r.n_a + 2 * r.sigma_z * r.n_b * r.n_a;
  r.entropy = entanglement_entropy(state);
  return r;
}

ObservableRecord observables(const SectorState& state) {
  ObservableRecord r = observables(to_fock(state));
  const double worst = std::max({std::abs(r.a), std::abs(r.b), std::abs(r.a2), std::abs(r.b2), std::abs(r.adag_b)});
  if (worst > 1e-10) {
    std::ostringstream msg;
    msg << "sector state has a nonzero first moment (" << worst << ")";
    throw ConsistencyError(msg.str());
  }
  return r;
}

SparseOperator assemble_single_hamiltonian(const ModelParams& params, const SingleSectorBasis& basis) {
  params.validate();
  std::vector<Triplet> t;
  t.reserve(basis.size() * 3);
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const auto& s = basis[i];
    const int tls = s.branch == Branch::E ? 1 : 0;
    t.push_back({i, i, params.omega_c * (s.n_a + s.n_b) + (tls ? 0.5 : -0.5) * params.omega0});
    if (tls) continue;
    // sigma_+ a and sigma_+ b^dagger acting on |g, n_a, n_b>; the adjoint terms
    // give the transposed entries.
    if (auto j = sector_index(basis, 1, s.n_a - 1, s.n_b)) {
      const double v = params.g * std::sqrt(double(s.n_a));
      t.push_back({*j, i, v});
      t.push_back({i, *j, v});
    }
    if (auto j = sector_index(basis, 1, s.n_a, s.n_b + 1)) {
      const double v = params.g * std::sqrt(double(s.n_b + 1));
      t.push_back({*j, i, v});
      t.push_back({i, *j, v});
    }
  }
  return SparseOperator::from_triplets(basis.size(), std::move(t));
}

SectorState SectorSpectrum::eigenstate(std::size_t k) const {
  SectorState s;
  s.basis = basis;
  const auto v = solution.vector(k);
  s.amplitudes.assign(v.begin(), v.end());
  return s;
}

SectorSpectrum sector_spectrum_fixed(const ModelParams& params, int l, int n_max) {
  SectorSpectrum out;
  out.l = l;
  out.basis = build_single_sector_basis(l, n_max);
  out.hamiltonian = assemble_single_hamiltonian(params, out.basis);
  out.solution = dense_eigensolve(out.hamiltonian);
  out.solution.sector = l;
  out.solution.n_max = n_max;
  return out;
}

SectorSpectrum sector_spectrum(const ModelParams& params, int l, int n_max, const SectorSpectrumOptions& options) {
  if (options.step < 1) throw InvalidArgument("sector_spectrum step must be >= 1");
  SectorSpectrum prev = sector_spectrum_fixed(params, l, n_max);
  double drift = std::numeric_limits<double>::infinity();
  for (int n = n_max; n + options.step <= options.n_max_ceiling; n += options.step) {
    SectorSpectrum next = sector_spectrum_fixed(params, l, n + options.step);
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
  msg << "sector l=" << l << " not converged at n_max ceiling " << options.n_max_ceiling << " (drift " << drift
      << ", tolerance " << options.tol << ")";
  throw ConvergenceError(msg.str(), drift);
}

std::map<int, std::vector<double>> project_excited_vacuum(std::span<const SectorSpectrum> spectra) {
  std::map<int, std::vector<double>> out;
  for (const auto& s : spectra) {
    std::vector<double> ov(s.solution.count(), 0.0);
    if (s.l == 1) {
      if (auto idx = s.basis.index_of(Branch::E, 0)) {
        for (std::size_t k = 0; k < ov.size(); ++k) ov[k] = s.solution.vector(k)[*idx];
      }
    }
    out[s.l] = std::move(ov);
  }
  return out;
}

std::vector<SectorState> split_into_sectors(const FockState& state, int n_max, double& outside) {
  std::map<int, SectorState> parts;
  outside = 0.0;
  double outside_sq = 0.0;
  for (const auto& c : state) {
    if (c.tls < 0 || c.tls > 1 || c.n_a < 0 || c.n_b < 0) throw InvalidArgument("invalid Fock component");
    const int l = c.n_a - c.n_b + c.tls;
    if (c.n_b > n_max) {
      outside_sq += std::norm(c.amplitude);
      continue;
    }
    auto it = parts.find(l);
    if (it == parts.end()) {
      SectorState s;
      s.basis = build_single_sector_basis(l, n_max);
      s.amplitudes.assign(s.basis.size(), cplx{});
      it = parts.emplace(l, std::move(s)).first;
    }
    const auto idx = sector_index(it->second.basis, c.tls, c.n_a, c.n_b);
    it->second.amplitudes[*idx] += c.amplitude;
  }
  outside = std::sqrt(outside_sq);
  std::vector<SectorState> out;
  for (auto& [l, s] : parts) out.push_back(std::move(s));
  return out;
}

std::vector<SectorState> spectral_state(std::span<const SectorSpectrum> spectra, std::span<const SectorState> parts,
                                        double t) {
  if (spectra.size() != parts.size()) throw InvalidArgument("spectral_state: spectra/parts mismatch");
  std::vector<SectorState> out;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const auto& sol = spectra[p].solution;
    const std::size_t n = sol.dim;
    std::vector<cplx> w(sol.count());
    for (std::size_t k = 0; k < sol.count(); ++k) {
      const auto v = sol.vector(k);
      cplx acc{};
      for (std::size_t i = 0; i < n; ++i) acc += v[i] * parts[p].amplitudes[i];
      w[k] = acc * std::polar(1.0, -sol.energies[k] * t);
    }
    SectorState s;
    s.basis = parts[p].basis;
    s.time = t;
    s.amplitudes.assign(n, cplx{});
    for (std::size_t k = 0; k < sol.count(); ++k) {
      const auto v = sol.vector(k);
      for (std::size_t i = 0; i < n; ++i) s.amplitudes[i] += v[i] * w[k];
    }
    out.push_back(std::move(s));
  }
  return out;
}

namespace {

TimeSeries evolve_at(const ModelParams& params, const FockState& initial, std::span<const double> times, int n_max) {
  double outside = 0.0;
  const auto parts = split_into_sectors(initial, n_max, outside);
  if (outside > 1e-6) {
    std::ostringstream msg;
    msg << "initial state has norm " << outside << " outside the truncated space (n_max=" << n_max << ")";
    throw InvalidArgument(msg.str());
  }
  std::vector<SectorSpectrum> spectra;
  for (const auto& p : parts) spectra.push_back(sector_spectrum_fixed(params, p.basis.l(), n_max));

  TimeSeries ts;
  ts.times.assign(times.begin(), times.end());
  std::vector<cplx> hv;
  for (double t : times) {
    const auto states = spectral_state(spectra, parts, t);
    ts.records.push_back(observables(to_fock(states)));
    double e = 0.0;
    for (std::size_t p = 0; p < states.size(); ++p) {
      hv.assign(states[p].amplitudes.size(), cplx{});
      spectra[p].hamiltonian.apply(states[p].amplitudes, hv);
      e += parallel::dot(std::span<const cplx>(states[p].amplitudes), std::span<const cplx>(hv)).real();
    }
    ts.energy.push_back(e);
  }
  return ts;
}

}  // namespace

TimeSeries spectral_evolve(const ModelParams& params, const FockState& initial, std::span<const double> times,
                           const SpectralOptions& options) {
  TimeSeries ts = evolve_at(params, initial, times, options.n_max);
  if (options.check_truncation) {
    const TimeSeries ref = evolve_at(params, initial, times, options.n_max + 10);
    double drift = 0.0;
    for (std::size_t i = 0; i < ts.records.size(); ++i) {
      const auto& a = ts.records[i];
      const auto& b = ref.records[i];
      drift = std::max({drift, std::abs(a.pop_e - b.pop_e), std::abs(a.n_a - b.n_a), std::abs(a.n_b - b.n_b),
                        std::abs(a.var_sum - b.var_sum), std::abs(a.cumulant3 - b.cumulant3)});
    }
    ts.truncation_drift = drift;
    if (drift > options.drift_tol) {
      std::ostringstream msg;
      msg << "dynamics not converged in n_max=" << options.n_max << ": observables move by " << drift
          << " at n_max+10";
      throw ConvergenceError(msg.str(), drift);
    }
  }
  return ts;
}

CollapseRevival analyze_collapse_revival(std::span<const double> times, std::span<const double> sigma_z,
                                         double threshold) {
  if (times.size() != sigma_z.size()) throw InvalidArgument("analyze_collapse_revival: length mismatch");
  CollapseRevival cr;
  const std::size_t n = times.size();
  std::size_t i = 0;
  while (i < n && sigma_z[i] > 0) ++i;
  if (i == n) return cr;
  const std::size_t start = i;
  while (i < n && sigma_z[i] < threshold) ++i;
  const std::size_t end = std::min(i, n - 1);
  cr.collapse_start = times[start];
  cr.collapse_end = times[end];
  double acc = 0.0;
  for (std::size_t k = start; k < end; ++k) acc += std::abs(sigma_z[k]) * (times[k + 1] - times[k]);
  if (end > start) cr.collapse_mean_abs = acc / (times[end] - times[start]);

  // An excursion starts when sigma_z exceeds the threshold and ends when it
  // drops below 0 again; its maximum is the revival peak.
  bool in_excursion = false;
  double peak = 0.0, peak_time = 0.0;
  for (std::size_t k = start; k < n; ++k) {
    cr.max_after_collapse = std::max(cr.max_after_collapse, sigma_z[k]);
    if (!in_excursion && sigma_z[k] > threshold) {
      in_excursion = true;
      peak = sigma_z[k];
      peak_time = times[k];
    }
    if (in_excursion && sigma_z[k] > peak) {
      peak = sigma_z[k];
      peak_time = times[k];
    }
    if (in_excursion && sigma_z[k] < 0) {
      cr.revival_times.push_back(peak_time);
      cr.revival_peaks.push_back(peak);
      in_excursion = false;
    }
  }
  if (in_excursion) {
    cr.revival_times.push_back(peak_time);
    cr.revival_peaks.push_back(peak);
  }
  return cr;
}

}  // namespace chiral
