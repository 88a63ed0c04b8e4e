#include "chiral/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "chiral/errors.hpp"
#include "chiral/kernels.hpp"
#include "chiral/rwa.hpp"

namespace chiral {

SparseOperator assemble_lattice_hamiltonian(const ModelParams& params, const LatticeSectorBasis& basis,
                                            double counter_rotating) {
  params.validate();
  if (params.L != basis.L()) throw InvalidArgument("basis and parameters disagree on L");
  const int L = basis.L();
  const double gc = params.g * counter_rotating;

  auto gen = [&](std::size_t row, std::vector<std::pair<std::size_t, double>>& out) {
    thread_local std::vector<std::uint8_t> a, b;
    const auto a0 = basis.a_occ(row);
    const auto b0 = basis.b_occ(row);
    a.assign(a0.begin(), a0.end());
    b.assign(b0.begin(), b0.end());
    const Branch br = basis.branch(row);
    const bool excited = br == Branch::E;
    const int na = basis.total_a(row), nb = basis.total_b(row);
    out.emplace_back(row, params.omega_c * (na + nb) + (excited ? 0.5 : -0.5) * params.omega0);

    if (params.J != 0.0) {
      for (auto* occ : {&a, &b}) {
        auto& o = *occ;
        for (int i = 0; i + 1 < L; ++i) {
          const auto s = static_cast<std::size_t>(i);
          // x_i^dag x_{i+1}
          if (o[s + 1] > 0) {
            const double f = std::sqrt(double(o[s] + 1) * o[s + 1]);
            ++o[s];
            --o[s + 1];
            if (auto j = basis.index_of(br, a, b)) out.emplace_back(*j, -params.J * f);
            --o[s];
            ++o[s + 1];
          }
          // x_{i+1}^dag x_i
          if (o[s] > 0) {
            const double f = std::sqrt(double(o[s + 1] + 1) * o[s]);
            --o[s];
            ++o[s + 1];
            if (auto j = basis.index_of(br, a, b)) out.emplace_back(*j, -params.J * f);
            ++o[s];
            --o[s + 1];
          }
        }
      }
    }

    if (params.g != 0.0) {
      if (!excited) {
        if (a[0] > 0) {  // s+ a_0
          const double f = std::sqrt(double(a[0]));
          --a[0];
          if (auto j = basis.index_of(Branch::E, a, b)) out.emplace_back(*j, params.g * f);
          ++a[0];
        }
        if (gc != 0.0) {  // s+ b_0^dag
          const double f = std::sqrt(double(b[0]) + 1);
          ++b[0];
          if (auto j = basis.index_of(Branch::E, a, b)) out.emplace_back(*j, gc * f);
          --b[0];
        }
      } else {
        {  // s- a_0^dag
          const double f = std::sqrt(double(a[0]) + 1);
          ++a[0];
          if (auto j = basis.index_of(Branch::G, a, b)) out.emplace_back(*j, params.g * f);
          --a[0];
        }
        if (gc != 0.0 && b[0] > 0) {  // s- b_0
          const double f = std::sqrt(double(b[0]));
          --b[0];
          if (auto j = basis.index_of(Branch::G, a, b)) out.emplace_back(*j, gc * f);
          ++b[0];
        }
      }
    }
  };
  return SparseOperator::from_rows(basis.size(), gen);
}

namespace {

template <typename T>
LatticeObservables observe(const LatticeSectorBasis& basis, std::span<const T> psi) {
  if (psi.size() != basis.size()) throw InvalidArgument("lattice state length does not match its basis");
  const auto L = static_cast<std::size_t>(basis.L());
  const std::size_t n = basis.size();
  constexpr std::size_t block = parallel::kReductionBlock;
  const std::size_t nblocks = (n + block - 1) / block;
  const std::size_t width = 2 * L + 3;  // norm, pop_e, lz, n_a[L], n_b[L]
  std::vector<double> partial(nblocks * width, 0.0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t bi = 0; bi < static_cast<std::ptrdiff_t>(nblocks); ++bi) {
    double* acc = partial.data() + static_cast<std::size_t>(bi) * width;
    const std::size_t begin = static_cast<std::size_t>(bi) * block;
    const std::size_t end = std::min(n, begin + block);
    for (std::size_t i = begin; i < end; ++i) {
      const double p = std::norm(psi[i]);
      if (p == 0.0) continue;
      const bool excited = basis.branch(i) == Branch::E;
      acc[0] += p;
      if (excited) acc[1] += p;
      acc[2] += p * (basis.total_a(i) - basis.total_b(i) + (excited ? 0.5 : -0.5));
      const auto a = basis.a_occ(i);
      const auto b = basis.b_occ(i);
      for (std::size_t s = 0; s < L; ++s) {
        if (a[s]) acc[3 + s] += p * a[s];
        if (b[s]) acc[3 + L + s] += p * b[s];
      }
    }
  }
  std::vector<double> total(width, 0.0);
  for (std::size_t bi = 0; bi < nblocks; ++bi) {
    for (std::size_t k = 0; k < width; ++k) total[k] += partial[bi * width + k];
  }
  LatticeObservables o;
  o.norm = std::sqrt(total[0]);
  const double inv = total[0] > 0 ? 1.0 / total[0] : 0.0;
  o.pop_e = total[1] * inv;
  o.lz = total[2] * inv;
  o.n_a.resize(L);
  o.n_b.resize(L);
  for (std::size_t s = 0; s < L; ++s) {
    o.n_a[s] = total[3 + s] * inv;
    o.n_b[s] = total[3 + L + s] * inv;
    o.total_n_a += o.n_a[s];
    o.total_n_b += o.n_b[s];
  }
  return o;
}

}  // namespace

LatticeObservables lattice_observables(const LatticeSectorBasis& basis, std::span<const cplx> psi) {
  return observe(basis, psi);
}

LatticeObservables lattice_observables(const LatticeSectorBasis& basis, std::span<const double> psi) {
  return observe(basis, psi);
}

LatticeGroundState lattice_ground_state(const ModelParams& params, int l, int n_max, const LanczosOptions& lanczos,
                                        std::size_t budget) {
  LatticeGroundState out;
  out.basis = std::make_shared<const LatticeSectorBasis>(build_lattice_sector_basis(params, l, n_max, budget));
  const SparseOperator h = assemble_lattice_hamiltonian(params, *out.basis);
  LanczosOptions opts = lanczos;
  if (!opts.start.empty() && opts.start.size() != h.dim()) opts.start.clear();
  if (h.dim() <= 400) {
    DenseOptions dense;
    out.solution = dense_eigensolve(h, dense);
    const std::size_t k = std::min(std::max<std::size_t>(opts.k, 1), out.solution.count());
    out.solution.energies.resize(k);
    out.solution.vectors.resize(k * h.dim());
    out.solution.residuals.resize(k);
  } else {
    out.solution = lanczos_lowest(h, opts);
  }
  out.solution.sector = l;
  out.solution.n_max = n_max;
  out.observables = lattice_observables(*out.basis, out.solution.vector(0));
  const double peak = *std::max_element(out.observables.n_a.begin(), out.observables.n_a.end());
  out.boundary_contaminated = peak > 0 && out.observables.n_a.back() > 1e-4 * peak;
  return out;
}

QuenchResult lattice_quench(const ModelParams& params, int n_max, std::span<const double> times,
                            const QuenchOptions& options) {
  if (times.empty()) throw InvalidArgument("lattice_quench needs at least one time");
  if (times.front() != 0.0) throw InvalidArgument("lattice_quench time grid must start at 0");
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (!(times[i] > times[i - 1])) throw InvalidArgument("lattice_quench time grid must be strictly increasing");
  }
  const auto basis = std::make_shared<const LatticeSectorBasis>(build_lattice_sector_basis(params, 1, n_max, options.budget));
  const SparseOperator h = assemble_lattice_hamiltonian(params, *basis);
  const std::vector<std::uint8_t> zeros(static_cast<std::size_t>(params.L), 0);
  const auto start = basis->index_of(Branch::E, zeros, zeros);
  if (!start) throw ConsistencyError("excited vacuum missing from the l = 1 basis");

  QuenchResult r;
  std::vector<double> ground;
  if (options.compute_ground) {
    LanczosOptions lo;
    auto gs = lattice_ground_state(params, 1, n_max, lo, options.budget);
    ground.assign(gs.solution.vector(0).begin(), gs.solution.vector(0).end());
    r.ground_energy = gs.solution.energies[0];
    r.overlap_with_ground = ground[*start] * ground[*start];
  }

  std::vector<cplx> psi(h.dim()), hpsi(h.dim());
  psi[*start] = 1.0;
  auto record = [&](double t) {
    const auto o = lattice_observables(*basis, std::span<const cplx>(psi));
    r.times.push_back(t);
    r.g_times.push_back(params.g * t);
    r.n_a.push_back(o.n_a);
    r.n_b.push_back(o.n_b);
    r.pop_e.push_back(o.pop_e);
    r.total_n_a.push_back(o.total_n_a);
    r.total_n_b.push_back(o.total_n_b);
    r.n_a_site0.push_back(o.n_a[0]);
    r.n_b_site0.push_back(o.n_b[0]);
    r.norm.push_back(o.norm);
    r.lz.push_back(o.lz);
    h.apply(std::span<const cplx>(psi), hpsi);
    r.energy.push_back(parallel::dot(std::span<const cplx>(psi), std::span<const cplx>(hpsi)).real() /
                       (o.norm * o.norm));
  };
  record(0.0);
  for (std::size_t i = 1; i < times.size(); ++i) {
    // The propagator requires a unit vector; renormalizing here would hide
    // drift, so only the rounding-level deviation is removed.
    const double nrm = parallel::norm(std::span<const cplx>(psi));
    if (std::abs(nrm - 1.0) > 1e-12) {
      if (std::abs(nrm - 1.0) > 1e-6) {
        std::ostringstream msg;
        msg << "lattice_quench: norm drifted to " << nrm << " at t=" << times[i - 1];
        throw ConvergenceError(msg.str(), std::abs(nrm - 1.0));
      }
      parallel::scale(cplx(1.0 / nrm), std::span<cplx>(psi));
    }
    krylov_propagate(h, psi, times[i] - times[i - 1], options.krylov, &r.krylov);
    record(times[i]);
  }
  if (!ground.empty()) {
    cplx ov{};
    for (std::size_t i = 0; i < psi.size(); ++i) ov += ground[i] * psi[i];
    r.final_overlap_with_ground = std::norm(ov);
  }
  return r;
}

double dispersion(double k, const ModelParams& params) { return params.omega_c - 2.0 * params.J * std::cos(k); }

const char* to_string(Phase p) {
  switch (p) {
    case Phase::I: return "I";
    case Phase::II: return "II";
    case Phase::III: return "III";
    case Phase::Ambiguous: return "ambiguous";
  }
  return "?";
}

PhaseLabel classify_phase(const ModelParams& params, const PhaseDiagnostics& d) {
  params.validate();
  if (params.J <= 0.0) throw InvalidArgument("classify_phase needs J > 0");
  const double pi = std::numbers::pi;
  const double q1 = pi / (params.L + 1);
  PhaseLabel p;
  p.lower_threshold = d.e0_ground + params.omega_c - 2.0 * params.J * std::cos(q1);
  p.resolution = 2.0 * params.J * (std::cos(q1) - std::cos(2.0 * q1));
  p.binding = p.lower_threshold - d.e1_ground;
  p.band_top = 0.5 * params.omega0 + 2.0 * params.J;
  ModelParams rwa = params;
  rwa.omega_c = params.omega0;
  if (auto e = rwa_bound_state_energies(rwa)) {
    p.upper_estimate = e->second + (d.single_upper - (0.5 * params.omega0 + params.g));
  }
  if (p.binding < 0.5 * p.resolution) {
    p.phase = Phase::I;
  } else if (p.binding < 1.5 * p.resolution) {
    p.phase = Phase::Ambiguous;
    p.note = "binding energy within the finite-size level spacing";
  } else if (p.upper_estimate && *p.upper_estimate > p.band_top) {
    p.phase = Phase::II;
  } else {
    p.phase = Phase::III;
  }
  return p;
}

}  // namespace chiral
