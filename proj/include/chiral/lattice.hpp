#pragma once

// Coupled-cavity array with the emitter on site 0:
//   H = w0/2 sz + wc sum_i (a_i^dag a_i + b_i^dag b_i) + g [s+ (a_0 + b_0^dag) + h.c.]
//       - J sum_i (a_i^dag a_{i+1} + b_i^dag b_{i+1} + h.c.)      (open chain)

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "chiral/eigensolvers.hpp"
#include "chiral/hilbert.hpp"
#include "chiral/krylov.hpp"
#include "chiral/sparse.hpp"

namespace chiral {

/// `counter_rotating` scales the s+ b_0^dag + h.c. coupling; 1 is the physical
/// model, 0 the rotating-wave limit (used by tests).
SparseOperator assemble_lattice_hamiltonian(const ModelParams& params, const LatticeSectorBasis& basis,
                                            double counter_rotating = 1.0);

/// Site-resolved expectation values of a lattice sector state.
struct LatticeObservables {
  double norm = 0;
  double pop_e = 0;
  double lz = 0;
  std::vector<double> n_a;  ///< per site
  std::vector<double> n_b;
  double total_n_a = 0;
  double total_n_b = 0;
};

/// Expectations are divided by the squared norm, which is reported separately.
LatticeObservables lattice_observables(const LatticeSectorBasis& basis, std::span<const cplx> psi);
LatticeObservables lattice_observables(const LatticeSectorBasis& basis, std::span<const double> psi);

struct LatticeGroundState {
  std::shared_ptr<const LatticeSectorBasis> basis;
  EigenSolution solution;
  LatticeObservables observables;
  /// n_a on the last site exceeds 1e-4 of the largest site value
  bool boundary_contaminated = false;
};

/// Lowest eigenpair of sector l by Lanczos. `lanczos.start` may hold a warm start.
LatticeGroundState lattice_ground_state(const ModelParams& params, int l, int n_max,
                                        const LanczosOptions& lanczos = {},
                                        std::size_t budget = kDefaultBasisBudget);

struct QuenchResult {
  std::vector<double> times;  ///< physical times t (units 1/w0)
  std::vector<double> g_times;  ///< g t
  std::vector<std::vector<double>> n_a;  ///< [time][site]
  std::vector<std::vector<double>> n_b;
  std::vector<double> pop_e, total_n_a, total_n_b, n_a_site0, n_b_site0, norm, lz, energy;
  /// |<e,00|ground_{l=1}>|^2, the overlap of the initial state with the ground state
  double overlap_with_ground = 0;
  /// |<ground_{l=1}|psi(t_final)>|^2
  double final_overlap_with_ground = 0;
  double ground_energy = 0;
  KrylovStats krylov;
};

struct QuenchOptions {
  KrylovOptions krylov{1e-9, 40, 200'000};  ///< err_tol applies to each output interval
  bool compute_ground = true;
  std::size_t budget = kDefaultBasisBudget;
};

/// Evolves |e>|vacuum> in sector l = 1 over an increasing grid of physical
/// times starting at 0.
QuenchResult lattice_quench(const ModelParams& params, int n_max, std::span<const double> times,
                            const QuenchOptions& options = {});

/// Single-band dispersion w(k) = wc - 2 J cos k.
double dispersion(double k, const ModelParams& params);

enum class Phase { I, II, III, Ambiguous };
const char* to_string(Phase p);

/// Inputs to classify_phase.
struct PhaseDiagnostics {
  double e1_ground = 0;      ///< lattice l = 1 ground energy
  double e0_ground = 0;      ///< lattice l = 0 ground energy, same L and n_max
  double single_upper = 0;   ///< second single-cavity l = 1 eigenvalue at the same g
};

struct PhaseLabel {
  Phase phase = Phase::Ambiguous;
  double lower_threshold = 0;  ///< e0_ground + band bottom of the finite chain
  double resolution = 0;       ///< lowest finite-size level spacing of the chain
  double binding = 0;          ///< lower_threshold - e1_ground
  std::optional<double> upper_estimate;  ///< estimated upper bound-state energy
  double band_top = 0;
  std::string note;
};

/// I: the l = 1 ground state is not bound (binding below the level spacing).
/// II: bound, and the estimated upper bound state lies above the band top.
/// III: bound, and the upper state has entered the band.
/// The l = 1 continuum threshold is the l = 0 ground energy plus one photon at
/// the bottom of the finite band; binding between 0.5 and 1.5 level spacings
/// is reported as Ambiguous. The upper state is estimated as the rotating-wave
/// bound state shifted by the single-cavity counter-rotating correction
/// single_upper - (w0/2 + g).
PhaseLabel classify_phase(const ModelParams& params, const PhaseDiagnostics& diagnostics);

}  // namespace chiral
