#pragma once

// The chiral Rabi model in one cavity:
//   H = w0/2 sz + wc (a^dag a + b^dag b) + g [s+ (a + b^dag) + h.c.]
// assembled per conserved sector, plus observables and dynamics.

#include <complex>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "chiral/eigensolvers.hpp"
#include "chiral/hilbert.hpp"
#include "chiral/sparse.hpp"

namespace chiral {

/// Amplitudes over one single-cavity sector.
struct SectorState {
  SingleSectorBasis basis{0, 0};
  std::vector<cplx> amplitudes;
  std::optional<double> time;

  double norm() const;
};

/// One component of a general two-mode state |tls, n_a, n_b> (tls 0 = g, 1 = e).
struct FockComponent {
  int tls;
  int n_a;
  int n_b;
  cplx amplitude;
};
using FockState = std::vector<FockComponent>;

FockState to_fock(const SectorState& s);
FockState to_fock(std::span<const SectorState> parts);

/// Expectation values of one state. X = (a + a^dag)/2, P = (a - a^dag)/(2i);
/// variances are normally ordered and taken about the first moments.
struct ObservableRecord {
  double norm = 0;
  double pop_e = 0;      ///< <sigma_ee>
  double sigma_z = 0;
  double n_a = 0;
  double n_b = 0;
  double lz = 0;         ///< <a^dag a - b^dag b + sz/2>
  cplx m_ab;             ///< <a b>
  cplx a, b, a2, b2, adag_b;
  double var_xa = 0;     ///< <:(dX_a)^2:>
  double var_xb = 0;
  double covar_xx = 0;   ///< <:dX_a dX_b:>
  double var_sum = 0;    ///< <:(dX_a + dX_b)^2:>
  double var_diff = 0;   ///< <:(dX_a - dX_b)^2:>
  double var_p_sum = 0;  ///< <:(dP_a + dP_b)^2:>
  double var_p_diff = 0;
  double entropy = 0;    ///< TLS entanglement entropy, bits
  double cumulant3 = 0;  ///< <<sz n_a n_b>>
};

/// Observables of a general two-mode state. Throws InvalidArgument when the
/// norm differs from 1 by more than 1e-9.
ObservableRecord observables(const FockState& state);

/// Observables of a single-sector state; additionally checks that the first
/// moments <a>, <b>, <a^2>, <b^2>, <a^dag b> vanish to 1e-10 (ConsistencyError).
ObservableRecord observables(const SectorState& state);

/// Von Neumann entropy (base 2) of the TLS reduced density matrix.
double entanglement_entropy(const FockState& state);
double entanglement_entropy(const SectorState& state);

/// Sector Hamiltonian assembled from operator matrix elements; couplings to
/// states beyond n_max are dropped.
SparseOperator assemble_single_hamiltonian(const ModelParams& params, const SingleSectorBasis& basis);

struct SectorSpectrumOptions {
  double tol = 1e-10;           ///< allowed drift of the tracked energies, n_max -> n_max + 10
  std::size_t track = 6;        ///< number of lowest energies the certificate covers
  int n_max_ceiling = 400;
  int step = 10;
};

/// Full spectrum of one sector with a truncation certificate.
struct SectorSpectrum {
  int l = 0;
  SingleSectorBasis basis{0, 0};
  EigenSolution solution;
  double truncation_drift = 0;  ///< max |E_k(n_max - step) - E_k(n_max)| over tracked k
  SparseOperator hamiltonian;

  SectorState eigenstate(std::size_t k) const;
};

/// Dense diagonalization at n_max and n_max + step, growing n_max by `step`
/// until the tracked energies move by at most tol. The returned spectrum is
/// the larger truncation. Throws ConvergenceError with the drift at the ceiling.
SectorSpectrum sector_spectrum(const ModelParams& params, int l, int n_max,
                               const SectorSpectrumOptions& options = {});

/// Dense diagonalization at exactly this truncation, no certificate.
SectorSpectrum sector_spectrum_fixed(const ModelParams& params, int l, int n_max);

/// Overlaps <psi_m | e, 0, 0> for every eigenvector of every given sector.
/// Only l = 1 contains |e>|0,0>; every other sector's overlaps are exactly 0.
std::map<int, std::vector<double>> project_excited_vacuum(std::span<const SectorSpectrum> spectra);

/// Observables on a time grid.
struct TimeSeries {
  std::vector<double> times;
  std::vector<ObservableRecord> records;
  std::vector<double> energy;      ///< <H>
  double truncation_drift = 0;     ///< max observable change against n_max + 10 (when checked)
};

struct SpectralOptions {
  int n_max = 150;
  bool check_truncation = true;
  double drift_tol = 1e-6;
};

/// Splits a Fock state into sector states at truncation n_max. The norm of
/// components above the truncation is returned in `outside`.
std::vector<SectorState> split_into_sectors(const FockState& state, int n_max, double& outside);

/// psi(t) = sum_m exp(-i E_m t) |psi_m><psi_m|psi(0)> per sector.
///
/// Throws InvalidArgument when more than 1e-6 of the initial norm lies outside
/// the truncated space, and ConvergenceError when check_truncation is set and
/// observables move by more than drift_tol at n_max + 10.
TimeSeries spectral_evolve(const ModelParams& params, const FockState& initial, std::span<const double> times,
                           const SpectralOptions& options = {});

/// Evolved sector states at one time from precomputed spectra (same order as `parts`).
std::vector<SectorState> spectral_state(std::span<const SectorSpectrum> spectra, std::span<const SectorState> parts,
                                        double t);

/// Features of a <sigma_z>(t) trace used to characterize collapse and revival.
struct CollapseRevival {
  double collapse_start = 0;  ///< first time sigma_z <= 0
  double collapse_end = 0;    ///< first later time sigma_z >= 0.5
  double collapse_mean_abs = 0;
  std::vector<double> revival_times;
  std::vector<double> revival_peaks;
  double max_after_collapse = 0;
};

/// A revival is a local maximum of sigma_z above `threshold` reached after the
/// trace has dropped below 0.
CollapseRevival analyze_collapse_revival(std::span<const double> times, std::span<const double> sigma_z,
                                         double threshold = 0.5);

}  // namespace chiral
