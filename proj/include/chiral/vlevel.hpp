#pragma once

// V-level atom (|g>, |1>, |2>) in the two-polarization cavity:
//   H = wc (a^dag a + b^dag b) + w0 (|1><1| + |2><2|) + Delta |2><2|
//       + g [|1><g| (a + b^dag) + |2><g| (b + a^dag)] + h.c.
// Conserved: L_V = a^dag a + |1><1| - b^dag b - |2><2|, eigenvalue l.

#include <cstdint>
#include <optional>
#include <vector>

#include "chiral/eigensolvers.hpp"
#include "chiral/hilbert.hpp"
#include "chiral/single_cavity.hpp"
#include "chiral/sparse.hpp"

namespace chiral {

enum class VBranch : std::uint8_t { G = 0, One = 1, Two = 2 };

/// (G, n) -> |g>|n+l, n>, (1, n) -> |1>|n+l-1, n>, (2, n) -> |2>|n+l+1, n>.
struct VSectorEntry {
  VBranch branch;
  int n;
  int n_a;
  int n_b;
};

class VSectorBasis {
 public:
  VSectorBasis(int l, int n_max);

  int l() const noexcept { return l_; }
  int n_max() const noexcept { return n_max_; }
  std::size_t size() const noexcept { return states_.size(); }
  const VSectorEntry& operator[](std::size_t i) const { return states_[i]; }
  const std::vector<VSectorEntry>& states() const noexcept { return states_; }

  std::optional<std::size_t> index_of(VBranch b, int n) const;

 private:
  int l_;
  int n_max_;
  std::vector<VSectorEntry> states_;
  std::vector<std::size_t> offset_;  // first index of each branch
  std::vector<int> first_n_;         // smallest admissible n per branch
};

SparseOperator assemble_v_hamiltonian(const ModelParams& params, const VSectorBasis& basis);

struct VSectorSpectrum {
  int l = 0;
  VSectorBasis basis{0, 0};
  EigenSolution solution;
  double truncation_drift = 0;
};

VSectorSpectrum v_sector_spectrum_fixed(const ModelParams& params, int l, int n_max);

/// Same convergence certificate as sector_spectrum.
VSectorSpectrum v_sector_spectrum(const ModelParams& params, int l, int n_max,
                                  const SectorSpectrumOptions& options = {});

}  // namespace chiral
