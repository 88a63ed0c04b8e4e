#include "chiral/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "chiral/errors.hpp"

namespace chiral {

ProductSpace::ProductSpace(std::vector<std::size_t> dims) : dims_(std::move(dims)) {
  if (dims_.empty()) throw InvalidArgument("ProductSpace needs at least one factor");
  strides_.assign(dims_.size(), 1);
  dim_ = 1;
  for (std::size_t k = dims_.size(); k-- > 0;) {
    if (dims_[k] == 0) throw InvalidArgument("ProductSpace factor of dimension 0");
    strides_[k] = dim_;
    dim_ *= dims_[k];
  }
}

std::size_t ProductSpace::index(const std::vector<std::size_t>& digits) const {
  std::size_t idx = 0;
  for (std::size_t k = 0; k < dims_.size(); ++k) idx += digits[k] * strides_[k];
  return idx;
}

std::vector<std::size_t> ProductSpace::digits(std::size_t index) const {
  std::vector<std::size_t> d(dims_.size());
  for (std::size_t k = 0; k < dims_.size(); ++k) d[k] = (index / strides_[k]) % dims_[k];
  return d;
}

void ProductSpace::add(double coefficient, const std::vector<Factor>& factors) {
  for (std::size_t a = 0; a < factors.size(); ++a) {
    if (factors[a].site >= dims_.size()) throw InvalidArgument("ProductSpace factor site out of range");
    for (std::size_t b = 0; b < a; ++b) {
      if (factors[a].site == factors[b].site) throw InvalidArgument("ProductSpace term repeats a site");
    }
  }
  std::vector<std::pair<std::size_t, double>> cur, next;
  for (std::size_t s = 0; s < dim_; ++s) {
    cur.assign(1, {s, coefficient});
    for (const auto& f : factors) {
      next.clear();
      const std::size_t stride = strides_[f.site];
      for (const auto& [idx, amp] : cur) {
        const std::size_t digit = (idx / stride) % dims_[f.site];
        for (const auto& e : f.matrix) {
          if (e.col != digit) continue;
          next.emplace_back(idx - digit * stride + e.row * stride, amp * e.value);
        }
      }
      cur.swap(next);
      if (cur.empty()) break;
    }
    for (const auto& [idx, amp] : cur) triplets_.push_back({idx, s, amp});
  }
}

SparseOperator ProductSpace::build() const { return SparseOperator::from_triplets(dim_, triplets_); }

ProductSpace::LocalMatrix ProductSpace::annihilation(std::size_t cap) {
  LocalMatrix m;
  for (std::size_t k = 1; k <= cap; ++k) m.push_back({k - 1, k, std::sqrt(static_cast<double>(k))});
  return m;
}

ProductSpace::LocalMatrix ProductSpace::creation(std::size_t cap) {
  LocalMatrix m;
  for (std::size_t k = 1; k <= cap; ++k) m.push_back({k, k - 1, std::sqrt(static_cast<double>(k))});
  return m;
}

ProductSpace::LocalMatrix ProductSpace::number(std::size_t cap) {
  LocalMatrix m;
  for (std::size_t k = 1; k <= cap; ++k) m.push_back({k, k, static_cast<double>(k)});
  return m;
}

ProductSpace::LocalMatrix ProductSpace::projector(std::size_t to, std::size_t from) {
  return {{to, from, 1.0}};
}

std::vector<double> OracleSpectrum::sector_energies(int l) const {
  std::vector<double> out;
  for (std::size_t k = 0; k < label.size(); ++k) {
    if (label[k] == l) out.push_back(solution.energies[k]);
  }
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

void check_cap(int cap) {
  if (cap < 0) throw InvalidArgument("photon cap must be >= 0");
}

}  // namespace

std::size_t two_mode_index(int tls, int n_a, int n_b, int cap) {
  const auto c = static_cast<std::size_t>(cap) + 1;
  return (static_cast<std::size_t>(tls) * c + static_cast<std::size_t>(n_a)) * c + static_cast<std::size_t>(n_b);
}

SparseOperator two_mode_full_hamiltonian(const ModelParams& params, int cap) {
  params.validate();
  check_cap(cap);
  const auto c = static_cast<std::size_t>(cap);
  ProductSpace space({2, c + 1, c + 1});
  using PS = ProductSpace;
  space.add(0.5 * params.omega0, {{0, PS::projector(1, 1)}});
  space.add(-0.5 * params.omega0, {{0, PS::projector(0, 0)}});
  space.add(params.omega_c, {{1, PS::number(c)}});
  space.add(params.omega_c, {{2, PS::number(c)}});
  // g sigma_+ (a + b^dagger) + h.c.
  space.add(params.g, {{0, PS::projector(1, 0)}, {1, PS::annihilation(c)}});
  space.add(params.g, {{0, PS::projector(1, 0)}, {2, PS::creation(c)}});
  space.add(params.g, {{0, PS::projector(0, 1)}, {1, PS::creation(c)}});
  space.add(params.g, {{0, PS::projector(0, 1)}, {2, PS::annihilation(c)}});
  return space.build();
}

OracleSpectrum brute_force_two_mode_oracle(const ModelParams& params, int cap, OracleMethod method) {
  SparseOperator h = two_mode_full_hamiltonian(params, cap);
  std::vector<double> lz(h.dim());
  for (int t = 0; t < 2; ++t) {
    for (int a = 0; a <= cap; ++a) {
      for (int b = 0; b <= cap; ++b) lz[two_mode_index(t, a, b, cap)] = a - b + (t ? 0.5 : -0.5);
    }
  }
  if (method == OracleMethod::Components) return resolve_components(std::move(h), std::move(lz), 0.5);
  return resolve_sectors(std::move(h), std::move(lz), 0.5);
}

std::size_t vlevel_index(int level, int n_a, int n_b, int cap) {
  const auto c = static_cast<std::size_t>(cap) + 1;
  return (static_cast<std::size_t>(level) * c + static_cast<std::size_t>(n_a)) * c + static_cast<std::size_t>(n_b);
}

SparseOperator vlevel_full_hamiltonian(const ModelParams& params, int cap) {
  params.validate();
  check_cap(cap);
  const auto c = static_cast<std::size_t>(cap);
  ProductSpace space({3, c + 1, c + 1});
  using PS = ProductSpace;
  space.add(params.omega0, {{0, PS::projector(1, 1)}});
  space.add(params.omega0 + params.delta, {{0, PS::projector(2, 2)}});
  space.add(params.omega_c, {{1, PS::number(c)}});
  space.add(params.omega_c, {{2, PS::number(c)}});
  // g [|1><g| (a + b^dagger) + |2><g| (b + a^dagger)] + h.c.
  space.add(params.g, {{0, PS::projector(1, 0)}, {1, PS::annihilation(c)}});
  space.add(params.g, {{0, PS::projector(1, 0)}, {2, PS::creation(c)}});
  space.add(params.g, {{0, PS::projector(2, 0)}, {2, PS::annihilation(c)}});
  space.add(params.g, {{0, PS::projector(2, 0)}, {1, PS::creation(c)}});
  space.add(params.g, {{0, PS::projector(0, 1)}, {1, PS::creation(c)}});
  space.add(params.g, {{0, PS::projector(0, 1)}, {2, PS::annihilation(c)}});
  space.add(params.g, {{0, PS::projector(0, 2)}, {2, PS::creation(c)}});
  space.add(params.g, {{0, PS::projector(0, 2)}, {1, PS::annihilation(c)}});
  return space.build();
}

OracleSpectrum brute_force_vlevel_oracle(const ModelParams& params, int cap, OracleMethod method) {
  SparseOperator h = vlevel_full_hamiltonian(params, cap);
  std::vector<double> lz(h.dim());
  const int shift[3] = {0, 1, -1};
  for (int t = 0; t < 3; ++t) {
    for (int a = 0; a <= cap; ++a) {
      for (int b = 0; b <= cap; ++b) lz[vlevel_index(t, a, b, cap)] = a - b + shift[t];
    }
  }
  if (method == OracleMethod::Components) return resolve_components(std::move(h), std::move(lz), 0.0);
  return resolve_sectors(std::move(h), std::move(lz), 0.0);
}

std::size_t lattice_full_index(int tls, const std::vector<int>& a, const std::vector<int>& b, int L, int site_cap) {
  const auto c = static_cast<std::size_t>(site_cap) + 1;
  std::size_t idx = static_cast<std::size_t>(tls);
  for (int i = 0; i < L; ++i) idx = idx * c + static_cast<std::size_t>(a[static_cast<std::size_t>(i)]);
  for (int i = 0; i < L; ++i) idx = idx * c + static_cast<std::size_t>(b[static_cast<std::size_t>(i)]);
  return idx;
}

SparseOperator lattice_full_hamiltonian(const ModelParams& params, int site_cap, double counter_rotating) {
  params.validate();
  check_cap(site_cap);
  const auto c = static_cast<std::size_t>(site_cap);
  const auto L = static_cast<std::size_t>(params.L);
  std::vector<std::size_t> dims(1 + 2 * L, c + 1);
  dims[0] = 2;
  ProductSpace space(dims);
  using PS = ProductSpace;
  auto a_site = [](std::size_t i) { return 1 + i; };
  auto b_site = [L](std::size_t i) { return 1 + L + i; };
  space.add(0.5 * params.omega0, {{0, PS::projector(1, 1)}});
  space.add(-0.5 * params.omega0, {{0, PS::projector(0, 0)}});
  for (std::size_t i = 0; i < L; ++i) {
    space.add(params.omega_c, {{a_site(i), PS::number(c)}});
    space.add(params.omega_c, {{b_site(i), PS::number(c)}});
  }
  for (std::size_t i = 0; i + 1 < L; ++i) {
    for (std::size_t offset : {std::size_t{1}, 1 + L}) {
      space.add(-params.J, {{offset + i, PS::creation(c)}, {offset + i + 1, PS::annihilation(c)}});
      space.add(-params.J, {{offset + i + 1, PS::creation(c)}, {offset + i, PS::annihilation(c)}});
    }
  }
  space.add(params.g, {{0, PS::projector(1, 0)}, {a_site(0), PS::annihilation(c)}});
  space.add(params.g, {{0, PS::projector(0, 1)}, {a_site(0), PS::creation(c)}});
  const double gc = params.g * counter_rotating;
  space.add(gc, {{0, PS::projector(1, 0)}, {b_site(0), PS::creation(c)}});
  space.add(gc, {{0, PS::projector(0, 1)}, {b_site(0), PS::annihilation(c)}});
  return space.build();
}

OracleSpectrum brute_force_lattice_oracle(const ModelParams& params, int site_cap) {
  SparseOperator h = lattice_full_hamiltonian(params, site_cap);
  const auto L = static_cast<std::size_t>(params.L);
  std::vector<std::size_t> dims(1 + 2 * L, static_cast<std::size_t>(site_cap) + 1);
  dims[0] = 2;
  ProductSpace space(dims);
  std::vector<double> lz(h.dim());
  for (std::size_t s = 0; s < h.dim(); ++s) {
    const auto d = space.digits(s);
    double v = d[0] ? 0.5 : -0.5;
    for (std::size_t i = 0; i < L; ++i) v += static_cast<double>(d[1 + i]) - static_cast<double>(d[1 + L + i]);
    lz[s] = v;
  }
  return resolve_sectors(std::move(h), std::move(lz), 0.5);
}

double offblock_norm(const SparseOperator& h, const std::vector<double>& lz_diagonal) {
  const auto rp = h.row_ptr();
  const auto cols = h.cols();
  const auto vals = h.values();
  double sum = 0.0;
  for (std::size_t r = 0; r < h.dim(); ++r) {
    for (std::size_t k = rp[r]; k < rp[r + 1]; ++k) {
      if (lz_diagonal[r] != lz_diagonal[cols[k]]) sum += vals[k] * vals[k];
    }
  }
  return std::sqrt(sum);
}

OracleSpectrum resolve_sectors(SparseOperator h, std::vector<double> lz_diagonal, double label_offset) {
  const std::size_t n = h.dim();
  if (lz_diagonal.size() != n) throw InvalidArgument("resolve_sectors: conserved-quantity size mismatch");
  OracleSpectrum out;
  DenseOptions opts;
  opts.budget = std::max<std::size_t>(opts.budget, n);
  EigenSolution sol = dense_eigensolve(h, opts);
  const double scale = std::max(h.norm_bound(), 1.0);
  const double cluster_tol = 1e-6 * scale;

  // Within each cluster: diagonalize L, then H inside each L eigenvalue group.
  std::vector<double> new_energies(n);
  std::vector<double> new_vectors(n * n);
  std::vector<double> hv(n);
  std::size_t start = 0;
  while (start < n) {
    std::size_t end = start + 1;
    while (end < n && sol.energies[end] - sol.energies[end - 1] < cluster_tol) ++end;
    const std::size_t k = end - start;
    const double* V = sol.vectors.data() + start * n;
    std::vector<double> m(k * k);
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = i; j < k; ++j) {
        double acc = 0.0;
        for (std::size_t r = 0; r < n; ++r) acc += V[i * n + r] * lz_diagonal[r] * V[j * n + r];
        m[i + j * k] = m[j + i * k] = acc;
      }
    }
    std::vector<double> lvals, lvecs;
    small_symmetric_eigen(k, m, lvals, lvecs);
    std::vector<double> W(k * n, 0.0);  // cluster rotated to L eigenvectors
    for (std::size_t c = 0; c < k; ++c) {
      for (std::size_t i = 0; i < k; ++i) {
        const double f = lvecs[i + c * k];
        for (std::size_t r = 0; r < n; ++r) W[c * n + r] += f * V[i * n + r];
      }
    }
    std::size_t g0 = 0;
    while (g0 < k) {
      std::size_t g1 = g0 + 1;
      while (g1 < k && lvals[g1] - lvals[g0] < 0.25) ++g1;
      const std::size_t q = g1 - g0;
      std::vector<double> hm(q * q);
      for (std::size_t i = 0; i < q; ++i) {
        h.apply(std::span<const double>(W.data() + (g0 + i) * n, n), hv);
        for (std::size_t j = 0; j < q; ++j) {
          double acc = 0.0;
          for (std::size_t r = 0; r < n; ++r) acc += W[(g0 + j) * n + r] * hv[r];
          hm[j + i * q] = acc;
        }
      }
      for (std::size_t i = 0; i < q; ++i) {
        for (std::size_t j = 0; j < i; ++j) hm[j + i * q] = hm[i + j * q] = 0.5 * (hm[j + i * q] + hm[i + j * q]);
      }
      std::vector<double> evals, evecs;
      small_symmetric_eigen(q, hm, evals, evecs);
      for (std::size_t c = 0; c < q; ++c) {
        double* dst = new_vectors.data() + (start + g0 + c) * n;
        for (std::size_t i = 0; i < q; ++i) {
          const double f = evecs[i + c * q];
          for (std::size_t r = 0; r < n; ++r) dst[r] += f * W[(g0 + i) * n + r];
        }
        new_energies[start + g0 + c] = evals[c];
      }
      g0 = g1;
    }
    start = end;
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return new_energies[x] < new_energies[y]; });
  out.solution.dim = n;
  out.solution.solver = "dense-oracle";
  out.solution.energies.resize(n);
  out.solution.vectors.resize(n * n);
  for (std::size_t c = 0; c < n; ++c) {
    out.solution.energies[c] = new_energies[order[c]];
    std::copy_n(new_vectors.data() + order[c] * n, n, out.solution.vectors.data() + c * n);
  }
  out.solution.residuals.assign(n, 0.0);
  out.lz.resize(n);
  out.label.resize(n);
  for (std::size_t c = 0; c < n; ++c) {
    const auto v = out.solution.vector(c);
    h.apply(v, hv);
    double res = 0.0, l1 = 0.0, spread = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      const double d = hv[r] - out.solution.energies[c] * v[r];
      res += d * d;
      l1 += lz_diagonal[r] * v[r] * v[r];
    }
    for (std::size_t r = 0; r < n; ++r) spread += (lz_diagonal[r] - l1) * (lz_diagonal[r] - l1) * v[r] * v[r];
    out.solution.residuals[c] = std::sqrt(res);
    out.lz[c] = l1;
    out.max_mixing = std::max(out.max_mixing, std::sqrt(spread));
    const double shifted = l1 + label_offset;
    out.label[c] = static_cast<int>(std::lround(shifted));
    if (std::abs(shifted - out.label[c]) > 1e-8) {
      std::ostringstream msg;
      msg << "oracle eigenvector " << c << " has non-quantized conserved quantity " << l1;
      throw ConsistencyError(msg.str());
    }
  }
  if (out.max_mixing > 1e-8) {
    std::ostringstream msg;
    msg << "oracle eigenvectors mix sectors (max spread " << out.max_mixing << ")";
    throw ConsistencyError(msg.str());
  }
  out.hamiltonian = std::move(h);
  out.lz_diagonal = std::move(lz_diagonal);
  return out;
}

OracleSpectrum resolve_components(SparseOperator h, std::vector<double> lz_diagonal, double label_offset) {
  const std::size_t n = h.dim();
  if (lz_diagonal.size() != n) throw InvalidArgument("resolve_components: conserved-quantity size mismatch");
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  const auto rp = h.row_ptr();
  const auto ci = h.cols();
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t k = rp[r]; k < rp[r + 1]; ++k) {
      const std::size_t a = find(r), b = find(ci[k]);
      if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
  }
  std::map<std::size_t, std::vector<std::size_t>> blocks;
  for (std::size_t r = 0; r < n; ++r) blocks[find(r)].push_back(r);

  OracleSpectrum out;
  out.solution.dim = n;
  out.solution.solver = "dense-components";
  std::vector<std::pair<double, int>> levels;
  levels.reserve(n);
  for (const auto& [root, idx] : blocks) {
    const double l0 = lz_diagonal[idx.front()];
    for (std::size_t r : idx) {
      if (lz_diagonal[r] != l0) throw ConsistencyError("a connected block of H mixes values of the conserved quantity");
    }
    const double shifted = l0 + label_offset;
    const int label = static_cast<int>(std::lround(shifted));
    if (std::abs(shifted - label) > 1e-8) throw ConsistencyError("non-quantized conserved quantity");
    DenseOptions opts;
    opts.budget = std::max<std::size_t>(opts.budget, idx.size());
    const auto sol = dense_eigensolve(h.restrict_to(idx), opts);
    for (double e : sol.energies) levels.emplace_back(e, label);
  }
  std::stable_sort(levels.begin(), levels.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
  for (const auto& [e, label] : levels) {
    out.solution.energies.push_back(e);
    out.solution.residuals.push_back(0.0);
    out.lz.push_back(label - label_offset);
    out.label.push_back(label);
  }

  if (n <= kWholeSpectrumCheckLimit) {
    DenseOptions whole;
    whole.budget = n;
    whole.want_vectors = false;
    const auto all = dense_eigensolve(h, whole);
    double dev = 0.0;
    for (std::size_t k = 0; k < n; ++k) dev = std::max(dev, std::abs(all.energies[k] - out.solution.energies[k]));
    out.full_spectrum_deviation = dev;
  }
  out.hamiltonian = std::move(h);
  out.lz_diagonal = std::move(lz_diagonal);
  return out;
}

}  // namespace chiral
