// Serial reference kernels against their OpenMP counterparts on a lattice sector Hamiltonian.

#include <benchmark/benchmark.h>

#include <complex>
#include <map>
#include <memory>
#include <vector>

#include "chiral/hilbert.hpp"
#include "chiral/kernels.hpp"
#include "chiral/lattice.hpp"

namespace {

struct Fixture {
  chiral::SparseOperator h;
  std::vector<double> x, y;
  std::vector<std::complex<double>> zx, zy;
};

const Fixture& fixture(int L) {
  static std::map<int, std::unique_ptr<Fixture>> cache;
  auto& f = cache[L];
  if (!f) {
    chiral::ModelParams p;
    p.g = 0.5;
    p.J = 0.2;
    p.L = L;
    const auto basis = chiral::build_lattice_sector_basis(p, 1, 2);
    f = std::make_unique<Fixture>();
    f->h = chiral::assemble_lattice_hamiltonian(p, basis);
    const std::size_t n = basis.size();
    f->x.resize(n);
    f->zx.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      f->x[i] = 1.0 / static_cast<double>(1 + i % 97);
      f->zx[i] = {f->x[i], 0.5 * f->x[i]};
    }
    f->y.resize(n);
    f->zy.resize(n);
  }
  return *f;
}

void BM_spmv_reference(benchmark::State& s) {
  auto& f = const_cast<Fixture&>(fixture(static_cast<int>(s.range(0))));
  for (auto _ : s) chiral::reference::spmv(f.h, f.zx, f.zy);
  s.SetItemsProcessed(static_cast<int64_t>(s.iterations() * f.h.nnz()));
}

void BM_spmv_parallel(benchmark::State& s) {
  auto& f = const_cast<Fixture&>(fixture(static_cast<int>(s.range(0))));
  for (auto _ : s) chiral::parallel::spmv(f.h, f.zx, f.zy);
  s.SetItemsProcessed(static_cast<int64_t>(s.iterations() * f.h.nnz()));
}

void BM_dot_reference(benchmark::State& s) {
  const auto& f = fixture(static_cast<int>(s.range(0)));
  for (auto _ : s) benchmark::DoNotOptimize(chiral::reference::dot(f.zx, f.zx));
}

void BM_dot_parallel(benchmark::State& s) {
  const auto& f = fixture(static_cast<int>(s.range(0)));
  for (auto _ : s) benchmark::DoNotOptimize(chiral::parallel::dot(f.zx, f.zx));
}

}  // namespace

BENCHMARK(BM_spmv_reference)->Arg(8)->Arg(14)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_spmv_parallel)->Arg(8)->Arg(14)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_dot_reference)->Arg(8)->Arg(14)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_dot_parallel)->Arg(8)->Arg(14)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
