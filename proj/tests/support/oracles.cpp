#include "support/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace chiral::testing {

DenseEigen jacobi_eigen(std::vector<double> a, std::size_t n, bool want_vectors) {
  std::vector<double> v;
  if (want_vectors) {
    v.assign(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;
  }
  auto at = [&](std::size_t i, std::size_t j) -> double& { return a[i * n + j]; };
  double scale = 0;
  for (double x : a) scale = std::max(scale, std::abs(x));
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += at(i, j) * at(i, j);
    if (std::sqrt(off) <= 1e-15 * std::max(scale, 1.0) * static_cast<double>(n)) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = at(p, q);
        if (apq == 0.0) continue;
        const double theta = (at(q, q) - at(p, p)) / (2 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1));
        const double c = 1 / std::sqrt(t * t + 1), s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = at(k, p), akq = at(k, q);
          at(k, p) = c * akp - s * akq;
          at(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = at(p, k), aqk = at(q, k);
          at(p, k) = c * apk - s * aqk;
          at(q, k) = s * apk + c * aqk;
        }
        if (want_vectors) {
          for (std::size_t k = 0; k < n; ++k) {
            const double vkp = v[p * n + k], vkq = v[q * n + k];
            v[p * n + k] = c * vkp - s * vkq;
            v[q * n + k] = s * vkp + c * vkq;
          }
        }
      }
    }
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return at(x, x) < at(y, y); });
  DenseEigen out;
  for (std::size_t k = 0; k < n; ++k) out.values.push_back(at(order[k], order[k]));
  if (want_vectors) {
    out.vectors.resize(n * n);
    for (std::size_t k = 0; k < n; ++k)
      std::copy_n(v.begin() + static_cast<std::ptrdiff_t>(order[k] * n), n, out.vectors.begin() + static_cast<std::ptrdiff_t>(k * n));
  }
  return out;
}

namespace {

std::vector<cplx> matmul(const std::vector<cplx>& x, const std::vector<cplx>& y, std::size_t n) {
  std::vector<cplx> z(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k) {
      const cplx xik = x[i * n + k];
      if (xik == cplx(0)) continue;
      for (std::size_t j = 0; j < n; ++j) z[i * n + j] += xik * y[k * n + j];
    }
  return z;
}

}  // namespace

std::vector<cplx> expm_apply(const std::vector<double>& h, std::size_t n, double t, std::span<const cplx> psi) {
  double norm1 = 0;
  for (std::size_t j = 0; j < n; ++j) {
    double col = 0;
    for (std::size_t i = 0; i < n; ++i) col += std::abs(h[i * n + j]);
    norm1 = std::max(norm1, col);
  }
  const double size = norm1 * std::abs(t);
  const int squarings = size > 0.25 ? static_cast<int>(std::ceil(std::log2(size / 0.25))) : 0;
  const double tau = t / std::ldexp(1.0, squarings);
  std::vector<cplx> a(n * n);
  for (std::size_t i = 0; i < n * n; ++i) a[i] = cplx(0, -tau) * h[i];
  std::vector<cplx> e(n * n), term(n * n);
  for (std::size_t i = 0; i < n; ++i) e[i * n + i] = term[i * n + i] = 1.0;
  for (int k = 1; k <= 24; ++k) {
    term = matmul(term, a, n);
    for (auto& x : term) x /= static_cast<double>(k);
    for (std::size_t i = 0; i < n * n; ++i) e[i] += term[i];
  }
  for (int s = 0; s < squarings; ++s) e = matmul(e, e, n);
  std::vector<cplx> out(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i] += e[i * n + j] * psi[j];
  return out;
}

std::vector<cplx> taylor_propagate(const std::vector<double>& h, std::size_t n, double t, std::span<const cplx> psi) {
  struct Entry {
    std::size_t i, j;
    double v;
  };
  std::vector<Entry> nz;
  double norm_inf = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (h[i * n + j] != 0.0) nz.push_back({i, j, h[i * n + j]});
      row += std::abs(h[i * n + j]);
    }
    norm_inf = std::max(norm_inf, row);
  }
  const int steps = std::max(1, static_cast<int>(std::ceil(norm_inf * std::abs(t) / 0.5)));
  const double dt = t / steps;
  std::vector<cplx> x(psi.begin(), psi.end()), term(n), next(n);
  for (int s = 0; s < steps; ++s) {
    term = x;
    for (int k = 1; k <= 30; ++k) {
      std::fill(next.begin(), next.end(), cplx(0));
      for (const auto& e : nz) next[e.i] += e.v * term[e.j];
      const cplx f = cplx(0, -dt) / static_cast<double>(k);
      double mag = 0;
      for (std::size_t i = 0; i < n; ++i) {
        term[i] = f * next[i];
        x[i] += term[i];
        mag = std::max(mag, std::abs(term[i]));
      }
      if (mag < 1e-18) break;
    }
  }
  return x;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
  double d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

}  // namespace chiral::testing
