#pragma once

#include <complex>
#include <mutex>
#include <unordered_map>
#include <vector>

#include "vflow/common.hpp"

namespace vflow {

using cplx = std::complex<double>;

namespace detail {

// Forward-direction roots exp(-2 pi i j / n), j < n/2, cached per size.
inline const cplx* fft_roots(int n) {
  static std::mutex mu;
  static std::unordered_map<int, std::vector<cplx>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& t = cache[n];
  if (t.empty()) {
    t.resize(n / 2);
    for (int j = 0; j < n / 2; ++j) {
      const double ang = -2.0 * M_PI * j / n;
      t[j] = {std::cos(ang), std::sin(ang)};
    }
  }
  return t.data();
}

// Iterative radix-2 Cooley-Tukey; n must be a power of two.
inline void fft_pow2(cplx* a, int n, bool inverse, const cplx* roots) {
  for (int i = 1, j = 0; i < n; ++i) {
    int bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (int len = 2; len <= n; len <<= 1) {
    const int stride = n / len;
    for (int i = 0; i < n; i += len) {
      for (int k = 0; k < len / 2; ++k) {
        cplx w = roots[k * stride];
        if (inverse) w = std::conj(w);
        const cplx u = a[i + k];
        const cplx v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
      }
    }
  }
  if (inverse) {
    const double inv = 1.0 / n;
    for (int i = 0; i < n; ++i) a[i] *= inv;
  }
}

inline void fft_pow2(cplx* a, int n, bool inverse) {
  fft_pow2(a, n, inverse, fft_roots(n));
}

}  // namespace detail

// In-place 2-D FFT on an n x n row-major array.  Forward transform yields
// coefficients normalized so that hat[0] is the mean value.
inline void fft2(std::vector<cplx>& a, int n, bool inverse) {
  const cplx* roots = detail::fft_roots(n);
  std::vector<cplx> col(n);
  for (int r = 0; r < n; ++r)
    detail::fft_pow2(a.data() + r * n, n, inverse, roots);
  for (int c = 0; c < n; ++c) {
    for (int r = 0; r < n; ++r) col[r] = a[r * n + c];
    detail::fft_pow2(col.data(), n, inverse, roots);
    for (int r = 0; r < n; ++r) a[r * n + c] = col[r];
  }
  if (!inverse) {
    const double inv = 1.0 / (static_cast<double>(n) * n);
    for (auto& v : a) v *= inv;
  } else {
    const double scale = static_cast<double>(n) * n;
    for (auto& v : a) v *= scale;
  }
}

// Signed wavenumber for spectral index j on an n-grid.
inline int wavenumber(int j, int n) { return (j <= n / 2) ? j : j - n; }

}  // namespace vflow
