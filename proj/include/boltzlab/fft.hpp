// In-place radix-2 complex FFT plus strided helpers for transforming one axis
// of a packed 3D block. Grids here are small powers of two, so a plain
// iterative Cooley-Tukey with per-level twiddles is accurate and fast enough.
#pragma once

#include <cassert>
#include <complex>
#include <vector>

#include "boltzlab/common.hpp"

namespace boltzlab {

// sign = +1: sum_j a[j] e^{+2 pi i jk/n};  sign = -1: conjugate kernel.
// No normalization.
inline void fft_pow2(cplx* a, int n, int sign) {
  assert(is_pow2(n));
  // bit-reversal permutation
  for (int i = 1, j = 0; i < n; ++i) {
    int bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (int len = 2; len <= n; len <<= 1) {
    const double ang = sign * two_pi / len;
    const cplx wl(std::cos(ang), std::sin(ang));
    for (int i = 0; i < n; i += len) {
      cplx w(1.0, 0.0);
      for (int k = 0; k < len / 2; ++k) {
        const cplx u = a[i + k];
        const cplx v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
}

inline void fft_pow2(std::vector<cplx>& a, int sign) {
  fft_pow2(a.data(), static_cast<int>(a.size()), sign);
}

// Transform every line along one axis of an N^3 block stored with C layout
// (i*N*N + j*N + k). `base` points at the block; lines are gathered through
// the stride, transformed, and scattered back.
inline void fft3_axis(cplx* base, int n, int axis, int sign) {
  const int n2 = n * n;
  int stride = 0, s1 = 0, s2 = 0;
  switch (axis) {
    case 0: stride = n2; s1 = n; s2 = 1; break;
    case 1: stride = n; s1 = n2; s2 = 1; break;
    default: stride = 1; s1 = n2; s2 = n; break;
  }
  std::vector<cplx> line(n);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      cplx* p = base + a * s1 + b * s2;
      if (stride == 1) {
        fft_pow2(p, n, sign);
        continue;
      }
      for (int k = 0; k < n; ++k) line[k] = p[k * stride];
      fft_pow2(line.data(), n, sign);
      for (int k = 0; k < n; ++k) p[k * stride] = line[k];
    }
  }
}

// Full 3D transform of an N^3 block (all three axes), unnormalized.
inline void fft3(cplx* base, int n, int sign) {
  for (int axis = 0; axis < 3; ++axis) fft3_axis(base, n, axis, sign);
}

}  // namespace boltzlab
