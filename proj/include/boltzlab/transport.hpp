// Free streaming S(t) = e^{-t v.grad_x}, its velocity-Fourier conjugate
// U(t) = e^{it grad_xi . grad_x}, and Duhamel time quadrature.
//
// Transport is applied spectrally in x (exact on the torus). When t v lands
// on the x-lattice for every velocity node (t dv / dx integral), the operator
// degenerates to an index rotation and is applied as one: exact, order- and
// positivity-preserving to the bit.
#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "boltzlab/common.hpp"
#include "boltzlab/fft.hpp"
#include "boltzlab/grid.hpp"

namespace boltzlab {

enum class TimeQuadrature { trapezoid, midpoint };

struct TimeGrid {
  double t0 = 0.0;
  double T = 1.0;
  double dt = 0.1;
  TimeQuadrature quadrature = TimeQuadrature::trapezoid;

  TimeGrid() = default;
  TimeGrid(double t0_, double T_, double dt_, TimeQuadrature q = TimeQuadrature::trapezoid)
      : t0(t0_), T(T_), dt(dt_), quadrature(q) {
    if (dt <= 0.0) throw std::invalid_argument("TimeGrid: dt must be positive");
    const double steps = (T - t0) / dt;
    if (std::abs(steps - std::round(steps)) > 1e-9)
      throw std::invalid_argument("TimeGrid: (T - t0) / dt must be integral");
  }

  int n_steps() const { return static_cast<int>(std::round((T - t0) / dt)); }
  int n_nodes() const { return n_steps() + 1; }
  double node(int i) const { return t0 + i * dt; }

  // trapezoid weights for the integral over [t0, node(upto)]
  std::vector<double> weights_upto(int upto) const {
    std::vector<double> w(upto + 1, dt);
    if (upto == 0) {
      w[0] = 0.0;
      return w;
    }
    w[0] = 0.5 * dt;
    w[upto] = 0.5 * dt;
    return w;
  }
};

namespace detail {

inline bool commensurate_shift(const PhaseGrid& g, double t, double& ratio_out) {
  if (g.homogeneous()) {
    ratio_out = 0.0;
    return true;
  }
  const double ratio = t * g.dv() / g.dx();
  ratio_out = ratio;
  return std::abs(ratio - std::round(ratio)) <= 1e-12 * std::max(1.0, std::abs(ratio));
}

}  // namespace detail

// (S(t) f)(x, v) = f(x - t v, v)
inline DistributionField free_stream(const DistributionField& f, double t) {
  const PhaseGrid& g = *f.grid;
  DistributionField out(f.grid, f.time + t);
  if (t == 0.0 || g.homogeneous()) {
    out.values = f.values;
    return out;
  }
  const int nx = g.Nx(), nv = g.Nv();
  const long nx3 = g.nx3(), nv3 = g.nv3();
  double ratio;
  if (detail::commensurate_shift(g, t, ratio)) {
    const long step = static_cast<long>(std::llround(ratio));
    parallel_for(static_cast<std::size_t>(nv3), [&](std::size_t iv) {
      const int ma = static_cast<int>(iv / (nv * nv)) - nv / 2;
      const int mb = static_cast<int>((iv / nv) % nv) - nv / 2;
      const int mc = static_cast<int>(iv % nv) - nv / 2;
      // x-index shift of -t v in units of dx, wrapped
      auto wrap = [&](long s) { return static_cast<int>(((s % nx) + nx) % nx); };
      const int sa = wrap(-step * ma), sb = wrap(-step * mb), sc = wrap(-step * mc);
      for (int a = 0; a < nx; ++a)
        for (int b = 0; b < nx; ++b)
          for (int c = 0; c < nx; ++c) {
            const long src = (static_cast<long>((a + sa) % nx) * nx + (b + sb) % nx) * nx + (c + sc) % nx;
            const long dst = (static_cast<long>(a) * nx + b) * nx + c;
            out.values[dst * nv3 + iv] = f.values[src * nv3 + iv];
          }
    });
    return out;
  }
  // spectral path: multiply x-modes by e^{-i t (k . v)}
  parallel_for(static_cast<std::size_t>(nv3), [&](std::size_t iv) {
    const Vec3 v = g.v_node(static_cast<long>(iv));
    std::vector<cplx> block(nx3);
    for (long ix = 0; ix < nx3; ++ix) block[ix] = f.values[ix * nv3 + iv];
    fft3(block.data(), nx, -1);
    for (long ix = 0; ix < nx3; ++ix) {
      const double ph = -t * dot(g.k_mode(ix), v);
      block[ix] *= cplx{std::cos(ph), std::sin(ph)};
    }
    fft3(block.data(), nx, +1);
    const double inv = 1.0 / static_cast<double>(nx3);
    for (long ix = 0; ix < nx3; ++ix) out.values[ix * nv3 + iv] = block[ix].real() * inv;
  });
  return out;
}

// U(t) ftilde: the xi-side propagator, conjugate of S(t) under fourier_v.
// Realized as the phase e^{-i t (k . v)} in the mixed (k, v) representation.
inline SpectralField xi_propagate(const SpectralField& F, double t) {
  const PhaseGrid& g = *F.grid;
  SpectralField out(F.grid, F.time + t);
  if (t == 0.0 || g.homogeneous()) {
    out.values = F.values;
    return out;
  }
  const int nx = g.Nx(), nv = g.Nv();
  const long nx3 = g.nx3(), nv3 = g.nv3();
  // to (k, xi)
  std::vector<cplx> work(F.values);
  parallel_for(static_cast<std::size_t>(nv3), [&](std::size_t ixi) {
    std::vector<cplx> block(nx3);
    for (long ix = 0; ix < nx3; ++ix) block[ix] = work[ix * nv3 + ixi];
    fft3(block.data(), nx, -1);
    for (long ix = 0; ix < nx3; ++ix) work[ix * nv3 + ixi] = block[ix];
  });
  // per k: shift xi by t k via a v-side phase
  parallel_for(static_cast<std::size_t>(nx3), [&](std::size_t ix) {
    const Vec3 k = g.k_mode(static_cast<long>(ix));
    cplx* slice = work.data() + ix * nv3;
    std::vector<cplx> block(nv3);
    // xi -> v
    for (long i = 0; i < nv3; ++i) block[i] = slice[i] * static_cast<double>(boltzlab::detail::parity_sign(i, nv));
    fft3(block.data(), nv, -1);
    for (long i = 0; i < nv3; ++i) {
      const Vec3 v = g.v_node(i);
      const double ph = -t * dot(k, v);
      block[i] *= cplx{std::cos(ph), std::sin(ph)};
    }
    fft3(block.data(), nv, +1);
    const double invn = 1.0 / static_cast<double>(nv3);
    for (long i = 0; i < nv3; ++i) slice[i] = block[i] * (invn * boltzlab::detail::parity_sign(i, nv));
  });
  // back to (x, xi)
  parallel_for(static_cast<std::size_t>(nv3), [&](std::size_t ixi) {
    std::vector<cplx> block(nx3);
    for (long ix = 0; ix < nx3; ++ix) block[ix] = work[ix * nv3 + ixi];
    fft3(block.data(), nx, +1);
    const double inv = 1.0 / static_cast<double>(nx3);
    for (long ix = 0; ix < nx3; ++ix) out.values[ix * nv3 + ixi] = block[ix] * inv;
  });
  return out;
}

// S(T) f0 + sum_j w_j S(T - tau_j) source(tau_j) with the grid's quadrature.
inline DistributionField duhamel(const DistributionField& f0,
                                 const std::function<DistributionField(double)>& source,
                                 const TimeGrid& tg) {
  DistributionField acc = free_stream(f0, tg.T - tg.t0);
  acc.time = tg.T;
  const int n = tg.n_steps();
  if (tg.quadrature == TimeQuadrature::trapezoid) {
    const std::vector<double> w = tg.weights_upto(n);
    for (int j = 0; j <= n; ++j) {
      if (w[j] == 0.0) continue;
      const double tau = tg.node(j);
      DistributionField s = free_stream(source(tau), tg.T - tau);
      for (std::size_t i = 0; i < acc.values.size(); ++i) acc.values[i] += w[j] * s.values[i];
    }
  } else {
    for (int j = 0; j < n; ++j) {
      const double tau = tg.node(j) + 0.5 * tg.dt;
      DistributionField s = free_stream(source(tau), tg.T - tau);
      for (std::size_t i = 0; i < acc.values.size(); ++i) acc.values[i] += tg.dt * s.values[i];
    }
  }
  return acc;
}

}  // namespace boltzlab
