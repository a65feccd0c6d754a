// Dyadic frequency projectors in x and xi, the collision frequency-support
// constraint probes, and the discrete p-variation norm.
#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "boltzlab/collision.hpp"
#include "boltzlab/common.hpp"
#include "boltzlab/grid.hpp"

namespace boltzlab {

// phi_N(y) = chi(y / 2N) - chi(y / N) built from the smooth e^{-1/s} profile;
// supported on N < |y| < 4N, nonnegative, and telescoping: the sum over
// dyadic N together with the low block covers every y.
struct DyadicCutoff {
  double chi(double t) const { return smooth_cutoff(t); }
  double phi(double N, double y) const { return chi(y / (2.0 * N)) - chi(y / N); }
  // low-frequency complement chi(y / N): P_{<= N}
  double low(double N, double y) const { return chi(y / N); }
};

enum class LPAxis { x, xi };

namespace detail {

// The projector needs some of its shell (N, 4N) inside the resolvable range.
// Full shells (4N below Nyquist, the [1, N_grid/4] guidance) are required for
// telescoping reconstructions but not for support probes.
inline void check_dyadic_range(double N, double nyquist) {
  if (!(N > 0.0)) throw std::out_of_range("lp_project: dyadic level must be positive");
  if (N >= nyquist * (1.0 + 1e-9))
    throw std::out_of_range("lp_project: dyadic level beyond the grid's resolvable range");
}

}  // namespace detail

// P_N^x or P_M^xi on a distribution field. The xi projector acts as the
// pointwise velocity multiplier phi_M(|v|) (the xi-dual side of f is v); the
// x projector is the Fourier multiplier phi_N(|k|).
inline DistributionField lp_project(const DistributionField& f, LPAxis axis, double N,
                                    const DyadicCutoff& cut = {}) {
  const PhaseGrid& g = *f.grid;
  DistributionField out = f;
  if (axis == LPAxis::x) {
    detail::check_dyadic_range(N, std::sqrt(3.0) * (g.Nx() / 2) * g.dk());
    detail::for_each_x_block(g, out.values, [&](cplx* block, long) {
      for (long ix = 0; ix < g.nx3(); ++ix) block[ix] *= cut.phi(N, norm(g.k_mode(ix)));
    });
  } else {
    detail::check_dyadic_range(N, std::sqrt(3.0) * g.Lv());
    const long nv3 = g.nv3();
    std::vector<double> w(nv3);
    for (long iv = 0; iv < nv3; ++iv) w[iv] = cut.phi(N, norm(g.v_node(iv)));
    for (long ix = 0; ix < g.nx3(); ++ix) {
      double* row = out.values.data() + ix * nv3;
      for (long iv = 0; iv < nv3; ++iv) row[iv] *= w[iv];
    }
  }
  return out;
}

inline SpectralField lp_project(const SpectralField& F, LPAxis axis, double N,
                                const DyadicCutoff& cut = {}) {
  const PhaseGrid& g = *F.grid;
  if (axis == LPAxis::xi) {
    // dual of xi is v: transform, weight pointwise in v, transform back
    DistributionField f = inverse_fourier_v(F);
    return fourier_v(lp_project(f, LPAxis::xi, N, cut));
  }
  detail::check_dyadic_range(N, std::sqrt(3.0) * (g.Nx() / 2) * g.dk());
  SpectralField out = F;
  const int nx = g.Nx();
  const long nx3 = g.nx3(), nv3 = g.nv3();
  if (g.homogeneous()) return out;
  parallel_for(static_cast<std::size_t>(nv3), [&](std::size_t ixi) {
    std::vector<cplx> block(nx3);
    for (long ix = 0; ix < nx3; ++ix) block[ix] = out.values[ix * nv3 + ixi];
    fft3(block.data(), nx, -1);
    for (long ix = 0; ix < nx3; ++ix) block[ix] *= cut.phi(N, norm(g.k_mode(ix)));
    fft3(block.data(), nx, +1);
    const double inv = 1.0 / static_cast<double>(nx3);
    for (long ix = 0; ix < nx3; ++ix) out.values[ix * nv3 + ixi] = block[ix] * inv;
  });
  return out;
}

// Low-pass companion P_{<= N} (multiplier chi(y/N)).
inline DistributionField lp_project_low(const DistributionField& f, LPAxis axis, double N,
                                        const DyadicCutoff& cut = {}) {
  const PhaseGrid& g = *f.grid;
  DistributionField out = f;
  if (axis == LPAxis::x) {
    detail::for_each_x_block(g, out.values, [&](cplx* block, long) {
      for (long ix = 0; ix < g.nx3(); ++ix) block[ix] *= cut.low(N, norm(g.k_mode(ix)));
    });
  } else {
    const long nv3 = g.nv3();
    for (long ix = 0; ix < g.nx3(); ++ix) {
      double* row = out.values.data() + ix * nv3;
      for (long iv = 0; iv < nv3; ++iv) row[iv] *= cut.low(N, norm(g.v_node(iv)));
    }
  }
  return out;
}

// || P_M Q~+(P_M1 ftilde, P_M2 gtilde) ||_2 / || Q~+(P_M1 ftilde, P_M2 gtilde) ||_2.
// By Plancherel both norms are evaluated on the v side, where the xi
// projectors are the pointwise dyadic velocity weights. Vanishing for
// M >= 10 max(M1, M2) is forced by energy conservation of the collision map.
inline double frequency_support_check(const DistributionField& f, const DistributionField& g,
                                      double M, double M1, double M2, const CollisionKernel& k,
                                      const SphereRule& rule, const GainOpts& opt = {}) {
  if (M < 10.0 * std::max(M1, M2))
    throw std::invalid_argument("frequency_support_check: needs M >= 10 max(M1, M2)");
  const DyadicCutoff cut;
  DistributionField f1 = lp_project(f, LPAxis::xi, M1, cut);
  DistributionField g2 = lp_project(g, LPAxis::xi, M2, cut);
  DistributionField q = gain_direct(f1, g2, k, rule, opt);
  const PhaseGrid& gr = *f.grid;
  double num = 0.0, den = 0.0;
  const long nv3 = gr.nv3();
  for (long ix = 0; ix < gr.nx3(); ++ix)
    for (long iv = 0; iv < nv3; ++iv) {
      const double w = cut.phi(M, norm(gr.v_node(iv)));
      const double val = q.at(ix, iv);
      num += w * w * val * val;
      den += val * val;
    }
  if (den == 0.0) return 0.0;
  return std::sqrt(num / den);
}

// x-side analogue for pointwise products: || P_N(P_N1 f . P_N2 g) || / || P_N1 f . P_N2 g ||.
inline double x_product_support_ratio(const DistributionField& f, const DistributionField& g,
                                      double N, double N1, double N2) {
  if (N < 10.0 * std::max(N1, N2))
    throw std::invalid_argument("x_product_support_ratio: needs N >= 10 max(N1, N2)");
  const DyadicCutoff cut;
  DistributionField a = lp_project(f, LPAxis::x, N1, cut);
  DistributionField b = lp_project(g, LPAxis::x, N2, cut);
  DistributionField prod = a;
  for (std::size_t i = 0; i < prod.values.size(); ++i) prod.values[i] *= b.values[i];
  const double den = l2_norm(prod);
  if (den == 0.0) return 0.0;
  DistributionField proj = lp_project(prod, LPAxis::x, N, cut);
  return l2_norm(proj) / den;
}

// --- p-variation -----------------------------------------------------------------

// sup over subsequences of (sum ||u(t_{k+1}) - u(t_k)||^p)^{1/p}, computed
// exactly by dynamic programming over the last chosen index.
inline double p_variation(const std::vector<std::vector<double>>& samples, double p) {
  if (p < 1.0) throw std::domain_error("p_variation: p must be >= 1");
  if (samples.size() < 2) throw std::domain_error("p_variation: need at least two samples");
  const std::size_t n = samples.size();
  auto dist = [&](std::size_t i, std::size_t j) {
    double s = 0.0;
    for (std::size_t d = 0; d < samples[i].size(); ++d) {
      const double t = samples[j][d] - samples[i][d];
      s += t * t;
    }
    return std::sqrt(s);
  };
  std::vector<double> best(n, 0.0);
  double top = 0.0;
  for (std::size_t j = 1; j < n; ++j) {
    for (std::size_t i = 0; i < j; ++i) {
      const double cand = best[i] + std::pow(dist(i, j), p);
      if (cand > best[j]) best[j] = cand;
    }
    top = std::max(top, best[j]);
  }
  return std::pow(top, 1.0 / p);
}

inline double p_variation_scalar(const std::vector<double>& samples, double p) {
  std::vector<std::vector<double>> v(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) v[i] = {samples[i]};
  return p_variation(v, p);
}

}  // namespace boltzlab
