// Cutoff collision machinery: the post-collision map, the loss rate A[g], the
// gain term by direct quadrature (trilinear / tricubic / trig-exact
// evaluation), and the velocity-Fourier (Bobylev-form) gain.
//
// Spectral-form bookkeeping, in the unitary transform convention of grid.hpp:
// with kernel B = |u-v|^gamma b(cos theta), cos theta = (u-v)/|u-v| . omega,
// the exact transform identity is
//
//   Qtilde+(xi) = (2 pi)^{3/2} K_gamma int_{S^2} int b_sig(xihat.w)
//                 ftilde(xi+ + eta) gtilde(xi- - eta) |eta|^{-3-gamma} deta dw
//
// with xi+- = (xi +- |xi| w)/2 and b_sig(c) = b(z)/(2 z), z = sqrt((1+c)/2),
// the sigma-representation of the angular factor (constant b/2 for the
// default b(z) = C|z|). K_gamma = 2^{3/2+gamma} Gamma((3+gamma)/2) /
// ((2 pi)^{3/2} Gamma(-gamma/2)) normalizes the Riesz kernel; for gamma = 0
// the eta integral collapses to the point evaluation ftilde(xi+) gtilde(xi-)
// and the prefactor is exactly (2 pi)^{3/2}.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "boltzlab/common.hpp"
#include "boltzlab/grid.hpp"
#include "boltzlab/quadrature.hpp"

namespace boltzlab {

// --- kernel ------------------------------------------------------------------

struct AngularFactor {
  enum class Kind { abs_cos, tabulated };
  Kind kind = Kind::abs_cos;
  double scale = 1.0;         // abs_cos: b(z) = scale * |z|
  std::vector<double> table;  // tabulated: values on uniform z in [-1, 1]

  double operator()(double z) const {
    if (kind == Kind::abs_cos) return scale * std::abs(z);
    const int n = static_cast<int>(table.size());
    const double u = std::clamp((z + 1.0) * 0.5, 0.0, 1.0) * (n - 1);
    const int i = std::min(static_cast<int>(u), n - 2);
    const double t = u - i;
    return (1.0 - t) * table[i] + t * table[i + 1];
  }

  static AngularFactor abs_cos(double c = 1.0) { return AngularFactor{Kind::abs_cos, c, {}}; }
  static AngularFactor tabulated(std::vector<double> vals) {
    if (vals.size() < 2) throw std::invalid_argument("AngularFactor: table needs >= 2 samples");
    return AngularFactor{Kind::tabulated, 1.0, std::move(vals)};
  }
};

struct CollisionKernel {
  double gamma = 0.0;  // potential exponent in [-1/2, 0]
  AngularFactor b;
  double C_cut = 1.0;

  CollisionKernel() : b(AngularFactor::abs_cos(1.0)) {}
  CollisionKernel(double g, AngularFactor bf, double cut) : gamma(g), b(std::move(bf)), C_cut(cut) {
    if (gamma < -0.5 || gamma > 0.0)
      throw std::invalid_argument("CollisionKernel: gamma outside [-1/2, 0] (hard potentials unsupported)");
    for (int i = 0; i <= 2000; ++i) {
      const double z = -1.0 + 2.0 * i / 2000.0;
      const double bv = b(z);
      if (bv < 0.0 || bv > C_cut * std::abs(z) + 1e-12)
        throw std::invalid_argument("CollisionKernel: cutoff bound 0 <= b(z) <= C|z| violated");
    }
  }

  bool maxwellian() const { return gamma == 0.0; }

  double relative_speed_pow(double r) const {
    if (gamma == 0.0) return 1.0;
    if (gamma == -0.5) return 1.0 / std::sqrt(r);
    return std::pow(r, gamma);
  }

  // sigma-representation angular factor b_sig(c) = b(z)/(2z), z = sqrt((1+c)/2)
  double b_sigma(double c) const {
    if (b.kind == AngularFactor::Kind::abs_cos) return 0.5 * b.scale;
    const double z = std::sqrt(std::max(1e-16, 0.5 * (1.0 + c)));
    return b(z) / (2.0 * z);
  }
};

// int_{S^2} b(qhat . w) dw; rotation invariant, evaluated on the rule's own
// cos(theta) nodes (2 pi for the default b = |z| up to panel exactness).
inline double angular_mass(const CollisionKernel& k, const SphereRule& rule) {
  double s = 0.0;
  if (rule.is_product()) {
    for (int i = 0; i < rule.n_theta; ++i) s += rule.cos_weights[i] * k.b(rule.cos_nodes[i]);
    return s * two_pi;
  }
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) s += rule.weights[i] * k.b(rule.nodes[i].z);
  return s;
}

// Riesz normalization of the gamma < 0 eta-form (see header comment).
inline double riesz_constant(double gamma) {
  if (gamma >= 0.0) throw std::invalid_argument("riesz_constant: needs gamma < 0");
  return std::pow(2.0, 1.5 + gamma) * std::tgamma(0.5 * (3.0 + gamma)) / std::tgamma(-0.5 * gamma);
}

// --- post-collision map --------------------------------------------------------

// u* = u + (w.(v-u)) w,  v* = v - (w.(v-u)) w
inline std::pair<Vec3, Vec3> post_collision(Vec3 u, Vec3 v, Vec3 omega) {
  if (std::abs(norm(omega) - 1.0) > 1e-12)
    throw std::domain_error("post_collision: omega must be a unit vector");
  const double h = dot(omega, v - u);
  return {u + h * omega, v - h * omega};
}

// --- off-node velocity evaluation ------------------------------------------------

enum class Interp { trilinear, tricubic, lagrange6, spectral };
enum class Extension { zero, periodic };

// Samples one x-slice of a field at arbitrary velocity points. The zero
// extension treats the field as compactly supported in the v-box (the decay
// requirement makes the two extensions agree for admissible fields everywhere
// except post-collision points thrown past the box, where zero is the
// physical value).
class VEval {
 public:
  VEval(const double* slice, const PhaseGrid& g, Interp interp, Extension ext)
      : s_(slice), n_(g.Nv()), lv_(g.Lv()), inv_dv_(1.0 / g.dv()), interp_(interp), ext_(ext) {}

  double operator()(Vec3 p) const {
    switch (interp_) {
      case Interp::tricubic: return lagrange<4>(p);
      case Interp::lagrange6: return lagrange<6>(p);
      default: return linear(p);
    }
  }

 private:
  double fetch(int a, int b, int c) const {
    if (ext_ == Extension::periodic) {
      a = wrap(a);
      b = wrap(b);
      c = wrap(c);
    } else if (a < 0 || a >= n_ || b < 0 || b >= n_ || c < 0 || c >= n_) {
      return 0.0;
    }
    return s_[(static_cast<long>(a) * n_ + b) * n_ + c];
  }

  int wrap(int i) const {
    i %= n_;
    return i < 0 ? i + n_ : i;
  }

  double linear(Vec3 p) const {
    double f[3];
    int i[3];
    for (int a = 0; a < 3; ++a) {
      const double u = (p[a] + lv_) * inv_dv_;
      if (ext_ == Extension::zero && (u < -1.0 || u > n_)) return 0.0;
      const double fl = std::floor(u);
      i[a] = static_cast<int>(fl);
      f[a] = u - fl;
    }
    double acc = 0.0;
    for (int da = 0; da < 2; ++da) {
      const double wa = da ? f[0] : 1.0 - f[0];
      if (wa == 0.0) continue;
      for (int db = 0; db < 2; ++db) {
        const double wab = wa * (db ? f[1] : 1.0 - f[1]);
        if (wab == 0.0) continue;
        for (int dc = 0; dc < 2; ++dc) {
          const double w = wab * (dc ? f[2] : 1.0 - f[2]);
          if (w != 0.0) acc += w * fetch(i[0] + da, i[1] + db, i[2] + dc);
        }
      }
    }
    return acc;
  }

  // order-P Lagrange interpolation per axis, nodes at offsets
  // {-(P/2 - 1), ..., P/2} around the cell containing the point
  template <int P>
  double lagrange(Vec3 p) const {
    double w[3][P];
    int i0[3];
    for (int a = 0; a < 3; ++a) {
      const double u = (p[a] + lv_) * inv_dv_;
      if (ext_ == Extension::zero && (u < -(P / 2.0) || u > n_ + P / 2.0)) return 0.0;
      const double fl = std::floor(u);
      i0[a] = static_cast<int>(fl) - (P / 2 - 1);
      const double t = u - fl;
      for (int kk = 0; kk < P; ++kk) {
        const double xk = kk - (P / 2 - 1);
        double num = 1.0, den = 1.0;
        for (int jj = 0; jj < P; ++jj) {
          if (jj == kk) continue;
          const double xj = jj - (P / 2 - 1);
          num *= t - xj;
          den *= xk - xj;
        }
        w[a][kk] = num / den;
      }
    }
    double acc = 0.0;
    for (int da = 0; da < P; ++da) {
      if (w[0][da] == 0.0) continue;
      for (int db = 0; db < P; ++db) {
        const double wab = w[0][da] * w[1][db];
        if (wab == 0.0) continue;
        for (int dc = 0; dc < P; ++dc)
          acc += wab * w[2][dc] * fetch(i0[0] + da, i0[1] + db, i0[2] + dc);
      }
    }
    return acc;
  }

  const double* s_;
  int n_;
  double lv_, inv_dv_;
  Interp interp_;
  Extension ext_;
};

// --- loss rate ---------------------------------------------------------------

// A[g](x, v) = int int g(x, u) B(u - v, w) du dw. The angular factor is
// rotation invariant and factors out; for gamma < 0 the coincident node u = v
// carries weight zero (integrable singularity on a measure-zero node).
inline DistributionField loss_rate(const DistributionField& g, const CollisionKernel& k,
                                   const SphereRule& rule) {
  if (!all_finite(g)) throw std::invalid_argument("loss_rate: input not finite");
  const PhaseGrid& gr = *g.grid;
  DistributionField out(g.grid, g.time);
  const double ib = angular_mass(k, rule);
  const long nv3 = gr.nv3();
  const double cell = gr.cell_v();
  std::vector<Vec3> vnodes(nv3);
  for (long i = 0; i < nv3; ++i) vnodes[i] = gr.v_node(i);
  for (long ix = 0; ix < gr.nx3(); ++ix) {
    const double* gs = g.values.data() + ix * nv3;
    double* os = out.values.data() + ix * nv3;
    if (k.maxwellian()) {
      double tot = 0.0;
      for (long iu = 0; iu < nv3; ++iu) tot += gs[iu];
      const double val = tot * cell * ib;
      for (long iv = 0; iv < nv3; ++iv) os[iv] = val;
      continue;
    }
    parallel_for(static_cast<std::size_t>(nv3), [&](std::size_t iv) {
      const Vec3 v = vnodes[iv];
      double acc = 0.0;
      for (long iu = 0; iu < nv3; ++iu) {
        if (iu == static_cast<long>(iv)) continue;
        acc += gs[iu] * k.relative_speed_pow(norm(vnodes[iu] - v));
      }
      os[iv] = acc * cell * ib;
    });
  }
  return out;
}

// --- direct-quadrature gain -------------------------------------------------------

struct GainOpts {
  Interp interp = Interp::trilinear;
  Extension extension = Extension::zero;
  // trig-exact mode engine (Interp::spectral). The engine treats the fields
  // as their periodic trig interpolants and integrates the relative velocity
  // over |q| <= r_max, so it is the natural collision operator for
  // band-limited periodic fields; for box-truncated decaying data the
  // periodic images enter beyond |q| ~ Lv and the real-space routes are the
  // faithful ones.
  double support_tol = 1e-10;  // relative coefficient cutoff
  int modal_nz = 32;           // cos nodes on the relative-velocity sphere (split panels)
  int modal_nr = 48;           // radial Gauss nodes on [0, r_max]
  double modal_rmax = 0.0;     // 0: defaults to Lv
  std::vector<long> v_subset;  // optional output restriction (diagnostic probes)
};

DistributionField gain_spectral(const DistributionField& f, const DistributionField& g,
                                const CollisionKernel& k, const SphereRule& rule,
                                const GainOpts& opt);

namespace detail {

// All velocity nodes share one lattice, so for a fixed relative-velocity
// class q = u - v and fixed deflection node the post-collision offsets and
// their interpolation weights are the same for every v. The kernel loops over
// q classes, hoists the stencil data, and sweeps the output nodes.
template <int P>
struct StencilData {
  double wb;          // rule weight x b(z)
  int fbase[3], gbase[3];  // stencil anchor offsets relative to the v index
  double fw[3][P], gw[3][P];
};

template <int P>
inline void stencil_axis_weights(double off_units, int* base, double (*w)[P], int axis) {
  const double fl = std::floor(off_units);
  base[axis] = static_cast<int>(fl) - (P / 2 - 1);
  const double t = off_units - fl;
  for (int kk = 0; kk < P; ++kk) {
    const double xk = kk - (P / 2 - 1);
    double num = 1.0, den = 1.0;
    for (int jj = 0; jj < P; ++jj) {
      if (jj == kk) continue;
      const double xj = jj - (P / 2 - 1);
      num *= t - xj;
      den *= xk - xj;
    }
    w[axis][kk] = num / den;
  }
}

// Evaluate one stencil anchored at integer node j + base; returns 0 outside
// the box for the zero extension, wraps for the periodic one.
template <int P>
inline double stencil_eval(const double* s, int n, const int j[3], const int base[3],
                           const double w[3][P], Extension ext) {
  int idx[3][P];
  for (int a = 0; a < 3; ++a) {
    const int b = j[a] + base[a];
    if (ext == Extension::periodic) {
      for (int kk = 0; kk < P; ++kk) {
        int i = (b + kk) % n;
        idx[a][kk] = i < 0 ? i + n : i;
      }
    } else {
      for (int kk = 0; kk < P; ++kk) {
        const int i = b + kk;
        idx[a][kk] = (i < 0 || i >= n) ? -1 : i;
      }
    }
  }
  double acc = 0.0;
  for (int a = 0; a < P; ++a) {
    if (idx[0][a] < 0 || w[0][a] == 0.0) continue;
    const double* pa = s + static_cast<long>(idx[0][a]) * n * n;
    double accb = 0.0;
    for (int b = 0; b < P; ++b) {
      if (idx[1][b] < 0 || w[1][b] == 0.0) continue;
      const double* pb = pa + static_cast<long>(idx[1][b]) * n;
      double accc = 0.0;
      for (int c = 0; c < P; ++c) {
        if (idx[2][c] >= 0) accc += w[2][c] * pb[idx[2][c]];
      }
      accb += w[1][b] * accc;
    }
    acc += w[0][a] * accb;
  }
  return acc;
}

template <int P>
void gain_slice(const double* fs, const double* gs, double* out, const PhaseGrid& gr,
                const CollisionKernel& k, const SphereRule& rule, const GainOpts& opt,
                const std::vector<long>& subset) {
  const int n = gr.Nv();
  const double dv = gr.dv();
  const double cell = gr.cell_v();
  const double ib = angular_mass(k, rule);
  const std::size_t nw = rule.nodes.size();

  // unpack subset indices once
  std::vector<std::array<int, 3>> js(subset.size());
  for (std::size_t i = 0; i < subset.size(); ++i) {
    const long iv = subset[i];
    js[i] = {static_cast<int>(iv / (n * n)), static_cast<int>((iv / n) % n), static_cast<int>(iv % n)};
  }

  parallel_for(subset.size() >= 64 ? 2u : 1u, [&](std::size_t half) {
    const std::size_t lo = half * subset.size() / (subset.size() >= 64 ? 2 : 1);
    const std::size_t hi = (half + 1) * subset.size() / (subset.size() >= 64 ? 2 : 1);
    std::vector<StencilData<P>> sd(nw);
    std::vector<double> acc(subset.size(), 0.0);
    for (int q0 = -(n - 1); q0 <= n - 1; ++q0)
      for (int q1 = -(n - 1); q1 <= n - 1; ++q1)
        for (int q2 = -(n - 1); q2 <= n - 1; ++q2) {
          if (q0 == 0 && q1 == 0 && q2 == 0) continue;
          const Vec3 q{q0 * dv, q1 * dv, q2 * dv};
          const double r = norm(q);
          const double speed = k.relative_speed_pow(r);
          const Vec3 e{q.x / r, q.y / r, q.z / r};
          Vec3 e1, e2;
          orthonormal_frame(e, e1, e2);
          // stencil data per deflection node
          std::size_t kept = 0;
          for (std::size_t m = 0; m < nw; ++m) {
            double z, wb;
            Vec3 t;
            if (rule.is_product()) {
              const int i = static_cast<int>(m) / rule.n_phi;
              const int j = static_cast<int>(m) % rule.n_phi;
              z = rule.cos_nodes[i];
              wb = rule.cos_weights[i] * rule.phi_weight * k.b(z);
              if (wb == 0.0) continue;
              const double hz = z * r * z;
              const double hs = z * r * rule.sin_nodes[i];
              t = Vec3{hz * e.x + hs * (rule.phi_cos[j] * e1.x + rule.phi_sin[j] * e2.x),
                       hz * e.y + hs * (rule.phi_cos[j] * e1.y + rule.phi_sin[j] * e2.y),
                       hz * e.z + hs * (rule.phi_cos[j] * e1.z + rule.phi_sin[j] * e2.z)};
            } else {
              const Vec3 c = rule.nodes[m];
              z = c.z;
              wb = rule.weights[m] * k.b(z);
              if (wb == 0.0) continue;
              const Vec3 w{c.z * e.x + c.x * e1.x + c.y * e2.x, c.z * e.y + c.x * e1.y + c.y * e2.y,
                           c.z * e.z + c.x * e1.z + c.y * e2.z};
              t = (z * r) * w;
            }
            StencilData<P>& d = sd[kept++];
            d.wb = wb;
            for (int a = 0; a < 3; ++a) {
              stencil_axis_weights<P>(t[a] / dv, d.fbase, d.fw, a);
              stencil_axis_weights<P>((q[a] - t[a]) / dv, d.gbase, d.gw, a);
            }
          }
          const double sc = speed * cell;
          for (std::size_t is = lo; is < hi; ++is) {
            const auto& j = js[is];
            // the u-sum runs over box nodes: u = v + q must be one
            if (j[0] + q0 < 0 || j[0] + q0 >= n || j[1] + q1 < 0 || j[1] + q1 >= n ||
                j[2] + q2 < 0 || j[2] + q2 >= n)
              continue;
            const int jj[3] = {j[0], j[1], j[2]};
            double node_acc = 0.0;
            for (std::size_t m = 0; m < kept; ++m) {
              const StencilData<P>& d = sd[m];
              const double fv = stencil_eval<P>(fs, n, jj, d.fbase, d.fw, opt.extension);
              if (fv == 0.0) continue;
              node_acc += d.wb * fv * stencil_eval<P>(gs, n, jj, d.gbase, d.gw, opt.extension);
            }
            acc[is] += sc * node_acc;
          }
        }
    // coincident node: u* = u, v* = v for every omega (dropped for gamma < 0)
    if (k.maxwellian()) {
      for (std::size_t is = lo; is < hi; ++is) {
        const long iv = subset[is];
        acc[is] += fs[iv] * gs[iv] * ib * cell;
      }
    }
    for (std::size_t is = lo; is < hi; ++is) out[subset[is]] = acc[is];
  });
}

}  // namespace detail

// Q+(f,g)(x,v) = int int f(x,v*) g(x,u*) B(u-v, w) du dw by quadrature over
// the u-grid and the deflection rule, rotated so its polar axis follows the
// relative velocity (b is then sampled at the rule's own cos nodes).
inline DistributionField gain_direct(const DistributionField& f, const DistributionField& g,
                                     const CollisionKernel& k, const SphereRule& rule,
                                     const GainOpts& opt = {}) {
  require_same_grid(f.grid, g.grid);
  if (opt.interp == Interp::spectral) return gain_spectral(f, g, k, rule, opt);
  const PhaseGrid& gr = *f.grid;
  DistributionField out(f.grid, f.time);
  const long nv3 = gr.nv3();
  std::vector<long> subset = opt.v_subset;
  if (subset.empty()) {
    subset.resize(nv3);
    for (long i = 0; i < nv3; ++i) subset[i] = i;
  }
  for (long ix = 0; ix < gr.nx3(); ++ix) {
    const double* fs = f.values.data() + ix * nv3;
    const double* gs = g.values.data() + ix * nv3;
    double* os = out.values.data() + ix * nv3;
    switch (opt.interp) {
      case Interp::trilinear: detail::gain_slice<2>(fs, gs, os, gr, k, rule, opt, subset); break;
      case Interp::tricubic: detail::gain_slice<4>(fs, gs, os, gr, k, rule, opt, subset); break;
      default: detail::gain_slice<6>(fs, gs, os, gr, k, rule, opt, subset); break;
    }
  }
  return out;
}

// --- trig-exact mode engine ----------------------------------------------------

// The fields are taken to be their trigonometric interpolants and the gain
// integral is evaluated without interpolation error. The relative-velocity
// integral runs over the ball |q| <= r_max in spherical coordinates: Gauss
// radial nodes, analytic azimuth (a J0 factor), and symmetric Gauss cos nodes
// aligned with each deflection node. The z-symmetric layout makes the
// discrete gain/loss mass cancellation exact at any resolution.
//
// With f_t(v) = c sum_l F_l e^{-i xi_l . v}, c = (2 pi)^{-3/2} dxi^3:
//   Q+(v) = c^2 sum_{l,m} F_l G_m beta(l, m) e^{-i xi_{l+m} . v}
//   beta(l,m) = sum_w w_w 2 pi sum_z w_z b(z) sum_r w_r r^{2+gamma}
//               e^{-i r z (xi_l . w)} J0(r s_z |xi_m - (xi_m.w) w|)
// and the loss-side kernel is Lambda(m) = beta(m, m).
namespace modal {

using ModeIdx = std::array<int, 3>;

struct Support {
  std::vector<ModeIdx> modes;
  std::vector<cplx> coeffs;
  double dropped_fraction = 0.0;
};

inline Support slice_support(const SpectralField& F, long ix, double rel_tol) {
  const PhaseGrid& g = *F.grid;
  const int n = g.Nv();
  const long nv3 = g.nv3();
  const cplx* s = F.values.data() + ix * nv3;
  double mx = 0.0;
  for (long i = 0; i < nv3; ++i) mx = std::max(mx, std::abs(s[i]));
  Support sup;
  double kept = 0.0, all = 0.0;
  for (long i = 0; i < nv3; ++i) {
    const double a = std::abs(s[i]);
    all += a * a;
    if (a > rel_tol * mx) {
      sup.modes.push_back(ModeIdx{PhaseGrid::mode_of(static_cast<int>(i / (n * n)), n),
                                  PhaseGrid::mode_of(static_cast<int>((i / n) % n), n),
                                  PhaseGrid::mode_of(static_cast<int>(i % n), n)});
      sup.coeffs.push_back(s[i]);
      kept += a * a;
    }
  }
  sup.dropped_fraction = all > 0.0 ? std::sqrt(std::max(0.0, 1.0 - kept / all)) : 0.0;
  return sup;
}

// Uniform-grid J0 lookup; both collision routes that share it inherit the
// same values, so structural identities are exact.
class BesselTable {
 public:
  BesselTable(double max_arg, double step = 1e-3) : step_(step), inv_(1.0 / step) {
    const std::size_t n = static_cast<std::size_t>(max_arg / step) + 3;
    v_.resize(n);
    for (std::size_t i = 0; i < n; ++i) v_[i] = std::cyl_bessel_j(0.0, i * step);
  }
  double operator()(double x) const {
    const double u = x * inv_;
    const std::size_t i = std::min(static_cast<std::size_t>(u), v_.size() - 2);
    const double t = u - i;
    return (1.0 - t) * v_[i] + t * v_[i + 1];
  }

 private:
  double step_, inv_;
  std::vector<double> v_;
};

class Engine {
 public:
  Engine(const PhaseGrid& g, const CollisionKernel& k, const SphereRule& rule, const GainOpts& opt)
      : grid_(&g), kernel_(&k), rule_(&rule) {
    const int nz = std::max(4, opt.modal_nz) & ~1;
    std::vector<double> xm, wm, xp, wp;
    gauss_legendre_ab(nz / 2, -1.0, 0.0, xm, wm);
    gauss_legendre_ab(nz / 2, 0.0, 1.0, xp, wp);
    zn_ = xm;
    zn_.insert(zn_.end(), xp.begin(), xp.end());
    zw_ = wm;
    zw_.insert(zw_.end(), wp.begin(), wp.end());
    sn_.resize(zn_.size());
    for (std::size_t i = 0; i < zn_.size(); ++i)
      sn_[i] = std::sqrt(std::max(0.0, 1.0 - zn_[i] * zn_[i]));
    rmax_ = opt.modal_rmax > 0.0 ? opt.modal_rmax : g.Lv();
    gauss_legendre_ab(std::max(8, opt.modal_nr), 0.0, rmax_, rn_, rw_);
    rpow_.resize(rn_.size());
    for (std::size_t i = 0; i < rn_.size(); ++i)
      rpow_[i] = rw_[i] * std::pow(rn_[i], 2.0 + k.gamma);
    const double ximax = std::sqrt(3.0) * (g.Nv() / 2) * g.dxi();
    bessel_ = std::make_shared<BesselTable>(rmax_ * ximax + 1.0);
  }

  Vec3 xi_of(const ModeIdx& m) const {
    const double d = grid_->dxi();
    return {m[0] * d, m[1] * d, m[2] * d};
  }

  // beta[a * nG + b]: l-slot from fmodes[a], m-slot from gmodes[b]
  std::vector<cplx> beta_table(const std::vector<ModeIdx>& fmodes,
                               const std::vector<ModeIdx>& gmodes) const {
    const std::size_t nF = fmodes.size(), nG = gmodes.size();
    const std::size_t nz = zn_.size(), nr = rn_.size(), nzr = nz * nr;
    std::vector<cplx> beta(nF * nG, cplx{0, 0});
    std::vector<cplx> P(nF * nzr);
    std::vector<double> J(nG * nzr);
    const BesselTable& j0 = *bessel_;
    for (std::size_t iw = 0; iw < rule_->nodes.size(); ++iw) {
      const Vec3 w = rule_->nodes[iw];
      const double ww = rule_->weights[iw] * two_pi;  // analytic azimuth of the q-sphere
      parallel_for(nF, [&](std::size_t a) {
        const double c = dot(xi_of(fmodes[a]), w);
        cplx* row = P.data() + a * nzr;
        for (std::size_t iz = 0; iz < nz; ++iz) {
          const double zb = zw_[iz] * kernel_->b(zn_[iz]);
          for (std::size_t ir = 0; ir < nr; ++ir) {
            const double ph = -rn_[ir] * zn_[iz] * c;
            row[iz * nr + ir] = zb * cplx{std::cos(ph), std::sin(ph)};
          }
        }
      });
      parallel_for(nG, [&](std::size_t b) {
        const Vec3 xm = xi_of(gmodes[b]);
        const double par = dot(xm, w);
        const double perp = std::sqrt(std::max(0.0, norm2(xm) - par * par));
        double* row = J.data() + b * nzr;
        for (std::size_t iz = 0; iz < nz; ++iz) {
          const double sp = sn_[iz] * perp;
          for (std::size_t ir = 0; ir < nr; ++ir) row[iz * nr + ir] = rpow_[ir] * j0(rn_[ir] * sp);
        }
      });
      parallel_for(nF, [&](std::size_t a) {
        const cplx* pa = P.data() + a * nzr;
        for (std::size_t b = 0; b < nG; ++b) {
          const double* jb = J.data() + b * nzr;
          double re = 0.0, im = 0.0;
          for (std::size_t t = 0; t < nzr; ++t) {
            re += pa[t].real() * jb[t];
            im += pa[t].imag() * jb[t];
          }
          beta[a * nG + b] += ww * cplx{re, im};
        }
      });
    }
    return beta;
  }

  double rmax() const { return rmax_; }

 private:
  const PhaseGrid* grid_;
  const CollisionKernel* kernel_;
  const SphereRule* rule_;
  std::vector<double> zn_, zw_, sn_, rn_, rw_, rpow_;
  double rmax_ = 0.0;
  std::shared_ptr<BesselTable> bessel_;
};

// Synthesize sum_n T[n] e^{-i xi_n . v} on the v-grid for modes |n| within
// the grid's range; evaluated exactly via the inverse transform convention.
inline void synthesize(const PhaseGrid& g, const std::vector<ModeIdx>& nmodes,
                       const std::vector<cplx>& T, double* out) {
  const int n = g.Nv();
  const long nv3 = g.nv3();
  SpectralField tmp(std::make_shared<const PhaseGrid>(g));
  const double unscale = std::pow(two_pi, 1.5) / g.cell_xi();
  bool in_range = true;
  for (std::size_t i = 0; i < nmodes.size(); ++i) {
    for (int a = 0; a < 3; ++a)
      if (nmodes[i][a] < -n / 2 || nmodes[i][a] >= n / 2) in_range = false;
  }
  if (in_range) {
    for (std::size_t i = 0; i < nmodes.size(); ++i) {
      const long ia = (nmodes[i][0] + n) % n, ib = (nmodes[i][1] + n) % n, ic = (nmodes[i][2] + n) % n;
      tmp.values[(ia * n + ib) * n + ic] += T[i] * unscale;
    }
    DistributionField r = inverse_fourier_v(tmp);
    for (long i = 0; i < nv3; ++i) out[i] = r.values[i];
    return;
  }
  // out-of-range combination modes: direct evaluation
  parallel_for(static_cast<std::size_t>(nv3), [&](std::size_t iv) {
    const Vec3 v = g.v_node(static_cast<long>(iv));
    cplx acc{0, 0};
    for (std::size_t i = 0; i < nmodes.size(); ++i) {
      const Vec3 xi = {nmodes[i][0] * g.dxi(), nmodes[i][1] * g.dxi(), nmodes[i][2] * g.dxi()};
      const double ph = -dot(xi, v);
      acc += T[i] * cplx{std::cos(ph), std::sin(ph)};
    }
    out[iv] = acc.real();
  });
}

}  // namespace modal

inline DistributionField gain_spectral(const DistributionField& f, const DistributionField& g,
                                       const CollisionKernel& k, const SphereRule& rule,
                                       const GainOpts& opt) {
  require_same_grid(f.grid, g.grid);
  const PhaseGrid& gr = *f.grid;
  DistributionField out(f.grid, f.time);
  const SpectralField F = fourier_v(f);
  const SpectralField G = fourier_v(g);
  modal::Engine eng(gr, k, rule, opt);
  const double c = std::pow(two_pi, -1.5) * gr.cell_xi();
  for (long ix = 0; ix < gr.nx3(); ++ix) {
    modal::Support sf = modal::slice_support(F, ix, opt.support_tol);
    modal::Support sg = modal::slice_support(G, ix, opt.support_tol);
    const std::vector<cplx> beta = eng.beta_table(sf.modes, sg.modes);
    // accumulate T(n) over combination modes n = l + m
    std::vector<modal::ModeIdx> nmodes;
    std::vector<cplx> T;
    {
      // dense map over the combination lattice
      int lo[3] = {0, 0, 0}, hi[3] = {0, 0, 0};
      for (const auto& m : sf.modes)
        for (int a = 0; a < 3; ++a) {
          lo[a] = std::min(lo[a], m[a]);
          hi[a] = std::max(hi[a], m[a]);
        }
      int lo2[3] = {0, 0, 0}, hi2[3] = {0, 0, 0};
      for (const auto& m : sg.modes)
        for (int a = 0; a < 3; ++a) {
          lo2[a] = std::min(lo2[a], m[a]);
          hi2[a] = std::max(hi2[a], m[a]);
        }
      int nlo[3], nhi[3], ext[3];
      for (int a = 0; a < 3; ++a) {
        nlo[a] = lo[a] + lo2[a];
        nhi[a] = hi[a] + hi2[a];
        ext[a] = nhi[a] - nlo[a] + 1;
      }
      std::vector<cplx> dense(static_cast<std::size_t>(ext[0]) * ext[1] * ext[2], cplx{0, 0});
      for (std::size_t a = 0; a < sf.modes.size(); ++a)
        for (std::size_t b = 0; b < sg.modes.size(); ++b) {
          const cplx val = sf.coeffs[a] * sg.coeffs[b] * beta[a * sg.modes.size() + b];
          const int n0 = sf.modes[a][0] + sg.modes[b][0] - nlo[0];
          const int n1 = sf.modes[a][1] + sg.modes[b][1] - nlo[1];
          const int n2 = sf.modes[a][2] + sg.modes[b][2] - nlo[2];
          dense[(static_cast<std::size_t>(n0) * ext[1] + n1) * ext[2] + n2] += val;
        }
      for (int n0 = 0; n0 < ext[0]; ++n0)
        for (int n1 = 0; n1 < ext[1]; ++n1)
          for (int n2 = 0; n2 < ext[2]; ++n2) {
            const cplx val = dense[(static_cast<std::size_t>(n0) * ext[1] + n1) * ext[2] + n2];
            if (val != cplx{0, 0}) {
              nmodes.push_back(modal::ModeIdx{n0 + nlo[0], n1 + nlo[1], n2 + nlo[2]});
              T.push_back(val * c * c);
            }
          }
    }
    modal::synthesize(gr, nmodes, T, out.values.data() + ix * gr.nv3());
  }
  return out;
}

// Loss rate with the mode engine's quadrature (Lambda(m) = beta(m, m)), used
// when gain and loss must share a discretization exactly.
inline DistributionField loss_spectral(const DistributionField& g, const CollisionKernel& k,
                                       const SphereRule& rule, const GainOpts& opt = {}) {
  const PhaseGrid& gr = *g.grid;
  DistributionField out(g.grid, g.time);
  const SpectralField G = fourier_v(g);
  modal::Engine eng(gr, k, rule, opt);
  const double c = std::pow(two_pi, -1.5) * gr.cell_xi();
  for (long ix = 0; ix < gr.nx3(); ++ix) {
    modal::Support sg = modal::slice_support(G, ix, opt.support_tol);
    std::vector<cplx> lam(sg.modes.size());
    for (std::size_t i = 0; i < sg.modes.size(); ++i) {
      const std::vector<modal::ModeIdx> one{sg.modes[i]};
      lam[i] = eng.beta_table(one, one)[0];
    }
    std::vector<cplx> T(sg.modes.size());
    for (std::size_t i = 0; i < sg.modes.size(); ++i) T[i] = c * sg.coeffs[i] * lam[i];
    modal::synthesize(gr, sg.modes, T, out.values.data() + ix * gr.nv3());
  }
  return out;
}

// --- full collision operator -----------------------------------------------------

// Q(f,f) = Q+(f,f) - f A[f]; both pieces share the evaluation route.
inline DistributionField collision_full(const DistributionField& f, const CollisionKernel& k,
                                        const SphereRule& rule, const GainOpts& opt = {}) {
  DistributionField gain = gain_direct(f, f, k, rule, opt);
  DistributionField loss =
      opt.interp == Interp::spectral ? loss_spectral(f, k, rule, opt) : loss_rate(f, k, rule);
  DistributionField out = gain;
  for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] -= f.values[i] * loss.values[i];
  return out;
}

// --- Bobylev-form spectral gain ------------------------------------------------

enum class SpectralEval { tricubic, nudft };

struct BobylevOpts {
  SpectralEval eval = SpectralEval::nudft;
  bool riesz_cell_weights = true;  // integrate |eta|^{-3-gamma} over lattice cells
  double eta_window_tol = 1e-9;    // drop eta nodes where both factors are below this (relative)
};

namespace detail {

// Exact point evaluation of the semidiscrete transform
// ftilde(p) = (2 pi)^{-3/2} dv^3 sum_j f(v_j) e^{+i p . v_j} via separable
// axis phases; cost O(Nv^3) per point.
class NudftEval {
 public:
  NudftEval(const double* slice, const PhaseGrid& g)
      : s_(slice), n_(g.Nv()), scale_(std::pow(two_pi, -1.5) * g.cell_v()) {
    vx_.resize(n_);
    for (int i = 0; i < n_; ++i) vx_[i] = -g.Lv() + i * g.dv();
  }

  cplx operator()(Vec3 p) const {
    thread_local std::vector<cplx> e1, e2, e3;
    e1.resize(n_);
    e2.resize(n_);
    e3.resize(n_);
    for (int i = 0; i < n_; ++i) {
      e1[i] = cplx{std::cos(p.x * vx_[i]), std::sin(p.x * vx_[i])};
      e2[i] = cplx{std::cos(p.y * vx_[i]), std::sin(p.y * vx_[i])};
      e3[i] = cplx{std::cos(p.z * vx_[i]), std::sin(p.z * vx_[i])};
    }
    cplx acc{0, 0};
    for (int a = 0; a < n_; ++a) {
      cplx accb{0, 0};
      const double* pa = s_ + static_cast<long>(a) * n_ * n_;
      for (int b = 0; b < n_; ++b) {
        const double* pc = pa + static_cast<long>(b) * n_;
        double re = 0.0, im = 0.0;
        for (int c = 0; c < n_; ++c) {
          re += pc[c] * e3[c].real();
          im += pc[c] * e3[c].imag();
        }
        accb += e2[b] * cplx{re, im};
      }
      acc += e1[a] * accb;
    }
    return scale_ * acc;
  }

 private:
  const double* s_;
  int n_;
  double scale_;
  std::vector<double> vx_;
};

// Tricubic interpolation of a complex lattice field (zero beyond the grid).
class XiCubicEval {
 public:
  XiCubicEval(const cplx* slice, const PhaseGrid& g) : s_(slice), n_(g.Nv()), inv_(1.0 / g.dxi()) {}

  cplx operator()(Vec3 p) const {
    double w[3][4];
    int i0[3];
    for (int a = 0; a < 3; ++a) {
      const double u = p[a] * inv_ + n_ / 2;  // mode index offset into [0, n)
      if (u < -2.0 || u > n_ + 1.0) return cplx{0, 0};
      const double fl = std::floor(u);
      i0[a] = static_cast<int>(fl) - 1;
      const double t = u - fl;
      w[a][0] = -t * (t - 1.0) * (t - 2.0) / 6.0;
      w[a][1] = (t * t - 1.0) * (t - 2.0) * 0.5;
      w[a][2] = -t * (t + 1.0) * (t - 2.0) * 0.5;
      w[a][3] = t * (t * t - 1.0) / 6.0;
    }
    cplx acc{0, 0};
    for (int da = 0; da < 4; ++da) {
      if (w[0][da] == 0.0) continue;
      for (int db = 0; db < 4; ++db) {
        const double wab = w[0][da] * w[1][db];
        if (wab == 0.0) continue;
        for (int dc = 0; dc < 4; ++dc) acc += wab * w[2][dc] * fetch(i0[0] + da, i0[1] + db, i0[2] + dc);
      }
    }
    return acc;
  }

 private:
  cplx fetch(int a, int b, int c) const {
    if (a < 0 || a >= n_ || b < 0 || b >= n_ || c < 0 || c >= n_) return cplx{0, 0};
    // storage order is FFT-natural; convert centered index -> storage
    const int sa = (a - n_ / 2 + n_) % n_, sb = (b - n_ / 2 + n_) % n_, sc = (c - n_ / 2 + n_) % n_;
    return s_[(static_cast<long>(sa) * n_ + sb) * n_ + sc];
  }

  const cplx* s_;
  int n_;
  double inv_;
};

inline std::vector<double> riesz_weights(const PhaseGrid& g, double gamma, bool cell_integrated) {
  const long nv3 = g.nv3();
  std::vector<double> w(nv3, 0.0);
  const double d = g.dxi();
  const double cell = g.cell_xi();
  std::vector<double> gx, gw;
  gauss_legendre_ab(5, -0.5 * d, 0.5 * d, gx, gw);
  for (long i = 0; i < nv3; ++i) {
    const Vec3 eta = g.xi_node(i);
    const double r = norm(eta);
    if (!cell_integrated) {
      w[i] = r == 0.0 ? 0.0 : std::pow(r, -3.0 - gamma) * cell;
      continue;
    }
    if (r > 3.0 * d) {
      w[i] = std::pow(r, -3.0 - gamma) * cell;  // far field: midpoint is plenty
      continue;
    }
    double acc = 0.0;  // near the singularity: integrate the kernel over the cell
    for (int a = 0; a < 5; ++a)
      for (int b = 0; b < 5; ++b)
        for (int c = 0; c < 5; ++c) {
          const double x = eta.x + gx[a], y = eta.y + gx[b], z = eta.z + gx[c];
          const double rr = std::sqrt(x * x + y * y + z * z);
          if (rr > 0.0) acc += gw[a] * gw[b] * gw[c] * std::pow(rr, -3.0 - gamma);
        }
    w[i] = acc;
  }
  return w;
}

}  // namespace detail

// Q~+(ftilde, gtilde) on the xi side. gamma = 0 uses the reduced point form;
// gamma < 0 runs the eta convolution against the Riesz kernel. Raises for
// gamma > 0 (unsupported kernels).
inline SpectralField gain_bobylev(const SpectralField& F, const SpectralField& G,
                                  const CollisionKernel& k, const SphereRule& rule,
                                  const BobylevOpts& opt = {}) {
  require_same_grid(F.grid, G.grid);
  if (k.gamma > 0.0) throw std::invalid_argument("gain_bobylev: hard potentials unsupported");
  const PhaseGrid& g = *F.grid;
  SpectralField out(F.grid, F.time);
  const long nv3 = g.nv3();

  // v-side slices for exact point evaluation
  DistributionField fv, gv;
  if (opt.eval == SpectralEval::nudft) {
    fv = inverse_fourier_v(F);
    gv = inverse_fourier_v(G);
  }

  std::vector<double> rw;
  std::vector<Vec3> eta_nodes;
  std::vector<long> eta_idx;
  if (!k.maxwellian()) {
    std::vector<double> all = detail::riesz_weights(g, k.gamma, opt.riesz_cell_weights);
    for (long i = 0; i < nv3; ++i) {
      if (all[i] != 0.0) {
        rw.push_back(all[i]);
        eta_nodes.push_back(g.xi_node(i));
        eta_idx.push_back(i);
      }
    }
  }
  // gamma = 0: reduced point form carries (2 pi)^{3/2}; gamma < 0: the Riesz
  // normalization alone (the delta-limit of K_gamma |eta|^{-3-gamma} deta
  // reproduces the (2 pi)^{3/2} factor)
  const double front = k.maxwellian() ? std::pow(two_pi, 1.5) : riesz_constant(k.gamma);

  for (long ix = 0; ix < g.nx3(); ++ix) {
    const cplx* Fs = F.values.data() + ix * nv3;
    const cplx* Gs = G.values.data() + ix * nv3;
    cplx* Os = out.values.data() + ix * nv3;
    detail::NudftEval fn(opt.eval == SpectralEval::nudft ? fv.values.data() + ix * nv3 : nullptr, g);
    detail::NudftEval gn(opt.eval == SpectralEval::nudft ? gv.values.data() + ix * nv3 : nullptr, g);
    detail::XiCubicEval fc(Fs, g);
    detail::XiCubicEval gc(Gs, g);
    auto feval = [&](Vec3 p) -> cplx { return opt.eval == SpectralEval::nudft ? fn(p) : fc(p); };
    auto geval = [&](Vec3 p) -> cplx { return opt.eval == SpectralEval::nudft ? gn(p) : gc(p); };

    // field magnitude bound for the eta window
    double fmax = 0.0, gmax = 0.0;
    for (long i = 0; i < nv3; ++i) {
      fmax = std::max(fmax, std::abs(Fs[i]));
      gmax = std::max(gmax, std::abs(Gs[i]));
    }
    const double drop = opt.eta_window_tol * fmax * gmax;

    parallel_for(static_cast<std::size_t>(nv3), [&](std::size_t ixi) {
      const Vec3 xi = g.xi_node(static_cast<long>(ixi));
      const double xin = norm(xi);
      Vec3 e = xin > 0.0 ? (1.0 / xin) * xi : Vec3{0, 0, 1};
      Vec3 e1, e2;
      orthonormal_frame(e, e1, e2);
      cplx acc{0, 0};
      if (rule.is_product()) {
        for (int i = 0; i < rule.n_theta; ++i) {
          const double bs = k.b_sigma(rule.cos_nodes[i]) * rule.cos_weights[i];
          if (bs == 0.0) continue;
          const double z = rule.cos_nodes[i], s = rule.sin_nodes[i];
          for (int j = 0; j < rule.n_phi; ++j) {
            const Vec3 w{z * e.x + s * (rule.phi_cos[j] * e1.x + rule.phi_sin[j] * e2.x),
                         z * e.y + s * (rule.phi_cos[j] * e1.y + rule.phi_sin[j] * e2.y),
                         z * e.z + s * (rule.phi_cos[j] * e1.z + rule.phi_sin[j] * e2.z)};
            const Vec3 xp = 0.5 * (xi + xin * w);
            const Vec3 xm = 0.5 * (xi - xin * w);
            cplx inner{0, 0};
            if (k.maxwellian()) {
              inner = feval(xp) * geval(xm);
            } else {
              for (std::size_t t = 0; t < eta_nodes.size(); ++t) {
                const cplx a = feval(xp + eta_nodes[t]);
                if (std::abs(a) * gmax < drop) continue;
                const cplx b = geval(xm - eta_nodes[t]);
                inner += rw[t] * a * b;
              }
            }
            acc += bs * rule.phi_weight * inner;
          }
        }
      } else {
        for (std::size_t m = 0; m < rule.nodes.size(); ++m) {
          const Vec3 w = rule.nodes[m];
          const double bs = k.b_sigma(dot(e, w));
          const Vec3 xp = 0.5 * (xi + xin * w);
          const Vec3 xm = 0.5 * (xi - xin * w);
          cplx inner{0, 0};
          if (k.maxwellian()) {
            inner = feval(xp) * geval(xm);
          } else {
            for (std::size_t t = 0; t < eta_nodes.size(); ++t)
              inner += rw[t] * feval(xp + eta_nodes[t]) * geval(xm - eta_nodes[t]);
          }
          acc += rule.weights[m] * bs * inner;
        }
      }
      Os[ixi] = front * acc;
    });
  }
  return out;
}

// Ratio of F(gain_direct) to gain_bobylev on a Maxwellian pair; pins the
// "unimportant constant" of the Bobylev display numerically (should sit near
// 1 with the analytic prefactors above). Recorded in run manifests.
inline double bobylev_fitted_constant(const GridPtr& grid, const CollisionKernel& k,
                                      const SphereRule& rule) {
  DistributionField m(grid);
  const PhaseGrid& g = *grid;
  for (long ix = 0; ix < g.nx3(); ++ix)
    for (long iv = 0; iv < g.nv3(); ++iv) m.at(ix, iv) = std::exp(-norm2(g.v_node(iv)));
  GainOpts opt;
  opt.interp = Interp::tricubic;
  BobylevOpts bopt;
  bopt.eval = k.maxwellian() ? SpectralEval::nudft : SpectralEval::tricubic;
  const SpectralField lhs = fourier_v(gain_direct(m, m, k, rule, opt));
  const SpectralField rhs = gain_bobylev(fourier_v(m), fourier_v(m), k, rule, bopt);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < lhs.values.size(); ++i) {
    num += std::real(lhs.values[i] * std::conj(rhs.values[i]));
    den += std::norm(rhs.values[i]);
  }
  return den > 0.0 ? num / den : 0.0;
}

}  // namespace boltzlab
