// Phase-space discretization: the (x, v) torus product, velocity Fourier
// transforms, weighted norms, and the scaling family. The Fourier convention
// is unitary-symmetric with grid-spacing factors, so continuum formulas hold
// on the grid without stray 2*pi factors:
//
//   ftilde(x, xi) = (2 pi)^{-3/2} dv^3 sum_j f(x, v_j) e^{+i xi . v_j}
//   f(x, v)       = (2 pi)^{-3/2} dxi^3 sum_m ftilde(x, xi_m) e^{-i v . xi_m}
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <vector>

#include "boltzlab/common.hpp"
#include "boltzlab/fft.hpp"

namespace boltzlab {

class PhaseGrid {
 public:
  PhaseGrid(double Lx, int Nx, double Lv, int Nv) : Lx_(Lx), Nx_(Nx), Lv_(Lv), Nv_(Nv) {
    if (Lx <= 0.0 || Lv <= 0.0) throw std::invalid_argument("PhaseGrid: box half-extents must be positive");
    // Nx == 1 is the homogeneous-in-x mode used by the heaviest collision
    // checks; otherwise both axes are FFT-sized.
    if (Nx != 1 && (!is_pow2(Nx) || Nx < 4)) throw std::invalid_argument("PhaseGrid: Nx must be 1 or a power of two >= 4");
    if (!is_pow2(Nv) || Nv < 4) throw std::invalid_argument("PhaseGrid: Nv must be a power of two >= 4");
  }

  double Lx() const { return Lx_; }
  double Lv() const { return Lv_; }
  int Nx() const { return Nx_; }
  int Nv() const { return Nv_; }
  bool homogeneous() const { return Nx_ == 1; }

  double dx() const { return 2.0 * Lx_ / Nx_; }
  double dv() const { return 2.0 * Lv_ / Nv_; }
  double dk() const { return pi / Lx_; }    // spacing of x-wavenumbers
  double dxi() const { return pi / Lv_; }   // spacing of xi-nodes

  long nx3() const { return static_cast<long>(Nx_) * Nx_ * Nx_; }
  long nv3() const { return static_cast<long>(Nv_) * Nv_ * Nv_; }
  long size() const { return nx3() * nv3(); }

  double cell_x() const { return dx() * dx() * dx(); }
  double cell_v() const { return dv() * dv() * dv(); }
  double cell_xi() const { return dxi() * dxi() * dxi(); }

  static int mode_of(int j, int n) { return j < n / 2 ? j : j - n; }

  Vec3 x_node(long ix) const {
    const int n = Nx_;
    const int a = static_cast<int>(ix / (n * n)), b = static_cast<int>((ix / n) % n), c = static_cast<int>(ix % n);
    return {-Lx_ + a * dx(), -Lx_ + b * dx(), -Lx_ + c * dx()};
  }
  Vec3 v_node(long iv) const {
    const int n = Nv_;
    const int a = static_cast<int>(iv / (n * n)), b = static_cast<int>((iv / n) % n), c = static_cast<int>(iv % n);
    return {-Lv_ + a * dv(), -Lv_ + b * dv(), -Lv_ + c * dv()};
  }
  // Wavenumber of x-storage index ix (all three axes).
  Vec3 k_mode(long ix) const {
    const int n = Nx_;
    const int a = static_cast<int>(ix / (n * n)), b = static_cast<int>((ix / n) % n), c = static_cast<int>(ix % n);
    return {mode_of(a, n) * dk(), mode_of(b, n) * dk(), mode_of(c, n) * dk()};
  }
  Vec3 xi_node(long ixi) const {
    const int n = Nv_;
    const int a = static_cast<int>(ixi / (n * n)), b = static_cast<int>((ixi / n) % n), c = static_cast<int>(ixi % n);
    return {mode_of(a, n) * dxi(), mode_of(b, n) * dxi(), mode_of(c, n) * dxi()};
  }

  bool same_as(const PhaseGrid& o) const {
    return Lx_ == o.Lx_ && Nx_ == o.Nx_ && Lv_ == o.Lv_ && Nv_ == o.Nv_;
  }

 private:
  double Lx_;
  int Nx_;
  double Lv_;
  int Nv_;
};

using GridPtr = std::shared_ptr<const PhaseGrid>;

inline GridPtr make_grid(double Lx, int Nx, double Lv, int Nv) {
  return std::make_shared<const PhaseGrid>(Lx, Nx, Lv, Nv);
}

struct DistributionField {
  GridPtr grid;
  std::vector<double> values;  // indexed ix * nv3 + iv
  double time = 0.0;

  DistributionField() = default;
  explicit DistributionField(GridPtr g, double t = 0.0)
      : grid(std::move(g)), values(grid->size(), 0.0), time(t) {}

  double& at(long ix, long iv) { return values[ix * grid->nv3() + iv]; }
  double at(long ix, long iv) const { return values[ix * grid->nv3() + iv]; }
};

struct SpectralField {
  GridPtr grid;
  std::vector<cplx> values;  // indexed ix * nv3 + ixi
  double time = 0.0;

  SpectralField() = default;
  explicit SpectralField(GridPtr g, double t = 0.0)
      : grid(std::move(g)), values(grid->size(), cplx{0.0, 0.0}), time(t) {}

  cplx& at(long ix, long ixi) { return values[ix * grid->nv3() + ixi]; }
  cplx at(long ix, long ixi) const { return values[ix * grid->nv3() + ixi]; }
};

inline void require_same_grid(const GridPtr& a, const GridPtr& b) {
  if (!a || !b || !a->same_as(*b)) throw std::invalid_argument("fields live on different grids");
}

// --- elementwise helpers -------------------------------------------------

inline double max_abs(const DistributionField& f) {
  double m = 0.0;
  for (double v : f.values) m = std::max(m, std::abs(v));
  return m;
}

inline double min_value(const DistributionField& f) {
  double m = f.values.empty() ? 0.0 : f.values[0];
  for (double v : f.values) m = std::min(m, v);
  return m;
}

inline bool all_finite(const DistributionField& f) {
  for (double v : f.values) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

// Non-negativity certificate: min(values) >= -eps_nn with
// eps_nn = 1e-12 * max|values| unless overridden.
inline double nonneg_eps(const DistributionField& f, double scale = 1e-12) {
  return scale * max_abs(f);
}
inline bool certified_nonneg(const DistributionField& f, double eps_scale = 1e-12) {
  return min_value(f) >= -nonneg_eps(f, eps_scale);
}

// Velocity-truncation warning: the field should decay below 1e-10 of its max
// inside the outer 10% shell of the v-box.
inline bool truncation_warning(const DistributionField& f) {
  const PhaseGrid& g = *f.grid;
  const double cut = 0.9 * g.Lv();
  const double tol = 1e-10 * max_abs(f);
  for (long iv = 0; iv < g.nv3(); ++iv) {
    const Vec3 v = g.v_node(iv);
    if (std::abs(v.x) < cut && std::abs(v.y) < cut && std::abs(v.z) < cut) continue;
    for (long ix = 0; ix < g.nx3(); ++ix) {
      if (std::abs(f.at(ix, iv)) > tol) return true;
    }
  }
  return false;
}

inline double mass(const DistributionField& f) {
  double s = 0.0;
  for (double v : f.values) s += v;
  return s * f.grid->cell_x() * f.grid->cell_v();
}

inline double l1_norm(const DistributionField& f) {
  double s = 0.0;
  for (double v : f.values) s += std::abs(v);
  return s * f.grid->cell_x() * f.grid->cell_v();
}

inline double l2_norm(const DistributionField& f) {
  double s = 0.0;
  for (double v : f.values) s += v * v;
  return std::sqrt(s * f.grid->cell_x() * f.grid->cell_v());
}

inline double l2_norm(const SpectralField& f) {
  double s = 0.0;
  for (const cplx& v : f.values) s += std::norm(v);
  return std::sqrt(s * f.grid->cell_x() * f.grid->cell_xi());
}

inline double max_abs(const SpectralField& f) {
  double m = 0.0;
  for (const cplx& v : f.values) m = std::max(m, std::abs(v));
  return m;
}

// Plain L^p norm over the (x, xi) nodes, p = inf allowed.
inline double lp_norm(const SpectralField& f, double p) {
  if (std::isinf(p)) return max_abs(f);
  double s = 0.0;
  for (const cplx& v : f.values) s += std::pow(std::abs(v), p);
  return std::pow(s * f.grid->cell_x() * f.grid->cell_xi(), 1.0 / p);
}

inline DistributionField operator+(const DistributionField& a, const DistributionField& b) {
  require_same_grid(a.grid, b.grid);
  DistributionField r = a;
  for (std::size_t i = 0; i < r.values.size(); ++i) r.values[i] += b.values[i];
  return r;
}
inline DistributionField operator-(const DistributionField& a, const DistributionField& b) {
  require_same_grid(a.grid, b.grid);
  DistributionField r = a;
  for (std::size_t i = 0; i < r.values.size(); ++i) r.values[i] -= b.values[i];
  return r;
}
inline DistributionField operator*(double s, const DistributionField& a) {
  DistributionField r = a;
  for (double& v : r.values) v *= s;
  return r;
}

// --- velocity Fourier transform ------------------------------------------

namespace detail {

// (-1)^{m1+m2+m3} parity of a packed N^3 storage index.
inline int parity_sign(long idx, int n) {
  const int a = static_cast<int>(idx / (n * n)), b = static_cast<int>((idx / n) % n), c = static_cast<int>(idx % n);
  return ((a + b + c) & 1) ? -1 : 1;
}

}  // namespace detail

inline SpectralField fourier_v(const DistributionField& f) {
  const PhaseGrid& g = *f.grid;
  SpectralField out(f.grid, f.time);
  const int n = g.Nv();
  const long nv3 = g.nv3();
  const double scale = std::pow(two_pi, -1.5) * g.cell_v();
  parallel_for(static_cast<std::size_t>(g.nx3()), [&](std::size_t ix) {
    std::vector<cplx> block(nv3);
    const double* src = f.values.data() + ix * nv3;
    for (long i = 0; i < nv3; ++i) block[i] = src[i];
    fft3(block.data(), n, +1);
    cplx* dst = out.values.data() + ix * nv3;
    for (long i = 0; i < nv3; ++i) dst[i] = block[i] * (scale * detail::parity_sign(i, n));
  });
  return out;
}

inline DistributionField inverse_fourier_v(const SpectralField& ft) {
  const PhaseGrid& g = *ft.grid;
  DistributionField out(ft.grid, ft.time);
  const int n = g.Nv();
  const long nv3 = g.nv3();
  const double scale = std::pow(two_pi, -1.5) * g.cell_xi();
  parallel_for(static_cast<std::size_t>(g.nx3()), [&](std::size_t ix) {
    std::vector<cplx> block(nv3);
    const cplx* src = ft.values.data() + ix * nv3;
    for (long i = 0; i < nv3; ++i) block[i] = src[i] * static_cast<double>(detail::parity_sign(i, n));
    fft3(block.data(), n, -1);
    double* dst = out.values.data() + ix * nv3;
    for (long i = 0; i < nv3; ++i) dst[i] = scale * block[i].real();
  });
  return out;
}

// Largest deviation from conjugate symmetry ftilde(-xi) == conj(ftilde(xi)),
// nonzero exactly when the v-side field has an imaginary part.
inline double conjugate_symmetry_defect(const SpectralField& ft) {
  const PhaseGrid& g = *ft.grid;
  const int n = g.Nv();
  double worst = 0.0;
  for (long ix = 0; ix < g.nx3(); ++ix) {
    for (long i = 0; i < g.nv3(); ++i) {
      const int a = static_cast<int>(i / (n * n)), b = static_cast<int>((i / n) % n), c = static_cast<int>(i % n);
      const long j = static_cast<long>((n - a) % n) * n * n + static_cast<long>((n - b) % n) * n + (n - c) % n;
      worst = std::max(worst, std::abs(ft.at(ix, i) - std::conj(ft.at(ix, j))));
    }
  }
  return worst;
}

// --- x-side spectral helpers ----------------------------------------------

namespace detail {

template <class Fn>
void for_each_x_block(const PhaseGrid& g, std::vector<double>& vals, Fn&& fn) {
  if (g.homogeneous()) return;  // single x node: all x-multipliers act as identity on mode 0
  const int n = g.Nx();
  const long nx3 = g.nx3(), nv3 = g.nv3();
  parallel_for(static_cast<std::size_t>(nv3), [&](std::size_t iv) {
    std::vector<cplx> block(nx3);
    for (long ix = 0; ix < nx3; ++ix) block[ix] = vals[ix * nv3 + iv];
    fft3(block.data(), n, -1);
    fn(block.data(), static_cast<long>(iv));
    fft3(block.data(), n, +1);
    const double inv = 1.0 / static_cast<double>(nx3);
    for (long ix = 0; ix < nx3; ++ix) vals[ix * nv3 + iv] = block[ix].real() * inv;
  });
}

}  // namespace detail

enum class WeightKind { japanese_bracket, homogeneous };

// <del_x>^s (or |del_x|^s for the homogeneous surrogate) as the exact Fourier
// multiplier on the discrete torus. Acts in place.
inline void apply_x_sobolev(DistributionField& f, double s,
                            WeightKind kind = WeightKind::japanese_bracket) {
  if (s == 0.0) return;
  const PhaseGrid& g = *f.grid;
  detail::for_each_x_block(g, f.values, [&](cplx* block, long) {
    for (long ix = 0; ix < g.nx3(); ++ix) {
      const double k2 = norm2(g.k_mode(ix));
      const double w = kind == WeightKind::japanese_bracket
                           ? std::pow(1.0 + k2, 0.5 * s)
                           : (k2 == 0.0 ? 0.0 : std::pow(k2, 0.5 * s));
      block[ix] *= w;
    }
  });
}

inline void apply_v_weight(DistributionField& f, double r,
                           WeightKind kind = WeightKind::japanese_bracket) {
  if (r == 0.0) return;
  const PhaseGrid& g = *f.grid;
  const long nv3 = g.nv3();
  std::vector<double> w(nv3);
  for (long iv = 0; iv < nv3; ++iv) {
    const double v2 = norm2(g.v_node(iv));
    w[iv] = kind == WeightKind::japanese_bracket ? std::pow(1.0 + v2, 0.5 * r)
                                                 : (v2 == 0.0 ? 0.0 : std::pow(v2, 0.5 * r));
  }
  for (long ix = 0; ix < g.nx3(); ++ix) {
    double* row = f.values.data() + ix * nv3;
    for (long iv = 0; iv < nv3; ++iv) row[iv] *= w[iv];
  }
}

enum class Mix {
  L2,        // L^2_{x,v}
  Lv2Lxp,    // outer L^2 in v of inner L^p_x
  LxpLvq,    // outer L^p in x of inner L^q_v
  SupVLxp,   // sup over v of L^p_x
};

struct NormSpec {
  double s = 0.0;  // x-regularity (Fourier multiplier exponent)
  double r = 0.0;  // velocity weight exponent
  Mix mix = Mix::L2;
  double p = 2.0;  // x exponent where applicable (inf allowed)
  double q = 2.0;  // v exponent where applicable (inf allowed)
  WeightKind kind = WeightKind::japanese_bracket;
};

namespace detail {

inline double grid_lp(const double* data, long n, double cell, double p, long stride = 1) {
  if (std::isinf(p)) {
    double m = 0.0;
    for (long i = 0; i < n; ++i) m = std::max(m, std::abs(data[i * stride]));
    return m;
  }
  double s = 0.0;
  for (long i = 0; i < n; ++i) s += std::pow(std::abs(data[i * stride]), p);
  return std::pow(s * cell, 1.0 / p);
}

}  // namespace detail

inline double weighted_norm(const DistributionField& f, const NormSpec& ns) {
  if (ns.s < -2.0 || ns.r < -2.0) throw std::invalid_argument("weighted_norm: s, r must be >= -2");
  const PhaseGrid& g = *f.grid;
  DistributionField w = f;
  apply_x_sobolev(w, ns.s, ns.kind);
  apply_v_weight(w, ns.r, ns.kind);
  const long nx3 = g.nx3(), nv3 = g.nv3();
  switch (ns.mix) {
    case Mix::L2: {
      double s = 0.0;
      for (double v : w.values) s += v * v;
      return std::sqrt(s * g.cell_x() * g.cell_v());
    }
    case Mix::Lv2Lxp: {
      double s = 0.0;
      for (long iv = 0; iv < nv3; ++iv) {
        const double nx = detail::grid_lp(w.values.data() + iv, nx3, g.cell_x(), ns.p, nv3);
        s += nx * nx;
      }
      return std::sqrt(s * g.cell_v());
    }
    case Mix::LxpLvq: {
      std::vector<double> per_x(nx3);
      for (long ix = 0; ix < nx3; ++ix)
        per_x[ix] = detail::grid_lp(w.values.data() + ix * nv3, nv3, g.cell_v(), ns.q);
      return detail::grid_lp(per_x.data(), nx3, g.cell_x(), ns.p);
    }
    case Mix::SupVLxp: {
      double m = 0.0;
      for (long iv = 0; iv < nv3; ++iv)
        m = std::max(m, detail::grid_lp(w.values.data() + iv, nx3, g.cell_x(), ns.p, nv3));
      return m;
    }
  }
  throw std::invalid_argument("weighted_norm: unsupported mix descriptor");
}

// Convenience: the norms the solvers and diagnostics quote all reduce to this.
inline double weighted_norm(const DistributionField& f, double s, double r, Mix mix = Mix::L2,
                            double p = 2.0, double q = 2.0) {
  return weighted_norm(f, NormSpec{s, r, mix, p, q, WeightKind::japanese_bracket});
}

// Spectral-side weighted norm. Velocity weights live on the v side, so any
// r != 0 routes through the inverse transform; pure x-Sobolev mixed norms are
// computed natively on the (x, xi) nodes.
inline double weighted_norm(const SpectralField& ft, const NormSpec& ns) {
  if (ns.r != 0.0) return weighted_norm(inverse_fourier_v(ft), ns);
  const PhaseGrid& g = *ft.grid;
  SpectralField w = ft;
  if (ns.s != 0.0 && !g.homogeneous()) {
    const int n = g.Nx();
    const long nx3 = g.nx3(), nv3 = g.nv3();
    parallel_for(static_cast<std::size_t>(nv3), [&](std::size_t ixi) {
      std::vector<cplx> block(nx3);
      for (long ix = 0; ix < nx3; ++ix) block[ix] = w.values[ix * nv3 + ixi];
      fft3(block.data(), n, -1);
      for (long ix = 0; ix < nx3; ++ix) {
        const double k2 = norm2(g.k_mode(ix));
        block[ix] *= ns.kind == WeightKind::japanese_bracket
                         ? std::pow(1.0 + k2, 0.5 * ns.s)
                         : (k2 == 0.0 ? 0.0 : std::pow(k2, 0.5 * ns.s));
      }
      fft3(block.data(), n, +1);
      const double inv = 1.0 / static_cast<double>(nx3);
      for (long ix = 0; ix < nx3; ++ix) w.values[ix * nv3 + ixi] = block[ix] * inv;
    });
  }
  if (ns.mix == Mix::L2) return l2_norm(w);
  if (ns.mix == Mix::Lv2Lxp) {
    const long nx3 = g.nx3(), nv3 = g.nv3();
    double s = 0.0;
    for (long ixi = 0; ixi < nv3; ++ixi) {
      double acc = 0.0;
      if (std::isinf(ns.p)) {
        for (long ix = 0; ix < nx3; ++ix) acc = std::max(acc, std::abs(w.values[ix * nv3 + ixi]));
      } else {
        for (long ix = 0; ix < nx3; ++ix) acc += std::pow(std::abs(w.values[ix * nv3 + ixi]), ns.p);
        acc = std::pow(acc * g.cell_x(), 1.0 / ns.p);
      }
      s += acc * acc;
    }
    return std::sqrt(s * g.cell_xi());
  }
  throw std::invalid_argument("weighted_norm(spectral): unsupported mix descriptor");
}

// --- scaling family --------------------------------------------------------

struct ScalingParams {
  double lambda = 1.0;
  double alpha = 0.0;
  double beta = 0.0;

  ScalingParams() = default;
  ScalingParams(double l, double a, double b) : lambda(l), alpha(a), beta(b) {
    if (!(lambda > 0.0)) throw std::invalid_argument("ScalingParams: lambda must be positive");
  }
};

struct ScalingResult {
  DistributionField field;
  bool exact_node_map = true;       // every source point landed on a node
  bool support_warning = false;     // rescaled field has mass near the v-box shell
};

// f_lambda(t,x,v) = lambda^{alpha+(2+gamma) beta} f(lambda^{alpha-beta} t,
// lambda^alpha x, lambda^beta v), evaluated at the field's own time stamp.
// x rescaling is periodic; v sampling beyond the box reads zero. Off-node
// source points are resampled trilinearly when allowed, otherwise raise.
inline ScalingResult apply_scaling(const DistributionField& f, const ScalingParams& p, double gamma,
                                   bool allow_resample = true) {
  const PhaseGrid& g = *f.grid;
  const double pref = std::pow(p.lambda, p.alpha + (2.0 + gamma) * p.beta);
  const double sx = std::pow(p.lambda, p.alpha);
  const double sv = std::pow(p.lambda, p.beta);
  ScalingResult res{DistributionField(f.grid, f.time), true, false};
  if (p.lambda == 1.0 || (p.alpha == 0.0 && p.beta == 0.0)) {
    res.field = f;
    for (double& v : res.field.values) v *= pref;  // pref == 1 here, kept for clarity of intent
    return res;
  }

  const long nx3 = g.nx3(), nv3 = g.nv3();
  const int nx = g.Nx(), nv = g.Nv();

  bool exact = true;
  std::vector<double> out(f.values.size(), 0.0);
  auto near_int = [](double u) { return std::abs(u - std::round(u)) <= 1e-9; };
  for (long ix = 0; ix < nx3; ++ix) {
    const Vec3 X = g.x_node(ix);
    // fractional x index, wrapped into [0, Nx)
    double uxs[3];
    for (int a = 0; a < 3; ++a) {
      double u = (sx * X[a] + g.Lx()) / g.dx();
      u = std::fmod(u, static_cast<double>(nx));
      if (u < 0) u += nx;
      if (u >= nx) u -= nx;
      uxs[a] = u;
      if (!near_int(u)) exact = false;
    }
    const int ja = static_cast<int>(uxs[0]), jb = static_cast<int>(uxs[1]), jc = static_cast<int>(uxs[2]);
    const double ga = uxs[0] - ja, gb = uxs[1] - jb, gc = uxs[2] - jc;
    for (long iv = 0; iv < nv3; ++iv) {
      const Vec3 V = g.v_node(iv);
      double uvs[3];
      bool outside = false;
      for (int a = 0; a < 3; ++a) {
        const double c = sv * V[a];
        if (c < -g.Lv() - g.dv() || c > g.Lv() + g.dv()) {
          outside = true;  // beyond any node support: decayed-to-zero region
          break;
        }
        const double u = (c + g.Lv()) / g.dv();
        uvs[a] = u;
        if (!near_int(u)) exact = false;
      }
      if (outside) continue;
      const int ia = static_cast<int>(std::floor(uvs[0])), ib = static_cast<int>(std::floor(uvs[1])),
                ic = static_cast<int>(std::floor(uvs[2]));
      const double fa = uvs[0] - ia, fb = uvs[1] - ib, fc = uvs[2] - ic;
      double acc = 0.0;
      for (int da = 0; da < 2; ++da)
        for (int db = 0; db < 2; ++db)
          for (int dc = 0; dc < 2; ++dc) {
            const double wv = (da ? fa : 1 - fa) * (db ? fb : 1 - fb) * (dc ? fc : 1 - fc);
            if (wv == 0.0) continue;
            const int va = ia + da, vb = ib + db, vc = ic + dc;
            if (va < 0 || va >= nv || vb < 0 || vb >= nv || vc < 0 || vc >= nv) continue;
            const long ivs = static_cast<long>(va) * nv * nv + static_cast<long>(vb) * nv + vc;
            for (int ea = 0; ea < 2; ++ea)
              for (int eb = 0; eb < 2; ++eb)
                for (int ec = 0; ec < 2; ++ec) {
                  const double wx = (ea ? ga : 1 - ga) * (eb ? gb : 1 - gb) * (ec ? gc : 1 - gc);
                  if (wx == 0.0) continue;
                  const long ixs = static_cast<long>((ja + ea) % nx) * nx * nx +
                                   static_cast<long>((jb + eb) % nx) * nx + (jc + ec) % nx;
                  acc += wv * wx * f.values[ixs * nv3 + ivs];
                }
          }
      out[ix * nv3 + iv] = pref * acc;
    }
  }
  if (!exact && !allow_resample)
    throw std::domain_error("apply_scaling: rescaling needs off-node resampling, which was not permitted");
  res.exact_node_map = exact;
  res.field.values = std::move(out);
  res.support_warning = truncation_warning(res.field);
  return res;
}

}  // namespace boltzlab
