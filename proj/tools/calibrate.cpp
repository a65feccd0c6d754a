// Calibration probe: measures the collision-route agreement and annihilation
// ratios across grid/kernel configurations. Development tool, not a test.
#include <cstdio>
#include <cstring>
#include <string>

#include "boltzlab/collision.hpp"
#include "boltzlab/grid.hpp"

using namespace boltzlab;

namespace {

DistributionField maxwellian(const GridPtr& g, double c) {
  DistributionField f(g);
  for (long iv = 0; iv < g->nv3(); ++iv) f.at(0, iv) = std::exp(-c * norm2(g->v_node(iv)));
  return f;
}

DistributionField bandlimited_positive(const GridPtr& g, Rng& rng, int jmax) {
  const PhaseGrid& gr = *g;
  DistributionField f(g);
  const int w = 2 * jmax + 1;
  std::vector<cplx> coef(w * w * w);
  for (auto& c : coef) c = cplx{rng.normal(), rng.normal()};
  for (long iv = 0; iv < gr.nv3(); ++iv) {
    const Vec3 v = gr.v_node(iv);
    cplx s{0, 0};
    for (int a = -jmax; a <= jmax; ++a)
      for (int b = -jmax; b <= jmax; ++b)
        for (int c = -jmax; c <= jmax; ++c) {
          const double ph = gr.dxi() * (a * v.x + b * v.y + c * v.z);
          s += coef[((a + jmax) * w + (b + jmax)) * w + (c + jmax)] * cplx{std::cos(ph), std::sin(ph)};
        }
    f.at(0, iv) = std::norm(s);
  }
  return f;
}

void annihilation_scan() {
  std::printf("== maxwellian annihilation: ||Q||inf / ||Q-||inf (subset probe)\n");
  for (double L : {2.8, 3.0}) {
    for (double c : {1.0}) {
      auto g = make_grid(0.5, 1, L, 16);
      const CollisionKernel k;
      DistributionField m = maxwellian(g, c);
      for (auto [nt, np] : {std::pair<int, int>{16, 32}, {32, 64}}) {
        const SphereRule rule = SphereRule::product(nt, np);
        DistributionField a = loss_rate(m, k, rule);
        GainOpts o;
        o.interp = Interp::lagrange6;
        for (long iv = 0; iv < g->nv3(); iv += 31) o.v_subset.push_back(iv);
        DistributionField q = gain_direct(m, m, k, rule, o);
        double qm = 0.0, dm = 0.0;
        for (long iv : o.v_subset) {
          const double ql = m.at(0, iv) * a.at(0, iv);
          qm = std::max(qm, std::abs(ql));
          dm = std::max(dm, std::abs(q.at(0, iv) - ql));
        }
        std::printf("L=%.2f c=%.2f rule=%dx%d  ratio=%.3e\n", L, c, nt, np, dm / qm);
      }
    }
  }
}

void bobylev_gamma0(int nv, int jmax, int nt, int np) {
  std::printf("== bobylev vs trig-exact direct, gamma = 0, Nv=%d jmax=%d rule=%dx%d\n", nv, jmax, nt, np);
  auto g = make_grid(0.5, 1, 3.0, nv);
  const CollisionKernel k;
  const SphereRule rule = SphereRule::product(nt, np);
  Rng rng(123);
  for (int trial = 0; trial < 3; ++trial) {
    DistributionField f = bandlimited_positive(g, rng, jmax);
    DistributionField h = bandlimited_positive(g, rng, jmax);
    GainOpts o;
    o.interp = Interp::spectral;
    o.modal_nz = 48;
    o.modal_nr = 64;
    SpectralField lhs = fourier_v(gain_direct(f, h, k, rule, o));
    BobylevOpts bo;
    bo.eval = SpectralEval::nudft;
    SpectralField rhs = gain_bobylev(fourier_v(f), fourier_v(h), k, rule, bo);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < lhs.values.size(); ++i) {
      num += std::norm(lhs.values[i] - rhs.values[i]);
      den += std::norm(rhs.values[i]);
    }
    std::printf("  trial %d: rel L2 diff = %.3e\n", trial, std::sqrt(num / den));
  }
}

void bobylev_gamma_soft(int nv, int jmax, int nt, int np) {
  std::printf("== bobylev vs trig-exact direct, gamma = -1/2, Nv=%d jmax=%d rule=%dx%d\n", nv, jmax,
              nt, np);
  auto g = make_grid(0.5, 1, 3.0, nv);
  const CollisionKernel k(-0.5, AngularFactor::abs_cos(), 1.0);
  const SphereRule rule = SphereRule::product(nt, np);
  Rng rng(321);
  for (int trial = 0; trial < 2; ++trial) {
    DistributionField f = bandlimited_positive(g, rng, jmax);
    DistributionField h = bandlimited_positive(g, rng, jmax);
    GainOpts o;
    o.interp = Interp::spectral;
    o.modal_nz = 48;
    o.modal_nr = 64;
    SpectralField lhs = fourier_v(gain_direct(f, h, k, rule, o));
    BobylevOpts bo;
    bo.eval = SpectralEval::nudft;
    for (bool cells : {true, false}) {
      bo.riesz_cell_weights = cells;
      SpectralField rhs = gain_bobylev(fourier_v(f), fourier_v(h), k, rule, bo);
      double num = 0.0, den = 0.0;
      for (std::size_t i = 0; i < lhs.values.size(); ++i) {
        num += std::norm(lhs.values[i] - rhs.values[i]);
        den += std::norm(rhs.values[i]);
      }
      std::printf("  trial %d cells=%d: rel L2 diff = %.3e\n", trial, cells, std::sqrt(num / den));
    }
  }
}

// decaying field with concentrated spectrum: gaussian times positive
// low-mode trig modulation
DistributionField modulated_gaussian(const GridPtr& g, Rng& rng, double sigma2 = 1.0) {
  const PhaseGrid& gr = *g;
  DistributionField f(g);
  Vec3 k1{gr.dxi(), 0, 0}, k2{0, gr.dxi(), gr.dxi()};
  const double a1 = rng.uniform(0.1, 0.4), a2 = rng.uniform(0.1, 0.4);
  const double p1 = rng.uniform(0.0, two_pi), p2 = rng.uniform(0.0, two_pi);
  const Vec3 drift{rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3)};
  for (long iv = 0; iv < gr.nv3(); ++iv) {
    const Vec3 v = gr.v_node(iv);
    const double mod = 1.0 + a1 * std::cos(dot(k1, v) + p1) + a2 * std::cos(dot(k2, v) + p2);
    f.at(0, iv) = std::exp(-norm2(v - drift) / sigma2) * mod;
  }
  return f;
}

void bobylev_gamma0_decaying(int nv, double L, double support_tol, int nt, int np) {
  std::printf("== bobylev vs direct on decaying fields, gamma = 0, Nv=%d L=%.2f tol=%.1e rule=%dx%d\n",
              nv, L, support_tol, nt, np);
  auto g = make_grid(0.5, 1, L, nv);
  const CollisionKernel k;
  const SphereRule rule = SphereRule::product(nt, np);
  Rng rng(7);
  for (int trial = 0; trial < 2; ++trial) {
    DistributionField f = modulated_gaussian(g, rng);
    DistributionField h = modulated_gaussian(g, rng);
    BobylevOpts bo;
    bo.eval = SpectralEval::nudft;
    SpectralField rhs = gain_bobylev(fourier_v(f), fourier_v(h), k, rule, bo);

    // route A1: trig-exact mode engine with thresholded support
    GainOpts mo;
    mo.interp = Interp::spectral;
    mo.support_tol = support_tol;
    mo.modal_nz = 48;
    mo.modal_nr = 64;
    SpectralField lhs_modal = fourier_v(gain_direct(f, h, k, rule, mo));

    // route A2: real-space quadrature with order-6 evaluation
    GainOpts ho;
    ho.interp = Interp::lagrange6;
    SpectralField lhs_hex = fourier_v(gain_direct(f, h, k, rule, ho));

    auto rel = [&](const SpectralField& a, const SpectralField& b) {
      double num = 0.0, den = 0.0;
      for (std::size_t i = 0; i < a.values.size(); ++i) {
        num += std::norm(a.values[i] - b.values[i]);
        den += std::norm(b.values[i]);
      }
      return std::sqrt(num / den);
    };
    std::printf("  trial %d: modal-vs-bob %.3e   hexic-vs-bob %.3e   modal-vs-hexic %.3e\n", trial,
                rel(lhs_modal, rhs), rel(lhs_hex, rhs), rel(lhs_modal, lhs_hex));
  }
}

void bobylev_soft_decaying(int nv, double L, double support_tol, int nt, int np) {
  std::printf("== bobylev vs direct on decaying fields, gamma = -1/2, Nv=%d L=%.2f rule=%dx%d\n", nv,
              L, nt, np);
  auto g = make_grid(0.5, 1, L, nv);
  const CollisionKernel k(-0.5, AngularFactor::abs_cos(), 1.0);
  const SphereRule rule = SphereRule::product(nt, np);
  Rng rng(11);
  DistributionField f = modulated_gaussian(g, rng);
  DistributionField h = modulated_gaussian(g, rng);
  GainOpts mo;
  mo.interp = Interp::spectral;
  mo.support_tol = support_tol;
  mo.modal_nz = 48;
  mo.modal_nr = 64;
  SpectralField lhs = fourier_v(gain_direct(f, h, k, rule, mo));
  BobylevOpts bo;
  bo.eval = SpectralEval::nudft;
  for (bool cells : {true, false}) {
    bo.riesz_cell_weights = cells;
    SpectralField rhs = gain_bobylev(fourier_v(f), fourier_v(h), k, rule, bo);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < lhs.values.size(); ++i) {
      num += std::norm(lhs.values[i] - rhs.values[i]);
      den += std::norm(rhs.values[i]);
    }
    std::printf("  cells=%d: rel L2 diff = %.3e\n", cells, std::sqrt(num / den));
  }
}

}  // namespace

int main(int argc, char** argv) {
  const std::string what = argc > 1 ? argv[1] : "all";
  if (what == "annih" || what == "all") annihilation_scan();
  if (what == "bob0" || what == "all") bobylev_gamma0(8, 1, 8, 16);
  if (what == "bob0b") bobylev_gamma0(16, 2, 8, 16);
  if (what == "bobs" || what == "all") bobylev_gamma_soft(8, 1, 8, 16);
  if (what == "bob0g") bobylev_gamma0_decaying(8, 3.0, 1e-5, 8, 16);
  if (what == "bob0G") bobylev_gamma0_decaying(16, 3.2, 3e-5, 8, 16);
  if (what == "bobsg") bobylev_soft_decaying(8, 3.0, 1e-5, 8, 16);
  return 0;
}
