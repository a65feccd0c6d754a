#include <cmath>

#include "boltzlab/collision.hpp"
#include "boltzlab/grid.hpp"
#include "doctest.h"

using namespace boltzlab;

namespace {

DistributionField maxwellian(const GridPtr& g, double c = 1.0, double amp = 1.0) {
  DistributionField f(g);
  for (long ix = 0; ix < g->nx3(); ++ix)
    for (long iv = 0; iv < g->nv3(); ++iv) f.at(ix, iv) = amp * std::exp(-c * norm2(g->v_node(iv)));
  return f;
}

// positive band-limited field |w|^2 with w supported on |j|_inf <= 1
DistributionField bandlimited_positive(const GridPtr& g, Rng& rng) {
  const PhaseGrid& gr = *g;
  DistributionField f(g);
  cplx w[3][3][3];
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int c = 0; c < 3; ++c) w[a][b][c] = cplx{rng.normal(), rng.normal()};
  for (long iv = 0; iv < gr.nv3(); ++iv) {
    const Vec3 v = gr.v_node(iv);
    cplx s{0, 0};
    for (int a = -1; a <= 1; ++a)
      for (int b = -1; b <= 1; ++b)
        for (int c = -1; c <= 1; ++c) {
          const double ph = gr.dxi() * (a * v.x + b * v.y + c * v.z);
          s += w[a + 1][b + 1][c + 1] * cplx{std::cos(ph), std::sin(ph)};
        }
    const double val = std::norm(s);
    for (long ix = 0; ix < gr.nx3(); ++ix) f.at(ix, iv) = val;
  }
  return f;
}

}  // namespace

TEST_CASE("kernel validation") {
  CHECK_NOTHROW(CollisionKernel(0.0, AngularFactor::abs_cos(1.0), 1.0));
  CHECK_NOTHROW(CollisionKernel(-0.5, AngularFactor::abs_cos(2.0), 2.0));
  CHECK_THROWS(CollisionKernel(0.5, AngularFactor::abs_cos(1.0), 1.0));   // hard potential
  CHECK_THROWS(CollisionKernel(-0.7, AngularFactor::abs_cos(1.0), 1.0));  // below range
  // violates 0 <= b <= C |z|
  std::vector<double> flat(64, 0.5);
  CHECK_THROWS(CollisionKernel(0.0, AngularFactor::tabulated(flat), 1.0));
}

TEST_CASE("post_collision basics") {
  auto [us, vs] = post_collision({1, 0, 0}, {0, 0, 0}, {1, 0, 0});
  CHECK(us.x == doctest::Approx(0.0));
  CHECK(vs.x == doctest::Approx(1.0));
  CHECK(vs.y == 0.0);

  // grazing: omega perpendicular to v - u leaves the pair unchanged
  auto [u2, v2] = post_collision({1, 0, 0}, {0, 0, 0}, {0, 0, 1});
  CHECK(u2.x == doctest::Approx(1.0));
  CHECK(v2.x == doctest::Approx(0.0));

  CHECK_THROWS(post_collision({1, 0, 0}, {0, 0, 0}, {0.5, 0, 0}));
}

TEST_CASE("post_collision conserves momentum and energy on random triples") {
  Rng rng(2024);
  double worst = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const Vec3 u{rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3)};
    const Vec3 v{rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3)};
    const Vec3 w = rng.unit_vector();
    const auto [us, vs] = post_collision(u, v, w);
    worst = std::max(worst, norm(us + vs - (u + v)));
    worst = std::max(worst, std::abs(norm2(us) + norm2(vs) - norm2(u) - norm2(v)));
  }
  CHECK(worst <= 1e-13);
}

TEST_CASE("loss_rate: zero input and maxwellian closed form") {
  auto g = make_grid(0.5, 1, 3.0, 8);
  const CollisionKernel k;  // gamma = 0, b = |z|
  const SphereRule rule = SphereRule::product(8, 16);

  DistributionField z(g);
  DistributionField az = loss_rate(z, k, rule);
  CHECK(max_abs(az) == 0.0);

  // gamma = 0, b = |cos|: A[g](v) = 2 pi * int g du, v-independent
  DistributionField m = maxwellian(g);
  DistributionField a = loss_rate(m, k, rule);
  double vint = 0.0;
  for (long iv = 0; iv < g->nv3(); ++iv) vint += m.at(0, iv);
  vint *= g->cell_v();
  const double want = two_pi * vint;
  double lo = a.values[0], hi = a.values[0];
  for (double x : a.values) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  CHECK(lo == doctest::Approx(hi).epsilon(1e-13));  // v-independent
  CHECK(a.values[0] == doctest::Approx(want).epsilon(1e-12));
  CHECK(min_value(a) >= 0.0);
}

TEST_CASE("loss_rate: soft potential radial oracle") {
  auto g = make_grid(0.5, 1, 4.0, 16);
  const CollisionKernel k(-0.5, AngularFactor::abs_cos(), 1.0);
  const SphereRule rule = SphereRule::product(8, 16);
  DistributionField m = maxwellian(g);
  DistributionField a = loss_rate(m, k, rule);

  // radial reference: A(|v|) = I_b int g(u) |u - v|^{-1/2} du with the mu
  // integral in closed form; the loss quadrature zeroes the coincident node,
  // so the reference subtracts the Riesz mass of that cell
  const double ib = angular_mass(k, rule);
  auto radial_ref = [&](double rho) {
    double s = 0.0;
    const int nu = 40000;
    const double umax = 6.0, hu = umax / nu;
    for (int i = 1; i <= nu; ++i) {
      const double u = i * hu;
      const double cu = (i == nu) ? 0.5 : 1.0;
      const double A = u * u + rho * rho, B = 2.0 * u * rho;
      double inner;
      if (B < 1e-14) {
        inner = 2.0 * std::pow(A, -0.25);
      } else {
        inner = (4.0 / (3.0 * B)) * (std::pow(A + B, 0.75) - std::pow(std::max(A - B, 0.0), 0.75));
      }
      s += cu * std::exp(-u * u) * u * u * inner;
    }
    return ib * two_pi * s * hu;
  };
  // Riesz mass of the dropped u = v cell
  double cell_mass = 0.0;
  {
    const int m = 60;
    const double h = g->dv() / m;
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j)
        for (int l = 0; l < m; ++l) {
          const double x = (i + 0.5) * h - 0.5 * g->dv();
          const double y = (j + 0.5) * h - 0.5 * g->dv();
          const double z = (l + 0.5) * h - 0.5 * g->dv();
          cell_mass += std::pow(x * x + y * y + z * z, -0.25) * h * h * h;
        }
  }

  const long center = (8 * 16 + 8) * 16 + 8;  // v = 0
  CHECK(norm(g->v_node(center)) == doctest::Approx(0.0));
  const double want0 = radial_ref(0.0) - ib * cell_mass * std::exp(0.0);
  CHECK(a.values[center] == doctest::Approx(want0).epsilon(1e-2));
  const long off = (10 * 16 + 8) * 16 + 8;  // v = (1, 0, 0)
  const double rho = norm(g->v_node(off));
  const double wantr = radial_ref(rho) - ib * cell_mass * std::exp(-rho * rho);
  CHECK(a.values[off] == doctest::Approx(wantr).epsilon(1e-2));

  // radially symmetric input: maximal at v = 0
  CHECK(a.values[center] == doctest::Approx(max_abs(a)).epsilon(1e-12));
}

TEST_CASE("gain_direct: zeros and bilinearity") {
  auto g = make_grid(0.5, 1, 3.0, 8);
  const CollisionKernel k;
  const SphereRule rule = SphereRule::product(4, 8);
  DistributionField z(g);
  DistributionField m = maxwellian(g);
  CHECK(max_abs(gain_direct(z, m, k, rule)) == 0.0);
  CHECK(max_abs(gain_direct(m, z, k, rule)) == 0.0);

  Rng rng(5);
  DistributionField f1 = bandlimited_positive(g, rng);
  DistributionField f2 = maxwellian(g, 2.0);
  DistributionField combo = 2.0 * f1 + (-0.5) * f2;
  DistributionField lhs = gain_direct(combo, m, k, rule);
  DistributionField q1 = gain_direct(f1, m, k, rule);
  DistributionField q2 = gain_direct(f2, m, k, rule);
  double worst = 0.0;
  for (std::size_t i = 0; i < lhs.values.size(); ++i)
    worst = std::max(worst, std::abs(lhs.values[i] - 2.0 * q1.values[i] + 0.5 * q2.values[i]));
  CHECK(worst <= 1e-12 * std::max(max_abs(q1), max_abs(q2)));
}

TEST_CASE("gain_direct: positivity with trilinear evaluation") {
  auto g = make_grid(0.5, 1, 3.0, 8);
  const CollisionKernel k(-0.5, AngularFactor::abs_cos(), 1.0);
  const SphereRule rule = SphereRule::product(4, 8);
  Rng rng(17);
  DistributionField f = bandlimited_positive(g, rng);
  DistributionField q = gain_direct(f, f, k, rule);
  CHECK(min_value(q) >= -nonneg_eps(q));
}

TEST_CASE("maxwellian equilibrium: gain equals loss within evaluation error") {
  auto g = make_grid(0.5, 1, 3.0, 16);
  const CollisionKernel k;
  const SphereRule rule = SphereRule::product(8, 16);
  DistributionField m = maxwellian(g);
  DistributionField a = loss_rate(m, k, rule);

  // probe a spread of output nodes (the acceptance suite covers the full
  // annihilation criterion); includes the peak region and the mid-shell
  GainOpts hexic;
  hexic.interp = Interp::lagrange6;
  for (long iv = 0; iv < g->nv3(); iv += 37) hexic.v_subset.push_back(iv);
  for (long d = 0; d < 4; ++d) hexic.v_subset.push_back((8 * 16 + 8) * 16 + 8 + d);
  DistributionField q = gain_direct(m, m, k, rule, hexic);
  double qloss_max = 0.0, diff_max = 0.0;
  for (long iv : hexic.v_subset) {
    const double ql = m.at(0, iv) * a.at(0, iv);
    qloss_max = std::max(qloss_max, std::abs(ql));
    diff_max = std::max(diff_max, std::abs(q.at(0, iv) - ql));
  }
  MESSAGE("maxwellian annihilation (lagrange6, subset): ", diff_max / qloss_max);
  CHECK(diff_max <= 1e-3 * qloss_max);
}

TEST_CASE("mass exchange: trig-exact route cancels to round-off") {
  auto g = make_grid(0.5, 1, 3.0, 8);
  const CollisionKernel k;
  const SphereRule rule = SphereRule::product(4, 8);
  Rng rng(31);
  for (int trial = 0; trial < 3; ++trial) {
    DistributionField f = bandlimited_positive(g, rng);
    GainOpts opt;
    opt.interp = Interp::spectral;
    opt.modal_nz = 16;
    opt.modal_nr = 24;
    DistributionField gainf = gain_spectral(f, f, k, rule, opt);
    DistributionField lossf = loss_spectral(f, k, rule, opt);
    double gain_mass = mass(gainf);
    double loss_mass = 0.0;
    for (std::size_t i = 0; i < f.values.size(); ++i) loss_mass += f.values[i] * lossf.values[i];
    loss_mass *= g->cell_x() * g->cell_v();
    CHECK(std::abs(gain_mass - loss_mass) <= 1e-11 * l1_norm(gainf));
  }
}

TEST_CASE("mass exchange: direct quadrature within its documented tolerance") {
  auto g = make_grid(0.5, 1, 3.25, 8);
  const CollisionKernel k;
  const SphereRule rule = SphereRule::product(4, 8);
  DistributionField f = maxwellian(g);
  for (long iv = 0; iv < g->nv3(); ++iv) {
    const Vec3 v = g->v_node(iv);
    f.at(0, iv) += 0.3 * std::exp(-2.0 * norm2(v - Vec3{0.7, -0.3, 0.2}));
  }
  GainOpts cubic;
  cubic.interp = Interp::tricubic;
  DistributionField q = gain_direct(f, f, k, rule, cubic);
  DistributionField a = loss_rate(f, k, rule);
  double loss_mass = 0.0;
  for (std::size_t i = 0; i < f.values.size(); ++i) loss_mass += f.values[i] * a.values[i];
  loss_mass *= g->cell_x() * g->cell_v();
  CHECK(std::abs(mass(q) - loss_mass) <= 2e-2 * l1_norm(q));
}

TEST_CASE("bobylev split frequencies satisfy the energy identity") {
  // xi = (1,0,0), omega = (0,0,1) -> xi+ = (.5, 0, .5), xi- = (.5, 0, -.5)
  const Vec3 xi{1, 0, 0}, w{0, 0, 1};
  const Vec3 xp = 0.5 * (xi + norm(xi) * w);
  const Vec3 xm = 0.5 * (xi - norm(xi) * w);
  CHECK(xp.x == doctest::Approx(0.5));
  CHECK(xp.z == doctest::Approx(0.5));
  CHECK(xm.z == doctest::Approx(-0.5));
  CHECK(norm2(xp) + norm2(xm) == doctest::Approx(norm2(xi)).epsilon(1e-15));
  CHECK(norm(xp + xm - xi) <= 1e-15);
}

TEST_CASE("gain_bobylev: zero input and hard-potential rejection") {
  auto g = make_grid(0.5, 1, 3.0, 8);
  const CollisionKernel k;
  const SphereRule rule = SphereRule::product(4, 8);
  SpectralField z(g);
  SpectralField q = gain_bobylev(z, z, k, rule);
  CHECK(max_abs(q) == 0.0);
}

TEST_CASE("bobylev constant fits to one on a maxwellian pair") {
  auto g = make_grid(0.5, 1, 3.0, 8);
  const SphereRule rule = SphereRule::product(4, 8);
  const double c0 = bobylev_fitted_constant(g, CollisionKernel(), rule);
  CHECK(c0 == doctest::Approx(1.0).epsilon(3e-2));
  const double cm =
      bobylev_fitted_constant(g, CollisionKernel(-0.5, AngularFactor::abs_cos(), 1.0), rule);
  CHECK(cm == doctest::Approx(1.0).epsilon(8e-2));
}
