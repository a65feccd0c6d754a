#include <cmath>

#include "boltzlab/solvers.hpp"
#include "doctest.h"

using namespace boltzlab;

namespace {

// commensurate solver setup: dt * dv / dx = 1, so every propagator
// application is an exact index relabeling
struct Setup {
  GridPtr grid = make_grid(0.375, 4, 3.0, 8);  // dx = 0.1875, dv = 0.75
  CollisionKernel kernel;
  SphereRule rule = SphereRule::product(4, 8);
  SolverConfig cfg;

  Setup() {
    cfg.dt = 0.25;  // dt * dv / dx = 1
    cfg.T = 1.0;
    cfg.iter_tol = 1e-13;
    cfg.max_iters = 60;
  }

  DistributionField small_gaussian(double amp) const {
    DistributionField f(grid);
    const PhaseGrid& g = *grid;
    for (long ix = 0; ix < g.nx3(); ++ix) {
      const Vec3 x = g.x_node(ix);
      const double xs = 1.0 + 0.5 * std::cos(g.dk() * x.x) + 0.25 * std::sin(g.dk() * x.y);
      for (long iv = 0; iv < g.nv3(); ++iv) f.at(ix, iv) = amp * xs * std::exp(-norm2(g.v_node(iv)));
    }
    return f;
  }
};

}  // namespace

TEST_CASE("picard: zero datum converges immediately") {
  Setup s;
  DistributionField z(s.grid);
  PicardReport rep = picard_gain_only(z, s.kernel, s.rule, s.cfg);
  CHECK(rep.converged);
  CHECK(rep.iterations == 1);
  CHECK(trajectory_linf(rep.traj) == 0.0);
}

TEST_CASE("picard: iterates are monotone and contraction is strong for tiny data") {
  Setup s;
  DistributionField f0 = s.small_gaussian(1e-3);
  // monotonicity of the defining iteration, rebuilt from the raw pieces
  const TimeGrid tg = s.cfg.time_grid();
  Trajectory prev{tg, {}};
  for (int i = 0; i < tg.n_nodes(); ++i) prev.at.push_back(free_stream(f0, tg.node(i)));
  for (int n = 0; n < 3; ++n) {
    std::vector<DistributionField> q;
    for (const auto& f : prev.at) q.push_back(gain_direct(f, f, s.kernel, s.rule, s.cfg.gain));
    Trajectory next = detail::duhamel_from_nodes(f0, q, tg);
    double worst = 1.0;
    for (int i = 0; i < tg.n_nodes(); ++i)
      for (std::size_t t = 0; t < next.at[i].values.size(); ++t)
        worst = std::min(worst, next.at[i].values[t] - prev.at[i].values[t]);
    CHECK(worst >= -1e-15 * trajectory_linf(next));
    prev = std::move(next);
  }

  PicardReport rep = picard_gain_only(f0, s.kernel, s.rule, s.cfg);
  CHECK(rep.converged);
  CHECK(rep.iterations <= 6);
  for (double c : rep.contraction) CHECK(c <= 0.5);
  CHECK(rep.min_value >= -1e-15);
  CHECK_FALSE(rep.smallness_warning);  // tiny amplitude sits below eta
}

TEST_CASE("ks_linear_step: zero absorption reduces to the duhamel map") {
  Setup s;
  DistributionField f0 = s.small_gaussian(0.01);
  const TimeGrid tg = s.cfg.time_grid();
  Trajectory zero_absorb = zero_trajectory(s.grid, tg);
  Trajectory src{tg, {}};
  for (int i = 0; i < tg.n_nodes(); ++i) {
    DistributionField fi = free_stream(f0, tg.node(i));
    src.at.push_back(gain_direct(fi, fi, s.kernel, s.rule, s.cfg.gain));
  }
  Trajectory got = ks_linear_step(f0, zero_absorb, src, tg);
  Trajectory want = detail::duhamel_from_nodes(f0, src.at, tg);
  for (int i = 0; i < tg.n_nodes(); ++i) {
    double worst = 0.0;
    for (std::size_t t = 0; t < want.at[i].values.size(); ++t)
      worst = std::max(worst, std::abs(got.at[i].values[t] - want.at[i].values[t]));
    CHECK(worst <= 1e-14 * std::max(1e-300, max_abs(want.at[i])));
  }
}

TEST_CASE("ks_linear_step: constant absorption gives the integrating factor") {
  Setup s;
  DistributionField f0 = s.small_gaussian(0.5);
  const TimeGrid tg = s.cfg.time_grid();
  const double c = 0.7;
  Trajectory absorb{tg, {}};
  for (int i = 0; i < tg.n_nodes(); ++i) {
    DistributionField a(s.grid, tg.node(i));
    for (auto& v : a.values) v = c;
    absorb.at.push_back(std::move(a));
  }
  Trajectory src = zero_trajectory(s.grid, tg);
  Trajectory got = ks_linear_step(f0, absorb, src, tg);
  for (int i = 0; i < tg.n_nodes(); ++i) {
    DistributionField want = free_stream(f0, tg.node(i));
    const double damp = std::exp(-c * tg.node(i));
    double worst = 0.0;
    for (std::size_t t = 0; t < want.values.size(); ++t)
      worst = std::max(worst, std::abs(got.at[i].values[t] - damp * want.values[t]));
    CHECK(worst <= 1e-12 * max_abs(want));
  }

  // negative absorption raises
  Trajectory bad = absorb;
  for (auto& v : bad.at[1].values) v = -0.1;
  CHECK_THROWS_AS(ks_linear_step(f0, bad, src, tg), std::domain_error);
}

TEST_CASE("ks_linear_step: the h2 formula matches an independent composition") {
  // h2(t) = [S(t) f0] exp(- int_0^t S(t - tau) A[g1](tau) dtau)
  Setup s;
  DistributionField f0 = s.small_gaussian(0.05);
  const TimeGrid tg = s.cfg.time_grid();
  PicardReport pic = picard_gain_only(f0, s.kernel, s.rule, s.cfg);
  REQUIRE(pic.converged);
  Trajectory absorb{tg, {}};
  for (const auto& f : pic.traj.at) absorb.at.push_back(loss_rate(f, s.kernel, s.rule));
  Trajectory got = ks_linear_step(f0, absorb, zero_trajectory(s.grid, tg), tg);
  for (int i = 0; i < tg.n_nodes(); ++i) {
    DistributionField I(s.grid);
    const std::vector<double> w = tg.weights_upto(i);
    for (int j = 0; j <= i; ++j) {
      if (w[j] == 0.0) continue;
      DistributionField a = free_stream(absorb.at[j], tg.node(i) - tg.node(j));
      for (std::size_t t = 0; t < I.values.size(); ++t) I.values[t] += w[j] * a.values[t];
    }
    DistributionField want = free_stream(f0, tg.node(i));
    for (std::size_t t = 0; t < want.values.size(); ++t) want.values[t] *= std::exp(-I.values[t]);
    double worst = 0.0;
    const double scale = std::max(1e-300, max_abs(want));
    for (std::size_t t = 0; t < want.values.size(); ++t)
      worst = std::max(worst, std::abs(got.at[i].values[t] - want.values[t]));
    CHECK(worst <= 1e-8 * scale);
  }
}

TEST_CASE("kaniel_shinbrot: zero datum") {
  Setup s;
  DistributionField z(s.grid);
  KSReport rep = kaniel_shinbrot(z, s.kernel, s.rule, s.cfg);
  CHECK(rep.state.converged);
  CHECK(trajectory_linf(rep.f) == 0.0);
  for (double gap : rep.state.gap_per_node) CHECK(gap == 0.0);
}

TEST_CASE("kaniel_shinbrot: certificates on small gaussian data") {
  Setup s;
  DistributionField f0 = s.small_gaussian(1e-2);
  KSReport rep = kaniel_shinbrot(f0, s.kernel, s.rule, s.cfg);
  REQUIRE(rep.gain_only.converged);
  REQUIRE(rep.state.converged);

  // g2 = g1 identity (sharp by construction)
  CHECK(rep.state.g2_vs_g1 <= 1e-12);
  CHECK(rep.state.beginning_condition_ok);
  // monotone sandwich to round-off
  CHECK(rep.state.monotonicity_certificate <= 1e-12 * rep.residual_scale);
  // gap contraction strictly below one
  for (double r : rep.state.gap_ratios) CHECK(r < 1.0);
  // the sandwich sits below the gain-only solution
  double viol = -1e300;
  for (std::size_t i = 0; i < rep.f.at.size(); ++i)
    for (std::size_t t = 0; t < rep.f.at[i].values.size(); ++t)
      viol = std::max(viol, rep.f.at[i].values[t] - rep.gain_only.traj.at[i].values[t]);
  CHECK(viol <= 1e-12 * rep.residual_scale);

  // duhamel residual of the limit
  const double res = duhamel_residual(rep.f, f0, s.kernel, s.rule, s.cfg.gain);
  CHECK(res <= 1e-8);

  // mass inequality along the limit
  const double m0 = l1_norm(rep.f.at.front());
  for (const auto& f : rep.f.at) CHECK(l1_norm(f) <= m0 * (1.0 + 1e-6));
}

TEST_CASE("uniqueness residual: zero for equal trajectories, linear in perturbations") {
  Setup s;
  DistributionField f0 = s.small_gaussian(1e-2);
  KSReport rep = kaniel_shinbrot(f0, s.kernel, s.rule, s.cfg);
  REQUIRE(rep.state.converged);
  const double scale = weighted_norm(rep.f.at.front(), 0.0, 1.25 + s.kernel.gamma, Mix::Lv2Lxp);

  CHECK(uniqueness_residual(rep.f, rep.f, s.kernel, s.rule, 1.25, s.cfg.gain) <= 1e-10 * scale);

  auto perturbed = [&](double delta) {
    Trajectory g = rep.f;
    for (auto& field : g.at)
      for (long ix = 0; ix < s.grid->nx3(); ++ix)
        for (long iv = 0; iv < s.grid->nv3(); ++iv)
          field.at(ix, iv) += delta * std::exp(-2.0 * norm2(s.grid->v_node(iv)));
    return g;
  };
  const double w3 = uniqueness_residual(rep.f, perturbed(1e-3), s.kernel, s.rule, 1.25, s.cfg.gain);
  const double w4 = uniqueness_residual(rep.f, perturbed(1e-4), s.kernel, s.rule, 1.25, s.cfg.gain);
  CHECK(w3 / w4 == doctest::Approx(10.0).epsilon(0.05));
}
