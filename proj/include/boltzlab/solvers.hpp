// The two constructive schemes: Picard iteration for the gain-term-only
// equation and the Kaniel-Shinbrot monotone sandwich for the full equation,
// plus the uniqueness residual W.
//
// Trajectories are stored at the Duhamel quadrature nodes. Both sandwich
// equations advance through the same integrating-factor step, so the
// g_2 = g_1 identity of the iteration is exact by construction, and with a
// grid-commensurate time step every propagator application is an index
// relabeling: the monotonicity certificates then hold to round-off.
#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "boltzlab/collision.hpp"
#include "boltzlab/common.hpp"
#include "boltzlab/grid.hpp"
#include "boltzlab/transport.hpp"

namespace boltzlab {

struct SolverConfig {
  int max_iters = 40;
  double iter_tol = 1e-10;  // relative fixed-point / gap tolerance
  double dt = 0.25;
  double T = 1.0;
  double eta = 0.1;  // smallness threshold for the critical norm (warning only)
  GainOpts gain;
  double eps_nn_scale = 1e-12;

  TimeGrid time_grid() const { return TimeGrid(0.0, T, dt); }
};

struct Trajectory {
  TimeGrid tg;
  std::vector<DistributionField> at;  // one field per node

  const DistributionField& back() const { return at.back(); }
};

inline Trajectory zero_trajectory(const GridPtr& g, const TimeGrid& tg) {
  Trajectory tr{tg, {}};
  tr.at.reserve(tg.n_nodes());
  for (int i = 0; i < tg.n_nodes(); ++i) {
    tr.at.emplace_back(g, tg.node(i));
  }
  return tr;
}

inline double trajectory_linf_diff(const Trajectory& a, const Trajectory& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.at.size(); ++i) {
    for (std::size_t j = 0; j < a.at[i].values.size(); ++j)
      m = std::max(m, std::abs(a.at[i].values[j] - b.at[i].values[j]));
  }
  return m;
}

inline double trajectory_linf(const Trajectory& a) {
  double m = 0.0;
  for (const auto& f : a.at) m = std::max(m, max_abs(f));
  return m;
}

// --- gain-term-only Picard ------------------------------------------------------

struct PicardReport {
  bool converged = false;
  int iterations = 0;
  std::vector<double> diffs;        // successive-iterate sup distances
  std::vector<double> contraction;  // ratios of consecutive diffs
  double critical_norm = 0.0;       // || <grad_x>^{1/2} <v>^{1/2+gamma} f0 ||_{L2}
  bool smallness_warning = false;   // critical norm above cfg.eta
  double min_value = 0.0;           // over the returned trajectory
  Trajectory traj;
};

namespace detail {

// F(t_i) = S(t_i) f0 + sum_{j<=i} w_ij S(t_i - t_j) src_j
inline Trajectory duhamel_from_nodes(const DistributionField& f0,
                                     const std::vector<DistributionField>& src,
                                     const TimeGrid& tg) {
  Trajectory out{tg, {}};
  out.at.reserve(tg.n_nodes());
  for (int i = 0; i < tg.n_nodes(); ++i) {
    DistributionField acc = free_stream(f0, tg.node(i));
    const std::vector<double> w = tg.weights_upto(i);
    for (int j = 0; j <= i; ++j) {
      if (w[j] == 0.0) continue;
      DistributionField s = free_stream(src[j], tg.node(i) - tg.node(j));
      for (std::size_t t = 0; t < acc.values.size(); ++t) acc.values[t] += w[j] * s.values[t];
    }
    acc.time = tg.node(i);
    out.at.push_back(std::move(acc));
  }
  return out;
}

inline std::vector<DistributionField> gain_nodes(const Trajectory& tr, const CollisionKernel& k,
                                                 const SphereRule& rule, const GainOpts& opt) {
  std::vector<DistributionField> out;
  out.reserve(tr.at.size());
  for (const auto& f : tr.at) out.push_back(gain_direct(f, f, k, rule, opt));
  return out;
}

}  // namespace detail

inline PicardReport picard_gain_only(const DistributionField& f0, const CollisionKernel& k,
                                     const SphereRule& rule, const SolverConfig& cfg) {
  if (!certified_nonneg(f0, cfg.eps_nn_scale))
    throw std::invalid_argument("picard_gain_only: initial datum must be non-negative");
  const TimeGrid tg = cfg.time_grid();
  PicardReport rep;
  rep.critical_norm = weighted_norm(f0, 0.5, 0.5 + k.gamma, Mix::L2);
  rep.smallness_warning = rep.critical_norm > cfg.eta;

  Trajectory F{tg, {}};
  F.at.reserve(tg.n_nodes());
  for (int i = 0; i < tg.n_nodes(); ++i) F.at.push_back(free_stream(f0, tg.node(i)));

  for (int n = 0; n < cfg.max_iters; ++n) {
    const std::vector<DistributionField> q = detail::gain_nodes(F, k, rule, cfg.gain);
    Trajectory next = detail::duhamel_from_nodes(f0, q, tg);
    const double diff = trajectory_linf_diff(next, F);
    const double scale = std::max(trajectory_linf(next), 1e-300);
    rep.diffs.push_back(diff);
    if (rep.diffs.size() >= 2 && rep.diffs[rep.diffs.size() - 2] > 0.0)
      rep.contraction.push_back(diff / rep.diffs[rep.diffs.size() - 2]);
    F = std::move(next);
    rep.iterations = n + 1;
    if (diff <= cfg.iter_tol * scale) {
      rep.converged = true;
      break;
    }
  }
  rep.min_value = 0.0;
  for (const auto& f : F.at) rep.min_value = std::min(rep.min_value, min_value(f));
  rep.traj = std::move(F);
  return rep;
}

// --- linear absorption step ------------------------------------------------------

// Solves d_t u + v.grad_x u + a u = src along characteristics:
//   u(t) = S(t) f0 e^{-I(t)} + int_0^t e^{-(I(t) - S(t-tau) I(tau))} S(t-tau) src(tau) dtau
// with I(t) = int_0^t S(t-tau) a(tau) dtau, all integrals on the node grid.
inline Trajectory ks_linear_step(const DistributionField& f0, const Trajectory& absorb,
                                 const Trajectory& src, const TimeGrid& tg) {
  for (const auto& a : absorb.at) {
    if (min_value(a) < -nonneg_eps(a))
      throw std::domain_error("ks_linear_step: absorption trajectory must be non-negative");
  }
  const int n = tg.n_nodes();
  // I_j for all nodes
  std::vector<DistributionField> I;
  I.reserve(n);
  for (int i = 0; i < n; ++i) {
    DistributionField acc(f0.grid, tg.node(i));
    const std::vector<double> w = tg.weights_upto(i);
    for (int j = 0; j <= i; ++j) {
      if (w[j] == 0.0) continue;
      DistributionField s = free_stream(absorb.at[j], tg.node(i) - tg.node(j));
      for (std::size_t t = 0; t < acc.values.size(); ++t) acc.values[t] += w[j] * s.values[t];
    }
    I.push_back(std::move(acc));
  }
  Trajectory out{tg, {}};
  out.at.reserve(n);
  for (int i = 0; i < n; ++i) {
    DistributionField u = free_stream(f0, tg.node(i));
    for (std::size_t t = 0; t < u.values.size(); ++t) u.values[t] *= std::exp(-I[i].values[t]);
    const std::vector<double> w = tg.weights_upto(i);
    for (int j = 0; j <= i; ++j) {
      if (w[j] == 0.0) continue;
      DistributionField s = free_stream(src.at[j], tg.node(i) - tg.node(j));
      DistributionField Ij = free_stream(I[j], tg.node(i) - tg.node(j));
      for (std::size_t t = 0; t < u.values.size(); ++t)
        u.values[t] += w[j] * std::exp(-(I[i].values[t] - Ij.values[t])) * s.values[t];
    }
    u.time = tg.node(i);
    out.at.push_back(std::move(u));
  }
  return out;
}

// --- Kaniel-Shinbrot -------------------------------------------------------------

struct SandwichState {
  Trajectory h;  // lower envelope
  Trajectory g;  // upper envelope
  int n = 0;     // iteration index
  std::vector<double> gap_per_node;          // sup |g - h| at each time node, final iterate
  std::vector<double> gap_history;           // sup over nodes, per iteration
  std::vector<double> gap_ratios;            // consecutive gap ratios
  double monotonicity_certificate = 0.0;     // worst signed ordering violation (<= 0 is clean)
  double g2_vs_g1 = 0.0;                     // sup |g_2 - g_1| / scale
  bool beginning_condition_ok = false;
  bool converged = false;
  std::string failure;                       // empty when clean
};

struct KSReport {
  Trajectory f;  // returned common limit
  SandwichState state;
  PicardReport gain_only;
  double residual_scale = 0.0;  // sup of the limit
};

namespace detail {

// worst violation of a <= b (positive value = violation magnitude)
inline double ordering_violation(const Trajectory& a, const Trajectory& b) {
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < a.at.size(); ++i)
    for (std::size_t j = 0; j < a.at[i].values.size(); ++j)
      worst = std::max(worst, a.at[i].values[j] - b.at[i].values[j]);
  return worst;
}

inline std::vector<DistributionField> loss_nodes(const Trajectory& tr, const CollisionKernel& k,
                                                 const SphereRule& rule) {
  std::vector<DistributionField> out;
  out.reserve(tr.at.size());
  for (const auto& f : tr.at) out.push_back(loss_rate(f, k, rule));
  return out;
}

}  // namespace detail

inline KSReport kaniel_shinbrot(const DistributionField& f0, const CollisionKernel& k,
                                const SphereRule& rule, const SolverConfig& cfg) {
  KSReport rep;
  rep.gain_only = picard_gain_only(f0, k, rule, cfg);
  const TimeGrid tg = cfg.time_grid();
  SandwichState& st = rep.state;
  if (!rep.gain_only.converged) {
    st.failure = "gain-only solver did not converge (data too large?)";
    rep.f = rep.gain_only.traj;
    return rep;
  }

  Trajectory g = rep.gain_only.traj;  // g_1 = f^+
  Trajectory h = zero_trajectory(f0.grid, tg);  // h_1 = 0
  const double scale = std::max(trajectory_linf(g), 1e-300);
  rep.residual_scale = scale;
  const double eps = cfg.eps_nn_scale * scale;

  double worst_violation = -std::numeric_limits<double>::infinity();
  for (int n = 0; n < cfg.max_iters; ++n) {
    // g_{n+1}: absorption A[h_n], source Q+(g_n, g_n); h_{n+1}: roles swapped
    Trajectory a_h{tg, detail::loss_nodes(h, k, rule)};
    Trajectory a_g{tg, detail::loss_nodes(g, k, rule)};
    Trajectory q_g{tg, detail::gain_nodes(g, k, rule, cfg.gain)};
    Trajectory q_h{tg, detail::gain_nodes(h, k, rule, cfg.gain)};
    Trajectory g_next = ks_linear_step(f0, a_h, q_g, tg);
    Trajectory h_next = ks_linear_step(f0, a_g, q_h, tg);

    if (n == 0) {
      st.g2_vs_g1 = trajectory_linf_diff(g_next, g) / scale;
      const double zero_ok = detail::ordering_violation(h, h_next);  // 0 <= h_2
      st.beginning_condition_ok = zero_ok <= eps && detail::ordering_violation(h_next, g_next) <= eps &&
                                  detail::ordering_violation(g_next, g) <= eps;
    }
    worst_violation = std::max(worst_violation, detail::ordering_violation(h, h_next));
    worst_violation = std::max(worst_violation, detail::ordering_violation(h_next, g_next));
    worst_violation = std::max(worst_violation, detail::ordering_violation(g_next, g));

    h = std::move(h_next);
    g = std::move(g_next);
    st.n = n + 1;

    double gap = 0.0;
    st.gap_per_node.assign(tg.n_nodes(), 0.0);
    for (int i = 0; i < tg.n_nodes(); ++i) {
      double m = 0.0;
      for (std::size_t t = 0; t < g.at[i].values.size(); ++t)
        m = std::max(m, std::abs(g.at[i].values[t] - h.at[i].values[t]));
      st.gap_per_node[i] = m;
      gap = std::max(gap, m);
    }
    st.gap_history.push_back(gap);
    if (st.gap_history.size() >= 2 && st.gap_history[st.gap_history.size() - 2] > 0.0)
      st.gap_ratios.push_back(gap / st.gap_history[st.gap_history.size() - 2]);
    if (gap <= cfg.iter_tol * scale) {
      st.converged = true;
      break;
    }
    if (st.gap_ratios.size() >= 3) {
      const std::size_t m = st.gap_ratios.size();
      if (st.gap_ratios[m - 1] >= 1.0 && st.gap_ratios[m - 2] >= 1.0 && st.gap_ratios[m - 3] >= 1.0) {
        st.failure = "gap stagnation";
        break;
      }
    }
  }
  st.monotonicity_certificate = worst_violation;
  if (worst_violation > eps && st.failure.empty())
    st.failure = "monotonicity violation beyond eps_nn (quadrature too coarse or data too large)";
  st.h = h;
  st.g = std::move(g);

  // common limit: midpoint of the final envelopes
  Trajectory f{tg, {}};
  f.at.reserve(tg.n_nodes());
  for (int i = 0; i < tg.n_nodes(); ++i) {
    DistributionField m = st.g.at[i];
    for (std::size_t t = 0; t < m.values.size(); ++t)
      m.values[t] = 0.5 * (m.values[t] + st.h.at[i].values[t]);
    f.at.push_back(std::move(m));
  }
  rep.f = std::move(f);
  return rep;
}

// Duhamel residual of a trajectory against the full collision operator:
// max_i || f(t_i) - S(t_i) f0 - sum_j w_ij S(t_i - t_j) Q(f(t_j)) ||_2,
// relative to max_i || f(t_i) ||_2.
inline double duhamel_residual(const Trajectory& tr, const DistributionField& f0,
                               const CollisionKernel& k, const SphereRule& rule,
                               const GainOpts& opt = {}) {
  const TimeGrid& tg = tr.tg;
  std::vector<DistributionField> q;
  q.reserve(tr.at.size());
  for (const auto& f : tr.at) q.push_back(collision_full(f, k, rule, opt));
  Trajectory rhs = detail::duhamel_from_nodes(f0, q, tg);
  double num = 0.0, den = 1e-300;
  for (std::size_t i = 0; i < tr.at.size(); ++i) {
    num = std::max(num, l2_norm(tr.at[i] - rhs.at[i]));
    den = std::max(den, l2_norm(tr.at[i]));
  }
  return num / den;
}

// --- uniqueness residual ------------------------------------------------------------

// W = ||w||_{L^inf(0,T; L_v^{2,s+gamma} L_x^2)} + ||N[w]||_{L^1(0,T; L_v^{2,s+gamma} L_x^2)}
// with w = f - g and N[w] = Q+(w,f) + Q+(g,w) - Q-(w,f) - Q-(g,w).
inline double uniqueness_residual(const Trajectory& f, const Trajectory& g,
                                  const CollisionKernel& k, const SphereRule& rule, double s,
                                  const GainOpts& opt = {}) {
  if (f.at.size() != g.at.size()) throw std::invalid_argument("uniqueness_residual: trajectories differ");
  const double r = s + k.gamma;
  const NormSpec ns{0.0, r, Mix::Lv2Lxp, 2.0, 2.0, WeightKind::japanese_bracket};
  const TimeGrid& tg = f.tg;
  double sup_w = 0.0, l1_n = 0.0;
  const std::vector<double> wq = tg.weights_upto(tg.n_steps());
  for (int i = 0; i < tg.n_nodes(); ++i) {
    DistributionField w = f.at[i] - g.at[i];
    sup_w = std::max(sup_w, weighted_norm(w, ns));
    // N[w] assembled from the four bilinear pieces
    DistributionField nw = gain_direct(w, f.at[i], k, rule, opt) + gain_direct(g.at[i], w, k, rule, opt);
    DistributionField af = loss_rate(f.at[i], k, rule);
    DistributionField aw = loss_rate(w, k, rule);
    for (std::size_t t = 0; t < nw.values.size(); ++t)
      nw.values[t] -= w.values[t] * af.values[t] + g.at[i].values[t] * aw.values[t];
    l1_n += wq[i] * weighted_norm(nw, ns);
  }
  return sup_w + l1_n;
}

}  // namespace boltzlab
