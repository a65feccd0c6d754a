// Quadrature rules: Gauss-Legendre, the S^2 product rule used by the collision
// integrals (GL in cos(theta) x uniform trapezoid in azimuth), and the small
// classic Lebedev sets as an optional alternative.
//
// The product rule splits the cos(theta) interval at 0 into two GL panels, so
// angular factors with a kink there (the default b(z) = |z|) are integrated at
// panel-polynomial exactness. Node layout is symmetric under z -> -z, which
// the mode-space collision engine relies on.
#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "boltzlab/common.hpp"

namespace boltzlab {

// Gauss-Legendre nodes/weights on [-1, 1] by Newton iteration.
inline void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double t = std::cos(pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = t;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (t * p1 - p0) / (t * t - 1.0);
      const double dt = p1 / dp;
      t -= dt;
      if (std::abs(dt) < 1e-15) break;
    }
    x[i] = -t;
    x[n - 1 - i] = t;
    const double ww = 2.0 / ((1.0 - t * t) * dp * dp);
    w[i] = ww;
    w[n - 1 - i] = ww;
  }
}

// GL rule mapped to [a, b].
inline void gauss_legendre_ab(int n, double a, double b, std::vector<double>& x,
                              std::vector<double>& w) {
  gauss_legendre(n, x, w);
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  for (int i = 0; i < n; ++i) {
    x[i] = mid + half * x[i];
    w[i] *= half;
  }
}

struct SphereRule {
  // flat node list in the canonical frame (polar axis = z), weights sum to 4 pi
  std::vector<Vec3> nodes;
  std::vector<double> weights;

  // product structure (empty for Lebedev rules)
  std::vector<double> cos_nodes;     // z_i
  std::vector<double> cos_weights;   // GL weights, sum = 2
  std::vector<double> sin_nodes;     // sqrt(1 - z_i^2)
  std::vector<double> phi_cos, phi_sin;
  double phi_weight = 0.0;           // 2 pi / n_phi
  int n_theta = 0, n_phi = 0;
  std::string name;

  bool is_product() const { return n_phi > 0; }

  static SphereRule product(int n_theta, int n_phi) {
    if (n_theta < 1 || n_phi < 1) throw std::invalid_argument("SphereRule: node counts must be positive");
    SphereRule r;
    r.n_theta = n_theta;
    r.n_phi = n_phi;
    r.name = "gl" + std::to_string(n_theta) + "x" + std::to_string(n_phi);
    if (n_theta % 2 == 0) {
      // split panels [-1,0] and [0,1]: exact for piecewise-polynomial b with a
      // kink at z = 0, and node-symmetric under z -> -z
      std::vector<double> xm, wm, xp, wp;
      gauss_legendre_ab(n_theta / 2, -1.0, 0.0, xm, wm);
      gauss_legendre_ab(n_theta / 2, 0.0, 1.0, xp, wp);
      r.cos_nodes = xm;
      r.cos_nodes.insert(r.cos_nodes.end(), xp.begin(), xp.end());
      r.cos_weights = wm;
      r.cos_weights.insert(r.cos_weights.end(), wp.begin(), wp.end());
    } else {
      gauss_legendre(n_theta, r.cos_nodes, r.cos_weights);
    }
    r.sin_nodes.resize(n_theta);
    for (int i = 0; i < n_theta; ++i)
      r.sin_nodes[i] = std::sqrt(std::max(0.0, 1.0 - r.cos_nodes[i] * r.cos_nodes[i]));
    r.phi_weight = two_pi / n_phi;
    r.phi_cos.resize(n_phi);
    r.phi_sin.resize(n_phi);
    for (int j = 0; j < n_phi; ++j) {
      const double phi = r.phi_weight * j;
      r.phi_cos[j] = std::cos(phi);
      r.phi_sin[j] = std::sin(phi);
    }
    r.nodes.reserve(static_cast<std::size_t>(n_theta) * n_phi);
    r.weights.reserve(r.nodes.capacity());
    for (int i = 0; i < n_theta; ++i) {
      for (int j = 0; j < n_phi; ++j) {
        r.nodes.push_back(Vec3{r.sin_nodes[i] * r.phi_cos[j], r.sin_nodes[i] * r.phi_sin[j], r.cos_nodes[i]});
        r.weights.push_back(r.cos_weights[i] * r.phi_weight);
      }
    }
    return r;
  }

  // Classic octahedral Lebedev sets (degrees 3, 5, 7).
  static SphereRule lebedev(int order) {
    SphereRule r;
    r.name = "lebedev" + std::to_string(order);
    auto add = [&](Vec3 p, double w) {
      r.nodes.push_back(p);
      r.weights.push_back(w * four_pi);
    };
    const double s = 1.0 / std::sqrt(2.0);
    const double c = 1.0 / std::sqrt(3.0);
    auto add_axes = [&](double w) {
      for (int a = 0; a < 3; ++a)
        for (int sgn : {-1, 1}) {
          Vec3 p{0, 0, 0};
          p[a] = sgn;
          add(p, w);
        }
    };
    auto add_diagonals = [&](double w) {
      for (int sx : {-1, 1})
        for (int sy : {-1, 1})
          for (int sz : {-1, 1}) add(Vec3{sx * c, sy * c, sz * c}, w);
    };
    auto add_edges = [&](double w) {
      for (int a = 0; a < 3; ++a) {
        const int b = (a + 1) % 3;
        for (int sa : {-1, 1})
          for (int sb : {-1, 1}) {
            Vec3 p{0, 0, 0};
            p[a] = sa * s;
            p[b] = sb * s;
            add(p, w);
          }
      }
    };
    switch (order) {
      case 6: add_axes(1.0 / 6.0); break;
      case 14:
        add_axes(1.0 / 15.0);
        add_diagonals(3.0 / 40.0);
        break;
      case 26:
        add_axes(1.0 / 21.0);
        add_edges(4.0 / 105.0);
        add_diagonals(27.0 / 840.0);
        break;
      default:
        throw std::invalid_argument("SphereRule::lebedev: supported orders are 6, 14, 26");
    }
    return r;
  }

  double weight_sum() const {
    double s = 0.0;
    for (double w : weights) s += w;
    return s;
  }

  void validate() const {
    if (std::abs(weight_sum() - four_pi) > 1e-10)
      throw std::logic_error("SphereRule: weights do not sum to 4 pi");
    for (const Vec3& n : nodes) {
      if (std::abs(norm(n) - 1.0) > 1e-14) throw std::logic_error("SphereRule: node off the unit sphere");
    }
  }
};

}  // namespace boltzlab
