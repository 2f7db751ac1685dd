#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <random>
#include <stdexcept>
#include <vector>

#include "gravidec/constants.hpp"
#include "gravidec/linalg.hpp"
#include "gravidec/parallel.hpp"
#include "gravidec/rng.hpp"

// Propagation directions, circular polarization vectors/tensors in the TT
// gauge, and angular averaging over the sphere <f>_n = (1/4pi) int d^2n f.

namespace gravidec {

struct Direction {
  double theta = 0.0;  // polar angle, [0, pi]
  double phi = 0.0;    // azimuth, [0, 2pi)

  Vec3 unit_vector() const {
    const double st = std::sin(theta);
    return {st * std::cos(phi), st * std::sin(phi), std::cos(theta)};
  }

  // Direction of the opposite wavevector -k.
  Direction antipode() const {
    double p = phi + constants::pi;
    if (p >= constants::two_pi) p -= constants::two_pi;
    return {constants::pi - theta, p};
  }
};

// Circular polarization vector e^gamma for propagation direction n.
// Fixed basis:
//   e1 = -cos(theta)cos(phi) + i gamma sin(phi)
//   e2 = -cos(theta)sin(phi) - i gamma cos(phi)
//   e3 =  sin(theta)
// Satisfies n.e = 0, e.e = 0, e.e* = 2, and conj(e(n, gamma)) = e(-n, gamma).
inline CVec3 polarization_vector(const Direction& d, int helicity) {
  if (helicity != 1 && helicity != -1)
    throw std::invalid_argument("polarization_vector: helicity must be +1 or -1");
  const double ct = std::cos(d.theta), st = std::sin(d.theta);
  const double cp = std::cos(d.phi), sp = std::sin(d.phi);
  const double g = static_cast<double>(helicity);
  return {cdouble(-ct * cp, g * sp), cdouble(-ct * sp, -g * cp), cdouble(st, 0.0)};
}

// Polarization tensor T_ij = e_i e_j / sqrt(2): symmetric, traceless,
// transverse, Frobenius norm^2 = 2.
inline CMat3 polarization_tensor(const Direction& d, int helicity) {
  const CVec3 e = polarization_vector(d, helicity);
  const cdouble c[3] = {e.x, e.y, e.z};
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  CMat3 t{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) t[i][j] = c[i] * c[j] * inv_sqrt2;
  return t;
}

namespace detail {

// Gauss-Legendre nodes/weights on [-1, 1] by Newton iteration on P_n.
inline void gauss_legendre_rule(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double xi = std::cos(constants::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = xi;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1.0) * xi * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (xi * p1 - p0) / (xi * xi - 1.0);
      double dx = p1 / dp;
      xi -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    // one polishing pass for the weight
    double p0 = 1.0, p1 = xi;
    for (int k = 2; k <= n; ++k) {
      double p2 = ((2.0 * k - 1.0) * xi * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (xi * p1 - p0) / (xi * xi - 1.0);
    x[i] = -xi;
    x[n - 1 - i] = xi;
    double wi = 2.0 / ((1.0 - xi * xi) * dp * dp);
    w[i] = wi;
    w[n - 1 - i] = wi;
  }
}

}  // namespace detail

// Quadrature rule for the normalized spherical mean.  Two flavours:
//  - product rule: Gauss-Legendre in cos(theta) x uniform trapezoid in phi
//    (exact for polynomials in cos(theta) up to degree 2*n_theta-1 times
//    trigonometric polynomials in phi up to order n_phi-1);
//  - uniform Monte Carlo on the sphere (seeded).
// Weights sum to 1.  Nodes are computed once at construction.
class AngularQuadrature {
 public:
  struct Node {
    Direction dir;
    double weight;
  };

  // Exposed structure of the product rule (theta-major node order); lets
  // integrands with separable theta/phi structure cache per-row work.
  struct ProductGrid {
    std::vector<double> cos_theta;     // Gauss-Legendre nodes
    std::vector<double> theta_weight;  // normalized: sum = 1 after / n_phi
    int n_phi = 0;
  };

  static AngularQuadrature gauss_legendre(int n_theta, int n_phi) {
    if (n_theta < 1 || n_phi < 1)
      throw std::invalid_argument("AngularQuadrature: node counts must be >= 1");
    AngularQuadrature q;
    std::vector<double> x, w;
    detail::gauss_legendre_rule(n_theta, x, w);
    q.grid_ = std::make_shared<ProductGrid>();
    q.grid_->n_phi = n_phi;
    q.grid_->cos_theta = x;
    q.grid_->theta_weight.resize(n_theta);
    q.nodes_.reserve(static_cast<std::size_t>(n_theta) * n_phi);
    for (int i = 0; i < n_theta; ++i) {
      const double theta = std::acos(x[i]);
      const double wt = 0.5 * w[i];
      q.grid_->theta_weight[i] = wt;
      for (int j = 0; j < n_phi; ++j)
        q.nodes_.push_back({{theta, constants::two_pi * j / n_phi}, wt / n_phi});
    }
    return q;
  }

  static AngularQuadrature monte_carlo(std::size_t n, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("AngularQuadrature: sample count must be >= 1");
    AngularQuadrature q;
    q.nodes_.reserve(n);
    auto rng = make_engine(seed, 0x5f3a);
    std::uniform_real_distribution<double> u11(-1.0, 1.0), u02(0.0, constants::two_pi);
    const double w = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double u = u11(rng);
      q.nodes_.push_back({{std::acos(u), u02(rng)}, w});
    }
    return q;
  }

  const std::vector<Node>& nodes() const { return nodes_; }
  const ProductGrid* product_grid() const { return grid_.get(); }

  // Normalized mean over the sphere.  Deterministic regardless of `jobs`
  // (fixed-size chunks combined in index order).
  template <class F>
  double average(F&& f, unsigned jobs = 1) const {
    const auto& nd = nodes_;
    return parallel_sum(nd.size(), 256, jobs,
                        [&](std::size_t i) { return nd[i].weight * f(nd[i].dir); });
  }

 private:
  std::vector<Node> nodes_;
  std::shared_ptr<ProductGrid> grid_;  // product rules only
};

template <class F>
double angular_average(F&& f, const AngularQuadrature& q, unsigned jobs = 1) {
  return q.average(std::forward<F>(f), jobs);
}

}  // namespace gravidec
