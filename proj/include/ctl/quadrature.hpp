#pragma once

#include "ctl/common.hpp"

#include <functional>

namespace ctl {

// Deterministic quadrature rule: a flat list of nodes and weights.
// 1-D rules integrate over an interval; 2-D rules are tensor products.
struct Quadrature1D {
  Vector nodes;
  Vector weights;

  double integrate(const std::function<double(double)>& f) const {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < nodes.size(); ++i) {
      acc += weights[i] * f(nodes[i]);
    }
    return acc;
  }
};

struct Quadrature2D {
  Matrix nodes;    // one row per node, two columns
  Vector weights;

  double integrate(const std::function<double(const Vector&)>& f) const {
    double acc = 0.0;
    Vector x(2);
    for (Eigen::Index i = 0; i < weights.size(); ++i) {
      x = nodes.row(i).transpose();
      acc += weights[i] * f(x);
    }
    return acc;
  }
};

// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
void gauss_legendre_reference(int n, Vector& nodes, Vector& weights);

// Composite Gauss-Legendre rule on [lo, hi]: `panels` equal panels with
// `points_per_panel` nodes each.
Quadrature1D composite_gauss_legendre(double lo, double hi, int panels = 32,
                                      int points_per_panel = 64);

// Default 1-D rule for densities with scale parameter sigma_max:
// 2048 nodes on [-12 sigma_max, 12 sigma_max].
Quadrature1D default_density_quadrature(double sigma_max);

Quadrature2D tensor_product(const Quadrature1D& qx, const Quadrature1D& qy);

}  // namespace ctl
