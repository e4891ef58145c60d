#include "ctl/quadrature.hpp"

#include <cmath>
#include <stdexcept>

namespace ctl {

void gauss_legendre_reference(int n, Vector& nodes, Vector& weights) {
  if (n < 1) {
    throw std::invalid_argument("gauss_legendre_reference: n must be >= 1");
  }
  nodes.resize(n);
  weights.resize(n);
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    // Chebyshev-based initial guess, then Newton on P_n.
    double x = std::cos(kPi * (double(i) + 0.75) / (double(n) + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / double(k);
        p0 = p1;
        p1 = p2;
      }
      dp = double(n) * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    nodes[i] = -x;
    nodes[n - 1 - i] = x;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    weights[i] = w;
    weights[n - 1 - i] = w;
  }
}

Quadrature1D composite_gauss_legendre(double lo, double hi, int panels,
                                      int points_per_panel) {
  if (!(hi > lo)) {
    throw std::invalid_argument("composite_gauss_legendre: need hi > lo");
  }
  if (panels < 1 || points_per_panel < 1) {
    throw std::invalid_argument("composite_gauss_legendre: bad rule size");
  }
  Vector ref_nodes, ref_weights;
  gauss_legendre_reference(points_per_panel, ref_nodes, ref_weights);

  const Eigen::Index total = Eigen::Index(panels) * points_per_panel;
  Quadrature1D q;
  q.nodes.resize(total);
  q.weights.resize(total);
  const double width = (hi - lo) / double(panels);
  for (int p = 0; p < panels; ++p) {
    const double a = lo + width * double(p);
    const double mid = a + 0.5 * width;
    const double scale = 0.5 * width;
    for (int j = 0; j < points_per_panel; ++j) {
      const Eigen::Index k = Eigen::Index(p) * points_per_panel + j;
      q.nodes[k] = mid + scale * ref_nodes[j];
      q.weights[k] = scale * ref_weights[j];
    }
  }
  return q;
}

Quadrature1D default_density_quadrature(double sigma_max) {
  if (!(sigma_max > 0.0)) {
    throw std::invalid_argument("default_density_quadrature: sigma_max must be positive");
  }
  return composite_gauss_legendre(-12.0 * sigma_max, 12.0 * sigma_max, 32, 64);
}

Quadrature2D tensor_product(const Quadrature1D& qx, const Quadrature1D& qy) {
  const Eigen::Index nx = qx.nodes.size();
  const Eigen::Index ny = qy.nodes.size();
  Quadrature2D q;
  q.nodes.resize(nx * ny, 2);
  q.weights.resize(nx * ny);
  for (Eigen::Index i = 0; i < nx; ++i) {
    for (Eigen::Index j = 0; j < ny; ++j) {
      const Eigen::Index k = i * ny + j;
      q.nodes(k, 0) = qx.nodes[i];
      q.nodes(k, 1) = qy.nodes[j];
      q.weights[k] = qx.weights[i] * qy.weights[j];
    }
  }
  return q;
}

}  // namespace ctl
