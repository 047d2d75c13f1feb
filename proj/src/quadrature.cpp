#include "enfem/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace enfem {

QuadratureRule<1> gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("Gauss-Legendre rule needs at least one point");
  QuadratureRule<1> q;
  q.points.resize(n);
  q.weights.resize(n);
  q.degree = 2 * n - 1;
  for (int i = 0; i < (n + 1) / 2; ++i) {
    // Newton on P_n starting from the Chebyshev-like guess
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    // map [-1,1] -> [0,1]
    q.points[i][0] = 0.5 * (1.0 - x);
    q.points[n - 1 - i][0] = 0.5 * (1.0 + x);
    q.weights[i] = 0.5 * w;
    q.weights[n - 1 - i] = 0.5 * w;
  }
  if (n % 2 == 1) q.points[n / 2][0] = 0.5;
  return q;
}

template <>
QuadratureRule<1> simplex_quadrature<1>(int degree) {
  const int n = std::max(1, (degree + 2) / 2);
  auto q = gauss_legendre(n);
  return q;
}

template <>
QuadratureRule<2> simplex_quadrature<2>(int degree) {
  // x = u, y = v (1 - u); the Jacobian (1 - u) raises the u-degree by one.
  const int nu = std::max(1, (degree + 3) / 2);
  const int nv = std::max(1, (degree + 2) / 2);
  const auto gu = gauss_legendre(nu);
  const auto gv = gauss_legendre(nv);
  QuadratureRule<2> q;
  q.degree = degree;
  for (int i = 0; i < nu; ++i) {
    const double u = gu.points[i][0];
    for (int j = 0; j < nv; ++j) {
      const double v = gv.points[j][0];
      q.points.push_back({u, v * (1.0 - u)});
      q.weights.push_back(gu.weights[i] * gv.weights[j] * (1.0 - u));
    }
  }
  return q;
}

}  // namespace enfem
