#pragma once

#include <vector>

#include "enfem/jet.hpp"

namespace enfem {

// Quadrature on the reference simplex ([0,1] in 1D, the unit right
// triangle in 2D). `degree` is the highest polynomial degree integrated
// exactly.
template <int Dim>
struct QuadratureRule {
  std::vector<Point<Dim>> points;
  std::vector<double> weights;
  int degree = 0;

  int size() const { return static_cast<int>(points.size()); }
};

// n-point Gauss-Legendre rule on [0, 1].
QuadratureRule<1> gauss_legendre(int n);

// Gauss rule in 1D, collapsed (Duffy) Gauss product rule on triangles.
template <int Dim>
QuadratureRule<Dim> simplex_quadrature(int degree);

}  // namespace enfem
