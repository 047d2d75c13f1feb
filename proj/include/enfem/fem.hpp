#pragma once

// Assembly, essential boundary conditions, sparse solves, interpolation and
// error norms on continuous Lagrange spaces.

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "enfem/field.hpp"
#include "enfem/lagrange.hpp"
#include "enfem/problem.hpp"
#include "enfem/quadrature.hpp"

namespace enfem {

using SparseMatrix = Eigen::SparseMatrix<double>;

struct SparseSystem {
  SparseMatrix matrix;
  Eigen::VectorXd rhs;
};

template <int Dim>
using ScalarFn = std::function<double(const Point<Dim>&)>;

// Vectorised scalar field: fills out[i] with the value at x[i].
template <int Dim>
using BatchFn = std::function<void(std::span<const Point<Dim>>, std::span<double>)>;

// Basis values and gradients at the points of a reference quadrature rule.
template <int Dim>
struct Tabulation {
  QuadratureRule<Dim> rule;
  int n_basis = 0;
  std::vector<double> values;     // [q * n_basis + i]
  std::vector<double> gradients;  // [(q * n_basis + i) * Dim + d], reference coordinates

  double value(int q, int i) const { return values[q * n_basis + i]; }
  double gradient(int q, int i, int d) const { return gradients[(q * n_basis + i) * Dim + d]; }
};

template <int Dim>
Tabulation<Dim> tabulate(const LagrangeBasis<Dim>& basis, int quad_degree);

// Physical gradients of all basis functions at one quadrature point.
template <int Dim>
void physical_gradients(const Tabulation<Dim>& tab, const CellGeometry<Dim>& geo, int q, double* out);

// Outward unit normal and measure of a boundary facet.
template <int Dim>
struct FacetGeometry {
  Point<Dim> normal;
  double measure = 0.0;
};

template <int Dim>
FacetGeometry<Dim> facet_geometry(const LagrangeSpace<Dim>& space, int facet);

// Reference coordinates of the point at parameter t in [0,1] along a local
// facet (ignored in 1D).
template <int Dim>
Point<Dim> facet_point(int local_facet, double t);

// Throws CoefficientError unless D is symmetric with no negative eigenvalue.
template <int Dim>
void check_diffusion(const Eigen::Matrix<double, Dim, Dim>& d, const Point<Dim>& x);

// a(u,v) = (1/Pe) (D grad u, grad v) + (R u, v) + (C . grad u, v)
//          + alpha <u, v> on Robin facets.
template <int Dim>
SparseMatrix assemble_bilinear(const LagrangeSpace<Dim>& space, const ProblemCoefficients<Dim>& coeffs,
                               int quad_degree);

// l(v) = (f, v) + <g_R, v> on Robin facets, by direct quadrature.
template <int Dim>
Eigen::VectorXd assemble_linear(const LagrangeSpace<Dim>& space, const ProblemCoefficients<Dim>& coeffs,
                                int quad_degree);

// (f, v) by direct quadrature.
template <int Dim>
Eigen::VectorXd assemble_linear(const LagrangeSpace<Dim>& space, const ScalarFn<Dim>& source, int quad_degree);

// (f, v) with f replaced cell by cell by its degree-m Lagrange interpolant,
// then integrated exactly.
template <int Dim>
Eigen::VectorXd assemble_interpolated_load(const LagrangeSpace<Dim>& space, const BatchFn<Dim>& source, int m);

// Degree-m equispaced nodes of every cell, cell-major.
template <int Dim>
std::vector<Point<Dim>> interpolation_nodes(const LagrangeSpace<Dim>& space, int m);

// <g, v> over facets carrying the marker; g receives (x, outward normal).
template <int Dim>
Eigen::VectorXd assemble_boundary_load(const LagrangeSpace<Dim>& space, BoundaryMarker marker,
                                       const std::function<double(const Point<Dim>&, const Point<Dim>&)>& g,
                                       int quad_degree);

// Symmetric elimination of constrained dofs: couplings move to the right
// hand side and constrained rows become identity rows.
void apply_dirichlet(SparseSystem& system, std::span<const int> dofs, std::span<const double> values);

template <int Dim>
void apply_dirichlet(SparseSystem& system, const LagrangeSpace<Dim>& space, BoundaryMarker marker,
                     const ScalarFn<Dim>& boundary_values);

// Direct sparse LU. Throws SolverError when the factorisation fails or the
// relative residual exceeds 1e-10.
Eigen::VectorXd solve_linear(const SparseSystem& system);

template <int Dim>
class PointLocator;

template <int Dim>
struct DiscreteField {
  const LagrangeSpace<Dim>* space = nullptr;
  Eigen::VectorXd coeffs;

  // Value and gradient inside a given cell at reference coordinates.
  double value_in_cell(int cell, const Point<Dim>& xi) const;
  Jet<Dim, 1> jet_in_cell(int cell, const Point<Dim>& xi) const;
};

template <int Dim>
DiscreteField<Dim> interpolate(const LagrangeSpace<Dim>& space, const ScalarFn<Dim>& field);

template <int Dim>
DiscreteField<Dim> interpolate(const LagrangeSpace<Dim>& space, const BatchFn<Dim>& field);

// Finds the cell containing a point on a simplicial mesh.
template <int Dim>
class PointLocator {
 public:
  explicit PointLocator(const Mesh<Dim>& mesh);

  struct Hit {
    int cell;
    Point<Dim> xi;
  };
  // Points outside the mesh snap to the closest cell.
  Hit locate(const Point<Dim>& x) const;

 private:
  const Mesh<Dim>* mesh_;
  std::vector<CellGeometry<Dim>> geo_;
  Point<Dim> lo_{}, cell_size_{};
  std::array<int, Dim> n_bins_{};
  std::vector<std::vector<int>> bins_;

  int bin_index(const std::array<int, Dim>& b) const;
  Point<Dim> to_reference(int cell, const Point<Dim>& x) const;
};

// A discrete field seen as a differentiable field (Hessian set to zero),
// evaluated anywhere in its mesh.
template <int Dim>
class DiscreteFieldEvaluator final : public DifferentiableField<Dim> {
 public:
  explicit DiscreteFieldEvaluator(DiscreteField<Dim> field);

  using DifferentiableField<Dim>::evaluate;
  void evaluate(std::span<const Point<Dim>> x, std::span<Jet<Dim, 2>> out) const override;

  const DiscreteField<Dim>& field() const { return field_; }

 private:
  DiscreteField<Dim> field_;
  std::shared_ptr<PointLocator<Dim>> locator_;
};

// How a discrete correction becomes an approximation of u:
//   Plain: u_h;  Additive: u_theta + p_h;  Multiplicative: (u_theta + M) p_h - M.
enum class ReconstructionKind { Plain, Additive, Multiplicative };

template <int Dim>
struct Reconstruction {
  ReconstructionKind kind = ReconstructionKind::Plain;
  const DifferentiableField<Dim>* prior = nullptr;
  double lift = 0.0;
};

struct ErrorNorms {
  double l2_error = 0.0;
  double h1_error = 0.0;  // H1 seminorm
  double l2_norm = 0.0;   // of the reference
  double h1_norm = 0.0;

  double relative_l2() const { return l2_norm > 0.0 ? l2_error / l2_norm : l2_error; }
  double relative_h1() const { return h1_norm > 0.0 ? h1_error / h1_norm : h1_error; }
};

template <int Dim>
ErrorNorms error_norms(const DiscreteField<Dim>& discrete, const DifferentiableField<Dim>& reference,
                       int quad_degree, const Reconstruction<Dim>& recon = {});

// Errors of a field alone (no finite element part), integrated on a mesh.
template <int Dim>
ErrorNorms field_error_norms(const LagrangeSpace<Dim>& space, const DifferentiableField<Dim>& approx,
                             const DifferentiableField<Dim>& reference, int quad_degree);

}  // namespace enfem
