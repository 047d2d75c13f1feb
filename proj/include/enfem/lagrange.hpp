#pragma once

#include <map>
#include <vector>

#include <Eigen/Dense>

#include "enfem/mesh.hpp"

namespace enfem {

// Equispaced Lagrange basis of a given degree on the reference simplex.
// Local node order: vertices, then edge nodes (edges v0->v1, v1->v2,
// v2->v0, each walked from its first vertex), then interior nodes.
template <int Dim>
class LagrangeBasis {
 public:
  explicit LagrangeBasis(int degree);

  int degree() const { return degree_; }
  int size() const { return static_cast<int>(nodes_.size()); }
  const std::vector<Point<Dim>>& nodes() const { return nodes_; }

  void values(const Point<Dim>& xi, double* out) const;
  // out is size() x Dim, row-major
  void gradients(const Point<Dim>& xi, double* out) const;

 private:
  int degree_;
  std::vector<Point<Dim>> nodes_;
  std::vector<std::array<int, Dim>> exponents_;
  Eigen::MatrixXd coeffs_;  // column i holds the monomial coefficients of basis i
};

// Affine map of a simplex: x = x0 + J xi.
template <int Dim>
struct CellGeometry {
  Point<Dim> origin;
  Eigen::Matrix<double, Dim, Dim> jacobian;
  Eigen::Matrix<double, Dim, Dim> inverse_transpose;
  double det = 0.0;

  Point<Dim> map(const Point<Dim>& xi) const {
    Point<Dim> x = origin;
    for (int r = 0; r < Dim; ++r)
      for (int c = 0; c < Dim; ++c) x[r] += jacobian(r, c) * xi[c];
    return x;
  }
};

template <int Dim>
CellGeometry<Dim> cell_geometry(const Mesh<Dim>& mesh, int cell);

// Continuous Lagrange space of degree k on a mesh.
template <int Dim>
class LagrangeSpace {
 public:
  LagrangeSpace(const Mesh<Dim>& mesh, int degree);
  // The space refers to the mesh, which must outlive it.
  LagrangeSpace(Mesh<Dim>&&, int) = delete;

  const Mesh<Dim>& mesh() const { return *mesh_; }
  int degree() const { return basis_.degree(); }
  const LagrangeBasis<Dim>& basis() const { return basis_; }
  int num_dofs() const { return static_cast<int>(dof_coords_.size()); }
  int dofs_per_cell() const { return basis_.size(); }

  const std::vector<Point<Dim>>& dof_coords() const { return dof_coords_; }
  const std::vector<int>& cell_dofs(int cell) const { return cell_dofs_[cell]; }
  const CellGeometry<Dim>& geometry(int cell) const { return geometry_[cell]; }

  // Sorted, unique dofs lying on facets carrying the marker.
  const std::vector<int>& boundary_dofs(BoundaryMarker m) const;

  // Boundary facet -> (cell, local facet), indexed like mesh().facets.
  // In 2D local facet f joins local vertices f and (f+1)%3; in 1D it is
  // local vertex f.
  struct FacetCell {
    int cell;
    int local_facet;
  };
  const std::vector<FacetCell>& facet_cells() const { return facet_cells_; }

  // Local dof indices lying on a local facet, in cell-local numbering.
  std::vector<int> local_facet_dofs(int local_facet) const;

 private:
  const Mesh<Dim>* mesh_;
  LagrangeBasis<Dim> basis_;
  std::vector<Point<Dim>> dof_coords_;
  std::vector<std::vector<int>> cell_dofs_;
  std::vector<CellGeometry<Dim>> geometry_;
  std::map<BoundaryMarker, std::vector<int>> boundary_dofs_;
  std::vector<FacetCell> facet_cells_;
};

}  // namespace enfem
