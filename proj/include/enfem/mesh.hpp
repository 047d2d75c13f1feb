#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "enfem/jet.hpp"

namespace enfem {

enum class BoundaryMarker { All = 0, Outer = 1, Inner = 2 };

std::string to_string(BoundaryMarker m);

template <int Dim>
struct BoundaryFacet {
  std::array<int, Dim> nodes;
  BoundaryMarker marker;
};

// Simplicial mesh: segments in 1D, counter-clockwise triangles in 2D.
// Immutable once built.
template <int Dim>
struct Mesh {
  static constexpr int nodes_per_cell = Dim + 1;

  std::vector<Point<Dim>> nodes;
  std::vector<std::array<int, Dim + 1>> cells;
  std::vector<BoundaryFacet<Dim>> facets;
  double h = 0.0;  // longest edge

  int num_nodes() const { return static_cast<int>(nodes.size()); }
  int num_cells() const { return static_cast<int>(cells.size()); }

  double cell_measure(int cell) const;
  bool has_marker(BoundaryMarker m) const;
};

Mesh<1> build_interval_mesh(int n_nodes, double a, double b);
Mesh<2> build_square_mesh(int n, double x_min, double x_max, double y_min, double y_max);
Mesh<2> build_annulus_mesh(int n_r, int n_t, double r_in, double r_out);

// Longest edge, recomputed by enumerating every cell edge.
template <int Dim>
double longest_edge(const Mesh<Dim>& mesh);

// Plain-text dump: header `dim N_nodes N_cells N_facets`, then nodes,
// cells and facets (facet lines end with the marker id).
template <int Dim>
void write_mesh(std::ostream& os, const Mesh<Dim>& mesh);

}  // namespace enfem
