#include "enfem/lagrange.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace enfem {

namespace {

template <int Dim>
std::vector<Point<Dim>> reference_nodes(int k) {
  std::vector<Point<Dim>> n;
  const double dk = static_cast<double>(k);
  if constexpr (Dim == 1) {
    n.push_back({0.0});
    n.push_back({1.0});
    for (int i = 1; i < k; ++i) n.push_back({i / dk});
  } else {
    n.push_back({0.0, 0.0});
    n.push_back({1.0, 0.0});
    n.push_back({0.0, 1.0});
    for (int i = 1; i < k; ++i) n.push_back({i / dk, 0.0});
    for (int i = 1; i < k; ++i) n.push_back({(k - i) / dk, i / dk});
    for (int i = 1; i < k; ++i) n.push_back({0.0, (k - i) / dk});
    for (int j = 1; j <= k - 2; ++j)
      for (int i = 1; i <= k - 1 - j; ++i) n.push_back({i / dk, j / dk});
  }
  return n;
}

// Monomials are centred on the reference centroid for conditioning.
template <int Dim>
constexpr double centroid() {
  return 1.0 / (Dim + 1);
}

}  // namespace

template <int Dim>
LagrangeBasis<Dim>::LagrangeBasis(int degree) : degree_(degree) {
  if (degree < 1) throw std::invalid_argument("Lagrange degree must be >= 1");
  nodes_ = reference_nodes<Dim>(degree);
  for (int n = 0; n <= degree; ++n) {
    if constexpr (Dim == 1) {
      exponents_.push_back({n});
    } else {
      for (int b = 0; b <= n; ++b) exponents_.push_back({n - b, b});
    }
  }
  const int m = size();
  Eigen::MatrixXd v(m, m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      double p = 1.0;
      for (int d = 0; d < Dim; ++d) p *= std::pow(nodes_[i][d] - centroid<Dim>(), exponents_[j][d]);
      v(i, j) = p;
    }
  }
  // V c_i = e_i
  coeffs_ = v.fullPivLu().solve(Eigen::MatrixXd::Identity(m, m));
}

template <int Dim>
void LagrangeBasis<Dim>::values(const Point<Dim>& xi, double* out) const {
  const int m = size();
  std::vector<double> mono(m);
  for (int j = 0; j < m; ++j) {
    double p = 1.0;
    for (int d = 0; d < Dim; ++d) {
      const double t = xi[d] - centroid<Dim>();
      for (int e = 0; e < exponents_[j][d]; ++e) p *= t;
    }
    mono[j] = p;
  }
  for (int i = 0; i < m; ++i) {
    double s = 0.0;
    for (int j = 0; j < m; ++j) s += coeffs_(j, i) * mono[j];
    out[i] = s;
  }
}

template <int Dim>
void LagrangeBasis<Dim>::gradients(const Point<Dim>& xi, double* out) const {
  const int m = size();
  std::vector<std::array<double, Dim>> dmono(m);
  for (int j = 0; j < m; ++j) {
    for (int d = 0; d < Dim; ++d) {
      double p = 1.0;
      for (int e = 0; e < Dim; ++e) {
        const double t = xi[e] - centroid<Dim>();
        const int ex = exponents_[j][e];
        if (e == d) {
          if (ex == 0) {
            p = 0.0;
            break;
          }
          p *= ex;
          for (int r = 0; r < ex - 1; ++r) p *= t;
        } else {
          for (int r = 0; r < ex; ++r) p *= t;
        }
      }
      dmono[j][d] = p;
    }
  }
  for (int i = 0; i < m; ++i) {
    for (int d = 0; d < Dim; ++d) {
      double s = 0.0;
      for (int j = 0; j < m; ++j) s += coeffs_(j, i) * dmono[j][d];
      out[i * Dim + d] = s;
    }
  }
}

template <int Dim>
CellGeometry<Dim> cell_geometry(const Mesh<Dim>& mesh, int cell) {
  CellGeometry<Dim> g;
  const auto& c = mesh.cells[cell];
  g.origin = mesh.nodes[c[0]];
  for (int col = 0; col < Dim; ++col)
    for (int r = 0; r < Dim; ++r) g.jacobian(r, col) = mesh.nodes[c[col + 1]][r] - g.origin[r];
  g.det = g.jacobian.determinant();
  if (!(g.det > 0.0)) throw std::invalid_argument("mesh cell has non-positive measure");
  g.inverse_transpose = g.jacobian.inverse().transpose();
  return g;
}

template <int Dim>
LagrangeSpace<Dim>::LagrangeSpace(const Mesh<Dim>& mesh, int degree) : mesh_(&mesh), basis_(degree) {
  const int k = degree;
  const int nv = mesh.num_nodes();
  const int nc = mesh.num_cells();
  geometry_.reserve(nc);
  for (int c = 0; c < nc; ++c) geometry_.push_back(cell_geometry(mesh, c));

  dof_coords_.assign(mesh.nodes.begin(), mesh.nodes.end());
  cell_dofs_.assign(nc, std::vector<int>(basis_.size(), -1));
  const auto& ref = basis_.nodes();

  if constexpr (Dim == 1) {
    for (int c = 0; c < nc; ++c) {
      auto& cd = cell_dofs_[c];
      cd[0] = mesh.cells[c][0];
      cd[1] = mesh.cells[c][1];
      for (int i = 2; i < basis_.size(); ++i) {
        cd[i] = static_cast<int>(dof_coords_.size());
        dof_coords_.push_back(geometry_[c].map(ref[i]));
      }
    }
  } else {
    std::map<std::pair<int, int>, int> edge_first_dof;
    const int per_edge = k - 1;
    for (int c = 0; c < nc; ++c) {
      auto& cd = cell_dofs_[c];
      const auto& cell = mesh.cells[c];
      for (int v = 0; v < 3; ++v) cd[v] = cell[v];
      for (int e = 0; e < 3; ++e) {
        const int a = cell[e], b = cell[(e + 1) % 3];
        const auto key = std::minmax(a, b);
        auto it = edge_first_dof.find(key);
        if (it == edge_first_dof.end()) {
          const int first = static_cast<int>(dof_coords_.size());
          it = edge_first_dof.emplace(key, first).first;
          // global edge dofs run from the lower vertex id to the higher
          const auto& pa = mesh.nodes[key.first];
          const auto& pb = mesh.nodes[key.second];
          for (int i = 1; i <= per_edge; ++i) {
            const double t = static_cast<double>(i) / k;
            dof_coords_.push_back({pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])});
          }
        }
        for (int i = 0; i < per_edge; ++i) {
          const int global = (a < b) ? it->second + i : it->second + per_edge - 1 - i;
          cd[3 + e * per_edge + i] = global;
        }
      }
      for (int i = 3 + 3 * per_edge; i < basis_.size(); ++i) {
        cd[i] = static_cast<int>(dof_coords_.size());
        dof_coords_.push_back(geometry_[c].map(ref[i]));
      }
    }
  }
  (void)nv;

  // facet -> cell lookup
  std::map<std::vector<int>, FacetCell> facet_lookup;
  for (int c = 0; c < nc; ++c) {
    const auto& cell = mesh.cells[c];
    for (int f = 0; f < Dim + 1; ++f) {
      std::vector<int> key;
      if constexpr (Dim == 1) {
        key = {cell[f]};
      } else {
        key = {cell[f], cell[(f + 1) % 3]};
        std::sort(key.begin(), key.end());
      }
      facet_lookup[key] = FacetCell{c, f};
    }
  }
  for (const auto& facet : mesh.facets) {
    std::vector<int> key(facet.nodes.begin(), facet.nodes.end());
    std::sort(key.begin(), key.end());
    const auto it = facet_lookup.find(key);
    if (it == facet_lookup.end()) throw std::invalid_argument("boundary facet does not belong to any cell");
    facet_cells_.push_back(it->second);
    auto& list = boundary_dofs_[facet.marker];
    const auto& cd = cell_dofs_[it->second.cell];
    for (int ld : local_facet_dofs(it->second.local_facet)) list.push_back(cd[ld]);
  }
  for (auto& [marker, list] : boundary_dofs_) {
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
  }
}

template <int Dim>
std::vector<int> LagrangeSpace<Dim>::local_facet_dofs(int local_facet) const {
  if constexpr (Dim == 1) {
    return {local_facet};
  } else {
    const int per_edge = degree() - 1;
    std::vector<int> d{local_facet, (local_facet + 1) % 3};
    for (int i = 0; i < per_edge; ++i) d.push_back(3 + local_facet * per_edge + i);
    return d;
  }
}

template <int Dim>
const std::vector<int>& LagrangeSpace<Dim>::boundary_dofs(BoundaryMarker m) const {
  static const std::vector<int> empty;
  const auto it = boundary_dofs_.find(m);
  return it == boundary_dofs_.end() ? empty : it->second;
}

template class LagrangeBasis<1>;
template class LagrangeBasis<2>;
template class LagrangeSpace<1>;
template class LagrangeSpace<2>;
template CellGeometry<1> cell_geometry(const Mesh<1>&, int);
template CellGeometry<2> cell_geometry(const Mesh<2>&, int);

}  // namespace enfem
