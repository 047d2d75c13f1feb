#include "enfem/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <stdexcept>

namespace enfem {

std::string to_string(BoundaryMarker m) {
  switch (m) {
    case BoundaryMarker::All: return "all";
    case BoundaryMarker::Outer: return "outer";
    case BoundaryMarker::Inner: return "inner";
  }
  return "?";
}

template <int Dim>
double Mesh<Dim>::cell_measure(int cell) const {
  const auto& c = cells[cell];
  if constexpr (Dim == 1) {
    return nodes[c[1]][0] - nodes[c[0]][0];
  } else {
    const auto& a = nodes[c[0]];
    const auto& b = nodes[c[1]];
    const auto& d = nodes[c[2]];
    return 0.5 * ((b[0] - a[0]) * (d[1] - a[1]) - (d[0] - a[0]) * (b[1] - a[1]));
  }
}

template <int Dim>
bool Mesh<Dim>::has_marker(BoundaryMarker m) const {
  return std::any_of(facets.begin(), facets.end(), [m](const auto& f) { return f.marker == m; });
}

template <int Dim>
double longest_edge(const Mesh<Dim>& mesh) {
  double h = 0.0;
  for (const auto& c : mesh.cells) {
    for (int i = 0; i < Dim + 1; ++i) {
      for (int j = i + 1; j < Dim + 1; ++j) {
        double s = 0.0;
        for (int d = 0; d < Dim; ++d) {
          const double diff = mesh.nodes[c[i]][d] - mesh.nodes[c[j]][d];
          s += diff * diff;
        }
        h = std::max(h, std::sqrt(s));
      }
    }
  }
  return h;
}

Mesh<1> build_interval_mesh(int n_nodes, double a, double b) {
  if (n_nodes < 2) throw std::invalid_argument("interval mesh needs at least 2 nodes");
  if (!(a < b)) throw std::invalid_argument("interval mesh needs a < b");
  Mesh<1> m;
  m.nodes.resize(n_nodes);
  for (int i = 0; i < n_nodes; ++i) {
    // endpoints are placed exactly
    m.nodes[i][0] = (i == n_nodes - 1) ? b : a + (b - a) * static_cast<double>(i) / (n_nodes - 1);
  }
  for (int i = 0; i + 1 < n_nodes; ++i) m.cells.push_back({i, i + 1});
  m.facets.push_back({{0}, BoundaryMarker::All});
  m.facets.push_back({{n_nodes - 1}, BoundaryMarker::All});
  m.h = longest_edge(m);
  return m;
}

Mesh<2> build_square_mesh(int n, double x_min, double x_max, double y_min, double y_max) {
  if (n < 2) throw std::invalid_argument("square mesh needs at least 2 nodes per side");
  if (!(x_min < x_max) || !(y_min < y_max)) throw std::invalid_argument("square mesh bounds are degenerate");
  Mesh<2> m;
  auto coord = [n](double lo, double hi, int i) {
    return (i == n - 1) ? hi : lo + (hi - lo) * static_cast<double>(i) / (n - 1);
  };
  m.nodes.resize(static_cast<std::size_t>(n) * n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) m.nodes[j * n + i] = {coord(x_min, x_max, i), coord(y_min, y_max, j)};

  auto id = [n](int i, int j) { return j * n + i; };
  for (int j = 0; j + 1 < n; ++j) {
    for (int i = 0; i + 1 < n; ++i) {
      const int ll = id(i, j), lr = id(i + 1, j), ur = id(i + 1, j + 1), ul = id(i, j + 1);
      m.cells.push_back({ll, lr, ur});
      m.cells.push_back({ll, ur, ul});
    }
  }
  for (int i = 0; i + 1 < n; ++i) {
    m.facets.push_back({{id(i, 0), id(i + 1, 0)}, BoundaryMarker::All});
    m.facets.push_back({{id(i + 1, n - 1), id(i, n - 1)}, BoundaryMarker::All});
  }
  for (int j = 0; j + 1 < n; ++j) {
    m.facets.push_back({{id(n - 1, j), id(n - 1, j + 1)}, BoundaryMarker::All});
    m.facets.push_back({{id(0, j + 1), id(0, j)}, BoundaryMarker::All});
  }
  m.h = longest_edge(m);
  return m;
}

Mesh<2> build_annulus_mesh(int n_r, int n_t, double r_in, double r_out) {
  if (n_r < 2 || n_t < 3) throw std::invalid_argument("annulus mesh needs n_r >= 2 and n_t >= 3");
  if (!(r_in > 0.0) || !(r_in < r_out)) throw std::invalid_argument("annulus mesh needs 0 < r_in < r_out");
  Mesh<2> m;
  m.nodes.resize(static_cast<std::size_t>(n_r) * n_t);
  for (int j = 0; j < n_t; ++j) {
    const double t = 2.0 * std::numbers::pi * static_cast<double>(j) / n_t;
    for (int i = 0; i < n_r; ++i) {
      const double r = (i == n_r - 1) ? r_out : r_in + (r_out - r_in) * static_cast<double>(i) / (n_r - 1);
      m.nodes[j * n_r + i] = {r * std::cos(t), r * std::sin(t)};
    }
  }
  auto id = [n_r, n_t](int i, int j) { return (j % n_t) * n_r + i; };
  for (int j = 0; j < n_t; ++j) {
    for (int i = 0; i + 1 < n_r; ++i) {
      const int a = id(i, j), b = id(i + 1, j), c = id(i + 1, j + 1), d = id(i, j + 1);
      m.cells.push_back({a, b, c});
      m.cells.push_back({a, c, d});
    }
  }
  for (int j = 0; j < n_t; ++j) {
    // facet node order follows the boundary with the domain on the left
    m.facets.push_back({{id(n_r - 1, j), id(n_r - 1, j + 1)}, BoundaryMarker::Outer});
    m.facets.push_back({{id(0, j + 1), id(0, j)}, BoundaryMarker::Inner});
  }
  m.h = longest_edge(m);
  return m;
}

template <int Dim>
void write_mesh(std::ostream& os, const Mesh<Dim>& mesh) {
  os.precision(17);
  os << Dim << ' ' << mesh.nodes.size() << ' ' << mesh.cells.size() << ' ' << mesh.facets.size() << '\n';
  for (const auto& p : mesh.nodes) {
    for (int d = 0; d < Dim; ++d) os << (d ? " " : "") << p[d];
    os << '\n';
  }
  for (const auto& c : mesh.cells) {
    for (int i = 0; i < Dim + 1; ++i) os << (i ? " " : "") << c[i];
    os << '\n';
  }
  for (const auto& f : mesh.facets) {
    for (int i = 0; i < Dim; ++i) os << f.nodes[i] << ' ';
    os << static_cast<int>(f.marker) << '\n';
  }
}

template struct Mesh<1>;
template struct Mesh<2>;
template double longest_edge(const Mesh<1>&);
template double longest_edge(const Mesh<2>&);
template void write_mesh(std::ostream&, const Mesh<1>&);
template void write_mesh(std::ostream&, const Mesh<2>&);

}  // namespace enfem
