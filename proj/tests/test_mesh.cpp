#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <map>
#include <set>
#include <sstream>

#include "enfem/mesh.hpp"

using namespace enfem;
using std::numbers::pi;

template <int Dim>
double total_measure(const Mesh<Dim>& m) {
  double s = 0.0;
  for (int c = 0; c < m.num_cells(); ++c) {
    CHECK(m.cell_measure(c) > 0.0);
    s += m.cell_measure(c);
  }
  return s;
}

TEST_CASE("interval mesh") {
  const auto m1 = build_interval_mesh(2, 0.0, 1.0);
  CHECK(m1.num_cells() == 1);
  CHECK(m1.h == doctest::Approx(1.0));
  const auto m2 = build_interval_mesh(11, 0.0, 1.0);
  CHECK(m2.h == doctest::Approx(0.1));
  const auto m3 = build_interval_mesh(3, 0.0, 2.0);
  CHECK(m3.nodes[0][0] == 0.0);
  CHECK(m3.nodes[1][0] == 1.0);
  CHECK(m3.nodes[2][0] == 2.0);
  CHECK(m3.h == doctest::Approx(1.0));
  CHECK(m3.facets.size() == 2);
  for (const auto& f : m3.facets) CHECK(f.marker == BoundaryMarker::All);
  CHECK(total_measure(m3) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK_THROWS_AS(build_interval_mesh(1, 0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(build_interval_mesh(4, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("square mesh") {
  const auto m = build_square_mesh(3, -0.5 * pi, 0.5 * pi, -0.5 * pi, 0.5 * pi);
  CHECK(m.num_nodes() == 9);
  CHECK(m.num_cells() == 8);
  CHECK(m.h == doctest::Approx(pi * std::sqrt(2.0) / 2));
  const auto u = build_square_mesh(2, 0, 1, 0, 1);
  CHECK(u.num_cells() == 2);
  CHECK(u.h == doctest::Approx(std::sqrt(2.0)));
  const auto m5 = build_square_mesh(5, 0, 1, 0, 1);
  CHECK(m5.num_cells() == 32);
  CHECK(m5.h == doctest::Approx(std::sqrt(2.0) / 4));
  CHECK(m5.h == doctest::Approx(longest_edge(m5)).epsilon(1e-15));
  CHECK(total_measure(m5) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(m5.facets.size() == 16);
  CHECK_THROWS_AS(build_square_mesh(3, 1, 0, 0, 1), std::invalid_argument);
}

TEST_CASE("annulus mesh") {
  const auto m = build_annulus_mesh(2, 4, 0.25, 1.0);
  CHECK(m.num_nodes() == 8);
  CHECK(m.num_cells() == 8);
  int inner = 0, outer = 0;
  for (const auto& f : m.facets) {
    if (f.marker == BoundaryMarker::Inner) {
      ++inner;
      for (int n : f.nodes) CHECK(std::abs(std::hypot(m.nodes[n][0], m.nodes[n][1]) - 0.25) < 1e-14);
    }
    if (f.marker == BoundaryMarker::Outer) ++outer;
  }
  CHECK(inner == 4);
  CHECK(outer == 4);
  const auto m3 = build_annulus_mesh(3, 6, 0.25, 1.0);
  CHECK(m3.num_nodes() == 18);
  CHECK(m3.num_cells() == 24);
  // polygonal area: n_t trapezoid-like sectors between consecutive rings
  const int n_t = 48;
  const auto mf = build_annulus_mesh(5, n_t, 0.25, 1.0);
  const double sector = 0.5 * std::sin(2 * pi / n_t);
  CHECK(total_measure(mf) == doctest::Approx(n_t * sector * (1.0 - 0.0625)).epsilon(1e-12));
  CHECK_THROWS_AS(build_annulus_mesh(3, 6, 1.0, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(build_annulus_mesh(3, 2, 0.25, 1.0), std::invalid_argument);
}

TEST_CASE("meshes are conforming without orphan nodes") {
  const auto m = build_annulus_mesh(4, 10, 0.25, 1.0);
  std::set<int> used;
  std::map<std::pair<int, int>, int> edges;
  for (const auto& c : m.cells) {
    for (int i = 0; i < 3; ++i) {
      used.insert(c[i]);
      const auto e = std::minmax(c[i], c[(i + 1) % 3]);
      ++edges[{e.first, e.second}];
    }
  }
  CHECK(static_cast<int>(used.size()) == m.num_nodes());
  int boundary_edges = 0;
  for (const auto& [e, n] : edges) {
    CHECK(n <= 2);
    if (n == 1) ++boundary_edges;
  }
  CHECK(boundary_edges == static_cast<int>(m.facets.size()));
}

TEST_CASE("mesh dump header") {
  std::ostringstream os;
  write_mesh(os, build_square_mesh(2, 0, 1, 0, 1));
  std::istringstream is(os.str());
  int dim, nn, nc, nf;
  is >> dim >> nn >> nc >> nf;
  CHECK(dim == 2);
  CHECK(nn == 4);
  CHECK(nc == 2);
  CHECK(nf == 4);
}
