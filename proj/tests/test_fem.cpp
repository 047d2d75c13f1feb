#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "enfem/errors.hpp"
#include "enfem/fem.hpp"

using namespace enfem;
using std::numbers::pi;

namespace {

ProblemCoefficients<1> poisson1d(double f) {
  ProblemCoefficients<1> c;
  c.source = [f](const Point<1>&) { return f; };
  return c;
}

template <int Dim>
Eigen::VectorXd solve_poisson(const LagrangeSpace<Dim>& space, const ProblemCoefficients<Dim>& c) {
  SparseSystem s{assemble_bilinear(space, c, 2 * space.degree()), assemble_linear(space, c, 2 * space.degree() + 2)};
  apply_dirichlet<Dim>(s, space, BoundaryMarker::All, [&](const Point<Dim>& x) { return c.dirichlet_at(x); });
  return solve_linear(s);
}

}  // namespace

TEST_CASE("quadrature integrates monomials to its degree") {
  for (int deg = 1; deg <= 14; ++deg) {
    const auto q1 = simplex_quadrature<1>(deg);
    double wsum = 0.0;
    for (double w : q1.weights) wsum += w;
    CHECK(wsum == doctest::Approx(1.0).epsilon(1e-14));
    for (int a = 0; a <= deg; ++a) {
      double s = 0.0;
      for (int i = 0; i < q1.size(); ++i) s += q1.weights[i] * std::pow(q1.points[i][0], a);
      CHECK(s == doctest::Approx(1.0 / (a + 1)).epsilon(1e-13));
    }
    const auto q2 = simplex_quadrature<2>(deg);
    for (int a = 0; a <= deg; ++a) {
      for (int b = 0; a + b <= deg; ++b) {
        double s = 0.0;
        for (int i = 0; i < q2.size(); ++i)
          s += q2.weights[i] * std::pow(q2.points[i][0], a) * std::pow(q2.points[i][1], b);
        // int x^a y^b over the unit triangle = a! b! / (a + b + 2)!
        const double exact = static_cast<double>(factorial(a)) * factorial(b) / factorial(a + b + 2);
        CHECK(s == doctest::Approx(exact).epsilon(1e-13));
      }
    }
  }
}

TEST_CASE("Lagrange bases are nodal") {
  for (int k = 1; k <= 7; ++k) {
    const LagrangeBasis<2> b(k);
    CHECK(b.size() == (k + 1) * (k + 2) / 2);
    std::vector<double> v(b.size());
    for (int j = 0; j < b.size(); ++j) {
      b.values(b.nodes()[j], v.data());
      for (int i = 0; i < b.size(); ++i) CHECK(v[i] == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-9));
    }
    const LagrangeBasis<1> b1(k);
    CHECK(b1.size() == k + 1);
  }
}

TEST_CASE("basis gradients match finite differences") {
  const LagrangeBasis<2> b(3);
  const Point<2> xi{0.21, 0.37};
  const double h = 1e-6;
  std::vector<double> g(b.size() * 2), vp(b.size()), vm(b.size());
  b.gradients(xi, g.data());
  for (int d = 0; d < 2; ++d) {
    Point<2> p = xi, m = xi;
    p[d] += h;
    m[d] -= h;
    b.values(p, vp.data());
    b.values(m, vm.data());
    for (int i = 0; i < b.size(); ++i) CHECK(g[i * 2 + d] == doctest::Approx((vp[i] - vm[i]) / (2 * h)).epsilon(1e-7));
  }
}

TEST_CASE("space dofs have the Kronecker property on every cell") {
  const auto mesh = build_square_mesh(4, 0, 1, 0, 1);
  for (int k = 1; k <= 3; ++k) {
    const LagrangeSpace<2> space(mesh, k);
    // shared edge dofs must coincide with the cell-local node positions
    for (int c = 0; c < mesh.num_cells(); ++c) {
      const auto& dofs = space.cell_dofs(c);
      for (int i = 0; i < space.dofs_per_cell(); ++i) {
        const auto x = space.geometry(c).map(space.basis().nodes()[i]);
        CHECK(std::abs(x[0] - space.dof_coords()[dofs[i]][0]) < 1e-14);
        CHECK(std::abs(x[1] - space.dof_coords()[dofs[i]][1]) < 1e-14);
      }
    }
  }
  const LagrangeSpace<2> p3(mesh, 3);
  // 16 vertices + 33 edges * 2 + 18 interior
  CHECK(p3.num_dofs() == 16 + 33 * 2 + 18);
}

TEST_CASE("assemble_bilinear examples") {
  const auto mesh = build_interval_mesh(3, 0, 1);
  const LagrangeSpace<1> space(mesh, 1);
  const auto a = assemble_bilinear(space, poisson1d(0.0), 2);
  CHECK(a.coeff(1, 1) == doctest::Approx(4.0));

  const auto one = build_interval_mesh(2, 0, 1);
  const LagrangeSpace<1> s1(one, 1);
  ProblemCoefficients<1> mass;
  mass.diffusion = [](const Point<1>&) { return Eigen::Matrix<double, 1, 1>::Zero(); };
  mass.reaction = [](const Point<1>&) { return 1.0; };
  const auto m = assemble_bilinear(s1, mass, 2);
  CHECK(m.coeff(0, 0) == doctest::Approx(1.0 / 3));
  CHECK(m.coeff(0, 1) == doctest::Approx(1.0 / 6));
  CHECK(m.coeff(1, 1) == doctest::Approx(1.0 / 3));

  auto conv = poisson1d(0.0);
  conv.convection = {1.0};
  const Eigen::MatrixXd ac = Eigen::MatrixXd(assemble_bilinear(space, conv, 2));
  CHECK((ac - ac.transpose()).norm() > 0.1);
  const Eigen::MatrixXd as = Eigen::MatrixXd(a);
  CHECK((as - as.transpose()).norm() == 0.0);
}

TEST_CASE("non-SPD diffusion is rejected") {
  const auto mesh = build_square_mesh(3, 0, 1, 0, 1);
  const LagrangeSpace<2> space(mesh, 1);
  ProblemCoefficients<2> c;
  c.diffusion = [](const Point<2>&) {
    Eigen::Matrix2d d;
    d << 1, 0, 0, -1;
    return d;
  };
  CHECK_THROWS_AS(assemble_bilinear(space, c, 2), CoefficientError);
  c.diffusion = [](const Point<2>&) {
    Eigen::Matrix2d d;
    d << 1, 0.5, 0, 1;
    return d;
  };
  CHECK_THROWS_AS(assemble_bilinear(space, c, 2), CoefficientError);
}

TEST_CASE("assemble_linear examples") {
  const auto mesh = build_interval_mesh(3, 0, 1);
  const LagrangeSpace<1> space(mesh, 1);
  CHECK(assemble_linear(space, poisson1d(2.0), 2)[1] == doctest::Approx(1.0));
  CHECK(assemble_linear(space, poisson1d(0.0), 2).norm() == 0.0);
  const auto one = build_interval_mesh(2, 0, 1);
  const LagrangeSpace<1> s1(one, 1);
  const auto b = assemble_linear(s1, poisson1d(1.0), 2);
  CHECK(b[0] == doctest::Approx(0.5));
  CHECK(b[1] == doctest::Approx(0.5));
}

TEST_CASE("interpolated load is exact for polynomial sources of degree m") {
  const auto mesh = build_square_mesh(5, 0, 1, 0, 1);
  const LagrangeSpace<2> space(mesh, 2);
  auto f = [](const Point<2>& x) { return x[0] * x[0] * x[1] - 3 * x[1] * x[1] + 1; };
  const auto direct = assemble_linear<2>(space, ScalarFn<2>(f), 10);
  const auto interp = assemble_interpolated_load<2>(
      space,
      [&](std::span<const Point<2>> x, std::span<double> out) {
        for (std::size_t i = 0; i < x.size(); ++i) out[i] = f(x[i]);
      },
      3);
  CHECK((direct - interp).norm() < 1e-13);
}

TEST_CASE("Dirichlet elimination and solve examples") {
  const auto mesh = build_interval_mesh(3, 0, 1);
  const LagrangeSpace<1> space(mesh, 1);
  const auto u = solve_poisson(space, poisson1d(2.0));
  CHECK(u[0] == doctest::Approx(0.0));
  CHECK(u[1] == doctest::Approx(0.25));
  CHECK(u[2] == doctest::Approx(0.0));

  const auto sq = build_square_mesh(6, 0, 1, 0, 1);
  const LagrangeSpace<2> s2(sq, 2);
  ProblemCoefficients<2> c;
  c.dirichlet = [](const Point<2>&) { return 5.0; };
  const auto v = solve_poisson(s2, c);
  for (int i = 0; i < v.size(); ++i) CHECK(v[i] == doctest::Approx(5.0).epsilon(1e-12));

  // constrained rows are identity rows
  SparseSystem s{assemble_bilinear(space, poisson1d(0.0), 2), Eigen::VectorXd::Ones(3)};
  const std::vector<int> dofs{0};
  const std::vector<double> vals{7.0};
  apply_dirichlet(s, dofs, vals);
  CHECK(s.matrix.coeff(0, 0) == 1.0);
  CHECK(s.matrix.coeff(0, 1) == 0.0);
  CHECK(s.matrix.coeff(1, 0) == 0.0);
  CHECK(s.rhs[0] == 7.0);
}

TEST_CASE("solve_linear examples") {
  SparseSystem s;
  s.matrix.resize(2, 2);
  s.matrix.insert(0, 0) = 2.0;
  s.matrix.insert(1, 1) = 4.0;
  s.rhs = Eigen::Vector2d(2.0, 4.0);
  const auto x = solve_linear(s);
  CHECK(x[0] == doctest::Approx(1.0));
  CHECK(x[1] == doctest::Approx(1.0));

  SparseSystem id;
  id.matrix.resize(3, 3);
  id.matrix.setIdentity();
  id.rhs = Eigen::Vector3d(1.5, -2.0, 9.0);
  CHECK((solve_linear(id) - id.rhs).norm() == 0.0);

  SparseSystem sing;
  sing.matrix.resize(2, 2);
  sing.matrix.insert(0, 0) = 1.0;
  sing.matrix.insert(0, 1) = 1.0;
  sing.matrix.insert(1, 0) = 1.0;
  sing.matrix.insert(1, 1) = 1.0;
  sing.rhs = Eigen::Vector2d(1.0, 0.0);
  CHECK_THROWS_AS(solve_linear(sing), SolverError);
}

TEST_CASE("interpolate examples") {
  const auto mesh = build_interval_mesh(5, 0, 1);
  const LagrangeSpace<1> p1(mesh, 1);
  const auto c = interpolate<1>(p1, ScalarFn<1>([](const Point<1>&) { return 3.5; }));
  for (int i = 0; i < c.coeffs.size(); ++i) CHECK(c.coeffs[i] == 3.5);
  const auto x = interpolate<1>(p1, ScalarFn<1>([](const Point<1>& p) { return p[0]; }));
  for (int i = 0; i < mesh.num_nodes(); ++i) CHECK(x.coeffs[i] == mesh.nodes[i][0]);

  const LagrangeSpace<1> p2(mesh, 2);
  const auto sq = interpolate<1>(p2, ScalarFn<1>([](const Point<1>& p) { return p[0] * p[0]; }));
  const FunctionField<1> ref([](const Point<1>& p) {
    const auto t = Jet<1, 2>::variable(p[0], 0);
    return t * t;
  });
  CHECK(error_norms(sq, ref, 6).l2_error <= 1e-13);
}

TEST_CASE("error_norms examples") {
  const auto mesh = build_interval_mesh(3, 0, 1);
  const LagrangeSpace<1> p1(mesh, 1);
  const FunctionField<1> q([](const Point<1>& p) {
    const auto t = Jet<1, 2>::variable(p[0], 0);
    return t * (1.0 - t);
  });
  const auto qi = interpolate<1>(p1, ScalarFn<1>([](const Point<1>& p) { return p[0] * (1 - p[0]); }));
  // e = (x - a)(b - x) on each cell, so ||e||^2 = (N - 1) h^5 / 30 = h^4 / 30
  const double h = 0.5;
  CHECK(error_norms(qi, q, 8).l2_error == doctest::Approx(h * h / std::sqrt(30.0)).epsilon(1e-12));

  const FunctionField<1> s([](const Point<1>& p) { return sin(Jet<1, 2>::variable(p[0], 0) * (2 * pi)); });
  const DiscreteField<1> zero{&p1, Eigen::VectorXd::Zero(p1.num_dofs())};
  const auto fine = build_interval_mesh(65, 0, 1);
  const LagrangeSpace<1> pf(fine, 1);
  const DiscreteField<1> zf{&pf, Eigen::VectorXd::Zero(pf.num_dofs())};
  CHECK(error_norms(zf, s, 8).relative_l2() == doctest::Approx(1.0));

  const auto lin = interpolate<1>(p1, ScalarFn<1>([](const Point<1>& p) { return 2 * p[0] - 1; }));
  const FunctionField<1> l([](const Point<1>& p) { return Jet<1, 2>::variable(p[0], 0) * 2.0 - 1.0; });
  const auto e = error_norms(lin, l, 4);
  CHECK(e.l2_error <= 1e-12);
  CHECK(e.h1_error <= 1e-12);
}

TEST_CASE("patch test reproduces polynomials of degree k") {
  const auto mesh = build_square_mesh(5, 0, 1, 0, 1);
  for (int k = 1; k <= 3; ++k) {
    const LagrangeSpace<2> space(mesh, k);
    // u = x^k + x y^(k-1), f = -Laplacian
    auto u = [k](const Point<2>& x) { return std::pow(x[0], k) + x[0] * std::pow(x[1], k - 1); };
    ProblemCoefficients<2> c;
    c.dirichlet = u;
    c.source = [k](const Point<2>& x) {
      double lap = k * (k - 1) * std::pow(x[0], std::max(0, k - 2));
      if (k >= 3) lap += x[0] * (k - 1) * (k - 2) * std::pow(x[1], k - 3);
      return -lap;
    };
    const auto sol = solve_poisson(space, c);
    for (int i = 0; i < space.num_dofs(); ++i) CHECK(sol[i] == doctest::Approx(u(space.dof_coords()[i])).epsilon(1e-10));
  }
}

TEST_CASE("P1 to P3 converge at order k+1 on a smooth 2D solution") {
  for (int k = 1; k <= 3; ++k) {
    std::vector<double> errs, hs;
    for (int n : {5, 9, 17}) {
      const auto mesh = build_square_mesh(n, 0, 1, 0, 1);
      const LagrangeSpace<2> space(mesh, k);
      ProblemCoefficients<2> c;
      c.source = [](const Point<2>& x) { return 2 * pi * pi * std::sin(pi * x[0]) * std::sin(pi * x[1]); };
      const DiscreteField<2> uh{&space, solve_poisson(space, c)};
      const FunctionField<2> ref([](const Point<2>& p) {
        return sin(Jet<2, 2>::variable(p[0], 0) * pi) * sin(Jet<2, 2>::variable(p[1], 1) * pi);
      });
      errs.push_back(error_norms(uh, ref, 2 * k + 2).relative_l2());
      hs.push_back(mesh.h);
    }
    const double slope = std::log(errs[2] / errs[1]) / std::log(hs[2] / hs[1]);
    CHECK(slope == doctest::Approx(k + 1).epsilon(0.2 / (k + 1)));
  }
}

TEST_CASE("Robin facets add a boundary mass term") {
  const auto mesh = build_annulus_mesh(3, 8, 0.25, 1.0);
  const LagrangeSpace<2> space(mesh, 1);
  ProblemCoefficients<2> c;
  c.diffusion = [](const Point<2>&) { return Eigen::Matrix2d::Zero().eval(); };
  c.boundary = {{BoundaryMarker::Inner, BoundaryKind::Robin}};
  const auto a = assemble_bilinear(space, c, 2);
  // sum of all entries = alpha * perimeter of the inner polygon
  const double perim = 8 * 2 * 0.25 * std::sin(pi / 8);
  CHECK(Eigen::MatrixXd(a).sum() == doctest::Approx(perim).epsilon(1e-12));
}

TEST_CASE("point locator finds containing cells") {
  const auto mesh = build_annulus_mesh(4, 12, 0.25, 1.0);
  const LagrangeSpace<2> space(mesh, 2);
  const auto f = interpolate<2>(space, ScalarFn<2>([](const Point<2>& x) { return x[0] * x[0] + 2 * x[1]; }));
  const DiscreteFieldEvaluator<2> ev(f);
  for (const Point<2>& p : {Point<2>{0.5, 0.1}, Point<2>{-0.3, -0.4}, Point<2>{0.0, 0.9}}) {
    const auto j = ev(p);
    CHECK(j.value() == doctest::Approx(p[0] * p[0] + 2 * p[1]).epsilon(1e-12));
    CHECK(j.first(0) == doctest::Approx(2 * p[0]).epsilon(1e-12));
    CHECK(j.first(1) == doctest::Approx(2.0).epsilon(1e-12));
  }
}
