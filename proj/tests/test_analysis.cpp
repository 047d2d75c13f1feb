#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "enfem/analysis.hpp"
#include "enfem/catalog.hpp"
#include "enfem/errors.hpp"

using namespace enfem;

namespace {

const double inf = std::numeric_limits<double>::infinity();

// u = x (1 - x): -u'' = 2.
ProblemCoefficients<1> parabola_problem() {
  ProblemCoefficients<1> c;
  c.source = [](const Point<1>&) { return 2.0; };
  return c;
}

FunctionField<1> parabola() {
  return FunctionField<1>([](const Point<1>& x) {
    const auto t = Jet<1, 2>::variable(x[0], 0);
    return t * (1.0 - t);
  });
}

class ScaledField final : public DifferentiableField<1> {
 public:
  ScaledField(const DifferentiableField<1>& f, double s) : f_(f), s_(s) {}
  using DifferentiableField<1>::evaluate;
  void evaluate(std::span<const Point<1>> x, std::span<Jet<1, 2>> out) const override {
    f_.evaluate(x, out);
    for (auto& j : out) j *= s_;
  }

 private:
  const DifferentiableField<1>& f_;
  double s_;
};

}  // namespace

TEST_CASE("relative errors") {
  const auto mesh = build_interval_mesh(9, 0.0, 1.0);
  const LagrangeSpace<1> p2(mesh, 2);
  const auto u = parabola();
  const auto exact = compute_errors<1>(p2, parabola_problem(), u, nullptr);
  CHECK(exact.e_h <= 1e-12);
  CHECK(std::isnan(exact.e_add));

  ProblemCoefficients<1> zero;  // f = 0, g = 0: u_h = 0
  CHECK(compute_errors<1>(p2, zero, u, nullptr).e_h == doctest::Approx(1.0).epsilon(1e-14));

  const auto pb = make_problem<2>("ell2d");
  const auto mu = catalog_entry("ell2d").mu_eval;
  const auto ref = make_reference<2>(pb, mu, 9, 1);
  const auto fine = make_mesh<2>(*pb, 9);
  const LagrangeSpace<2> same(fine, 1);
  CHECK(compute_errors<2>(same, pb->bind(mu), *ref, nullptr).e_h <= 1e-12);

  const auto lap = make_problem<1>("lap1d");
  const auto lmu = catalog_entry("lap1d").mu_eval;
  const auto lref = std::make_shared<ExactField<1>>(lap, lmu);
  const PerturbedField<1> prior(lref, 0.1);
  const auto lmesh = make_mesh<1>(*lap, 17);
  const LagrangeSpace<1> p1(lmesh, 1);
  ErrorOptions o;
  o.lifts = {10.0, 100.0};
  const auto r = compute_errors<1>(p1, lap->bind(lmu), *lref, &prior, o);
  CHECK(r.e_theta > 0.0);
  CHECK(r.e_add < r.e_h);
  REQUIRE(r.e_mult.size() == 2);
  CHECK(r.e_mult[1] > 0.0);
  CHECK(r.e_add_h1 > 0.0);
}

TEST_CASE("gain statistics") {
  const auto g = summarize_gains("G_plus_theta", {0.1, 0.2}, {0.01, 0.05});
  CHECK(g.gains[0] == doctest::Approx(10.0));
  CHECK(g.gains[1] == doctest::Approx(4.0));
  CHECK(g.mean == doctest::Approx(7.0));
  CHECK(g.min == doctest::Approx(4.0));
  CHECK(g.max == doctest::Approx(10.0));
  CHECK(g.std == doctest::Approx(3.0));

  const auto same = summarize_gains("G", {0.3, 0.5, 0.7}, {0.3, 0.5, 0.7});
  for (double v : same.gains) CHECK(v == 1.0);
  CHECK(same.std == 0.0);

  const auto zero = summarize_gains("G", {0.1, 0.2, 0.4}, {0.0, 0.1, 0.1});
  CHECK(zero.gains[0] == inf);
  CHECK(zero.n_infinite == 1);
  CHECK(zero.mean == doctest::Approx(3.0));

  const auto one = summarize_gains("G", {0.3}, {0.1});
  CHECK(one.min == one.max);
  CHECK(one.mean == doctest::Approx(3.0));
  CHECK(one.std == 0.0);

  // Sample order does not change the statistics.
  const std::vector<double> num{0.31, 0.7, 0.05, 0.9, 0.12}, den{0.01, 0.03, 0.007, 0.02, 0.004};
  std::vector<double> rn(num.rbegin(), num.rend()), rd(den.rbegin(), den.rend());
  const auto a = summarize_gains("G", num, den), b = summarize_gains("G", rn, rd);
  CHECK(a.mean == b.mean);
  CHECK(a.std == b.std);
  CHECK(a.mean >= a.min);
  CHECK(a.mean <= a.max);

  ErrorRecord r;
  r.e_h = 0.02;
  r.e_theta = 0.1;
  r.e_add = 0.001;
  r.lifts = {100.0};
  r.e_mult = {0.002};
  const auto single = compute_gains({r});
  const auto dup = compute_gains({r, r, r});
  REQUIRE(single.size() == 4);
  REQUIRE(dup.size() == 4);
  for (std::size_t i = 0; i < single.size(); ++i) {
    CHECK(single[i].name == dup[i].name);
    CHECK(single[i].mean == dup[i].mean);
    CHECK(dup[i].min == dup[i].max);
    CHECK(dup[i].std == 0.0);
  }
  CHECK(single[1].name == "G_plus");
  CHECK(single[1].mean == doctest::Approx(20.0));
  CHECK(single[3].name == "G_M_100");
  CHECK(single[3].mean == doctest::Approx(10.0));
}

TEST_CASE("gain constants") {
  const auto lap = make_problem<1>("lap1d");
  const auto mu = catalog_entry("lap1d").mu_eval;
  const auto u = std::make_shared<ExactField<1>>(lap, mu);
  const auto dom = lap->domain();
  const std::vector<double> lifts{1.0, 10.0, 100.0, 1000.0};

  const auto same = estimate_gain_constants(dom, *u, *u, lifts);
  CHECK(same.c_add == 0.0);
  for (const auto& r : same.rows) CHECK(r.c_mult_h1 <= 1e-12);

  CHECK(estimate_gain_constants(dom, *u, ZeroField<1>{}, {}).c_add == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(estimate_gain_constants(dom, *u, ScaledField(*u, 0.9), {}).c_add == doctest::Approx(0.1).epsilon(1e-12));

  const PerturbedField<1> prior(u, 0.1);
  const auto g = estimate_gain_constants(dom, *u, prior, lifts);
  double prev = inf;
  for (const auto& r : g.rows) {
    const double gap = std::abs(r.c_mult_h1 - g.c_add);
    CHECK(gap < prev);
    prev = gap;
    CHECK(r.c_mult_l2 >= 0.0);
    CHECK(r.c_theta_m > 0.0);
  }
  CHECK(prev / g.c_add < 0.02);

  // Doubling the estimation grid moves the constants by less than 1%.
  GainGrid fine;
  fine.integration_nodes = 513;
  fine.sup_points = 8192;
  const auto h = estimate_gain_constants(dom, *u, prior, lifts, fine);
  CHECK(std::abs(h.c_add - g.c_add) < 0.01 * g.c_add);
  for (std::size_t i = 0; i < lifts.size(); ++i) {
    CHECK(std::abs(h.rows[i].c_mult_h1 - g.rows[i].c_mult_h1) < 0.01 * g.rows[i].c_mult_h1);
    CHECK(std::abs(h.rows[i].c_mult_l2 - g.rows[i].c_mult_l2) < 0.01 * g.rows[i].c_mult_l2);
  }

  CHECK_THROWS_AS(estimate_gain_constants(dom, *u, *u, {0.1}), LiftingError);
  CHECK_THROWS_AS(estimate_gain_constants(dom, *u, *u, {}, {}, 2), UnsupportedError);

  const auto ring = make_problem<2>("annulus");
  const auto ru = std::make_shared<ExactField<2>>(ring, std::vector<double>{2.5});
  GainGrid coarse;
  coarse.integration_nodes = 17;
  coarse.sup_points = 32;
  const auto rg = estimate_gain_constants(ring->domain(), *ru, PerturbedField<2>(ru, 0.01), {10.0}, coarse);
  CHECK(rg.c_add > 0.0);
  CHECK(rg.sup_points < 32 * 32);
}

TEST_CASE("lifting sweep") {
  const auto lap = make_problem<1>("lap1d");
  const auto mu = catalog_entry("lap1d").mu_eval;
  const auto u = std::make_shared<ExactField<1>>(lap, mu);
  const auto mesh = make_mesh<1>(*lap, 33);
  const LagrangeSpace<1> space(mesh, 1);
  const auto coeffs = lap->bind(mu);

  const auto exact_rows = m_sweep(space, coeffs, lap->domain(), *u, *u, {1000.0, 10.0});
  REQUIRE(exact_rows.size() == 3);
  CHECK(exact_rows[0].lift == 10.0);
  CHECK(exact_rows[2].method == "additive");
  for (const auto& r : exact_rows) CHECK(r.error <= 1e-10);

  const PerturbedField<1> prior(u, 0.1);
  const auto rows = m_sweep(space, coeffs, lap->domain(), *u, prior, {1.0, 10.0, 100.0, 1000.0});
  for (std::size_t i = 1; i + 1 < rows.size(); ++i) {
    CHECK(std::abs(rows[i].c_mult_h1 - rows[i].c_add) < std::abs(rows[i - 1].c_mult_h1 - rows[i - 1].c_add));
    CHECK(rows[i].diff_to_additive < rows[i - 1].diff_to_additive);
  }
  CHECK(rows[3].diff_to_additive < 0.05);

  std::ostringstream os;
  write_msweep_csv(os, rows);
  CHECK(os.str().rfind("method,M,e_h,diff_to_additive,C_gain_mult_H1,C_gain_mult_L2,C_gain_add\n", 0) == 0);
  CHECK(os.str().find("additive,inf,") != std::string::npos);
}

TEST_CASE("convergence slopes") {
  CHECK(convergence_slope({0.1, 0.05, 0.025}, {0.01, 0.0025, 0.000625}) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(convergence_slope({0.1, 0.05, 0.025}, {0.3, 0.3, 0.3}) == doctest::Approx(0.0));
  std::vector<double> h{0.2, 0.1, 0.05, 0.025}, e;
  for (double v : h) e.push_back(3.0 * v * v * v);
  CHECK(convergence_slope(h, e) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK_THROWS_AS(convergence_slope({0.1}, {0.2}), std::invalid_argument);
}

TEST_CASE("load interpolation degree study") {
  // With u_theta = x^2 the corrected load f - L(u_theta) = 4 is interpolated
  // exactly at every degree.
  const FunctionField<1> prior([](const Point<1>& x) {
    const auto t = Jet<1, 2>::variable(x[0], 0);
    return t * t;
  });
  const auto mesh = build_interval_mesh(9, 0.0, 1.0);
  const LagrangeSpace<1> space(mesh, 1);
  const auto rows = quadrature_degree_study(space, parabola_problem(), parabola(), prior, {1, 2, 3, 4, 5});
  REQUIRE(rows.size() == 5);
  for (const auto& r : rows) CHECK(r.e_add == doctest::Approx(rows[0].e_add).epsilon(1e-12));

  std::ostringstream os;
  write_degree_csv(os, rows);
  CHECK(os.str().rfind("m,e_h_plus\n1,", 0) == 0);
}

TEST_CASE("cost model") {
  const auto eq = cost_model(500, 500, 1, 12461);
  CHECK(eq.cost_add - eq.cost_std == 12461.0);
  MlpConfig cfg;
  cfg.n_spatial = 2;
  cfg.n_params = 2;
  cfg.hidden = {40, 60, 60, 60, 40};
  cfg.activation = Activation::Sine;
  CHECK(cfg.num_params() == 12461);
  const auto c = cost_model(10000, 1000, 100, 12461);
  CHECK(c.cost_std / c.cost_add == doctest::Approx(8.89).epsilon(1e-3));
}

TEST_CASE("CSV tables") {
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(format_double(inf) == "inf");
  CHECK(format_double(2.0) == "2");

  std::vector<ErrorRecord> recs;
  for (int n : {8, 16, 32}) {
    ErrorRecord r;
    r.mu = {0.3};
    r.n = n;
    r.h = 1.0 / n;
    r.e_h = r.h * r.h;
    r.e_theta = 0.1;
    r.e_add = 1e-15;
    r.lifts = {100.0};
    r.e_mult = {0.1 * r.h * r.h};
    recs.push_back(r);
  }
  std::ostringstream os;
  write_convergence_csv(os, recs);
  const auto s = os.str();
  CHECK(s.rfind("mu_id,k,N,h,e_h,e_theta,e_h_plus,e_h_M_100\n0,1,8,0.125,", 0) == 0);
  CHECK(s.find("# slope mu_id=0 k=1 e_h=") != std::string::npos);
  CHECK(s.find(" e_h_plus=floor e_h_M_100=") != std::string::npos);

  std::ostringstream gs;
  write_gain_csv(gs, recs);
  CHECK(gs.str().rfind("mu_id,mu1,e_theta,e_h,e_h_plus,G_plus_theta,G_plus,e_h_M_100,G_M_theta_100,G_M_100\n", 0) == 0);

  std::ostringstream ss;
  write_stats_csv(ss, compute_gains(recs));
  CHECK(ss.str().rfind("method,min,max,mean,std,n_infinite\nG_plus_theta,", 0) == 0);
}
