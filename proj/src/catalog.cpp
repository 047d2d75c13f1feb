#include "enfem/catalog.hpp"

#include <cmath>
#include <numbers>

#include "enfem/errors.hpp"

namespace enfem {

namespace {

using std::numbers::pi;

template <int Dim>
Jet<Dim, 2> neg_laplacian(const Jet<Dim, 4>& u) {
  Jet<Dim, 2> r;
  for (int s = 0; s < Dim; ++s) r = r - u.diff(s).diff(s);
  return r;
}

template <int Dim, int K = 4>
Jet<Dim, K> var(const Point<Dim>& x, int s) {
  return Jet<Dim, K>::variable(x[s], s);
}

// -u'' = f on (0,1), u = sum_i mu_i sin(2 i pi x).
class Lap1d final : public Problem<1> {
 public:
  std::string id() const override { return "lap1d"; }
  ParamBox parameter_box() const override { return {{0.0, 1.0}, {0.0, 1.0}, {0.0, 1.0}}; }
  Domain<1> domain() const override { return {Domain<1>::Kind::Interval, {0.0}, {1.0}}; }
  bool has_exact() const override { return true; }
  Jet<1, 4> exact(const Point<1>& x, Params mu) const override {
    const auto X = var<1>(x, 0);
    Jet<1, 4> u;
    for (int i = 1; i <= 3; ++i) u = u + mu[i - 1] * sin(X * (2.0 * i * pi));
    return u;
  }
  Jet<1, 2> source(const Point<1>& x, Params mu) const override { return neg_laplacian(exact(x, mu)); }
  Composition<1> exact_bc_composition() const override {
    Composition<1> c;
    c.kind = CompositionKind::LevelSetDirichlet;
    c.level_set_id = "x(x-1)";
    c.level_set = [](const Point<1>& x, Params) {
      const auto X = var<1>(x, 0);
      return X * (X - 1.0);
    };
    return c;
  }
};

// u' - u''/Pe = r on (0,1), homogeneous Dirichlet; mu = (r, Pe).
class Ell1d final : public Problem<1> {
 public:
  std::string id() const override { return "ell1d"; }
  ParamBox parameter_box() const override { return {{1.0, 2.0}, {10.0, 100.0}}; }
  Domain<1> domain() const override { return {Domain<1>::Kind::Interval, {0.0}, {1.0}}; }
  double peclet(Params mu) const override { return mu[1]; }
  Point<1> convection(Params) const override { return {1.0}; }
  bool has_exact() const override { return true; }
  Jet<1, 4> exact(const Point<1>& x, Params mu) const override {
    const double r = mu[0], pe = mu[1];
    const auto X = var<1>(x, 0);
    // (e^{Pe x} - 1)/(e^{Pe} - 1) written without overflow
    const double em = std::exp(-pe);
    const auto layer = (exp((X - 1.0) * pe) - em) / (1.0 - em);
    return (X - layer) * r;
  }
  Jet<1, 2> source(const Point<1>&, Params mu) const override { return Jet<1, 2>::constant(mu[0]); }
  Composition<1> exact_bc_composition() const override {
    Composition<1> c;
    c.kind = CompositionKind::LevelSetDirichlet;
    c.level_set_id = "x(x-1)";
    c.level_set = [](const Point<1>& x, Params) {
      const auto X = var<1>(x, 0);
      return X * (X - 1.0);
    };
    return c;
  }
};

Jet<2, 4> box_level_set(const Point<2>& x, Params) {
  const auto X = var<2>(x, 0), Y = var<2>(x, 1);
  const double a = 0.5 * pi;
  return (X + a) * (X - a) * (Y + a) * (Y - a);
}

// -Lap u = f on (-pi/2, pi/2)^2, u = exp(-|x - mu|^2/2) sin(kx) sin(ky).
class Lap2d final : public Problem<2> {
 public:
  Lap2d(std::string id, double kappa) : id_(std::move(id)), kappa_(kappa) {}
  std::string id() const override { return id_; }
  ParamBox parameter_box() const override { return {{-0.5, 0.5}, {-0.5, 0.5}}; }
  Domain<2> domain() const override {
    return {Domain<2>::Kind::Box, {-0.5 * pi, -0.5 * pi}, {0.5 * pi, 0.5 * pi}};
  }
  bool has_exact() const override { return true; }
  Jet<2, 4> exact(const Point<2>& x, Params mu) const override {
    const auto X = var<2>(x, 0), Y = var<2>(x, 1);
    const auto dx = X - mu[0], dy = Y - mu[1];
    return exp((dx * dx + dy * dy) * -0.5) * sin(X * kappa_) * sin(Y * kappa_);
  }
  Jet<2, 2> source(const Point<2>& x, Params mu) const override { return neg_laplacian(exact(x, mu)); }
  Composition<2> exact_bc_composition() const override {
    Composition<2> c;
    c.kind = CompositionKind::LevelSetDirichlet;
    c.level_set_id = "box";
    c.level_set = box_level_set;
    return c;
  }

 private:
  std::string id_;
  double kappa_;
};

// -div(D grad u) = f on (0,1)^2, u = 0 on the boundary; mu = (mu1, mu2, eps, sigma).
class Ell2d final : public Problem<2> {
 public:
  std::string id() const override { return "ell2d"; }
  ParamBox parameter_box() const override { return {{0.4, 0.6}, {0.4, 0.6}, {0.01, 1.0}, {0.1, 0.8}}; }
  Domain<2> domain() const override { return {Domain<2>::Kind::Box, {0.0, 0.0}, {1.0, 1.0}}; }
  bool diffusion_is_identity() const override { return false; }
  std::array<Jet<2, 2>, 4> diffusion(const Point<2>& x, Params mu) const override {
    const auto X = var<2, 2>(x, 0), Y = var<2, 2>(x, 1);
    const double eps = mu[2];
    const auto off = X * Y * (eps - 1.0);
    return {X * X * eps + Y * Y, off, off, X * X + Y * Y * eps};
  }
  Jet<2, 2> source(const Point<2>& x, Params mu) const override {
    const auto X = var<2, 2>(x, 0), Y = var<2, 2>(x, 1);
    const auto dx = X - mu[0], dy = Y - mu[1];
    return exp((dx * dx + dy * dy) * (-1.0 / (0.025 * mu[3] * mu[3])));
  }
  double dirichlet(const Point<2>&, Params) const override { return 0.0; }
  Composition<2> exact_bc_composition() const override {
    Composition<2> c;
    c.kind = CompositionKind::LevelSetDirichlet;
    c.level_set_id = "unit_square";
    c.level_set = [](const Point<2>& x, Params) {
      const auto X = var<2>(x, 0), Y = var<2>(x, 1);
      return X * (X - 1.0) * Y * (Y - 1.0);
    };
    return c;
  }
};

// -Lap u = 0 on the annulus 0.25 < r < 1, u = g on the outer circle and
// du/dn + u = g_R on the inner one; u = 1 - ln(mu1 r)/ln 4.
class Annulus final : public Problem<2> {
 public:
  std::string id() const override { return "annulus"; }
  ParamBox parameter_box() const override { return {{2.4, 2.6}}; }
  Domain<2> domain() const override {
    Domain<2> d;
    d.kind = Domain<2>::Kind::Annulus;
    d.lo = {-1.0, -1.0};
    d.hi = {1.0, 1.0};
    d.r_in = 0.25;
    d.r_out = 1.0;
    return d;
  }
  std::vector<BoundaryCondition> boundary_conditions() const override {
    return {{BoundaryMarker::Outer, BoundaryKind::Dirichlet}, {BoundaryMarker::Inner, BoundaryKind::Robin}};
  }
  bool has_exact() const override { return true; }
  Jet<2, 4> exact(const Point<2>& x, Params mu) const override {
    const double ln4 = std::log(4.0);
    return 1.0 - (log(radius(x)) + std::log(mu[0])) / ln4;
  }
  Jet<2, 2> source(const Point<2>&, Params) const override { return {}; }
  Composition<2> exact_bc_composition() const override {
    Composition<2> c;
    c.kind = CompositionKind::MixedRobin;
    c.level_set_id = "annulus_sdf";
    c.level_set = [](const Point<2>& x, Params) { return radius(x) - 0.25; };
    c.outer_level_set = [](const Point<2>& x, Params) { return 1.0 - radius(x); };
    c.dirichlet_lift = [](const Point<2>&, Params mu) {
      return Jet<2, 4>::constant(1.0 - std::log(mu[0]) / std::log(4.0));
    };
    c.robin_lift = [](const Point<2>&, Params mu) {
      return Jet<2, 4>::constant(2.0 + (4.0 - std::log(mu[0])) / std::log(4.0));
    };
    return c;
  }

 private:
  static Jet<2, 4> radius(const Point<2>& x) {
    const auto X = var<2>(x, 0), Y = var<2>(x, 1);
    return sqrt(X * X + Y * Y);
  }
};

MlpConfig net(int n_spatial, int n_params, std::vector<int> hidden, Activation a, int n_fourier = 0) {
  MlpConfig c;
  c.n_spatial = n_spatial;
  c.n_params = n_params;
  c.hidden = std::move(hidden);
  c.activation = a;
  c.n_fourier = n_fourier;
  return c;
}

TrainingConfig training(double lr, int n_epochs, int n_col, int n_switch = 0) {
  TrainingConfig t;
  t.lr = lr;
  t.decay = 0.99;
  t.n_epochs = n_epochs;
  t.n_col = n_col;
  t.n_switch = n_switch;
  return t;
}

}  // namespace

const std::vector<std::string>& catalog_ids() {
  static const std::vector<std::string> ids{"lap1d", "ell1d", "lap2d_low", "lap2d_high", "ell2d", "annulus"};
  return ids;
}

CatalogEntry catalog_entry(const std::string& id) {
  CatalogEntry e;
  e.id = id;
  if (id == "lap1d") {
    e.dim = 1;
    e.network = net(1, 3, {20, 80, 80, 80, 20, 10}, Activation::Sine);
    e.training = training(9e-2, 10000, 5000);
    e.mu_eval = {0.3, 0.2, 0.1};
  } else if (id == "ell1d") {
    e.dim = 1;
    e.network = net(1, 2, {40, 40, 40, 40, 40}, Activation::Tanh);
    e.training = training(1e-3, 20000, 5000);
    e.mu_eval = {1.5, 90.0};
  } else if (id == "lap2d_low") {
    e.dim = 2;
    e.network = net(2, 2, {40, 60, 60, 60, 40}, Activation::Sine);
    e.training = training(1.7e-2, 5000, 6000, 1000);
    e.mu_eval = {0.05, 0.22};
  } else if (id == "lap2d_high") {
    e.dim = 2;
    e.network = net(2, 2, {40, 60, 60, 60, 40}, Activation::Sine, 40);
    e.training = training(1.7e-2, 20000, 6000, 1000);
    e.mu_eval = {0.05, 0.22};
  } else if (id == "ell2d") {
    e.dim = 2;
    e.network = net(2, 4, {40, 60, 60, 60, 40}, Activation::Tanh);
    e.training = training(1.6e-2, 15000, 8000);
    e.mu_eval = {0.5, 0.5, 0.5, 0.5};
  } else if (id == "annulus") {
    e.dim = 2;
    e.network = net(2, 1, {40, 40, 40, 40, 40}, Activation::Tanh);
    e.training = training(1e-2, 4000, 6000, 3000);
    e.mu_eval = {2.5};
  } else {
    throw ConfigError("unknown problem id '" + id + "'");
  }
  return e;
}

int catalog_dimension(const std::string& id) { return catalog_entry(id).dim; }

template <>
std::shared_ptr<const Problem<1>> make_problem<1>(const std::string& id) {
  if (id == "lap1d") return std::make_shared<Lap1d>();
  if (id == "ell1d") return std::make_shared<Ell1d>();
  throw ConfigError("unknown one-dimensional problem id '" + id + "'");
}

template <>
std::shared_ptr<const Problem<2>> make_problem<2>(const std::string& id) {
  if (id == "lap2d_low") return std::make_shared<Lap2d>(id, 2.0);
  if (id == "lap2d_high") return std::make_shared<Lap2d>(id, 8.0);
  if (id == "ell2d") return std::make_shared<Ell2d>();
  if (id == "annulus") return std::make_shared<Annulus>();
  throw ConfigError("unknown two-dimensional problem id '" + id + "'");
}

template <>
Mesh<1> make_mesh<1>(const Problem<1>& problem, int n) {
  const auto d = problem.domain();
  return build_interval_mesh(n, d.lo[0], d.hi[0]);
}

template <>
Mesh<2> make_mesh<2>(const Problem<2>& problem, int n) {
  const auto d = problem.domain();
  if (d.kind == Domain<2>::Kind::Annulus) return build_annulus_mesh(n, 6 * (n - 1), d.r_in, d.r_out);
  return build_square_mesh(n, d.lo[0], d.hi[0], d.lo[1], d.hi[1]);
}

template <int Dim>
Composition<Dim> make_composition(const Problem<Dim>& problem, const std::string& kind) {
  if (kind == "exact") return problem.exact_bc_composition();
  if (kind == "raw") return {};
  throw ConfigError("unknown composition '" + kind + "' (expected exact or raw)");
}

template Composition<1> make_composition<1>(const Problem<1>&, const std::string&);
template Composition<2> make_composition<2>(const Problem<2>&, const std::string&);

}  // namespace enfem
