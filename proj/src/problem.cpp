#include "enfem/problem.hpp"

#include <cmath>
#include <numbers>

#include "enfem/errors.hpp"

namespace enfem {

template <int Dim>
double Domain<Dim>::measure() const {
  switch (kind) {
    case Kind::Annulus:
      return std::numbers::pi * (r_out * r_out - r_in * r_in);
    default: {
      double m = 1.0;
      for (int s = 0; s < Dim; ++s) m *= hi[s] - lo[s];
      return m;
    }
  }
}

template <int Dim>
std::array<Jet<Dim, 2>, Dim * Dim> Problem<Dim>::diffusion(const Point<Dim>&, Params) const {
  std::array<Jet<Dim, 2>, Dim * Dim> d{};
  for (int i = 0; i < Dim; ++i) d[i * Dim + i] = Jet<Dim, 2>::constant(1.0);
  return d;
}

template <int Dim>
Jet<Dim, 4> Problem<Dim>::exact(const Point<Dim>&, Params) const {
  throw UnsupportedError("problem '" + id() + "' has no closed-form solution");
}

template <int Dim>
double Problem<Dim>::dirichlet(const Point<Dim>& x, Params mu) const {
  return exact(x, mu).value();
}

template <int Dim>
double Problem<Dim>::robin(const Point<Dim>& x, const Point<Dim>& normal, Params mu) const {
  const auto u = exact(x, mu);
  const auto d = diffusion(x, mu);
  double flux = 0.0;
  for (int i = 0; i < Dim; ++i)
    for (int j = 0; j < Dim; ++j) flux += normal[i] * d[i * Dim + j].value() * u.first(j);
  return flux / peclet(mu) + robin_coefficient() * u.value();
}

template <int Dim>
ProblemCoefficients<Dim> Problem<Dim>::bind(std::vector<double> mu_in) const {
  auto mu = std::make_shared<const std::vector<double>>(std::move(mu_in));
  if (static_cast<int>(mu->size()) != num_params())
    throw std::invalid_argument("problem '" + id() + "' expects " + std::to_string(num_params()) + " parameters");
  ProblemCoefficients<Dim> c;
  const Params p(*mu);
  c.peclet = peclet(p);
  c.convection = convection(p);
  c.robin_coefficient = robin_coefficient();
  c.boundary = boundary_conditions();
  if (!diffusion_is_identity()) {
    c.diffusion = [this, mu](const Point<Dim>& x) {
      const auto d = diffusion(x, *mu);
      typename ProblemCoefficients<Dim>::Matrix m;
      for (int i = 0; i < Dim; ++i)
        for (int j = 0; j < Dim; ++j) m(i, j) = d[i * Dim + j].value();
      return m;
    };
    c.diffusion_divergence = [this, mu](const Point<Dim>& x) {
      const auto d = diffusion(x, *mu);
      Point<Dim> r{};
      for (int j = 0; j < Dim; ++j)
        for (int i = 0; i < Dim; ++i) r[j] += d[i * Dim + j].first(i);
      return r;
    };
  }
  c.reaction = [this, mu](const Point<Dim>& x) { return reaction(x, *mu).value(); };
  c.source = [this, mu](const Point<Dim>& x) { return source(x, *mu).value(); };
  c.dirichlet = [this, mu](const Point<Dim>& x) { return dirichlet(x, *mu); };
  c.robin = [this, mu](const Point<Dim>& x, const Point<Dim>& n) { return robin(x, n, *mu); };
  return c;
}

template struct Domain<1>;
template struct Domain<2>;
template class Problem<1>;
template class Problem<2>;

}  // namespace enfem
