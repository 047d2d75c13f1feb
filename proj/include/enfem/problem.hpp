#pragma once

// Second-order elliptic problems
//
//   L(u) = -(1/Pe) div(D grad u) + R u + C . grad u = f   in Omega,
//   u = g on Dirichlet facets,  (1/Pe) (D grad u) . n + alpha u = g_R on Robin facets,
//
// in two views: ProblemCoefficients (pointwise values at a fixed parameter,
// consumed by the finite element assembly) and Problem (parametric, with
// jet-valued coefficients, consumed by PINN training and strong-form
// residuals).

#include <array>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "enfem/jet.hpp"
#include "enfem/mesh.hpp"

namespace enfem {

enum class BoundaryKind { Dirichlet, Robin };

struct BoundaryCondition {
  BoundaryMarker marker = BoundaryMarker::All;
  BoundaryKind kind = BoundaryKind::Dirichlet;
};

template <int Dim>
struct ProblemCoefficients {
  using Matrix = Eigen::Matrix<double, Dim, Dim>;

  double peclet = 1.0;
  Point<Dim> convection{};
  std::function<Matrix(const Point<Dim>&)> diffusion;                 // empty: identity
  std::function<Point<Dim>(const Point<Dim>&)> diffusion_divergence;  // sum_i d_i D_ij; empty: zero
  std::function<double(const Point<Dim>&)> reaction;                  // empty: zero
  std::function<double(const Point<Dim>&)> source;                    // empty: zero
  std::function<double(const Point<Dim>&)> dirichlet;                 // empty: zero
  std::function<double(const Point<Dim>&, const Point<Dim>&)> robin;  // (x, outward normal)
  double robin_coefficient = 1.0;
  std::vector<BoundaryCondition> boundary{{BoundaryMarker::All, BoundaryKind::Dirichlet}};

  Matrix diffusion_at(const Point<Dim>& x) const { return diffusion ? diffusion(x) : Matrix::Identity(); }
  Point<Dim> diffusion_divergence_at(const Point<Dim>& x) const {
    return diffusion_divergence ? diffusion_divergence(x) : Point<Dim>{};
  }
  double reaction_at(const Point<Dim>& x) const { return reaction ? reaction(x) : 0.0; }
  double source_at(const Point<Dim>& x) const { return source ? source(x) : 0.0; }
  double dirichlet_at(const Point<Dim>& x) const { return dirichlet ? dirichlet(x) : 0.0; }
  double robin_at(const Point<Dim>& x, const Point<Dim>& n) const { return robin ? robin(x, n) : 0.0; }
  bool has_convection() const {
    for (double c : convection)
      if (c != 0.0) return true;
    return false;
  }

  std::vector<BoundaryMarker> markers(BoundaryKind kind) const {
    std::vector<BoundaryMarker> m;
    for (const auto& b : boundary)
      if (b.kind == kind) m.push_back(b.marker);
    return m;
  }

  // L(u) at a point from the value, gradient and Hessian of u.
  double apply_strong(const Point<Dim>& x, const Jet<Dim, 2>& u) const {
    const Matrix d = diffusion_at(x);
    const Point<Dim> dd = diffusion_divergence_at(x);
    double div = 0.0;
    for (int j = 0; j < Dim; ++j) {
      div += dd[j] * u.first(j);
      for (int i = 0; i < Dim; ++i) div += d(i, j) * u.second(i, j);
    }
    double conv = 0.0;
    for (int j = 0; j < Dim; ++j) conv += convection[j] * u.first(j);
    return -div / peclet + reaction_at(x) * u.value() + conv;
  }

  // Conormal flux (1/Pe) (D grad u) . n.
  double conormal_flux(const Point<Dim>& x, const Jet<Dim, 2>& u, const Point<Dim>& n) const {
    const Matrix d = diffusion_at(x);
    double f = 0.0;
    for (int i = 0; i < Dim; ++i)
      for (int j = 0; j < Dim; ++j) f += n[i] * d(i, j) * u.first(j);
    return f / peclet;
  }
};

template <int Dim>
struct Domain {
  enum class Kind { Interval, Box, Annulus };
  Kind kind = Kind::Box;
  Point<Dim> lo{};
  Point<Dim> hi{};
  double r_in = 0.0;
  double r_out = 0.0;

  double measure() const;
};

using Params = std::span<const double>;
using ParamBox = std::vector<std::array<double, 2>>;

template <int Dim>
using JetFn = std::function<Jet<Dim, 4>(const Point<Dim>&, Params)>;

enum class CompositionKind { Raw, LevelSetDirichlet, MixedRobin };

// Closed-form pieces used to impose boundary conditions exactly on a prior:
//   LevelSetDirichlet: u = phi w + g
//   MixedRobin: u = phiE/(phiE+phiI^2) [w + phiI (w - grad phiI . grad w - h)]
//                 + phiI^2/(phiE+phiI^2) g + phiE phiI^2 w
template <int Dim>
struct Composition {
  CompositionKind kind = CompositionKind::Raw;
  std::string level_set_id = "none";
  JetFn<Dim> level_set;        // phi, or phi_I for MixedRobin
  JetFn<Dim> outer_level_set;  // phi_E
  JetFn<Dim> dirichlet_lift;   // g extended into the domain
  JetFn<Dim> robin_lift;       // h
};

template <int Dim>
class Problem {
 public:
  virtual ~Problem() = default;

  virtual std::string id() const = 0;
  virtual ParamBox parameter_box() const = 0;
  virtual Domain<Dim> domain() const = 0;

  int num_params() const { return static_cast<int>(parameter_box().size()); }

  virtual std::vector<BoundaryCondition> boundary_conditions() const {
    return {{BoundaryMarker::All, BoundaryKind::Dirichlet}};
  }
  virtual double peclet(Params) const { return 1.0; }
  virtual Point<Dim> convection(Params) const { return {}; }
  virtual double robin_coefficient() const { return 1.0; }

  // D_ij jets, row-major. Identity by default.
  virtual std::array<Jet<Dim, 2>, Dim * Dim> diffusion(const Point<Dim>& x, Params mu) const;
  virtual bool diffusion_is_identity() const { return true; }
  virtual Jet<Dim, 2> reaction(const Point<Dim>&, Params) const { return {}; }
  virtual Jet<Dim, 2> source(const Point<Dim>& x, Params mu) const = 0;

  virtual bool has_exact() const { return false; }
  virtual Jet<Dim, 4> exact(const Point<Dim>& x, Params mu) const;

  // Boundary data, evaluated on the discrete boundary. Defaults use the
  // exact solution (Dirichlet value, conormal flux + alpha u for Robin).
  virtual double dirichlet(const Point<Dim>& x, Params mu) const;
  virtual double robin(const Point<Dim>& x, const Point<Dim>& normal, Params mu) const;

  virtual Composition<Dim> exact_bc_composition() const { return {}; }

  // Pointwise coefficients at a fixed parameter for finite element assembly.
  // The returned callables refer to this problem, which must outlive them.
  ProblemCoefficients<Dim> bind(std::vector<double> mu) const;
};

// L(u) as a jet of order K-2, for u given to order K (2 <= K <= 3).
template <int Dim, int K, class T>
Jet<Dim, K - 2, T> apply_operator(const Problem<Dim>& pb, const Point<Dim>& x, Params mu, const Jet<Dim, K, T>& u) {
  static_assert(K >= 2 && K <= 3, "strong-form operator needs u to order 2 or 3");
  const double inv_pe = 1.0 / pb.peclet(mu);
  Jet<Dim, K - 2, T> out;
  if (pb.diffusion_is_identity()) {
    for (int s = 0; s < Dim; ++s) out = out - u.diff(s).diff(s);
  } else {
    const auto d = pb.diffusion(x, mu);
    for (int i = 0; i < Dim; ++i) {
      Jet<Dim, K - 1, T> flux;
      for (int j = 0; j < Dim; ++j) flux = flux + d[i * Dim + j].template truncate<K - 1>() * u.diff(j);
      out = out - flux.diff(i);
    }
  }
  out *= inv_pe;
  const auto r = pb.reaction(x, mu);
  bool has_reaction = false;
  for (double v : r.c) has_reaction = has_reaction || v != 0.0;
  if (has_reaction) out = out + r.template truncate<K - 2>() * u.template truncate<K - 2>();
  const auto conv = pb.convection(mu);
  for (int s = 0; s < Dim; ++s) {
    if (conv[s] != 0.0) out = out + u.diff(s).template truncate<K - 2>() * conv[s];
  }
  return out;
}

}  // namespace enfem
