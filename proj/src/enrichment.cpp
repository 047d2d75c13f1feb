#include "enfem/enrichment.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "enfem/errors.hpp"

namespace enfem {

std::string to_string(EnrichmentMode m) {
  switch (m) {
    case EnrichmentMode::Standard:
      return "standard";
    case EnrichmentMode::Additive:
      return "additive";
    case EnrichmentMode::Multiplicative:
      return "multiplicative";
  }
  return "?";
}

std::string to_string(BcMode m) { return m == BcMode::Strong ? "strong" : "free"; }

EnrichmentMode parse_enrichment_mode(const std::string& s) {
  if (s == "standard") return EnrichmentMode::Standard;
  if (s == "additive") return EnrichmentMode::Additive;
  if (s == "multiplicative") return EnrichmentMode::Multiplicative;
  throw ConfigError("unknown enrichment mode '" + s + "'");
}

BcMode parse_bc_mode(const std::string& s) {
  if (s == "strong") return BcMode::Strong;
  if (s == "free") return BcMode::Free;
  throw ConfigError("unknown boundary mode '" + s + "'");
}

namespace {

template <int Dim>
int quad_degree(const LagrangeSpace<Dim>& space, const SolveOptions& o) {
  return o.quad_degree > 0 ? o.quad_degree : 2 * space.degree() + 2;
}

template <int Dim>
int interp_degree(const LagrangeSpace<Dim>& space, const SolveOptions& o) {
  return o.interp_degree > 0 ? o.interp_degree : space.degree() + 2;
}

template <int Dim>
std::vector<int> dirichlet_dofs(const LagrangeSpace<Dim>& space, const ProblemCoefficients<Dim>& coeffs) {
  std::vector<int> dofs;
  for (auto m : coeffs.markers(BoundaryKind::Dirichlet)) {
    const auto& d = space.boundary_dofs(m);
    dofs.insert(dofs.end(), d.begin(), d.end());
  }
  std::sort(dofs.begin(), dofs.end());
  dofs.erase(std::unique(dofs.begin(), dofs.end()), dofs.end());
  return dofs;
}

template <int Dim>
std::string format_point(const Point<Dim>& x) {
  std::ostringstream os;
  os.precision(17);
  os << "(";
  for (int s = 0; s < Dim; ++s) os << (s ? ", " : "") << x[s];
  os << ")";
  return os.str();
}

template <int Dim>
std::vector<Point<Dim>> cell_quadrature_points(const LagrangeSpace<Dim>& space, const QuadratureRule<Dim>& rule) {
  std::vector<Point<Dim>> pts;
  pts.reserve(static_cast<std::size_t>(space.mesh().num_cells()) * rule.size());
  for (int c = 0; c < space.mesh().num_cells(); ++c)
    for (const auto& xi : rule.points) pts.push_back(space.geometry(c).map(xi));
  return pts;
}

// Robin facet quadrature points and the facet each belongs to.
template <int Dim>
struct RobinPoints {
  std::vector<Point<Dim>> x;
  std::vector<Point<Dim>> xi;
  std::vector<double> weight;  // includes the facet measure
  std::vector<int> facet;
};

template <int Dim>
RobinPoints<Dim> robin_points(const LagrangeSpace<Dim>& space, const ProblemCoefficients<Dim>& coeffs,
                              int degree) {
  RobinPoints<Dim> r;
  const auto markers = coeffs.markers(BoundaryKind::Robin);
  if (markers.empty()) return r;
  const auto& mesh = space.mesh();
  QuadratureRule<1> rule;
  if constexpr (Dim == 1) {
    rule.points = {{0.0}};
    rule.weights = {1.0};
  } else {
    rule = simplex_quadrature<1>(degree);
  }
  for (int f = 0; f < static_cast<int>(mesh.facets.size()); ++f) {
    if (std::find(markers.begin(), markers.end(), mesh.facets[f].marker) == markers.end()) continue;
    const auto& fc = space.facet_cells()[f];
    const auto fg = facet_geometry<Dim>(space, f);
    for (int q = 0; q < rule.size(); ++q) {
      const auto xi = facet_point<Dim>(fc.local_facet, rule.points[q][0]);
      r.x.push_back(space.geometry(fc.cell).map(xi));
      r.xi.push_back(xi);
      r.weight.push_back(rule.weights[q] * fg.measure);
      r.facet.push_back(f);
    }
  }
  return r;
}

}  // namespace

template <int Dim>
Reconstruction<Dim> EnrichedSolution<Dim>::reconstruction() const {
  Reconstruction<Dim> r;
  r.prior = prior;
  r.lift = lift;
  r.kind = mode == EnrichmentMode::Standard   ? ReconstructionKind::Plain
           : mode == EnrichmentMode::Additive ? ReconstructionKind::Additive
                                              : ReconstructionKind::Multiplicative;
  return r;
}

template <int Dim>
ErrorNorms EnrichedSolution<Dim>::errors(const DifferentiableField<Dim>& reference, int qdeg) const {
  return error_norms(correction, reference, qdeg, reconstruction());
}

template <int Dim>
Eigen::VectorXd EnrichedSolution<Dim>::nodal_values() const {
  Eigen::VectorXd v = correction.coeffs;
  if (mode == EnrichmentMode::Standard) return v;
  const auto& pts = correction.space->dof_coords();
  const auto u = prior->evaluate(pts);
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (mode == EnrichmentMode::Additive)
      v[i] += u[i].value();
    else
      v[i] = (u[i].value() + lift) * v[i] - lift;
  }
  return v;
}

namespace {

// Shared driver for standard and additive solves: load = interpolated
// (f - L u_theta), Robin data g_R - flux(u_theta) - alpha u_theta,
// Dirichlet values g - u_theta.
template <int Dim>
EnrichedSolution<Dim> solve_shifted(const LagrangeSpace<Dim>& space, const ProblemCoefficients<Dim>& coeffs,
                                    const DifferentiableField<Dim>* prior, const SolveOptions& opts) {
  const int qdeg = quad_degree(space, opts);
  const int m = interp_degree(space, opts);
  if (m < space.degree()) throw std::invalid_argument("load interpolation degree must be at least k");

  SparseSystem sys;
  sys.matrix = assemble_bilinear(space, coeffs, qdeg);
  const BatchFn<Dim> load = [&](std::span<const Point<Dim>> x, std::span<double> out) {
    if (prior) {
      const auto u = prior->evaluate(x);
      for (std::size_t i = 0; i < x.size(); ++i) out[i] = coeffs.source_at(x[i]) - coeffs.apply_strong(x[i], u[i]);
    } else {
      for (std::size_t i = 0; i < x.size(); ++i) out[i] = coeffs.source_at(x[i]);
    }
  };
  sys.rhs = assemble_interpolated_load<Dim>(space, load, m);

  const auto rp = robin_points(space, coeffs, qdeg);
  if (!rp.x.empty()) {
    std::vector<Jet<Dim, 2>> u(rp.x.size());
    if (prior) prior->evaluate(rp.x, u);
    std::vector<double> val(space.dofs_per_cell());
    for (std::size_t p = 0; p < rp.x.size(); ++p) {
      const auto& fc = space.facet_cells()[rp.facet[p]];
      const auto n = facet_geometry<Dim>(space, rp.facet[p]).normal;
      double g = coeffs.robin_at(rp.x[p], n);
      if (prior) g -= coeffs.conormal_flux(rp.x[p], u[p], n) + coeffs.robin_coefficient * u[p].value();
      space.basis().values(rp.xi[p], val.data());
      const auto& dofs = space.cell_dofs(fc.cell);
      for (int i : space.local_facet_dofs(fc.local_facet)) sys.rhs[dofs[i]] += rp.weight[p] * g * val[i];
    }
  }

  const auto dofs = dirichlet_dofs(space, coeffs);
  std::vector<Point<Dim>> bx;
  bx.reserve(dofs.size());
  for (int d : dofs) bx.push_back(space.dof_coords()[d]);
  std::vector<Jet<Dim, 2>> ub(bx.size());
  if (prior) prior->evaluate(bx, ub);
  std::vector<double> vals(dofs.size());
  for (std::size_t i = 0; i < dofs.size(); ++i) vals[i] = coeffs.dirichlet_at(bx[i]) - ub[i].value();
  apply_dirichlet(sys, dofs, vals);

  EnrichedSolution<Dim> s;
  s.mode = prior ? EnrichmentMode::Additive : EnrichmentMode::Standard;
  s.prior = prior;
  s.correction.space = &space;
  s.correction.coeffs = solve_linear(sys);
  return s;
}

}  // namespace

template <int Dim>
EnrichedSolution<Dim> solve_standard(const LagrangeSpace<Dim>& space, const ProblemCoefficients<Dim>& coeffs,
                                     const SolveOptions& opts) {
  return solve_shifted<Dim>(space, coeffs, nullptr, opts);
}

template <int Dim>
EnrichedSolution<Dim> solve_additive(const LagrangeSpace<Dim>& space, const ProblemCoefficients<Dim>& coeffs,
                                     const DifferentiableField<Dim>& prior, const SolveOptions& opts) {
  return solve_shifted<Dim>(space, coeffs, &prior, opts);
}

template <int Dim>
EnrichedSolution<Dim> solve_multiplicative(const LagrangeSpace<Dim>& space, const ProblemCoefficients<Dim>& coeffs,
                                           const DifferentiableField<Dim>& prior, double lift, BcMode bc_mode,
                                           const SolveOptions& opts) {
  if (!(lift >= 0.0)) throw std::invalid_argument("lifting constant must be non-negative");
  if (!(coeffs.peclet > 0.0)) throw CoefficientError("Peclet number must be positive");
  const int qdeg = quad_degree(space, opts);
  const auto tab = tabulate(space.basis(), qdeg);
  const int nb = tab.n_basis;
  const int nq = tab.rule.size();
  const auto& mesh = space.mesh();
  const double inv_pe = 1.0 / coeffs.peclet;

  const auto pts = cell_quadrature_points(space, tab.rule);
  const auto u = prior.evaluate(pts);
  for (std::size_t p = 0; p < pts.size(); ++p)
    if (!(u[p].value() + lift > 0.0))
      throw LiftingError("lifted prior is not positive at " + format_point<Dim>(pts[p]));

  // Composite test/trial functions U psi with gradients psi grad U + U grad psi.
  // Solving for q = p - 1: a(U q, U v) = l_M(U v) - a(U, U v), whose right
  // hand side is (f - L u_theta, U v) plus Robin data terms.
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(mesh.num_cells()) * nb * nb);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(space.num_dofs());
  Eigen::MatrixXd ke(nb, nb);
  std::vector<double> grad(static_cast<std::size_t>(nb) * Dim);
  std::vector<double> cval(nb), cgrad(static_cast<std::size_t>(nb) * Dim), dgrad(static_cast<std::size_t>(nb) * Dim);
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const auto& geo = space.geometry(c);
    const auto& dofs = space.cell_dofs(c);
    ke.setZero();
    for (int q = 0; q < nq; ++q) {
      const std::size_t p = static_cast<std::size_t>(c) * nq + q;
      const Point<Dim>& x = pts[p];
      const double w = tab.rule.weights[q] * geo.det;
      const double um = u[p].value() + lift;
      physical_gradients(tab, geo, q, grad.data());
      for (int i = 0; i < nb; ++i) {
        cval[i] = um * tab.value(q, i);
        for (int a = 0; a < Dim; ++a) cgrad[i * Dim + a] = tab.value(q, i) * u[p].first(a) + um * grad[i * Dim + a];
      }
      const auto d = coeffs.diffusion_at(x);
      check_diffusion<Dim>(d, x);
      const double r = coeffs.reaction_at(x);
      for (int i = 0; i < nb; ++i)
        for (int a = 0; a < Dim; ++a) {
          double s = 0.0;
          for (int b = 0; b < Dim; ++b) s += d(a, b) * cgrad[i * Dim + b];
          dgrad[i * Dim + a] = s;
        }
      for (int i = 0; i < nb; ++i) {
        for (int j = 0; j < nb; ++j) {
          double s = 0.0;
          for (int a = 0; a < Dim; ++a) s += dgrad[j * Dim + a] * cgrad[i * Dim + a];
          s *= inv_pe;
          s += r * cval[j] * cval[i];
          double cg = 0.0;
          for (int a = 0; a < Dim; ++a) cg += coeffs.convection[a] * cgrad[j * Dim + a];
          s += cg * cval[i];
          ke(i, j) += w * s;
        }
      }
      const double res = coeffs.source_at(x) - coeffs.apply_strong(x, u[p]);
      for (int i = 0; i < nb; ++i) rhs[dofs[i]] += w * res * cval[i];
    }
    for (int i = 0; i < nb; ++i)
      for (int j = 0; j < nb; ++j) trip.emplace_back(dofs[i], dofs[j], ke(i, j));
  }

  const auto rp = robin_points(space, coeffs, qdeg);
  if (!rp.x.empty()) {
    const auto ur = prior.evaluate(rp.x);
    std::vector<double> val(nb);
    for (std::size_t p = 0; p < rp.x.size(); ++p) {
      const double um = ur[p].value() + lift;
      if (!(um > 0.0)) throw LiftingError("lifted prior is not positive at " + format_point<Dim>(rp.x[p]));
      const auto& fc = space.facet_cells()[rp.facet[p]];
      const auto n = facet_geometry<Dim>(space, rp.facet[p]).normal;
      const auto& dofs = space.cell_dofs(fc.cell);
      space.basis().values(rp.xi[p], val.data());
      const double alpha = coeffs.robin_coefficient;
      // lifted data g_R + alpha M minus the prior's flux + alpha (u_theta + M)
      const double g = coeffs.robin_at(rp.x[p], n) - coeffs.conormal_flux(rp.x[p], ur[p], n) - alpha * ur[p].value();
      const auto local = space.local_facet_dofs(fc.local_facet);
      for (int i : local) {
        rhs[dofs[i]] += rp.weight[p] * g * um * val[i];
        for (int j : local) trip.emplace_back(dofs[i], dofs[j], rp.weight[p] * alpha * um * um * val[i] * val[j]);
      }
    }
  }

  SparseSystem sys;
  sys.matrix.resize(space.num_dofs(), space.num_dofs());
  sys.matrix.setFromTriplets(trip.begin(), trip.end());
  sys.matrix.makeCompressed();
  sys.rhs = std::move(rhs);

  if (bc_mode == BcMode::Strong) {
    const auto dofs = dirichlet_dofs(space, coeffs);
    std::vector<Point<Dim>> bx;
    bx.reserve(dofs.size());
    for (int d : dofs) bx.push_back(space.dof_coords()[d]);
    const auto ub = prior.evaluate(bx);
    std::vector<double> vals(dofs.size());
    for (std::size_t i = 0; i < dofs.size(); ++i) {
      const double um = ub[i].value() + lift;
      if (!(um > 0.0)) throw LiftingError("lifted prior is not positive at boundary dof " + format_point<Dim>(bx[i]));
      vals[i] = (coeffs.dirichlet_at(bx[i]) + lift) / um - 1.0;
    }
    apply_dirichlet(sys, dofs, vals);
  }

  EnrichedSolution<Dim> s;
  s.mode = EnrichmentMode::Multiplicative;
  s.bc_mode = bc_mode;
  s.lift = lift;
  s.prior = &prior;
  s.correction.space = &space;
  s.correction.coeffs = solve_linear(sys);
  s.correction.coeffs.array() += 1.0;
  return s;
}

#define ENFEM_INSTANTIATE(D)                                                                                   \
  template struct EnrichedSolution<D>;                                                                         \
  template EnrichedSolution<D> solve_standard<D>(const LagrangeSpace<D>&, const ProblemCoefficients<D>&,       \
                                                 const SolveOptions&);                                         \
  template EnrichedSolution<D> solve_additive<D>(const LagrangeSpace<D>&, const ProblemCoefficients<D>&,       \
                                                 const DifferentiableField<D>&, const SolveOptions&);          \
  template EnrichedSolution<D> solve_multiplicative<D>(const LagrangeSpace<D>&, const ProblemCoefficients<D>&, \
                                                       const DifferentiableField<D>&, double, BcMode,          \
                                                       const SolveOptions&);

ENFEM_INSTANTIATE(1)
ENFEM_INSTANTIATE(2)

}  // namespace enfem
