#include "enfem/fem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/SparseLU>

#include "enfem/errors.hpp"

namespace enfem {

template <int Dim>
Tabulation<Dim> tabulate(const LagrangeBasis<Dim>& basis, int quad_degree) {
  Tabulation<Dim> t;
  t.rule = simplex_quadrature<Dim>(quad_degree);
  t.n_basis = basis.size();
  const int nq = t.rule.size();
  t.values.resize(static_cast<std::size_t>(nq) * t.n_basis);
  t.gradients.resize(static_cast<std::size_t>(nq) * t.n_basis * Dim);
  for (int q = 0; q < nq; ++q) {
    basis.values(t.rule.points[q], &t.values[static_cast<std::size_t>(q) * t.n_basis]);
    basis.gradients(t.rule.points[q], &t.gradients[static_cast<std::size_t>(q) * t.n_basis * Dim]);
  }
  return t;
}

template <int Dim>
void physical_gradients(const Tabulation<Dim>& tab, const CellGeometry<Dim>& geo, int q, double* out) {
  for (int i = 0; i < tab.n_basis; ++i) {
    for (int r = 0; r < Dim; ++r) {
      double s = 0.0;
      for (int c = 0; c < Dim; ++c) s += geo.inverse_transpose(r, c) * tab.gradient(q, i, c);
      out[i * Dim + r] = s;
    }
  }
}

template <int Dim>
FacetGeometry<Dim> facet_geometry(const LagrangeSpace<Dim>& space, int facet) {
  const auto& fc = space.facet_cells()[facet];
  const auto& mesh = space.mesh();
  const auto& cell = mesh.cells[fc.cell];
  FacetGeometry<Dim> g;
  if constexpr (Dim == 1) {
    const double xf = mesh.nodes[cell[fc.local_facet]][0];
    const double xo = mesh.nodes[cell[1 - fc.local_facet]][0];
    g.normal = {xf > xo ? 1.0 : -1.0};
    g.measure = 1.0;
  } else {
    const auto& a = mesh.nodes[cell[fc.local_facet]];
    const auto& b = mesh.nodes[cell[(fc.local_facet + 1) % 3]];
    const double dx = b[0] - a[0], dy = b[1] - a[1];
    const double len = std::hypot(dx, dy);
    g.normal = {dy / len, -dx / len};  // counter-clockwise cells
    g.measure = len;
  }
  return g;
}

template <int Dim>
Point<Dim> facet_point(int local_facet, double t) {
  if constexpr (Dim == 1) {
    (void)t;
    return {local_facet == 0 ? 0.0 : 1.0};
  } else {
    static constexpr double v[3][2] = {{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}};
    const auto& a = v[local_facet];
    const auto& b = v[(local_facet + 1) % 3];
    return {a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])};
  }
}

namespace {

// Facet rule: parameters t in [0,1] and weights (a single unit point in 1D).
template <int Dim>
QuadratureRule<1> facet_rule(int degree) {
  if constexpr (Dim == 1) {
    QuadratureRule<1> q;
    q.points = {{0.0}};
    q.weights = {1.0};
    q.degree = degree;
    return q;
  } else {
    return simplex_quadrature<1>(degree);
  }
}

}  // namespace

template <int Dim>
void check_diffusion(const Eigen::Matrix<double, Dim, Dim>& d, const Point<Dim>& x) {
  const double scale = std::max(1.0, d.cwiseAbs().maxCoeff());
  auto where = [&] {
    std::ostringstream os;
    os << "(";
    for (int s = 0; s < Dim; ++s) os << (s ? ", " : "") << x[s];
    os << ")";
    return os.str();
  };
  if (!d.allFinite()) throw CoefficientError("diffusion is not finite at " + where());
  if ((d - d.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw CoefficientError("diffusion is not symmetric at " + where());
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, Dim, Dim>> es(d, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-12 * scale)
    throw CoefficientError("diffusion has a negative eigenvalue at " + where());
}

template <int Dim>
SparseMatrix assemble_bilinear(const LagrangeSpace<Dim>& space, const ProblemCoefficients<Dim>& coeffs,
                               int quad_degree) {
  if (!(coeffs.peclet > 0.0)) throw CoefficientError("Peclet number must be positive");
  const auto tab = tabulate(space.basis(), quad_degree);
  const int nb = tab.n_basis;
  const int nq = tab.rule.size();
  const auto& mesh = space.mesh();
  const double inv_pe = 1.0 / coeffs.peclet;
  const bool conv = coeffs.has_convection();

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(mesh.num_cells()) * nb * nb);
  Eigen::MatrixXd ke(nb, nb);
  std::vector<double> grad(static_cast<std::size_t>(nb) * Dim);
  std::vector<double> dgrad(static_cast<std::size_t>(nb) * Dim);
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const auto& geo = space.geometry(c);
    ke.setZero();
    for (int q = 0; q < nq; ++q) {
      const Point<Dim> x = geo.map(tab.rule.points[q]);
      const double w = tab.rule.weights[q] * geo.det;
      physical_gradients(tab, geo, q, grad.data());
      const auto d = coeffs.diffusion_at(x);
      check_diffusion<Dim>(d, x);
      const double r = coeffs.reaction_at(x);
      for (int i = 0; i < nb; ++i)
        for (int a = 0; a < Dim; ++a) {
          double s = 0.0;
          for (int b = 0; b < Dim; ++b) s += d(a, b) * grad[i * Dim + b];
          dgrad[i * Dim + a] = s;
        }
      for (int i = 0; i < nb; ++i) {
        const double vi = tab.value(q, i);
        for (int j = 0; j < nb; ++j) {
          const double vj = tab.value(q, j);
          double s = 0.0;
          for (int a = 0; a < Dim; ++a) s += dgrad[j * Dim + a] * grad[i * Dim + a];
          s *= inv_pe;
          s += r * vj * vi;
          if (conv) {
            double cg = 0.0;
            for (int a = 0; a < Dim; ++a) cg += coeffs.convection[a] * grad[j * Dim + a];
            s += cg * vi;
          }
          ke(i, j) += w * s;
        }
      }
    }
    const auto& dofs = space.cell_dofs(c);
    for (int i = 0; i < nb; ++i)
      for (int j = 0; j < nb; ++j) trip.emplace_back(dofs[i], dofs[j], ke(i, j));
  }

  // Robin surface term alpha <u, v>
  const auto robin = coeffs.markers(BoundaryKind::Robin);
  if (!robin.empty()) {
    const auto rule = facet_rule<Dim>(2 * space.degree());
    std::vector<double> val(nb);
    for (int f = 0; f < static_cast<int>(mesh.facets.size()); ++f) {
      if (std::find(robin.begin(), robin.end(), mesh.facets[f].marker) == robin.end()) continue;
      const auto& fc = space.facet_cells()[f];
      const auto fg = facet_geometry(space, f);
      const auto local = space.local_facet_dofs(fc.local_facet);
      const auto& dofs = space.cell_dofs(fc.cell);
      for (int q = 0; q < rule.size(); ++q) {
        space.basis().values(facet_point<Dim>(fc.local_facet, rule.points[q][0]), val.data());
        const double w = rule.weights[q] * fg.measure * coeffs.robin_coefficient;
        for (int i : local)
          for (int j : local) trip.emplace_back(dofs[i], dofs[j], w * val[i] * val[j]);
      }
    }
  }

  SparseMatrix a(space.num_dofs(), space.num_dofs());
  a.setFromTriplets(trip.begin(), trip.end());
  a.makeCompressed();
  return a;
}

template <int Dim>
Eigen::VectorXd assemble_linear(const LagrangeSpace<Dim>& space, const ScalarFn<Dim>& source, int quad_degree) {
  const auto tab = tabulate(space.basis(), quad_degree);
  const int nb = tab.n_basis;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(space.num_dofs());
  for (int c = 0; c < space.mesh().num_cells(); ++c) {
    const auto& geo = space.geometry(c);
    const auto& dofs = space.cell_dofs(c);
    for (int q = 0; q < tab.rule.size(); ++q) {
      const double fw = source(geo.map(tab.rule.points[q])) * tab.rule.weights[q] * geo.det;
      for (int i = 0; i < nb; ++i) b[dofs[i]] += fw * tab.value(q, i);
    }
  }
  return b;
}

template <int Dim>
Eigen::VectorXd assemble_boundary_load(const LagrangeSpace<Dim>& space, BoundaryMarker marker,
                                       const std::function<double(const Point<Dim>&, const Point<Dim>&)>& g,
                                       int quad_degree) {
  Eigen::VectorXd b = Eigen::VectorXd::Zero(space.num_dofs());
  const auto& mesh = space.mesh();
  const auto rule = facet_rule<Dim>(quad_degree);
  std::vector<double> val(space.dofs_per_cell());
  for (int f = 0; f < static_cast<int>(mesh.facets.size()); ++f) {
    if (mesh.facets[f].marker != marker) continue;
    const auto& fc = space.facet_cells()[f];
    const auto fg = facet_geometry(space, f);
    const auto& geo = space.geometry(fc.cell);
    const auto& dofs = space.cell_dofs(fc.cell);
    for (int q = 0; q < rule.size(); ++q) {
      const auto xi = facet_point<Dim>(fc.local_facet, rule.points[q][0]);
      space.basis().values(xi, val.data());
      const double gw = g(geo.map(xi), fg.normal) * rule.weights[q] * fg.measure;
      for (int i : space.local_facet_dofs(fc.local_facet)) b[dofs[i]] += gw * val[i];
    }
  }
  return b;
}

template <int Dim>
Eigen::VectorXd assemble_linear(const LagrangeSpace<Dim>& space, const ProblemCoefficients<Dim>& coeffs,
                                int quad_degree) {
  Eigen::VectorXd b = assemble_linear<Dim>(
      space, ScalarFn<Dim>([&](const Point<Dim>& x) { return coeffs.source_at(x); }), quad_degree);
  for (auto m : coeffs.markers(BoundaryKind::Robin)) {
    b += assemble_boundary_load<Dim>(
        space, m, [&](const Point<Dim>& x, const Point<Dim>& n) { return coeffs.robin_at(x, n); }, quad_degree);
  }
  return b;
}

template <int Dim>
std::vector<Point<Dim>> interpolation_nodes(const LagrangeSpace<Dim>& space, int m) {
  const LagrangeBasis<Dim> lm(m);
  std::vector<Point<Dim>> pts;
  pts.reserve(static_cast<std::size_t>(space.mesh().num_cells()) * lm.size());
  for (int c = 0; c < space.mesh().num_cells(); ++c)
    for (const auto& xi : lm.nodes()) pts.push_back(space.geometry(c).map(xi));
  return pts;
}

template <int Dim>
Eigen::VectorXd assemble_interpolated_load(const LagrangeSpace<Dim>& space, const BatchFn<Dim>& source, int m) {
  if (m < 1) throw std::invalid_argument("interpolation degree must be >= 1");
  const LagrangeBasis<Dim> lm(m);
  const int nm = lm.size();
  const int nb = space.dofs_per_cell();
  // M_ij = int psi_i L_j on the reference cell, exact at degree k + m
  const auto tab = tabulate(space.basis(), space.degree() + m);
  Eigen::MatrixXd mref = Eigen::MatrixXd::Zero(nb, nm);
  std::vector<double> lv(nm);
  for (int q = 0; q < tab.rule.size(); ++q) {
    lm.values(tab.rule.points[q], lv.data());
    for (int i = 0; i < nb; ++i)
      for (int j = 0; j < nm; ++j) mref(i, j) += tab.rule.weights[q] * tab.value(q, i) * lv[j];
  }

  const auto pts = interpolation_nodes(space, m);
  std::vector<double> fv(pts.size());
  source(pts, fv);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(space.num_dofs());
  for (int c = 0; c < space.mesh().num_cells(); ++c) {
    const auto& geo = space.geometry(c);
    const auto& dofs = space.cell_dofs(c);
    const double* f = &fv[static_cast<std::size_t>(c) * nm];
    for (int i = 0; i < nb; ++i) {
      double s = 0.0;
      for (int j = 0; j < nm; ++j) s += mref(i, j) * f[j];
      b[dofs[i]] += geo.det * s;
    }
  }
  return b;
}

void apply_dirichlet(SparseSystem& system, std::span<const int> dofs, std::span<const double> values) {
  const int n = static_cast<int>(system.matrix.rows());
  if (dofs.size() != values.size()) throw std::invalid_argument("dof and value counts differ");
  std::vector<char> fixed(n, 0);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
  for (std::size_t i = 0; i < dofs.size(); ++i) {
    fixed[dofs[i]] = 1;
    g[dofs[i]] = values[i];
  }
  const Eigen::VectorXd shift = system.matrix * g;
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(system.matrix.nonZeros());
  for (int col = 0; col < system.matrix.outerSize(); ++col) {
    for (SparseMatrix::InnerIterator it(system.matrix, col); it; ++it) {
      if (fixed[it.row()] || fixed[it.col()]) continue;
      trip.emplace_back(it.row(), it.col(), it.value());
    }
  }
  for (int i = 0; i < n; ++i) {
    if (fixed[i]) {
      trip.emplace_back(i, i, 1.0);
      system.rhs[i] = g[i];
    } else {
      system.rhs[i] -= shift[i];
    }
  }
  SparseMatrix a(n, n);
  a.setFromTriplets(trip.begin(), trip.end());
  a.makeCompressed();
  system.matrix = std::move(a);
}

template <int Dim>
void apply_dirichlet(SparseSystem& system, const LagrangeSpace<Dim>& space, BoundaryMarker marker,
                     const ScalarFn<Dim>& boundary_values) {
  const auto& dofs = space.boundary_dofs(marker);
  std::vector<double> vals;
  vals.reserve(dofs.size());
  for (int d : dofs) vals.push_back(boundary_values(space.dof_coords()[d]));
  apply_dirichlet(system, dofs, vals);
}

Eigen::VectorXd solve_linear(const SparseSystem& system) {
  SparseMatrix a = system.matrix;
  a.makeCompressed();
  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
  lu.compute(a);
  if (lu.info() != Eigen::Success) {
    throw SolverError("sparse LU failed (" + lu.lastErrorMessage() + "); the matrix is singular or ill-conditioned");
  }
  Eigen::VectorXd x = lu.solve(system.rhs);
  const double bn = system.rhs.norm();
  const double denom = bn > 0.0 ? bn : 1.0;
  double rel = (a * x - system.rhs).norm() / denom;
  for (int it = 0; it < 3 && rel > 1e-12; ++it) {
    x += lu.solve(system.rhs - a * x);
    rel = (a * x - system.rhs).norm() / denom;
  }
  if (!(rel <= 1e-10)) {
    std::ostringstream os;
    os << "linear solve residual " << rel << " exceeds 1e-10; |log det| = " << lu.logAbsDeterminant();
    throw SolverError(os.str());
  }
  return x;
}

template <int Dim>
double DiscreteField<Dim>::value_in_cell(int cell, const Point<Dim>& xi) const {
  const auto& basis = space->basis();
  std::vector<double> v(basis.size());
  basis.values(xi, v.data());
  const auto& dofs = space->cell_dofs(cell);
  double s = 0.0;
  for (int i = 0; i < basis.size(); ++i) s += coeffs[dofs[i]] * v[i];
  return s;
}

template <int Dim>
Jet<Dim, 1> DiscreteField<Dim>::jet_in_cell(int cell, const Point<Dim>& xi) const {
  const auto& basis = space->basis();
  const int nb = basis.size();
  std::vector<double> v(nb), g(static_cast<std::size_t>(nb) * Dim);
  basis.values(xi, v.data());
  basis.gradients(xi, g.data());
  const auto& geo = space->geometry(cell);
  const auto& dofs = space->cell_dofs(cell);
  Jet<Dim, 1> j;
  Point<Dim> gref{};
  for (int i = 0; i < nb; ++i) {
    const double ci = coeffs[dofs[i]];
    j.c[0] += ci * v[i];
    for (int d = 0; d < Dim; ++d) gref[d] += ci * g[i * Dim + d];
  }
  for (int r = 0; r < Dim; ++r) {
    double s = 0.0;
    for (int c = 0; c < Dim; ++c) s += geo.inverse_transpose(r, c) * gref[c];
    j.c[1 + r] = s;
  }
  return j;
}

template <int Dim>
DiscreteField<Dim> interpolate(const LagrangeSpace<Dim>& space, const ScalarFn<Dim>& field) {
  DiscreteField<Dim> u{&space, Eigen::VectorXd(space.num_dofs())};
  for (int i = 0; i < space.num_dofs(); ++i) u.coeffs[i] = field(space.dof_coords()[i]);
  return u;
}

template <int Dim>
DiscreteField<Dim> interpolate(const LagrangeSpace<Dim>& space, const BatchFn<Dim>& field) {
  DiscreteField<Dim> u{&space, Eigen::VectorXd(space.num_dofs())};
  field(space.dof_coords(), std::span<double>(u.coeffs.data(), u.coeffs.size()));
  return u;
}

template <int Dim>
PointLocator<Dim>::PointLocator(const Mesh<Dim>& mesh) : mesh_(&mesh) {
  const int nc = mesh.num_cells();
  geo_.reserve(nc);
  for (int c = 0; c < nc; ++c) geo_.push_back(cell_geometry(mesh, c));
  Point<Dim> hi;
  for (int d = 0; d < Dim; ++d) {
    lo_[d] = std::numeric_limits<double>::max();
    hi[d] = std::numeric_limits<double>::lowest();
  }
  for (const auto& p : mesh.nodes)
    for (int d = 0; d < Dim; ++d) {
      lo_[d] = std::min(lo_[d], p[d]);
      hi[d] = std::max(hi[d], p[d]);
    }
  const int per_dim = std::max(1, static_cast<int>(std::pow(static_cast<double>(nc), 1.0 / Dim)));
  std::size_t total = 1;
  for (int d = 0; d < Dim; ++d) {
    n_bins_[d] = per_dim;
    cell_size_[d] = (hi[d] - lo_[d]) / per_dim;
    if (!(cell_size_[d] > 0.0)) cell_size_[d] = 1.0;
    total *= per_dim;
  }
  bins_.assign(total, {});
  for (int c = 0; c < nc; ++c) {
    std::array<int, Dim> b0, b1;
    for (int d = 0; d < Dim; ++d) {
      double mn = std::numeric_limits<double>::max(), mx = std::numeric_limits<double>::lowest();
      for (int v : mesh.cells[c]) {
        mn = std::min(mn, mesh.nodes[v][d]);
        mx = std::max(mx, mesh.nodes[v][d]);
      }
      b0[d] = std::clamp(static_cast<int>(std::floor((mn - lo_[d]) / cell_size_[d])), 0, n_bins_[d] - 1);
      b1[d] = std::clamp(static_cast<int>(std::floor((mx - lo_[d]) / cell_size_[d])), 0, n_bins_[d] - 1);
    }
    if constexpr (Dim == 1) {
      for (int i = b0[0]; i <= b1[0]; ++i) bins_[bin_index({i})].push_back(c);
    } else {
      for (int j = b0[1]; j <= b1[1]; ++j)
        for (int i = b0[0]; i <= b1[0]; ++i) bins_[bin_index({i, j})].push_back(c);
    }
  }
}

template <int Dim>
int PointLocator<Dim>::bin_index(const std::array<int, Dim>& b) const {
  if constexpr (Dim == 1) {
    return b[0];
  } else {
    return b[1] * n_bins_[0] + b[0];
  }
}

template <int Dim>
Point<Dim> PointLocator<Dim>::to_reference(int cell, const Point<Dim>& x) const {
  const auto& g = geo_[cell];
  Point<Dim> xi{};
  // J^{-1} = (J^{-T})^T
  for (int r = 0; r < Dim; ++r)
    for (int c = 0; c < Dim; ++c) xi[r] += g.inverse_transpose(c, r) * (x[c] - g.origin[c]);
  return xi;
}

namespace {

template <int Dim>
double min_barycentric(const Point<Dim>& xi) {
  double s = 1.0, m = std::numeric_limits<double>::max();
  for (int d = 0; d < Dim; ++d) {
    s -= xi[d];
    m = std::min(m, xi[d]);
  }
  return std::min(m, s);
}

}  // namespace

template <int Dim>
typename PointLocator<Dim>::Hit PointLocator<Dim>::locate(const Point<Dim>& x) const {
  std::array<int, Dim> b;
  for (int d = 0; d < Dim; ++d)
    b[d] = std::clamp(static_cast<int>(std::floor((x[d] - lo_[d]) / cell_size_[d])), 0, n_bins_[d] - 1);
  Hit best{-1, {}};
  double best_score = std::numeric_limits<double>::lowest();
  for (int c : bins_[bin_index(b)]) {
    const auto xi = to_reference(c, x);
    const double s = min_barycentric<Dim>(xi);
    if (s > best_score) {
      best_score = s;
      best = {c, xi};
    }
    if (s >= -1e-12) return {c, xi};
  }
  for (int c = 0; c < mesh_->num_cells(); ++c) {
    const auto xi = to_reference(c, x);
    const double s = min_barycentric<Dim>(xi);
    if (s > best_score) {
      best_score = s;
      best = {c, xi};
    }
  }
  return best;
}

template <int Dim>
DiscreteFieldEvaluator<Dim>::DiscreteFieldEvaluator(DiscreteField<Dim> field)
    : field_(std::move(field)), locator_(std::make_shared<PointLocator<Dim>>(field_.space->mesh())) {}

template <int Dim>
void DiscreteFieldEvaluator<Dim>::evaluate(std::span<const Point<Dim>> x, std::span<Jet<Dim, 2>> out) const {
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto hit = locator_->locate(x[i]);
    const auto j1 = field_.jet_in_cell(hit.cell, hit.xi);
    Jet<Dim, 2> j;
    for (int k = 0; k < Jet<Dim, 1>::size; ++k) j.c[k] = j1.c[k];
    out[i] = j;
  }
}

namespace {

template <int Dim>
std::vector<Point<Dim>> quadrature_points(const LagrangeSpace<Dim>& space, const QuadratureRule<Dim>& rule) {
  std::vector<Point<Dim>> pts;
  pts.reserve(static_cast<std::size_t>(space.mesh().num_cells()) * rule.size());
  for (int c = 0; c < space.mesh().num_cells(); ++c)
    for (const auto& xi : rule.points) pts.push_back(space.geometry(c).map(xi));
  return pts;
}

}  // namespace

template <int Dim>
ErrorNorms error_norms(const DiscreteField<Dim>& discrete, const DifferentiableField<Dim>& reference,
                       int quad_degree, const Reconstruction<Dim>& recon) {
  const auto& space = *discrete.space;
  const auto tab = tabulate(space.basis(), quad_degree);
  const int nb = tab.n_basis;
  const int nq = tab.rule.size();
  const auto pts = quadrature_points(space, tab.rule);
  const auto ref = reference.evaluate(pts);
  std::vector<Jet<Dim, 2>> prior;
  if (recon.kind != ReconstructionKind::Plain) {
    if (!recon.prior) throw std::invalid_argument("enriched reconstruction needs a prior");
    prior = recon.prior->evaluate(pts);
  }

  ErrorNorms e;
  std::vector<double> grad(static_cast<std::size_t>(nb) * Dim);
  for (int c = 0; c < space.mesh().num_cells(); ++c) {
    const auto& geo = space.geometry(c);
    const auto& dofs = space.cell_dofs(c);
    for (int q = 0; q < nq; ++q) {
      const std::size_t p = static_cast<std::size_t>(c) * nq + q;
      physical_gradients(tab, geo, q, grad.data());
      double v = 0.0;
      Point<Dim> g{};
      for (int i = 0; i < nb; ++i) {
        const double ci = discrete.coeffs[dofs[i]];
        v += ci * tab.value(q, i);
        for (int d = 0; d < Dim; ++d) g[d] += ci * grad[i * Dim + d];
      }
      if (recon.kind == ReconstructionKind::Additive) {
        v += prior[p].value();
        for (int d = 0; d < Dim; ++d) g[d] += prior[p].first(d);
      } else if (recon.kind == ReconstructionKind::Multiplicative) {
        const double um = prior[p].value() + recon.lift;
        for (int d = 0; d < Dim; ++d) g[d] = v * prior[p].first(d) + um * g[d];
        v = um * v - recon.lift;
      }
      const double w = tab.rule.weights[q] * geo.det;
      const double ev = ref[p].value() - v;
      e.l2_error += w * ev * ev;
      e.l2_norm += w * ref[p].value() * ref[p].value();
      for (int d = 0; d < Dim; ++d) {
        const double eg = ref[p].first(d) - g[d];
        e.h1_error += w * eg * eg;
        e.h1_norm += w * ref[p].first(d) * ref[p].first(d);
      }
    }
  }
  e.l2_error = std::sqrt(e.l2_error);
  e.h1_error = std::sqrt(e.h1_error);
  e.l2_norm = std::sqrt(e.l2_norm);
  e.h1_norm = std::sqrt(e.h1_norm);
  return e;
}

template <int Dim>
ErrorNorms field_error_norms(const LagrangeSpace<Dim>& space, const DifferentiableField<Dim>& approx,
                             const DifferentiableField<Dim>& reference, int quad_degree) {
  const auto rule = simplex_quadrature<Dim>(quad_degree);
  const int nq = rule.size();
  const auto pts = quadrature_points(space, rule);
  const auto ref = reference.evaluate(pts);
  const auto app = approx.evaluate(pts);
  ErrorNorms e;
  for (int c = 0; c < space.mesh().num_cells(); ++c) {
    const double det = space.geometry(c).det;
    for (int q = 0; q < nq; ++q) {
      const std::size_t p = static_cast<std::size_t>(c) * nq + q;
      const double w = rule.weights[q] * det;
      const double ev = ref[p].value() - app[p].value();
      e.l2_error += w * ev * ev;
      e.l2_norm += w * ref[p].value() * ref[p].value();
      for (int d = 0; d < Dim; ++d) {
        const double eg = ref[p].first(d) - app[p].first(d);
        e.h1_error += w * eg * eg;
        e.h1_norm += w * ref[p].first(d) * ref[p].first(d);
      }
    }
  }
  e.l2_error = std::sqrt(e.l2_error);
  e.h1_error = std::sqrt(e.h1_error);
  e.l2_norm = std::sqrt(e.l2_norm);
  e.h1_norm = std::sqrt(e.h1_norm);
  return e;
}

#define ENFEM_INSTANTIATE(D)                                                                                      \
  template Tabulation<D> tabulate<D>(const LagrangeBasis<D>&, int);                                                 \
  template void physical_gradients<D>(const Tabulation<D>&, const CellGeometry<D>&, int, double*);                   \
  template FacetGeometry<D> facet_geometry<D>(const LagrangeSpace<D>&, int);                                         \
  template Point<D> facet_point<D>(int, double);                                                                  \
  template void check_diffusion<D>(const Eigen::Matrix<double, D, D>&, const Point<D>&);                          \
  template SparseMatrix assemble_bilinear<D>(const LagrangeSpace<D>&, const ProblemCoefficients<D>&, int);            \
  template Eigen::VectorXd assemble_linear<D>(const LagrangeSpace<D>&, const ProblemCoefficients<D>&, int);           \
  template Eigen::VectorXd assemble_linear<D>(const LagrangeSpace<D>&, const ScalarFn<D>&, int);                      \
  template Eigen::VectorXd assemble_interpolated_load<D>(const LagrangeSpace<D>&, const BatchFn<D>&, int);            \
  template std::vector<Point<D>> interpolation_nodes<D>(const LagrangeSpace<D>&, int);                                \
  template Eigen::VectorXd assemble_boundary_load<D>(                                                                \
      const LagrangeSpace<D>&, BoundaryMarker, const std::function<double(const Point<D>&, const Point<D>&)>&, int); \
  template void apply_dirichlet<D>(SparseSystem&, const LagrangeSpace<D>&, BoundaryMarker, const ScalarFn<D>&);       \
  template struct DiscreteField<D>;                                                                               \
  template DiscreteField<D> interpolate<D>(const LagrangeSpace<D>&, const ScalarFn<D>&);                              \
  template DiscreteField<D> interpolate<D>(const LagrangeSpace<D>&, const BatchFn<D>&);                               \
  template class PointLocator<D>;                                                                                 \
  template class DiscreteFieldEvaluator<D>;                                                                       \
  template ErrorNorms error_norms<D>(const DiscreteField<D>&, const DifferentiableField<D>&, int,                    \
                                  const Reconstruction<D>&);                                                      \
  template ErrorNorms field_error_norms<D>(const LagrangeSpace<D>&, const DifferentiableField<D>&,                   \
                                        const DifferentiableField<D>&, int);

ENFEM_INSTANTIATE(1)
ENFEM_INSTANTIATE(2)

}  // namespace enfem
