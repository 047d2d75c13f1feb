#include "enfem/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <ostream>

#include "enfem/catalog.hpp"
#include "enfem/errors.hpp"

namespace enfem {

template <int Dim>
ExactField<Dim>::ExactField(std::shared_ptr<const Problem<Dim>> problem, std::vector<double> mu)
    : problem_(std::move(problem)), mu_(std::move(mu)) {
  if (!problem_->has_exact()) throw UnsupportedError(problem_->id() + " has no closed-form solution");
}

template <int Dim>
void ExactField<Dim>::evaluate(std::span<const Point<Dim>> x, std::span<Jet<Dim, 2>> out) const {
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = problem_->exact(x[i], mu_).template truncate<2>();
}

template <int Dim>
Jet<Dim, 2> perturbation(const Point<Dim>& x) {
  const double w = 3.0 * std::numbers::pi;
  Jet<Dim, 2> v = sin(Jet<Dim, 2>::variable(x[0], 0) * w);
  if constexpr (Dim == 2) v = v * sin(Jet<Dim, 2>::variable(x[1], 1) * w);
  return v;
}

template <int Dim>
PerturbedField<Dim>::PerturbedField(std::shared_ptr<const DifferentiableField<Dim>> base, double eps)
    : base_(std::move(base)), eps_(eps) {}

template <int Dim>
void PerturbedField<Dim>::evaluate(std::span<const Point<Dim>> x, std::span<Jet<Dim, 2>> out) const {
  base_->evaluate(x, out);
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = out[i] - perturbation<Dim>(x[i]) * eps_;
}

namespace {

// A standard solve that owns its mesh and space.
template <int Dim>
class FineReference final : public DifferentiableField<Dim> {
 public:
  FineReference(const Problem<Dim>& problem, const std::vector<double>& mu, int n, int k)
      : mesh_(std::make_unique<Mesh<Dim>>(make_mesh<Dim>(problem, n))),
        space_(std::make_unique<LagrangeSpace<Dim>>(*mesh_, k)),
        eval_(solve_standard(*space_, problem.bind(mu)).correction) {}
  using DifferentiableField<Dim>::evaluate;
  void evaluate(std::span<const Point<Dim>> x, std::span<Jet<Dim, 2>> out) const override { eval_.evaluate(x, out); }

 private:
  std::unique_ptr<Mesh<Dim>> mesh_;
  std::unique_ptr<LagrangeSpace<Dim>> space_;
  DiscreteFieldEvaluator<Dim> eval_;
};

}  // namespace

template <int Dim>
std::shared_ptr<const DifferentiableField<Dim>> make_reference(std::shared_ptr<const Problem<Dim>> problem,
                                                              const std::vector<double>& mu, int n_ref, int k_ref) {
  if (problem->has_exact()) return std::make_shared<ExactField<Dim>>(problem, mu);
  return std::make_shared<FineReference<Dim>>(*problem, mu, n_ref, k_ref);
}

template <int Dim>
ReconstructedField<Dim>::ReconstructedField(const EnrichedSolution<Dim>& s) : sol_(s), disc_(s.correction) {}

template <int Dim>
void ReconstructedField<Dim>::evaluate(std::span<const Point<Dim>> x, std::span<Jet<Dim, 2>> out) const {
  disc_.evaluate(x, out);
  if (sol_.mode == EnrichmentMode::Standard) return;
  const auto u = sol_.prior->evaluate(x);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (sol_.mode == EnrichmentMode::Additive)
      out[i] = u[i] + out[i];
    else
      out[i] = (u[i] + sol_.lift) * out[i] - sol_.lift;
  }
}

template <int Dim>
ErrorRecord compute_errors(const LagrangeSpace<Dim>& space, const ProblemCoefficients<Dim>& coeffs,
                           const DifferentiableField<Dim>& reference, const DifferentiableField<Dim>* prior,
                           const ErrorOptions& opts) {
  const int qdeg = opts.quad_degree > 0 ? opts.quad_degree : 2 * space.degree() + 2;
  ErrorRecord r;
  r.k = space.degree();
  r.h = space.mesh().h;
  const auto std_err = solve_standard(space, coeffs, opts.solve).errors(reference, qdeg);
  r.e_h = std_err.relative_l2();
  r.e_h_h1 = std_err.relative_h1();
  if (!prior) return r;
  r.e_theta = field_error_norms(space, *prior, reference, qdeg).relative_l2();
  const auto add_err = solve_additive(space, coeffs, *prior, opts.solve).errors(reference, qdeg);
  r.e_add = add_err.relative_l2();
  r.e_add_h1 = add_err.relative_h1();
  r.lifts = opts.lifts;
  for (double m : opts.lifts)
    r.e_mult.push_back(
        solve_multiplicative(space, coeffs, *prior, m, opts.bc_mode, opts.solve).errors(reference, qdeg).relative_l2());
  return r;
}

GainSummary summarize_gains(const std::string& name, const std::vector<double>& num, const std::vector<double>& den) {
  if (num.size() != den.size()) throw std::invalid_argument("gain inputs differ in length");
  GainSummary g;
  g.name = name;
  std::vector<double> finite;
  for (std::size_t i = 0; i < num.size(); ++i) {
    const double v = den[i] == 0.0 ? std::numeric_limits<double>::infinity() : num[i] / den[i];
    g.gains.push_back(v);
    if (std::isfinite(v))
      finite.push_back(v);
    else
      ++g.n_infinite;
  }
  if (finite.empty()) {
    g.min = g.max = g.mean = std::numeric_limits<double>::quiet_NaN();
    g.std = std::numeric_limits<double>::quiet_NaN();
    return g;
  }
  // Sorting first makes the sums independent of the sample order.
  std::sort(finite.begin(), finite.end());
  g.min = finite.front();
  g.max = finite.back();
  double s = 0.0;
  for (double v : finite) s += v;
  g.mean = s / static_cast<double>(finite.size());
  double ss = 0.0;
  for (double v : finite) ss += (v - g.mean) * (v - g.mean);
  g.std = std::sqrt(ss / static_cast<double>(finite.size()));
  g.mean = std::clamp(g.mean, g.min, g.max);
  return g;
}

std::vector<GainSummary> compute_gains(const std::vector<ErrorRecord>& records) {
  std::vector<double> e_theta, e_h, e_add;
  for (const auto& r : records) {
    e_theta.push_back(r.e_theta);
    e_h.push_back(r.e_h);
    e_add.push_back(r.e_add);
  }
  std::vector<GainSummary> out{summarize_gains("G_plus_theta", e_theta, e_add),
                               summarize_gains("G_plus", e_h, e_add)};
  if (records.empty()) return out;
  for (std::size_t j = 0; j < records.front().lifts.size(); ++j) {
    std::vector<double> e_m;
    for (const auto& r : records) e_m.push_back(r.e_mult.at(j));
    const std::string tag = format_double(records.front().lifts[j]);
    out.push_back(summarize_gains("G_M_theta_" + tag, e_theta, e_m));
    out.push_back(summarize_gains("G_M_" + tag, e_h, e_m));
  }
  return out;
}

template <int Dim>
std::vector<Point<Dim>> uniform_grid(const Domain<Dim>& d, int n) {
  std::vector<Point<Dim>> pts;
  auto coord = [n](double lo, double hi, int i) { return lo + (hi - lo) * static_cast<double>(i) / (n - 1); };
  if constexpr (Dim == 1) {
    for (int i = 0; i < n; ++i) pts.push_back({coord(d.lo[0], d.hi[0], i)});
  } else {
    const bool ring = d.kind == Domain<2>::Kind::Annulus;
    const Point<2> lo = ring ? Point<2>{-d.r_out, -d.r_out} : d.lo;
    const Point<2> hi = ring ? Point<2>{d.r_out, d.r_out} : d.hi;
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const Point<2> p{coord(lo[0], hi[0], i), coord(lo[1], hi[1], j)};
        const double r = std::hypot(p[0], p[1]);
        if (!ring || (r >= d.r_in && r <= d.r_out)) pts.push_back(p);
      }
  }
  return pts;
}

namespace {

template <int Dim>
Mesh<Dim> domain_mesh(const Domain<Dim>& d, int n) {
  if constexpr (Dim == 1) {
    return build_interval_mesh(n, d.lo[0], d.hi[0]);
  } else {
    if (d.kind == Domain<2>::Kind::Annulus) return build_annulus_mesh(n, 6 * (n - 1), d.r_in, d.r_out);
    return build_square_mesh(n, d.lo[0], d.hi[0], d.lo[1], d.hi[1]);
  }
}

template <int Dim>
double hessian_sq(const Jet<Dim, 2>& j) {
  double s = 0.0;
  for (int a = 0; a < Dim; ++a)
    for (int b = 0; b < Dim; ++b) s += j.second(a, b) * j.second(a, b);
  return s;
}

template <int Dim>
double grad_norm(const Jet<Dim, 2>& j) {
  double s = 0.0;
  for (int a = 0; a < Dim; ++a) s += j.first(a) * j.first(a);
  return std::sqrt(s);
}

}  // namespace

template <int Dim>
GainConstants estimate_gain_constants(const Domain<Dim>& domain, const DifferentiableField<Dim>& u,
                                      const DifferentiableField<Dim>& prior, const std::vector<double>& lifts,
                                      const GainGrid& grid, int q) {
  if (q != 1) throw UnsupportedError("gain constants are available for q = 1 only");
  const int n_int = grid.integration_nodes > 0 ? grid.integration_nodes : (Dim == 1 ? 257 : 65);
  const int n_sup = grid.sup_points > 0 ? grid.sup_points : (Dim == 1 ? 4096 : 128);

  const auto mesh = domain_mesh(domain, n_int);
  const auto rule = simplex_quadrature<Dim>(grid.quad_degree);
  std::vector<Point<Dim>> qp;
  std::vector<double> qw;
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const auto geo = cell_geometry(mesh, c);
    for (int i = 0; i < rule.size(); ++i) {
      qp.push_back(geo.map(rule.points[i]));
      qw.push_back(rule.weights[i] * std::abs(geo.det));
    }
  }
  const auto uq = u.evaluate(qp);
  const auto pq = prior.evaluate(qp);
  const auto sp = uniform_grid(domain, n_sup);
  const auto ps = prior.evaluate(sp);

  GainConstants g;
  g.q = q;
  g.integration_cells = mesh.num_cells();
  g.sup_points = static_cast<int>(sp.size());
  double u_h2 = 0.0, d_h2 = 0.0;
  for (std::size_t i = 0; i < qp.size(); ++i) {
    u_h2 += qw[i] * hessian_sq(uq[i]);
    d_h2 += qw[i] * hessian_sq(uq[i] - pq[i]);
  }
  u_h2 = std::sqrt(u_h2);
  d_h2 = std::sqrt(d_h2);
  if (!(u_h2 > 0.0)) throw std::invalid_argument("reference solution has a vanishing H2 seminorm");
  g.c_add = d_h2 / u_h2;

  for (double m : lifts) {
    GainConstantRow row;
    row.lift = m;
    double ratio_h2 = 0.0;
    for (std::size_t i = 0; i < qp.size(); ++i) {
      const auto um = pq[i] + m;
      if (!(um.value() > 0.0)) throw LiftingError("lifted prior is not positive on the estimation grid");
      ratio_h2 += qw[i] * hessian_sq((uq[i] + m) * reciprocal(um));
    }
    ratio_h2 = std::sqrt(ratio_h2);
    double w1 = 0.0, inv_sup = 0.0, inv_w1 = 0.0, inv_w2 = 0.0;
    for (const auto& pj : ps) {
      const auto um = pj + m;
      if (!(um.value() > 0.0)) throw LiftingError("lifted prior is not positive on the estimation grid");
      w1 = std::max({w1, std::abs(um.value()), grad_norm(um)});
      const auto inv = reciprocal(um);
      inv_sup = std::max(inv_sup, std::abs(inv.value()));
      inv_w1 = std::max(inv_w1, grad_norm(inv));
      inv_w2 = std::max(inv_w2, std::sqrt(hessian_sq(inv)));
    }
    row.c_theta_m = inv_sup + 2.0 * inv_w1 + inv_w2;
    row.c_mult_h1 = ratio_h2 * w1 / u_h2;
    row.c_mult_l2 = row.c_theta_m * ratio_h2 * w1 * w1 / u_h2;
    g.rows.push_back(row);
  }
  return g;
}

template <int Dim>
std::vector<MSweepRow> m_sweep(const LagrangeSpace<Dim>& space, const ProblemCoefficients<Dim>& coeffs,
                               const Domain<Dim>& domain, const DifferentiableField<Dim>& reference,
                               const DifferentiableField<Dim>& prior, std::vector<double> lifts, BcMode bc_mode,
                               const GainGrid& grid) {
  std::sort(lifts.begin(), lifts.end());
  const int qdeg = 2 * space.degree() + 2;
  const auto add = solve_additive(space, coeffs, prior);
  const ReconstructedField<Dim> add_field(add);
  const auto consts = estimate_gain_constants(domain, reference, prior, lifts, grid);

  std::vector<MSweepRow> rows;
  for (std::size_t j = 0; j < lifts.size(); ++j) {
    const auto mul = solve_multiplicative(space, coeffs, prior, lifts[j], bc_mode);
    MSweepRow r;
    r.method = "multiplicative";
    r.lift = lifts[j];
    r.error = mul.errors(reference, qdeg).relative_l2();
    r.diff_to_additive = error_norms(mul.correction, add_field, qdeg, mul.reconstruction()).relative_l2();
    r.c_mult_h1 = consts.rows[j].c_mult_h1;
    r.c_mult_l2 = consts.rows[j].c_mult_l2;
    r.c_add = consts.c_add;
    rows.push_back(r);
  }
  MSweepRow a;
  a.method = "additive";
  a.lift = std::numeric_limits<double>::infinity();
  a.error = add.errors(reference, qdeg).relative_l2();
  a.c_mult_h1 = a.c_mult_l2 = a.c_add = consts.c_add;
  rows.push_back(a);
  return rows;
}

double convergence_slope(const std::vector<double>& h, const std::vector<double>& e) {
  if (h.size() != e.size() || h.size() < 2) throw std::invalid_argument("slope needs at least two (h, error) pairs");
  const double n = static_cast<double>(h.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double x = std::log(h[i]), y = std::log(e[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

template <int Dim>
std::vector<DegreeStudyRow> quadrature_degree_study(const LagrangeSpace<Dim>& space,
                                                    const ProblemCoefficients<Dim>& coeffs,
                                                    const DifferentiableField<Dim>& reference,
                                                    const DifferentiableField<Dim>& prior,
                                                    const std::vector<int>& degrees, int quad_degree) {
  const int qdeg = quad_degree > 0 ? quad_degree : 2 * space.degree() + 2;
  std::vector<DegreeStudyRow> rows;
  for (int m : degrees) {
    SolveOptions o;
    o.interp_degree = m;
    rows.push_back({m, solve_additive(space, coeffs, prior, o).errors(reference, qdeg).relative_l2()});
  }
  return rows;
}

CostEstimate cost_model(long n_dofs_std, long n_dofs_add, long n_p, long n_weights) {
  return {static_cast<double>(n_p) * static_cast<double>(n_dofs_std),
          static_cast<double>(n_p) * static_cast<double>(n_dofs_add) + static_cast<double>(n_weights)};
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::vector<int> mu_ids(const std::vector<ErrorRecord>& records) {
  std::vector<std::vector<double>> seen;
  std::vector<int> ids;
  for (const auto& r : records) {
    auto it = std::find(seen.begin(), seen.end(), r.mu);
    if (it == seen.end()) {
      seen.push_back(r.mu);
      ids.push_back(static_cast<int>(seen.size()) - 1);
    } else {
      ids.push_back(static_cast<int>(it - seen.begin()));
    }
  }
  return ids;
}

std::string slope_text(const std::vector<double>& h, const std::vector<double>& e) {
  if (h.size() < 2) return "nan";
  bool floor = true;
  for (double v : e) floor = floor && !(v > 1e-12);
  if (floor) return "floor";
  return format_double(convergence_slope(h, e));
}

}  // namespace

void write_convergence_csv(std::ostream& os, const std::vector<ErrorRecord>& records) {
  const auto lifts = records.empty() ? std::vector<double>{} : records.front().lifts;
  os << "mu_id,k,N,h,e_h,e_theta,e_h_plus";
  for (double m : lifts) os << ",e_h_M_" << format_double(m);
  os << '\n';
  const auto ids = mu_ids(records);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    os << ids[i] << ',' << r.k << ',' << r.n << ',' << format_double(r.h) << ',' << format_double(r.e_h) << ','
       << format_double(r.e_theta) << ',' << format_double(r.e_add);
    for (double e : r.e_mult) os << ',' << format_double(e);
    os << '\n';
  }
  // slope footer per (mu_id, k) group
  std::map<std::pair<int, int>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < records.size(); ++i) groups[{ids[i], records[i].k}].push_back(i);
  for (const auto& [key, idx] : groups) {
    std::vector<double> h, eh, ea;
    std::vector<std::vector<double>> em(lifts.size());
    for (auto i : idx) {
      h.push_back(records[i].h);
      eh.push_back(records[i].e_h);
      ea.push_back(records[i].e_add);
      for (std::size_t j = 0; j < lifts.size(); ++j) em[j].push_back(records[i].e_mult[j]);
    }
    os << "# slope mu_id=" << key.first << " k=" << key.second << " e_h=" << slope_text(h, eh);
    if (!std::isnan(ea.front())) os << " e_h_plus=" << slope_text(h, ea);
    for (std::size_t j = 0; j < lifts.size(); ++j)
      os << " e_h_M_" << format_double(lifts[j]) << '=' << slope_text(h, em[j]);
    os << '\n';
  }
}

void write_gain_csv(std::ostream& os, const std::vector<ErrorRecord>& records) {
  const auto lifts = records.empty() ? std::vector<double>{} : records.front().lifts;
  const std::size_t np = records.empty() ? 0 : records.front().mu.size();
  os << "mu_id";
  for (std::size_t j = 0; j < np; ++j) os << ",mu" << j + 1;
  os << ",e_theta,e_h,e_h_plus,G_plus_theta,G_plus";
  for (double m : lifts) {
    const auto t = format_double(m);
    os << ",e_h_M_" << t << ",G_M_theta_" << t << ",G_M_" << t;
  }
  os << '\n';
  auto ratio = [](double a, double b) { return b == 0.0 ? std::numeric_limits<double>::infinity() : a / b; };
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    os << i;
    for (double v : r.mu) os << ',' << format_double(v);
    os << ',' << format_double(r.e_theta) << ',' << format_double(r.e_h) << ',' << format_double(r.e_add) << ','
       << format_double(ratio(r.e_theta, r.e_add)) << ',' << format_double(ratio(r.e_h, r.e_add));
    for (std::size_t j = 0; j < r.e_mult.size(); ++j)
      os << ',' << format_double(r.e_mult[j]) << ',' << format_double(ratio(r.e_theta, r.e_mult[j])) << ','
         << format_double(ratio(r.e_h, r.e_mult[j]));
    os << '\n';
  }
}

void write_stats_csv(std::ostream& os, const std::vector<GainSummary>& stats) {
  os << "method,min,max,mean,std,n_infinite\n";
  for (const auto& s : stats)
    os << s.name << ',' << format_double(s.min) << ',' << format_double(s.max) << ',' << format_double(s.mean) << ','
       << format_double(s.std) << ',' << s.n_infinite << '\n';
}

void write_msweep_csv(std::ostream& os, const std::vector<MSweepRow>& rows) {
  os << "method,M,e_h,diff_to_additive,C_gain_mult_H1,C_gain_mult_L2,C_gain_add\n";
  for (const auto& r : rows)
    os << r.method << ',' << format_double(r.lift) << ',' << format_double(r.error) << ','
       << format_double(r.diff_to_additive) << ',' << format_double(r.c_mult_h1) << ',' << format_double(r.c_mult_l2)
       << ',' << format_double(r.c_add) << '\n';
}

void write_degree_csv(std::ostream& os, const std::vector<DegreeStudyRow>& rows) {
  os << "m,e_h_plus\n";
  for (const auto& r : rows) os << r.m << ',' << format_double(r.e_add) << '\n';
}

#define ENFEM_INSTANTIATE(D)                                                                                   \
  template class ExactField<D>;                                                                                \
  template class PerturbedField<D>;                                                                            \
  template std::vector<Point<D>> uniform_grid<D>(const Domain<D>&, int);                                       \
  template Jet<D, 2> perturbation<D>(const Point<D>&);                                                         \
  template std::shared_ptr<const DifferentiableField<D>> make_reference<D>(std::shared_ptr<const Problem<D>>,  \
                                                                           const std::vector<double>&, int, int); \
  template class ReconstructedField<D>;                                                                        \
  template ErrorRecord compute_errors<D>(const LagrangeSpace<D>&, const ProblemCoefficients<D>&,               \
                                         const DifferentiableField<D>&, const DifferentiableField<D>*,         \
                                         const ErrorOptions&);                                                 \
  template GainConstants estimate_gain_constants<D>(const Domain<D>&, const DifferentiableField<D>&,           \
                                                    const DifferentiableField<D>&, const std::vector<double>&, \
                                                    const GainGrid&, int);                                     \
  template std::vector<MSweepRow> m_sweep<D>(const LagrangeSpace<D>&, const ProblemCoefficients<D>&,           \
                                             const Domain<D>&, const DifferentiableField<D>&,                  \
                                             const DifferentiableField<D>&, std::vector<double>, BcMode,       \
                                             const GainGrid&);                                                 \
  template std::vector<DegreeStudyRow> quadrature_degree_study<D>(                                             \
      const LagrangeSpace<D>&, const ProblemCoefficients<D>&, const DifferentiableField<D>&,                   \
      const DifferentiableField<D>&, const std::vector<int>&, int);

ENFEM_INSTANTIATE(1)
ENFEM_INSTANTIATE(2)

}  // namespace enfem
