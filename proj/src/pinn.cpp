#include "enfem/pinn.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>

#include "enfem/dual.hpp"
#include "enfem/errors.hpp"

namespace enfem {

namespace {

constexpr std::size_t kChunk = 1024;

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::span<const double> point_params(std::span<const double> mu, int n_params, std::size_t i) {
  if (n_params == 0) return {};
  if (mu.size() == static_cast<std::size_t>(n_params)) return mu;
  return mu.subspan(i * n_params, n_params);
}

void sample_params(const ParamBox& box, std::mt19937_64& rng, std::vector<double>& out) {
  for (const auto& r : box) out.push_back(r[0] + (r[1] - r[0]) * uniform01(rng));
}

template <int Dim>
Point<Dim> sample_interior(const Domain<Dim>& dom, std::mt19937_64& rng) {
  using Kind = typename Domain<Dim>::Kind;
  if constexpr (Dim == 2) {
    if (dom.kind == Kind::Annulus) {
      while (true) {
        const Point<2> p{dom.r_out * (2.0 * uniform01(rng) - 1.0), dom.r_out * (2.0 * uniform01(rng) - 1.0)};
        const double r = std::hypot(p[0], p[1]);
        if (r - dom.r_in > 0.0 && dom.r_out - r > 0.0) return p;
      }
    }
  }
  Point<Dim> p;
  for (int s = 0; s < Dim; ++s) p[s] = dom.lo[s] + (dom.hi[s] - dom.lo[s]) * uniform01(rng);
  return p;
}

// Pieces of the Dirichlet boundary as (kind, length) for proportional sampling.
struct BoundaryPiece {
  int kind;  // 0 interval ends, 1 box perimeter, 2 inner circle, 3 outer circle
  double length;
};

template <int Dim>
std::vector<BoundaryPiece> dirichlet_pieces(const Problem<Dim>& problem) {
  const auto dom = problem.domain();
  using Kind = typename Domain<Dim>::Kind;
  std::vector<BoundaryPiece> pieces;
  for (const auto& bc : problem.boundary_conditions()) {
    if (bc.kind != BoundaryKind::Dirichlet) continue;
    if (dom.kind == Kind::Interval) {
      pieces.push_back({0, 2.0});
    } else if (dom.kind == Kind::Box) {
      double per = 0.0;
      for (int s = 0; s < Dim; ++s) per += 2.0 * (dom.hi[s] - dom.lo[s]);
      pieces.push_back({1, per});
    } else {
      const double two_pi = 2.0 * std::numbers::pi;
      if (bc.marker != BoundaryMarker::Outer) pieces.push_back({2, two_pi * dom.r_in});
      if (bc.marker != BoundaryMarker::Inner) pieces.push_back({3, two_pi * dom.r_out});
    }
  }
  return pieces;
}

template <int Dim>
Point<Dim> sample_boundary(const Domain<Dim>& dom, const BoundaryPiece& piece, std::mt19937_64& rng) {
  Point<Dim> p{};
  if constexpr (Dim == 1) {
    p[0] = uniform01(rng) < 0.5 ? dom.lo[0] : dom.hi[0];
  } else {
    if (piece.kind == 1) {
      const double w = dom.hi[0] - dom.lo[0], h = dom.hi[1] - dom.lo[1];
      double t = uniform01(rng) * 2.0 * (w + h);
      if (t < w) return {dom.lo[0] + t, dom.lo[1]};
      t -= w;
      if (t < h) return {dom.hi[0], dom.lo[1] + t};
      t -= h;
      if (t < w) return {dom.hi[0] - t, dom.hi[1]};
      t -= w;
      return {dom.lo[0], dom.hi[1] - t};
    }
    const double r = piece.kind == 2 ? dom.r_in : dom.r_out;
    const double a = 2.0 * std::numbers::pi * uniform01(rng);
    p = {r * std::cos(a), r * std::sin(a)};
  }
  return p;
}

template <int Dim, int K>
Jet<Dim, K> truncated(const JetFn<Dim>& fn, const Point<Dim>& x, Params mu) {
  return fn(x, mu).template truncate<K>();
}

template <int Dim, int K, class T>
Jet<Dim, K, T> plus(const Jet<Dim, K, T>& a, const Jet<Dim, K>& b) {
  return a + b;
}

}  // namespace

template <int Dim, int KU, int KW, class T>
Jet<Dim, KU, T> compose_prior(const Composition<Dim>& c, const Point<Dim>& x, Params mu, const Jet<Dim, KW, T>& w) {
  static_assert(KW == KU || KW == KU + 1);
  switch (c.kind) {
    case CompositionKind::Raw:
      return w.template truncate<KU>();
    case CompositionKind::LevelSetDirichlet: {
      Jet<Dim, KU, T> u = truncated<Dim, KU>(c.level_set, x, mu) * w.template truncate<KU>();
      if (c.dirichlet_lift) u = plus(u, truncated<Dim, KU>(c.dirichlet_lift, x, mu));
      return u;
    }
    case CompositionKind::MixedRobin: {
      if constexpr (KW == KU + 1) {
        const auto phi_i_full = truncated<Dim, KW>(c.level_set, x, mu);
        const auto phi_i = phi_i_full.template truncate<KU>();
        const auto phi_e = truncated<Dim, KU>(c.outer_level_set, x, mu);
        const auto phi_i2 = phi_i * phi_i;
        const auto inv = reciprocal(phi_e + phi_i2);
        const auto a = phi_e * inv;
        const auto b = phi_i2 * inv;
        const auto wk = w.template truncate<KU>();
        Jet<Dim, KU, T> normal_w;
        for (int s = 0; s < Dim; ++s) normal_w = normal_w + phi_i_full.diff(s) * w.diff(s);
        Jet<Dim, KU, T> inner = wk - normal_w;
        if (c.robin_lift) inner = plus(inner, -truncated<Dim, KU>(c.robin_lift, x, mu));
        Jet<Dim, KU, T> u = a * (wk + phi_i * inner);
        if (c.dirichlet_lift) u = plus(u, b * truncated<Dim, KU>(c.dirichlet_lift, x, mu));
        u = u + (phi_e * phi_i2) * wk;
        return u;
      } else {
        throw UnsupportedError("mixed Robin composition needs one more network derivative order");
      }
    }
  }
  return {};
}

template <int Dim>
void ClosedFormField<Dim>::evaluate(std::span<const Point<Dim>> x, std::span<const double> mu,
                                    std::span<Jet<Dim, 3>> out) const {
  for (std::size_t i = 0; i < x.size(); ++i)
    out[i] = fn_(x[i], point_params(mu, n_params_, i)).template truncate<3>();
}

template <int Dim>
Prior<Dim>::Prior(std::shared_ptr<MlpNetwork> net, Composition<Dim> comp, double lift)
    : net_(std::move(net)), comp_(std::move(comp)), lift_(lift) {
  if (lift_ < 0.0) throw std::invalid_argument("lifting constant must be non-negative");
}

template <int Dim>
template <int K>
void Prior<Dim>::evaluate_jets(std::span<const Point<Dim>> x, std::span<const double> mu,
                               std::span<Jet<Dim, K>> out) const {
  const int np = net_->config().n_params;
  if (comp_.kind == CompositionKind::MixedRobin) {
    if constexpr (K < 4) {
      std::vector<Jet<Dim, K + 1>> w(x.size());
      net_->evaluate<Dim, K + 1>(x, mu, w);
      for (std::size_t i = 0; i < x.size(); ++i)
        out[i] = compose_prior<Dim, K, K + 1, double>(comp_, x[i], point_params(mu, np, i), w[i]);
    } else {
      throw UnsupportedError("mixed Robin prior derivatives are limited to order 3");
    }
  } else {
    std::vector<Jet<Dim, K>> w(x.size());
    net_->evaluate<Dim, K>(x, mu, w);
    for (std::size_t i = 0; i < x.size(); ++i)
      out[i] = compose_prior<Dim, K, K, double>(comp_, x[i], point_params(mu, np, i), w[i]);
  }
}

template <int Dim>
void BoundField<Dim>::evaluate(std::span<const Point<Dim>> x, std::span<Jet<Dim, 2>> out) const {
  std::vector<Jet<Dim, 3>> j(x.size());
  field_->evaluate(x, mu_, j);
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = j[i].template truncate<2>();
}

template <int Dim>
CollocationBatch<Dim> sample_collocation(const Problem<Dim>& problem, const ParamBox& box, int n_col, int n_bc,
                                         std::mt19937_64& rng) {
  CollocationBatch<Dim> b;
  b.n_params = static_cast<int>(box.size());
  const auto dom = problem.domain();
  b.x_col.reserve(n_col);
  for (int i = 0; i < n_col; ++i) {
    b.x_col.push_back(sample_interior(dom, rng));
    sample_params(box, rng, b.mu_col);
  }
  const auto pieces = dirichlet_pieces(problem);
  if (n_bc > 0 && !pieces.empty()) {
    double total = 0.0;
    for (const auto& p : pieces) total += p.length;
    for (int i = 0; i < n_bc; ++i) {
      double t = uniform01(rng) * total;
      std::size_t k = 0;
      while (k + 1 < pieces.size() && t >= pieces[k].length) t -= pieces[k++].length;
      b.x_bc.push_back(sample_boundary(dom, pieces[k], rng));
      sample_params(box, rng, b.mu_bc);
    }
  }
  return b;
}

template <int Dim>
void sample_data(const Problem<Dim>& problem, const ParamBox& box, int n_data, std::mt19937_64& rng,
                 CollocationBatch<Dim>& b) {
  const auto dom = problem.domain();
  b.n_params = static_cast<int>(box.size());
  for (int i = 0; i < n_data; ++i) {
    const Point<Dim> x = sample_interior(dom, rng);
    const std::size_t off = b.mu_data.size();
    sample_params(box, rng, b.mu_data);
    b.x_data.push_back(x);
    b.u_data.push_back(problem.exact(x, std::span<const double>(b.mu_data).subspan(off, b.n_params)).value());
  }
}

template <int Dim>
double residual_loss(const ParametricField<Dim>& u, const Problem<Dim>& problem, const CollocationBatch<Dim>& b) {
  if (b.x_col.empty()) return 0.0;
  std::vector<Jet<Dim, 3>> j(b.x_col.size());
  u.evaluate(b.x_col, b.mu_col, j);
  double sum = 0.0;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto mu = b.mu_of(b.mu_col, i);
    const auto lu = apply_operator<Dim, 2, double>(problem, b.x_col[i], mu, j[i].template truncate<2>());
    const double r = lu.value() - problem.source(b.x_col[i], mu).value();
    sum += r * r;
  }
  return sum / static_cast<double>(j.size());
}

template <int Dim>
double sobolev_loss(const ParametricField<Dim>& u, const Problem<Dim>& problem, const CollocationBatch<Dim>& b) {
  if (b.x_col.empty()) return 0.0;
  std::vector<Jet<Dim, 3>> j(b.x_col.size());
  u.evaluate(b.x_col, b.mu_col, j);
  double sum = 0.0;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto mu = b.mu_of(b.mu_col, i);
    const auto r = apply_operator<Dim, 3, double>(problem, b.x_col[i], mu, j[i]) -
                   problem.source(b.x_col[i], mu).template truncate<1>();
    for (int s = 0; s < Dim; ++s) sum += r.first(s) * r.first(s);
  }
  return sum / static_cast<double>(j.size());
}

template <int Dim>
double boundary_loss(const ParametricField<Dim>& u, const Problem<Dim>& problem, const CollocationBatch<Dim>& b) {
  if (b.x_bc.empty()) return 0.0;
  std::vector<Jet<Dim, 3>> j(b.x_bc.size());
  u.evaluate(b.x_bc, b.mu_bc, j);
  double sum = 0.0;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const double r = j[i].value() - problem.dirichlet(b.x_bc[i], b.mu_of(b.mu_bc, i));
    sum += r * r;
  }
  return sum / static_cast<double>(j.size());
}

template <int Dim>
double data_loss(const ParametricField<Dim>& u, const CollocationBatch<Dim>& b) {
  if (b.x_data.empty()) return 0.0;
  std::vector<Jet<Dim, 3>> j(b.x_data.size());
  u.evaluate(b.x_data, b.mu_data, j);
  double sum = 0.0;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const double r = j[i].value() - b.u_data[i];
    sum += r * r;
  }
  return sum / static_cast<double>(j.size());
}

namespace {

// Sum over points of the loss terms of one point set, with adjoints of the
// network output jets scaled by the term weights. Points are processed in
// chunks, each with its own tape.
enum class PointSet { Interior, Boundary, Data };

template <int Dim, int KU, int KW>
void point_set_terms(const Prior<Dim>& prior, const Problem<Dim>& problem, const CollocationBatch<Dim>& b,
                     PointSet set, const LossWeights& w, std::span<double> grad, LossTerms& terms) {
  constexpr int C = Jet<Dim, KW>::size;
  using D = Dual<C>;
  const auto& xs = set == PointSet::Interior ? b.x_col : set == PointSet::Boundary ? b.x_bc : b.x_data;
  const auto& mus = set == PointSet::Interior ? b.mu_col : set == PointSet::Boundary ? b.mu_bc : b.mu_data;
  const std::size_t n = xs.size();
  if (n == 0) return;
  const double inv_n = 1.0 / static_cast<double>(n);
  const bool want_grad = !grad.empty();
  const MlpNetwork& net = prior.network();
  const auto& comp = prior.composition();
  const int np = b.n_params;

  std::vector<Jet<Dim, KW>> wj;
  std::vector<std::array<double, C>> adj;
  NetworkTape tape;
  for (std::size_t start = 0; start < n; start += kChunk) {
    const std::size_t m = std::min(kChunk, n - start);
    const std::span<const Point<Dim>> x(xs.data() + start, m);
    const std::span<const double> mu(mus.data() + start * np, m * np);
    wj.assign(m, {});
    net.evaluate<Dim, KW>(x, mu, wj, want_grad ? &tape : nullptr);
    adj.assign(m, {});
    for (std::size_t i = 0; i < m; ++i) {
      const auto mui = point_params(mu, np, i);
      const Point<Dim>& xi = x[i];
      Jet<Dim, KW, D> wd;
      for (int k = 0; k < C; ++k) wd.c[k] = want_grad ? D::seed(wj[i].c[k], k) : D(wj[i].c[k]);
      const auto u = compose_prior<Dim, KU, KW, D>(comp, xi, mui, wd);
      D loss;
      if (set == PointSet::Interior) {
        if constexpr (KU >= 2) {
          const auto f = problem.source(xi, mui);
          const auto r = plus(apply_operator<Dim, KU, D>(problem, xi, mui, u), -f.template truncate<KU - 2>());
          const D r0 = r.c[0];
          terms.residual += r0.v * r0.v * inv_n;
          loss = w.residual * (r0 * r0);
          if constexpr (KU >= 3) {
            D g2;
            for (int s = 0; s < Dim; ++s) g2 = g2 + r.first(s) * r.first(s);
            terms.sobolev += g2.v * inv_n;
            loss = loss + w.sobolev * g2;
          }
        }
      } else {
        const double target =
            set == PointSet::Boundary ? problem.dirichlet(xi, mui) : b.u_data[start + i];
        const D r = u.c[0] - target;
        if (set == PointSet::Boundary) {
          terms.boundary += r.v * r.v * inv_n;
          loss = w.boundary * (r * r);
        } else {
          terms.data += r.v * r.v * inv_n;
          loss = w.data * (r * r);
        }
      }
      if (want_grad)
        for (int k = 0; k < C; ++k) adj[i][k] = loss.d[k] * inv_n;
    }
    if (want_grad) net.backward<Dim, KW>(tape, adj, grad);
  }
}

template <int Dim, int KU>
void dispatch_terms(const Prior<Dim>& prior, const Problem<Dim>& problem, const CollocationBatch<Dim>& b,
                    PointSet set, const LossWeights& w, std::span<double> grad, LossTerms& terms) {
  if (prior.composition().kind == CompositionKind::MixedRobin)
    point_set_terms<Dim, KU, KU + 1>(prior, problem, b, set, w, grad, terms);
  else
    point_set_terms<Dim, KU, KU>(prior, problem, b, set, w, grad, terms);
}

}  // namespace

template <int Dim>
LossTerms prior_loss(const Prior<Dim>& prior, const Problem<Dim>& problem, const CollocationBatch<Dim>& batch,
                     const LossWeights& w, std::span<double> grad) {
  LossTerms t;
  if (w.sobolev > 0.0)
    dispatch_terms<Dim, 3>(prior, problem, batch, PointSet::Interior, w, grad, t);
  else if (w.residual > 0.0)
    dispatch_terms<Dim, 2>(prior, problem, batch, PointSet::Interior, w, grad, t);
  if (w.boundary > 0.0) dispatch_terms<Dim, 0>(prior, problem, batch, PointSet::Boundary, w, grad, t);
  if (w.data > 0.0) dispatch_terms<Dim, 0>(prior, problem, batch, PointSet::Data, w, grad, t);
  t.total = w.residual * t.residual + w.boundary * t.boundary + w.data * t.data + w.sobolev * t.sobolev;
  return t;
}

void adam_step(AdamState& st, std::span<double> params, std::span<const double> grad, double lr) {
  const std::size_t n = params.size();
  if (st.m.size() != n) {
    st.m.assign(n, 0.0);
    st.v.assign(n, 0.0);
    st.step = 0;
  }
  ++st.step;
  const double c1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step));
  const double c2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step));
  for (std::size_t i = 0; i < n; ++i) {
    st.m[i] = st.beta1 * st.m[i] + (1.0 - st.beta1) * grad[i];
    st.v[i] = st.beta2 * st.v[i] + (1.0 - st.beta2) * grad[i] * grad[i];
    params[i] -= lr * (st.m[i] / c1) / (std::sqrt(st.v[i] / c2) + st.eps);
  }
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

LbfgsResult lbfgs_step(LbfgsState& st, std::span<double> params, const LossGrad& f) {
  const std::size_t n = params.size();
  LbfgsResult res;
  if (!st.have_loss) {
    st.grad.assign(n, 0.0);
    st.loss = f(params, st.grad);
    st.have_loss = true;
  }
  res.loss = st.loss;
  const double gnorm = std::sqrt(dot(st.grad, st.grad));
  if (gnorm == 0.0 || !std::isfinite(gnorm)) return res;

  // Two-loop recursion for d = -H g.
  std::vector<double> d(st.grad);
  const std::size_t m = st.s.size();
  std::vector<double> alpha(m);
  for (std::size_t k = m; k-- > 0;) {
    const double rho = 1.0 / dot(st.y[k], st.s[k]);
    alpha[k] = rho * dot(st.s[k], d);
    for (std::size_t i = 0; i < n; ++i) d[i] -= alpha[k] * st.y[k][i];
  }
  const double gamma = m > 0 ? dot(st.s[m - 1], st.y[m - 1]) / dot(st.y[m - 1], st.y[m - 1]) : std::min(1.0, 1.0 / gnorm);
  for (auto& v : d) v *= gamma;
  for (std::size_t k = 0; k < m; ++k) {
    const double rho = 1.0 / dot(st.y[k], st.s[k]);
    const double beta = rho * dot(st.y[k], d);
    for (std::size_t i = 0; i < n; ++i) d[i] += (alpha[k] - beta) * st.s[k][i];
  }
  for (auto& v : d) v = -v;

  double gd = dot(st.grad, d);
  if (!(gd < 0.0)) {
    st.s.clear();
    st.y.clear();
    const double scale = std::min(1.0, 1.0 / gnorm);
    for (std::size_t i = 0; i < n; ++i) d[i] = -scale * st.grad[i];
    gd = dot(st.grad, d);
  }

  std::vector<double> trial(n), trial_grad(n);
  double trial_loss = st.loss;
  auto search = [&](const std::vector<double>& dir, double slope) {
    double t = 1.0;
    for (int h = 0; h <= st.max_halvings; ++h, t *= 0.5) {
      for (std::size_t i = 0; i < n; ++i) trial[i] = params[i] + t * dir[i];
      std::fill(trial_grad.begin(), trial_grad.end(), 0.0);
      trial_loss = f(trial, trial_grad);
      if (std::isfinite(trial_loss) && trial_loss <= st.loss + st.c1 * t * slope) return t;
    }
    return 0.0;
  };

  double t = search(d, gd);
  if (t == 0.0) {
    res.fallback = true;
    st.s.clear();
    st.y.clear();
    const double scale = std::min(1.0, 1.0 / gnorm);
    for (std::size_t i = 0; i < n; ++i) d[i] = -scale * st.grad[i];
    gd = dot(st.grad, d);
    t = search(d, gd);
    if (t == 0.0) return res;
  }

  std::vector<double> s(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    s[i] = trial[i] - params[i];
    y[i] = trial_grad[i] - st.grad[i];
  }
  const double sy = dot(s, y);
  if (sy > 1e-12 * dot(y, y)) {
    st.s.push_back(std::move(s));
    st.y.push_back(std::move(y));
    if (static_cast<int>(st.s.size()) > st.memory) {
      st.s.erase(st.s.begin());
      st.y.erase(st.y.begin());
    }
  }
  res.monotone = trial_loss <= st.loss;
  res.moved = true;
  std::copy(trial.begin(), trial.end(), params.begin());
  st.grad = trial_grad;
  st.loss = trial_loss;
  res.loss = trial_loss;
  return res;
}

namespace {

template <int Dim>
CollocationBatch<Dim> slice(const CollocationBatch<Dim>& b, int part, int parts) {
  CollocationBatch<Dim> out;
  out.n_params = b.n_params;
  const std::size_t np = b.n_params;
  auto range = [&](std::size_t n) {
    return std::pair<std::size_t, std::size_t>{n * part / parts, n * (part + 1) / parts};
  };
  auto [c0, c1] = range(b.x_col.size());
  out.x_col.assign(b.x_col.begin() + c0, b.x_col.begin() + c1);
  out.mu_col.assign(b.mu_col.begin() + c0 * np, b.mu_col.begin() + c1 * np);
  auto [b0, b1] = range(b.x_bc.size());
  out.x_bc.assign(b.x_bc.begin() + b0, b.x_bc.begin() + b1);
  out.mu_bc.assign(b.mu_bc.begin() + b0 * np, b.mu_bc.begin() + b1 * np);
  auto [d0, d1] = range(b.x_data.size());
  out.x_data.assign(b.x_data.begin() + d0, b.x_data.begin() + d1);
  out.mu_data.assign(b.mu_data.begin() + d0 * np, b.mu_data.begin() + d1 * np);
  out.u_data.assign(b.u_data.begin() + d0, b.u_data.begin() + d1);
  return out;
}

void check_finite(const LossTerms& t, int epoch) {
  const std::pair<const char*, double> named[] = {
      {"J_r", t.residual}, {"J_b", t.boundary}, {"J_data", t.data}, {"J_sob", t.sobolev}, {"J_total", t.total}};
  for (const auto& [name, v] : named)
    if (!std::isfinite(v))
      throw TrainingError("non-finite loss term " + std::string(name) + " at epoch " + std::to_string(epoch), epoch,
                          name);
}

void accumulate(LossTerms& acc, const LossTerms& t, double s) {
  acc.total += s * t.total;
  acc.residual += s * t.residual;
  acc.boundary += s * t.boundary;
  acc.data += s * t.data;
  acc.sobolev += s * t.sobolev;
}

}  // namespace

template <int Dim>
std::vector<LossRecord> train(Prior<Dim>& prior, const Problem<Dim>& problem, const TrainingConfig& cfg,
                              const std::function<void(const LossRecord&)>& on_epoch) {
  const auto& w = cfg.weights;
  if (w.residual < 0 || w.boundary < 0 || w.data < 0 || w.sobolev < 0)
    throw std::invalid_argument("loss weights must be non-negative");
  if ((w.residual > 0 || w.sobolev > 0) && cfg.n_col <= 0)
    throw std::invalid_argument("residual training needs collocation points");
  const ParamBox box = cfg.box.empty() ? problem.parameter_box() : cfg.box;
  if (static_cast<int>(box.size()) != prior.network().config().n_params)
    throw std::invalid_argument("parameter box does not match the network inputs");

  MlpNetwork& net = prior.network();
  const std::size_t n_par = net.num_params();
  std::mt19937_64 rng(sub_seed(cfg.seed, "sampling"));
  const int n_main = std::max(cfg.n_col, cfg.n_data);
  const int bs = cfg.batch_size > 0 ? std::min(cfg.batch_size, std::max(n_main, 1)) : std::max(n_main, 1);
  const int n_updates = std::max(1, (n_main + bs - 1) / bs);

  auto draw = [&]() {
    auto b = sample_collocation(problem, box, cfg.n_col, w.boundary > 0 ? cfg.n_bc : 0, rng);
    if (w.data > 0 && cfg.n_data > 0) sample_data(problem, box, cfg.n_data, rng, b);
    return b;
  };

  std::vector<LossRecord> history;
  history.reserve(cfg.n_epochs);
  AdamState adam;
  LbfgsState lbfgs;
  CollocationBatch<Dim> full;
  LossTerms last;
  std::vector<double> grad(n_par);

  auto loss_grad = [&](std::span<const double> p, std::span<double> g) {
    std::copy(p.begin(), p.end(), net.params().begin());
    std::fill(g.begin(), g.end(), 0.0);
    last = prior_loss(prior, problem, full, w, g);
    return last.total;
  };

  for (int epoch = 0; epoch < cfg.n_epochs; ++epoch) {
    LossRecord rec;
    rec.epoch = epoch;
    rec.lr = cfg.lr * std::pow(cfg.decay, static_cast<double>(epoch / 20));
    if (cfg.n_switch > 0 && epoch >= cfg.n_switch) {
      if (epoch == cfg.n_switch) full = draw();
      std::vector<double> p(net.params().begin(), net.params().end());
      if (!lbfgs.have_loss) {
        lbfgs.grad.assign(n_par, 0.0);
        lbfgs.loss = loss_grad(p, lbfgs.grad);
        lbfgs.have_loss = true;
        check_finite(last, epoch);
      }
      LossTerms state_terms = last;
      const auto r = lbfgs_step(lbfgs, p, loss_grad);
      if (r.moved) state_terms = last;
      std::copy(p.begin(), p.end(), net.params().begin());
      rec.terms = state_terms;
      rec.lbfgs_fallback = r.fallback;
    } else {
      const auto batch = draw();
      for (int u = 0; u < n_updates; ++u) {
        const auto part = n_updates == 1 ? batch : slice(batch, u, n_updates);
        std::fill(grad.begin(), grad.end(), 0.0);
        const auto t = prior_loss(prior, problem, part, w, grad);
        check_finite(t, epoch);
        accumulate(rec.terms, t, 1.0 / n_updates);
        adam_step(adam, net.params(), grad, rec.lr);
      }
    }
    check_finite(rec.terms, epoch);
    history.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  return history;
}

void write_history_csv(std::ostream& os, const std::vector<LossRecord>& history) {
  os << "epoch,lr,J_total,J_r,J_b,J_data,J_sob\n";
  os << std::setprecision(17);
  for (const auto& r : history)
    os << r.epoch << ',' << r.lr << ',' << r.terms.total << ',' << r.terms.residual << ',' << r.terms.boundary << ','
       << r.terms.data << ',' << r.terms.sobolev << '\n';
}

#define ENFEM_INSTANTIATE(D)                                                                                      \
  template class ClosedFormField<D>;                                                                              \
  template class Prior<D>;                                                                                        \
  template class BoundField<D>;                                                                                   \
  template void Prior<D>::evaluate_jets<0>(std::span<const Point<D>>, std::span<const double>,                    \
                                           std::span<Jet<D, 0>>) const;                                          \
  template void Prior<D>::evaluate_jets<1>(std::span<const Point<D>>, std::span<const double>,                    \
                                           std::span<Jet<D, 1>>) const;                                          \
  template void Prior<D>::evaluate_jets<2>(std::span<const Point<D>>, std::span<const double>,                    \
                                           std::span<Jet<D, 2>>) const;                                          \
  template void Prior<D>::evaluate_jets<3>(std::span<const Point<D>>, std::span<const double>,                    \
                                           std::span<Jet<D, 3>>) const;                                          \
  template Jet<D, 2> compose_prior<D, 2, 2, double>(const Composition<D>&, const Point<D>&, Params,               \
                                                    const Jet<D, 2>&);                                            \
  template Jet<D, 2> compose_prior<D, 2, 3, double>(const Composition<D>&, const Point<D>&, Params,               \
                                                    const Jet<D, 3>&);                                            \
  template CollocationBatch<D> sample_collocation<D>(const Problem<D>&, const ParamBox&, int, int,                \
                                                     std::mt19937_64&);                                           \
  template void sample_data<D>(const Problem<D>&, const ParamBox&, int, std::mt19937_64&, CollocationBatch<D>&);  \
  template double residual_loss<D>(const ParametricField<D>&, const Problem<D>&, const CollocationBatch<D>&);      \
  template double sobolev_loss<D>(const ParametricField<D>&, const Problem<D>&, const CollocationBatch<D>&);       \
  template double boundary_loss<D>(const ParametricField<D>&, const Problem<D>&, const CollocationBatch<D>&);      \
  template double data_loss<D>(const ParametricField<D>&, const CollocationBatch<D>&);                            \
  template LossTerms prior_loss<D>(const Prior<D>&, const Problem<D>&, const CollocationBatch<D>&,                \
                                   const LossWeights&, std::span<double>);                                        \
  template std::vector<LossRecord> train<D>(Prior<D>&, const Problem<D>&, const TrainingConfig&,                  \
                                            const std::function<void(const LossRecord&)>&);

ENFEM_INSTANTIATE(1)
ENFEM_INSTANTIATE(2)

}  // namespace enfem
