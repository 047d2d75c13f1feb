#pragma once

// Network priors with exactly imposed boundary conditions, collocation
// sampling, physics-informed losses, Adam and L-BFGS, and the training loop.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "enfem/field.hpp"
#include "enfem/network.hpp"
#include "enfem/problem.hpp"

namespace enfem {

// u(x, mu) with spatial derivatives to order 3.
template <int Dim>
class ParametricField {
 public:
  virtual ~ParametricField() = default;
  // mu holds one parameter vector shared by all points or one per point.
  virtual void evaluate(std::span<const Point<Dim>> x, std::span<const double> mu,
                        std::span<Jet<Dim, 3>> out) const = 0;
};

// A closed-form parametric field (e.g. an analytic solution).
template <int Dim>
class ClosedFormField final : public ParametricField<Dim> {
 public:
  ClosedFormField(JetFn<Dim> fn, int n_params) : fn_(std::move(fn)), n_params_(n_params) {}
  void evaluate(std::span<const Point<Dim>> x, std::span<const double> mu,
                std::span<Jet<Dim, 3>> out) const override;

 private:
  JetFn<Dim> fn_;
  int n_params_;
};

// u_theta = composition of the network output w_theta with level sets and
// boundary data. The lift M is carried along for multiplicative use.
template <int Dim>
class Prior final : public ParametricField<Dim> {
 public:
  Prior(std::shared_ptr<MlpNetwork> net, Composition<Dim> comp, double lift = 0.0);

  const MlpNetwork& network() const { return *net_; }
  MlpNetwork& network() { return *net_; }
  const Composition<Dim>& composition() const { return comp_; }
  double lift() const { return lift_; }
  void set_lift(double m) { lift_ = m; }

  // Network order needed for output jets of order K.
  int network_order(int k) const { return comp_.kind == CompositionKind::MixedRobin ? k + 1 : k; }

  template <int K>
  void evaluate_jets(std::span<const Point<Dim>> x, std::span<const double> mu, std::span<Jet<Dim, K>> out) const;

  void evaluate(std::span<const Point<Dim>> x, std::span<const double> mu,
                std::span<Jet<Dim, 3>> out) const override {
    evaluate_jets<3>(x, mu, out);
  }

 private:
  std::shared_ptr<MlpNetwork> net_;
  Composition<Dim> comp_;
  double lift_ = 0.0;
};

// Apply the boundary composition to a network jet w of order KW, giving u
// to order KU (KW = KU + 1 for MixedRobin, KW = KU otherwise).
template <int Dim, int KU, int KW, class T>
Jet<Dim, KU, T> compose_prior(const Composition<Dim>& c, const Point<Dim>& x, Params mu, const Jet<Dim, KW, T>& w);

// A parametric field frozen at one parameter vector, as a FEM-side field.
template <int Dim>
class BoundField final : public DifferentiableField<Dim> {
 public:
  BoundField(std::shared_ptr<const ParametricField<Dim>> field, std::vector<double> mu)
      : field_(std::move(field)), mu_(std::move(mu)) {}

  using DifferentiableField<Dim>::evaluate;
  void evaluate(std::span<const Point<Dim>> x, std::span<Jet<Dim, 2>> out) const override;

 private:
  std::shared_ptr<const ParametricField<Dim>> field_;
  std::vector<double> mu_;
};

template <int Dim>
struct CollocationBatch {
  int n_params = 0;
  std::vector<Point<Dim>> x_col;
  std::vector<double> mu_col;  // n_params per point
  std::vector<Point<Dim>> x_bc;
  std::vector<double> mu_bc;
  std::vector<Point<Dim>> x_data;
  std::vector<double> mu_data;
  std::vector<double> u_data;

  std::span<const double> mu_of(const std::vector<double>& mu, std::size_t i) const {
    return std::span<const double>(mu).subspan(i * n_params, n_params);
  }
};

// Uniform samples in Omega x box and on the Dirichlet part of the boundary.
template <int Dim>
CollocationBatch<Dim> sample_collocation(const Problem<Dim>& problem, const ParamBox& box, int n_col, int n_bc,
                                         std::mt19937_64& rng);

// Interior samples with data from the closed-form solution.
template <int Dim>
void sample_data(const Problem<Dim>& problem, const ParamBox& box, int n_data, std::mt19937_64& rng,
                 CollocationBatch<Dim>& batch);

// Mean squared strong residual L(u) - f over the interior points.
template <int Dim>
double residual_loss(const ParametricField<Dim>& u, const Problem<Dim>& problem, const CollocationBatch<Dim>& b);

// Mean of |grad (L(u) - f)|^2 over the interior points.
template <int Dim>
double sobolev_loss(const ParametricField<Dim>& u, const Problem<Dim>& problem, const CollocationBatch<Dim>& b);

// Mean of (u - g)^2 over the boundary points.
template <int Dim>
double boundary_loss(const ParametricField<Dim>& u, const Problem<Dim>& problem, const CollocationBatch<Dim>& b);

// Mean of (u - u_data)^2 over the data points.
template <int Dim>
double data_loss(const ParametricField<Dim>& u, const CollocationBatch<Dim>& b);

struct LossWeights {
  double residual = 1.0;
  double boundary = 0.0;
  double data = 0.0;
  double sobolev = 0.0;
};

struct LossTerms {
  double total = 0.0;
  double residual = 0.0;
  double boundary = 0.0;
  double data = 0.0;
  double sobolev = 0.0;
};

// Weighted loss of a network prior and, when grad is non-empty, its
// gradient with respect to the network parameters (accumulated).
template <int Dim>
LossTerms prior_loss(const Prior<Dim>& prior, const Problem<Dim>& problem, const CollocationBatch<Dim>& batch,
                     const LossWeights& w, std::span<double> grad);

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step = 0;
  std::vector<double> m, v;
};

void adam_step(AdamState& state, std::span<double> params, std::span<const double> grad, double lr);

struct LbfgsState {
  int memory = 10;
  double c1 = 1e-4;
  int max_halvings = 30;
  std::vector<std::vector<double>> s, y;
  bool have_loss = false;
  double loss = 0.0;
  std::vector<double> grad;
};

struct LbfgsResult {
  double loss = 0.0;
  bool moved = false;
  bool fallback = false;  // line search failed, steepest-descent step taken
  bool monotone = true;
};

using LossGrad = std::function<double(std::span<const double> params, std::span<double> grad)>;

LbfgsResult lbfgs_step(LbfgsState& state, std::span<double> params, const LossGrad& f);

struct TrainingConfig {
  double lr = 1e-3;
  double decay = 0.99;  // applied every 20 epochs
  int n_epochs = 0;
  int n_switch = 0;  // epoch switching Adam to L-BFGS, 0 = never
  int batch_size = 0;  // 0 = N_col
  int n_col = 1000;
  int n_bc = 0;
  int n_data = 0;
  LossWeights weights;
  std::uint64_t seed = 0;
  ParamBox box;  // empty = the problem's box
};

struct LossRecord {
  int epoch = 0;
  double lr = 0.0;
  LossTerms terms;
  bool lbfgs_fallback = false;
};

// Trains the prior's network in place and returns one record per epoch.
// Throws TrainingError on a non-finite loss.
template <int Dim>
std::vector<LossRecord> train(Prior<Dim>& prior, const Problem<Dim>& problem,
                              const TrainingConfig& config,
                              const std::function<void(const LossRecord&)>& on_epoch = {});

void write_history_csv(std::ostream& os, const std::vector<LossRecord>& history);

}  // namespace enfem
