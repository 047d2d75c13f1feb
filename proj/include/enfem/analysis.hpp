#pragma once

// Error records, gains and their statistics, gain constants, lifting sweeps,
// convergence slopes, load-interpolation degree studies, cost model and the
// CSV tables built from them.

#include <iosfwd>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "enfem/enrichment.hpp"
#include "enfem/problem.hpp"

namespace enfem {

// u_theta + p_h, (u_theta + M) p_h - M or u_h as a field evaluable anywhere
// in the mesh (Hessian of the discrete part is zero).
template <int Dim>
class ReconstructedField final : public DifferentiableField<Dim> {
 public:
  explicit ReconstructedField(const EnrichedSolution<Dim>& s);
  using DifferentiableField<Dim>::evaluate;
  void evaluate(std::span<const Point<Dim>> x, std::span<Jet<Dim, 2>> out) const override;

 private:
  EnrichedSolution<Dim> sol_;
  DiscreteFieldEvaluator<Dim> disc_;
};

// The closed-form solution of a problem at a fixed parameter.
template <int Dim>
class ExactField final : public DifferentiableField<Dim> {
 public:
  ExactField(std::shared_ptr<const Problem<Dim>> problem, std::vector<double> mu);
  using DifferentiableField<Dim>::evaluate;
  void evaluate(std::span<const Point<Dim>> x, std::span<Jet<Dim, 2>> out) const override;

 private:
  std::shared_ptr<const Problem<Dim>> problem_;
  std::vector<double> mu_;
};

// Synthetic prior u - eps v with v = sin(3 pi x) (times sin(3 pi y) in 2D).
template <int Dim>
class PerturbedField final : public DifferentiableField<Dim> {
 public:
  PerturbedField(std::shared_ptr<const DifferentiableField<Dim>> base, double eps);
  using DifferentiableField<Dim>::evaluate;
  void evaluate(std::span<const Point<Dim>> x, std::span<Jet<Dim, 2>> out) const override;

 private:
  std::shared_ptr<const DifferentiableField<Dim>> base_;
  double eps_;
};

// The perturbation v itself.
template <int Dim>
Jet<Dim, 2> perturbation(const Point<Dim>& x);

// Closed-form solution when available, otherwise a standard solve of
// degree k_ref on the default mesh with n_ref nodes per direction.
template <int Dim>
std::shared_ptr<const DifferentiableField<Dim>> make_reference(std::shared_ptr<const Problem<Dim>> problem,
                                                              const std::vector<double>& mu, int n_ref, int k_ref);

// n uniform points per direction over the domain, endpoints included (the
// annulus keeps the points of its bounding square that lie inside it).
template <int Dim>
std::vector<Point<Dim>> uniform_grid(const Domain<Dim>& domain, int n);

struct ErrorRecord {
  std::vector<double> mu;
  int n = 0;  // nodes per direction
  double h = 0.0;
  int k = 1;
  double e_h = 0.0;      // standard FEM
  double e_theta = std::numeric_limits<double>::quiet_NaN();
  double e_add = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> lifts;
  std::vector<double> e_mult;  // one per lift
  double e_h_h1 = 0.0;
  double e_add_h1 = std::numeric_limits<double>::quiet_NaN();
};

struct ErrorOptions {
  SolveOptions solve;
  int quad_degree = -1;  // error quadrature, -1: 2k + 2
  std::vector<double> lifts;
  BcMode bc_mode = BcMode::Strong;
};

// Relative L2 (and H1-seminorm) errors of the standard, additive and
// multiplicative solutions against the reference; without a prior only the
// standard error is computed.
template <int Dim>
ErrorRecord compute_errors(const LagrangeSpace<Dim>& space, const ProblemCoefficients<Dim>& coeffs,
                           const DifferentiableField<Dim>& reference, const DifferentiableField<Dim>* prior,
                           const ErrorOptions& opts = {});

struct GainSummary {
  std::string name;
  std::vector<double> gains;  // +inf for a zero denominator
  double min = 0.0, max = 0.0, mean = 0.0, std = 0.0;
  int n_infinite = 0;  // excluded from the statistics
};

// gains[i] = numerator[i] / denominator[i] with summary statistics over the
// finite values.
GainSummary summarize_gains(const std::string& name, const std::vector<double>& numerator,
                            const std::vector<double>& denominator);

// G+_theta, G+ and, per lift, G_M,theta and G_M.
std::vector<GainSummary> compute_gains(const std::vector<ErrorRecord>& records);

struct GainConstantRow {
  double lift = 0.0;
  double c_mult_h1 = 0.0;
  double c_mult_l2 = 0.0;
  double c_theta_m = 0.0;
};

struct GainConstants {
  int q = 1;
  double c_add = 0.0;
  std::vector<GainConstantRow> rows;
  int integration_cells = 0;
  int sup_points = 0;
};

struct GainGrid {
  int integration_nodes = -1;  // per direction, -1: 257 in 1D, 65 in 2D
  int quad_degree = 10;
  int sup_points = -1;  // per direction, -1: 4096 in 1D, 128 in 2D
};

// Seminorms |.|_{H^2} use the Frobenius norm of the Hessian; sup norms
// are maxima over a uniform grid. Only q = 1 is supported.
template <int Dim>
GainConstants estimate_gain_constants(const Domain<Dim>& domain, const DifferentiableField<Dim>& u,
                                      const DifferentiableField<Dim>& prior, const std::vector<double>& lifts,
                                      const GainGrid& grid = {}, int q = 1);

struct MSweepRow {
  std::string method;  // "additive" or "multiplicative"
  double lift = 0.0;
  double error = 0.0;              // relative L2 against the reference
  double diff_to_additive = 0.0;   // ||u_hx - u_h+|| / ||u_h+||
  double c_mult_h1 = 0.0;
  double c_mult_l2 = 0.0;
  double c_add = 0.0;
};

template <int Dim>
std::vector<MSweepRow> m_sweep(const LagrangeSpace<Dim>& space, const ProblemCoefficients<Dim>& coeffs,
                               const Domain<Dim>& domain, const DifferentiableField<Dim>& reference,
                               const DifferentiableField<Dim>& prior, std::vector<double> lifts,
                               BcMode bc_mode = BcMode::Strong, const GainGrid& grid = {});

// Least-squares slope of log(error) against log(h).
double convergence_slope(const std::vector<double>& h, const std::vector<double>& e);

struct DegreeStudyRow {
  int m = 0;
  double e_add = 0.0;
};

template <int Dim>
std::vector<DegreeStudyRow> quadrature_degree_study(const LagrangeSpace<Dim>& space,
                                                    const ProblemCoefficients<Dim>& coeffs,
                                                    const DifferentiableField<Dim>& reference,
                                                    const DifferentiableField<Dim>& prior,
                                                    const std::vector<int>& degrees, int quad_degree = -1);

struct CostEstimate {
  double cost_std = 0.0;
  double cost_add = 0.0;
};

// cost_std = n_p N_dofs(std); cost_add = n_p N_dofs(add) + N_weights.
CostEstimate cost_model(long n_dofs_std, long n_dofs_add, long n_p, long n_weights);

// CSV output with 17 significant digits.
std::string format_double(double v);
void write_convergence_csv(std::ostream& os, const std::vector<ErrorRecord>& records);
void write_gain_csv(std::ostream& os, const std::vector<ErrorRecord>& records);
void write_stats_csv(std::ostream& os, const std::vector<GainSummary>& stats);
void write_msweep_csv(std::ostream& os, const std::vector<MSweepRow>& rows);
void write_degree_csv(std::ostream& os, const std::vector<DegreeStudyRow>& rows);

}  // namespace enfem
