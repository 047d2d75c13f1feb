#pragma once

// Standard Galerkin solves and the two prior-enriched variants:
//   additive        u_h = u_theta + p_h,              p_h in V_h^0 (+ boundary data),
//   multiplicative  u_h = (u_theta + M) p_h - M,      p_h in 1 + V_h^0,
// the latter on the problem lifted by the constant M.

#include "enfem/fem.hpp"
#include "enfem/field.hpp"

namespace enfem {

enum class EnrichmentMode { Standard, Additive, Multiplicative };
enum class BcMode { Strong, Free };

std::string to_string(EnrichmentMode m);
std::string to_string(BcMode m);
EnrichmentMode parse_enrichment_mode(const std::string& s);
BcMode parse_bc_mode(const std::string& s);

struct SolveOptions {
  int quad_degree = -1;    // -1: 2k + 2
  int interp_degree = -1;  // degree m of the load interpolant, -1: k + 2
};

template <int Dim>
struct EnrichedSolution {
  EnrichmentMode mode = EnrichmentMode::Standard;
  BcMode bc_mode = BcMode::Strong;
  double lift = 0.0;
  DiscreteField<Dim> correction;  // u_h, p_h+ or p_hx
  const DifferentiableField<Dim>* prior = nullptr;

  Reconstruction<Dim> reconstruction() const;
  // Relative errors of the reconstructed approximation.
  ErrorNorms errors(const DifferentiableField<Dim>& reference, int quad_degree) const;
  // Reconstructed values at the dofs of the correction space.
  Eigen::VectorXd nodal_values() const;
};

template <int Dim>
EnrichedSolution<Dim> solve_standard(const LagrangeSpace<Dim>& space, const ProblemCoefficients<Dim>& coeffs,
                                     const SolveOptions& opts = {});

// Throws std::invalid_argument when the interpolation degree is below k.
template <int Dim>
EnrichedSolution<Dim> solve_additive(const LagrangeSpace<Dim>& space, const ProblemCoefficients<Dim>& coeffs,
                                     const DifferentiableField<Dim>& prior, const SolveOptions& opts = {});

// Throws LiftingError when u_theta + M is not positive at a quadrature point
// (or at a constrained boundary dof in strong mode).
template <int Dim>
EnrichedSolution<Dim> solve_multiplicative(const LagrangeSpace<Dim>& space, const ProblemCoefficients<Dim>& coeffs,
                                           const DifferentiableField<Dim>& prior, double lift, BcMode bc_mode,
                                           const SolveOptions& opts = {});

}  // namespace enfem
