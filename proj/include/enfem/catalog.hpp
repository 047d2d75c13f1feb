#pragma once

// The benchmark problems: 1D Poisson, 1D convection-diffusion, 2D Poisson
// at low and high frequency, 2D anisotropic diffusion and the annulus with
// mixed Dirichlet/Robin conditions, with their default network and
// training settings.

#include <memory>
#include <string>
#include <vector>

#include "enfem/mesh.hpp"
#include "enfem/network.hpp"
#include "enfem/pinn.hpp"
#include "enfem/problem.hpp"

namespace enfem {

struct CatalogEntry {
  std::string id;
  int dim = 1;
  MlpConfig network;
  TrainingConfig training;
  std::vector<double> mu_eval;  // default evaluation parameter
};

const std::vector<std::string>& catalog_ids();

// Throws ConfigError for an unknown id.
CatalogEntry catalog_entry(const std::string& id);
int catalog_dimension(const std::string& id);

template <int Dim>
std::shared_ptr<const Problem<Dim>> make_problem(const std::string& id);

// Default mesh family with n nodes per direction (radial nodes on the
// annulus, with 6(n - 1) angular nodes).
template <int Dim>
Mesh<Dim> make_mesh(const Problem<Dim>& problem, int n);

// "exact": the problem's boundary-condition composition; "raw": the bare network.
template <int Dim>
Composition<Dim> make_composition(const Problem<Dim>& problem, const std::string& kind);

}  // namespace enfem
