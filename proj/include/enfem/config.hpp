#pragma once

// Run configuration in a sectioned key=value format:
//
//   [problem]     id, mu, box, n_p, reference_n, reference_k
//   [mesh]        n (list), k (list)
//   [training]    lr, decay, n_epochs, n_switch, batch_size, n_col, n_bc, n_data,
//                 w_r, w_b, w_data, w_sob, layers, activation, n_fourier, composition
//   [enrichment]  modes, lifts, bc_mode, m, m_list, quad_degree, prior
//   [output]      directory, seed, samples
//
// Lists are comma separated, a box is "lo:hi, lo:hi, ...". Unset keys take
// the catalog defaults of the selected problem.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "enfem/enrichment.hpp"
#include "enfem/network.hpp"
#include "enfem/pinn.hpp"

namespace enfem {

struct RunConfig {
  // [problem]
  std::string problem = "lap1d";
  ParamBox box;             // parameter sampling box
  std::vector<double> mu;   // fixed parameter
  int n_p = 1;              // parameter samples for gains
  int reference_n = 129;    // fine-mesh reference when no closed form exists
  int reference_k = 3;
  // [mesh]
  std::vector<int> n{16};
  std::vector<int> k{1};
  // [training]
  MlpConfig network;
  TrainingConfig training;
  std::string composition = "exact";
  // [enrichment]
  std::vector<EnrichmentMode> modes{EnrichmentMode::Standard, EnrichmentMode::Additive};
  std::vector<double> lifts;
  BcMode bc_mode = BcMode::Strong;
  int interp_degree = -1;      // m, -1: k + 2
  std::vector<int> m_list;     // degree study, empty: k .. k + 4
  int quad_degree = -1;        // error quadrature, -1: 2k + 2
  std::string prior = "file";  // file | exact | zero | perturbed:<eps>
  // [output]
  std::string directory = "out";
  std::uint64_t seed = 0;
  int samples = 0;  // sampled solution points per direction, 0: none

  void set_seed(std::uint64_t s);
};

// Catalog defaults for a problem.
RunConfig default_config(const std::string& problem);

// Throws ConfigError on syntax errors, unknown sections or keys and
// invalid values.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

// Fully resolved configuration; parse_config(to_text(c)) reproduces c.
std::string to_text(const RunConfig& c);

}  // namespace enfem
