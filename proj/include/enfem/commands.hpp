#pragma once

// The pipeline commands behind the command-line verbs. Every command
// writes config.resolved and run.log to the output directory next to its
// CSV tables.
//
//   train         prior.weights, prior.txt, loss_history.csv
//   solve         errors.csv (+ samples.csv when output.samples > 0)
//   converge      convergence.csv
//   gains         gains.csv, gain_stats.csv
//   msweep        msweep.csv
//   degree-study  degree_study.csv

#include <memory>
#include <ostream>
#include <string>

#include "enfem/config.hpp"
#include "enfem/pinn.hpp"

namespace enfem {

// Writes <stem>.weights and the descriptor <stem>.txt (problem id, weights
// file, composition kind, level-set id, lift M, boundary-data id).
template <int Dim>
void save_prior(const std::string& stem, const Prior<Dim>& prior, const std::string& problem_id);

// Reads a descriptor written by save_prior. Throws FormatError on a
// malformed file and ConfigError when it belongs to another problem.
template <int Dim>
std::shared_ptr<Prior<Dim>> load_prior(const std::string& descriptor, const Problem<Dim>& problem);

void cmd_train(const RunConfig& c);
void cmd_solve(const RunConfig& c, const std::string& prior_path);
void cmd_converge(const RunConfig& c, const std::string& prior_path);
void cmd_gains(const RunConfig& c, const std::string& prior_path);
void cmd_msweep(const RunConfig& c, const std::string& prior_path);
void cmd_degree_study(const RunConfig& c, const std::string& prior_path);

// Dispatches a verb and maps failures to exit codes: 0 ok, 2 configuration
// error, 3 numerical failure. Messages go to err.
int run_command(const std::string& verb, const RunConfig& c, const std::string& prior_path, std::ostream& err);

}  // namespace enfem
