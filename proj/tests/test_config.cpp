#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "enfem/commands.hpp"
#include "enfem/config.hpp"
#include "enfem/errors.hpp"

using namespace enfem;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines(const fs::path& p) {
  std::vector<std::string> out;
  std::ifstream in(p);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::vector<std::string> cells(const std::string& row) {
  std::vector<std::string> out;
  std::istringstream is(row);
  for (std::string c; std::getline(is, c, ',');) out.push_back(c);
  return out;
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("enfem_test_" + name);
  fs::remove_all(p);
  return p;
}

RunConfig tiny_training(const fs::path& dir, std::uint64_t seed) {
  auto c = parse_config(
      "[problem]\nid = lap1d\n"
      "[training]\nlayers = 6, 6\nn_epochs = 3\nn_switch = 2\nn_col = 64\nbatch_size = 32\n");
  c.set_seed(seed);
  c.directory = dir.string();
  return c;
}

}  // namespace

TEST_CASE("parsing fills catalog defaults and overrides") {
  const auto c = parse_config(
      "# comment line\n"
      "[problem]\n"
      "id = lap2d_low   # trailing comment\n"
      "mu = 0.05, 0.22\n"
      "[mesh]\n"
      "n = 8, 16\n"
      "k = 1, 2\n"
      "[enrichment]\n"
      "modes = standard, additive, multiplicative\n"
      "lifts = 1, 10\n"
      "[output]\n"
      "seed = 42\n");
  CHECK(c.problem == "lap2d_low");
  CHECK(c.mu == std::vector<double>{0.05, 0.22});
  CHECK(c.n == std::vector<int>{8, 16});
  CHECK(c.k == std::vector<int>{1, 2});
  CHECK(c.modes.size() == 3);
  CHECK(c.lifts == std::vector<double>{1.0, 10.0});
  CHECK(c.seed == 42);
  CHECK(c.network.seed == 42);
  CHECK(c.training.seed == 42);
  CHECK(c.box.size() == 2);
  const auto d = default_config("lap2d_low");
  CHECK(c.network.hidden == d.network.hidden);
  CHECK(c.training.n_epochs == d.training.n_epochs);
}

TEST_CASE("resolved text round-trips") {
  auto c = default_config("annulus");
  c.lifts = {3.5, 100.0};
  c.modes = {EnrichmentMode::Multiplicative};
  c.prior = "perturbed:0.01";
  c.training.lr = 1.0 / 3.0;
  c.set_seed(7);
  const auto text = to_text(c);
  const auto back = parse_config(text);
  CHECK(to_text(back) == text);
  CHECK(back.training.lr == c.training.lr);
  CHECK(back.box == c.box);
}

TEST_CASE("invalid configurations are rejected") {
  CHECK_THROWS_AS(parse_config("[problem]\nid = lap1d\nfoo = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[nowhere]\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("n = 3\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[mesh]\nn = 8x\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[mesh]\nk = 4\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[problem]\nid = lap1d\nmu = 0.3\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[training]\nactivation = relu6\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[training]\nlr = -1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[enrichment]\nprior = perturbed:abc\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[enrichment]\nbc_mode = weak\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[problem\n"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/enfem.ini"), ConfigError);
}

TEST_CASE("training writes a reproducible prior") {
  const auto a = scratch("train_a"), b = scratch("train_b");
  std::ostringstream err;
  REQUIRE(run_command("train", tiny_training(a, 11), "", err) == 0);
  REQUIRE(run_command("train", tiny_training(b, 11), "", err) == 0);
  for (const char* f : {"prior.weights", "prior.txt", "loss_history.csv", "config.resolved", "run.log"})
    CHECK(fs::exists(a / f));
  CHECK(slurp(a / "prior.weights") == slurp(b / "prior.weights"));
  CHECK(lines(a / "loss_history.csv").size() == 4);

  // Zero epochs still produce a loadable prior.
  auto z = tiny_training(scratch("train_zero"), 11);
  z.training.n_epochs = 0;
  REQUIRE(run_command("train", z, "", err) == 0);
  auto s = z;
  s.directory = (fs::path(z.directory) / "solve").string();
  CHECK(run_command("solve", s, (fs::path(z.directory) / "prior.txt").string(), err) == 0);
}

TEST_CASE("solve with a zero prior matches the standard method") {
  auto c = default_config("lap1d");
  c.directory = scratch("solve_zero").string();
  c.prior = "zero";
  c.n = {9};
  c.k = {2};
  std::ostringstream err;
  REQUIRE(run_command("solve", c, "", err) == 0);
  const auto rows = lines(fs::path(c.directory) / "errors.csv");
  REQUIRE(rows.size() == 4);
  CHECK(rows[0] == "k,N,h,method,M,e_l2,e_h1");
  const auto std_row = cells(rows[2]), add_row = cells(rows[3]);
  CHECK(std_row[3] == "standard");
  CHECK(add_row[3] == "additive");
  CHECK(std::stod(add_row[5]) == doctest::Approx(std::stod(std_row[5])).epsilon(1e-10));
}

TEST_CASE("convergence flags the error floor of an exact prior") {
  auto c = default_config("lap1d");
  c.directory = scratch("converge").string();
  c.prior = "exact";
  c.n = {8, 16, 32};
  std::ostringstream err;
  REQUIRE(run_command("converge", c, "", err) == 0);
  const auto rows = lines(fs::path(c.directory) / "convergence.csv");
  CHECK(rows[0].rfind("mu_id,k,N,h,e_h,e_theta,e_h_plus", 0) == 0);
  bool floor = false;
  for (const auto& r : rows)
    if (r.rfind("# slope", 0) == 0) floor = r.find("e_h_plus=floor") != std::string::npos;
  CHECK(floor);
}

TEST_CASE("gains tables") {
  auto c = default_config("lap1d");
  c.directory = scratch("gains").string();
  c.prior = "perturbed:0.1";
  c.n_p = 3;
  c.n = {16};
  c.modes = {EnrichmentMode::Standard, EnrichmentMode::Additive, EnrichmentMode::Multiplicative};
  c.lifts = {10};
  std::ostringstream err;
  REQUIRE(run_command("gains", c, "", err) == 0);
  CHECK(lines(fs::path(c.directory) / "gains.csv").size() == 4);
  const auto stats = lines(fs::path(c.directory) / "gain_stats.csv");
  CHECK(stats[0] == "method,min,max,mean,std,n_infinite");
  CHECK(stats.size() == 5);
}

TEST_CASE("failures map to exit codes") {
  std::ostringstream err;
  auto c = default_config("lap1d");
  c.directory = scratch("codes").string();
  CHECK(run_command("bogus", c, "", err) == 2);
  CHECK(run_command("solve", c, "", err) == 2);  // enriched without a prior
  CHECK(run_command("solve", c, "/nonexistent/prior.txt", err) == 2);
  auto lap2 = default_config("lap2d_low");
  lap2.directory = scratch("codes2").string();
  lap2.prior = "zero";
  const auto t = tiny_training(scratch("codes_prior"), 1);
  REQUIRE(run_command("train", t, "", err) == 0);
  lap2.prior = "file";
  CHECK(run_command("solve", lap2, (fs::path(t.directory) / "prior.txt").string(), err) == 2);
  auto bad = tiny_training(scratch("codes_lr"), 1);
  bad.training.lr = 1e300;
  CHECK(run_command("train", bad, "", err) == 3);
  CHECK(!err.str().empty());
}
