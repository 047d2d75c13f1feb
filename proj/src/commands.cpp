#include "enfem/commands.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "enfem/analysis.hpp"
#include "enfem/catalog.hpp"
#include "enfem/errors.hpp"

namespace enfem {

namespace fs = std::filesystem;

template <int Dim>
void save_prior(const std::string& stem, const Prior<Dim>& prior, const std::string& problem_id) {
  const fs::path weights = stem + ".weights";
  prior.network().save(weights.string());
  std::ofstream os(stem + ".txt");
  const auto& comp = prior.composition();
  const bool exact = comp.kind != CompositionKind::Raw;
  os << "problem = " << problem_id << '\n'
     << "weights = " << weights.filename().string() << '\n'
     << "composition = " << (exact ? "exact" : "raw") << '\n'
     << "level_set = " << comp.level_set_id << '\n'
     << "lift = " << format_double(prior.lift()) << '\n'
     << "g = " << (exact ? problem_id : "none") << '\n';
  if (!os) throw FormatError("cannot write prior descriptor " + stem + ".txt");
}

template <int Dim>
std::shared_ptr<Prior<Dim>> load_prior(const std::string& descriptor, const Problem<Dim>& problem) {
  std::ifstream in(descriptor);
  if (!in) throw ConfigError("cannot read prior file " + descriptor);
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) throw FormatError("malformed line in prior file: '" + line + "'");
    kv[line.substr(0, eq)] = line.substr(eq + 3);
  }
  for (const char* key : {"problem", "weights", "composition", "level_set", "lift", "g"})
    if (!kv.contains(key)) throw FormatError(std::string("prior file lacks '") + key + "'");
  if (kv["problem"] != problem.id())
    throw ConfigError("prior was trained for " + kv["problem"] + ", not " + problem.id());
  auto comp = make_composition(problem, kv["composition"]);
  if (comp.level_set_id != kv["level_set"]) throw FormatError("prior level set does not match the problem");
  const auto weights = fs::path(descriptor).parent_path() / kv["weights"];
  auto net = std::make_shared<MlpNetwork>(MlpNetwork::load(weights.string()));
  if (net->config().n_spatial != Dim || net->config().n_params != problem.num_params())
    throw FormatError("prior network inputs do not match the problem");
  double lift = 0.0;
  try {
    lift = std::stod(kv["lift"]);
  } catch (const std::exception&) {
    throw FormatError("invalid lift in prior file");
  }
  return std::make_shared<Prior<Dim>>(std::move(net), std::move(comp), lift);
}

namespace {

class RunLog {
 public:
  RunLog(const RunConfig& c, const std::string& verb) : start_(std::chrono::steady_clock::now()) {
    fs::create_directories(c.directory);
    std::ofstream(fs::path(c.directory) / "config.resolved") << to_text(c);
    os_.open(fs::path(c.directory) / "run.log");
    os_ << "command " << verb << ", problem " << c.problem << ", seed " << c.seed << '\n';
  }
  template <class T>
  RunLog& operator<<(const T& v) {
    os_ << v;
    return *this;
  }
  ~RunLog() {
    os_ << "done in " << std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count() << " s\n";
  }

 private:
  std::ofstream os_;
  std::chrono::steady_clock::time_point start_;
};

std::ofstream open_csv(const RunConfig& c, const std::string& name) {
  std::ofstream os(fs::path(c.directory) / name);
  if (!os) throw ConfigError("cannot write " + (fs::path(c.directory) / name).string());
  return os;
}

bool uses(const RunConfig& c, EnrichmentMode m) {
  return std::find(c.modes.begin(), c.modes.end(), m) != c.modes.end();
}

// Everything a command needs at one parameter value.
template <int Dim>
struct Instance {
  std::shared_ptr<const Problem<Dim>> problem;
  std::vector<double> mu;
  std::shared_ptr<const DifferentiableField<Dim>> reference;
  std::shared_ptr<const DifferentiableField<Dim>> prior;  // null without enrichment
};

template <int Dim>
class Pipeline {
 public:
  Pipeline(const RunConfig& c, const std::string& prior_path) : c_(c), problem_(make_problem<Dim>(c.problem)) {
    const bool enriched = uses(c, EnrichmentMode::Additive) || uses(c, EnrichmentMode::Multiplicative);
    if (enriched && c.prior == "file") {
      if (prior_path.empty()) throw ConfigError("enriched modes need --prior (or enrichment.prior)");
      trained_ = load_prior<Dim>(prior_path, *problem_);
    }
    if (uses(c, EnrichmentMode::Multiplicative) && c.lifts.empty())
      throw ConfigError("multiplicative mode needs enrichment.lifts");
  }

  const Problem<Dim>& problem() const { return *problem_; }

  Instance<Dim> at(const std::vector<double>& mu) const {
    Instance<Dim> in{problem_, mu, make_reference<Dim>(problem_, mu, c_.reference_n, c_.reference_k), nullptr};
    const bool enriched = uses(c_, EnrichmentMode::Additive) || uses(c_, EnrichmentMode::Multiplicative);
    if (!enriched) return in;
    if (c_.prior == "file") {
      in.prior = std::make_shared<BoundField<Dim>>(trained_, mu);
    } else if (c_.prior == "zero") {
      in.prior = std::make_shared<ZeroField<Dim>>();
    } else {
      if (!problem_->has_exact()) throw ConfigError("synthetic priors need a closed-form solution");
      in.prior = c_.prior == "exact" ? in.reference
                                     : std::make_shared<PerturbedField<Dim>>(in.reference, std::stod(c_.prior.substr(10)));
    }
    return in;
  }

  ErrorOptions error_options(int k) const {
    ErrorOptions o;
    o.solve.interp_degree = c_.interp_degree;
    o.quad_degree = c_.quad_degree > 0 ? c_.quad_degree : 2 * k + 2;
    if (uses(c_, EnrichmentMode::Multiplicative)) o.lifts = c_.lifts;
    o.bc_mode = c_.bc_mode;
    return o;
  }

  ErrorRecord errors(const Instance<Dim>& in, int n, int k) const {
    const auto mesh = make_mesh<Dim>(*problem_, n);
    const LagrangeSpace<Dim> space(mesh, k);
    const auto coeffs = problem_->bind(in.mu);
    auto r = compute_errors(space, coeffs, *in.reference, in.prior.get(), error_options(k));
    r.mu = in.mu;
    r.n = n;
    return r;
  }

 private:
  const RunConfig& c_;
  std::shared_ptr<const Problem<Dim>> problem_;
  std::shared_ptr<const Prior<Dim>> trained_;
};

template <int Dim>
void train_impl(const RunConfig& c) {
  RunLog log(c, "train");
  const auto problem = make_problem<Dim>(c.problem);
  auto cfg = c.network;
  cfg.n_spatial = Dim;
  cfg.n_params = problem->num_params();
  Prior<Dim> prior(std::make_shared<MlpNetwork>(cfg), make_composition(*problem, c.composition));
  auto t = c.training;
  t.box = c.box;
  log << "network with " << prior.network().num_params() << " parameters, " << t.n_epochs << " epochs\n";
  const auto history = train(prior, *problem, t, [&](const LossRecord& r) {
    if (r.epoch % 100 == 0 || r.epoch + 1 == t.n_epochs)
      log << "epoch " << r.epoch << " lr " << format_double(r.lr) << " J_total " << format_double(r.terms.total)
          << (r.lbfgs_fallback ? " (steepest-descent fallback)" : "") << '\n';
  });
  save_prior((fs::path(c.directory) / "prior").string(), prior, c.problem);
  auto os = open_csv(c, "loss_history.csv");
  write_history_csv(os, history);
}

template <int Dim>
void solve_impl(const RunConfig& c, const std::string& prior_path) {
  RunLog log(c, "solve");
  const Pipeline<Dim> pipe(c, prior_path);
  const auto in = pipe.at(c.mu);
  auto os = open_csv(c, "errors.csv");
  os << "k,N,h,method,M,e_l2,e_h1\n";
  for (int k : c.k) {
    for (int n : c.n) {
      const auto mesh = make_mesh<Dim>(pipe.problem(), n);
      const LagrangeSpace<Dim> space(mesh, k);
      const auto coeffs = pipe.problem().bind(c.mu);
      const auto opts = pipe.error_options(k);
      std::vector<std::pair<std::string, EnrichedSolution<Dim>>> sols;
      if (uses(c, EnrichmentMode::Standard)) sols.emplace_back("standard", solve_standard(space, coeffs, opts.solve));
      if (uses(c, EnrichmentMode::Additive))
        sols.emplace_back("additive", solve_additive(space, coeffs, *in.prior, opts.solve));
      if (uses(c, EnrichmentMode::Multiplicative))
        for (double m : c.lifts)
          sols.emplace_back("multiplicative", solve_multiplicative(space, coeffs, *in.prior, m, c.bc_mode, opts.solve));
      if (in.prior) {
        const auto e = field_error_norms(space, *in.prior, *in.reference, opts.quad_degree);
        os << k << ',' << n << ',' << format_double(mesh.h) << ",prior,nan," << format_double(e.relative_l2()) << ','
           << format_double(e.relative_h1()) << '\n';
      }
      for (const auto& [name, s] : sols) {
        const auto e = s.errors(*in.reference, opts.quad_degree);
        os << k << ',' << n << ',' << format_double(mesh.h) << ',' << name << ','
           << format_double(s.mode == EnrichmentMode::Multiplicative ? s.lift : std::nan("")) << ','
           << format_double(e.relative_l2()) << ',' << format_double(e.relative_h1()) << '\n';
        log << "k " << k << " N " << n << ' ' << name << " e_l2 " << format_double(e.relative_l2()) << '\n';
      }
      if (c.samples > 0 && k == c.k.back() && n == c.n.back()) {
        auto ss = open_csv(c, "samples.csv");
        ss << (Dim == 1 ? "x" : "x,y") << ",u_ref";
        for (const auto& [name, s] : sols)
          ss << (name == "standard"   ? ",u_h"
                 : name == "additive" ? ",u_h_plus"
                                      : ",u_h_M_" + format_double(s.lift));
        ss << '\n';
        const auto pts = uniform_grid(pipe.problem().domain(), c.samples);
        const auto ref = in.reference->evaluate(pts);
        std::vector<std::vector<Jet<Dim, 2>>> vals;
        for (const auto& sol : sols) vals.push_back(ReconstructedField<Dim>(sol.second).evaluate(pts));
        for (std::size_t i = 0; i < pts.size(); ++i) {
          for (int d = 0; d < Dim; ++d) ss << format_double(pts[i][d]) << ',';
          ss << format_double(ref[i].value());
          for (const auto& v : vals) ss << ',' << format_double(v[i].value());
          ss << '\n';
        }
      }
    }
  }
}

template <int Dim>
void converge_impl(const RunConfig& c, const std::string& prior_path) {
  RunLog log(c, "converge");
  const Pipeline<Dim> pipe(c, prior_path);
  const auto in = pipe.at(c.mu);
  std::vector<ErrorRecord> records;
  for (int k : c.k)
    for (int n : c.n) {
      records.push_back(pipe.errors(in, n, k));
      log << "k " << k << " N " << n << " e_h " << format_double(records.back().e_h) << '\n';
    }
  auto os = open_csv(c, "convergence.csv");
  write_convergence_csv(os, records);
}

template <int Dim>
void gains_impl(const RunConfig& c, const std::string& prior_path) {
  RunLog log(c, "gains");
  if (!uses(c, EnrichmentMode::Additive)) throw ConfigError("gains need the additive mode");
  const Pipeline<Dim> pipe(c, prior_path);
  std::mt19937_64 rng(sub_seed(c.seed, "gains"));
  std::vector<ErrorRecord> records;
  for (int j = 0; j < c.n_p; ++j) {
    std::vector<double> mu;
    for (const auto& [lo, hi] : c.box) mu.push_back(lo + (hi - lo) * static_cast<double>(rng() >> 11) * 0x1.0p-53);
    records.push_back(pipe.errors(pipe.at(mu), c.n.front(), c.k.front()));
    log << "sample " << j << " G_plus " << format_double(records.back().e_h / records.back().e_add) << '\n';
  }
  auto os = open_csv(c, "gains.csv");
  write_gain_csv(os, records);
  auto ss = open_csv(c, "gain_stats.csv");
  write_stats_csv(ss, compute_gains(records));
}

template <int Dim>
void msweep_impl(const RunConfig& c, const std::string& prior_path) {
  RunLog log(c, "msweep");
  if (c.lifts.empty()) throw ConfigError("msweep needs enrichment.lifts");
  auto cc = c;
  cc.modes = {EnrichmentMode::Additive};
  const Pipeline<Dim> pipe(cc, prior_path);
  const auto in = pipe.at(c.mu);
  if (!pipe.problem().has_exact()) throw ConfigError("msweep needs a closed-form solution");
  const auto mesh = make_mesh<Dim>(pipe.problem(), c.n.front());
  const LagrangeSpace<Dim> space(mesh, c.k.front());
  const auto rows = m_sweep(space, pipe.problem().bind(c.mu), pipe.problem().domain(), *in.reference, *in.prior,
                            c.lifts, c.bc_mode);
  for (const auto& r : rows) log << r.method << " M " << format_double(r.lift) << " e " << format_double(r.error) << '\n';
  auto os = open_csv(c, "msweep.csv");
  write_msweep_csv(os, rows);
}

template <int Dim>
void degree_impl(const RunConfig& c, const std::string& prior_path) {
  RunLog log(c, "degree-study");
  auto cc = c;
  cc.modes = {EnrichmentMode::Additive};
  const Pipeline<Dim> pipe(cc, prior_path);
  const auto in = pipe.at(c.mu);
  const int k = c.k.front();
  auto degrees = c.m_list;
  if (degrees.empty())
    for (int m = k; m <= k + 4; ++m) degrees.push_back(m);
  const auto mesh = make_mesh<Dim>(pipe.problem(), c.n.front());
  const LagrangeSpace<Dim> space(mesh, k);
  const auto rows = quadrature_degree_study(space, pipe.problem().bind(c.mu), *in.reference, *in.prior, degrees,
                                            c.quad_degree);
  for (const auto& r : rows) log << "m " << r.m << " e_h_plus " << format_double(r.e_add) << '\n';
  auto os = open_csv(c, "degree_study.csv");
  write_degree_csv(os, rows);
}

template <template <int> class F, class... A>
void dispatch(const RunConfig& c, A&&... a) {
  if (catalog_dimension(c.problem) == 1)
    F<1>::run(c, a...);
  else
    F<2>::run(c, a...);
}

#define ENFEM_VERB(name, impl, ...)                                            \
  template <int Dim>                                                           \
  struct name {                                                                \
    template <class... A>                                                      \
    static void run(const RunConfig& c, A&&... a) { impl<Dim>(c, a...); }     \
  };
ENFEM_VERB(TrainVerb, train_impl)
ENFEM_VERB(SolveVerb, solve_impl)
ENFEM_VERB(ConvergeVerb, converge_impl)
ENFEM_VERB(GainsVerb, gains_impl)
ENFEM_VERB(MSweepVerb, msweep_impl)
ENFEM_VERB(DegreeVerb, degree_impl)
#undef ENFEM_VERB

}  // namespace

void cmd_train(const RunConfig& c) { dispatch<TrainVerb>(c); }
void cmd_solve(const RunConfig& c, const std::string& p) { dispatch<SolveVerb>(c, p); }
void cmd_converge(const RunConfig& c, const std::string& p) { dispatch<ConvergeVerb>(c, p); }
void cmd_gains(const RunConfig& c, const std::string& p) { dispatch<GainsVerb>(c, p); }
void cmd_msweep(const RunConfig& c, const std::string& p) { dispatch<MSweepVerb>(c, p); }
void cmd_degree_study(const RunConfig& c, const std::string& p) { dispatch<DegreeVerb>(c, p); }

int run_command(const std::string& verb, const RunConfig& c, const std::string& prior_path, std::ostream& err) {
  try {
    if (verb == "train")
      cmd_train(c);
    else if (verb == "solve")
      cmd_solve(c, prior_path);
    else if (verb == "converge")
      cmd_converge(c, prior_path);
    else if (verb == "gains")
      cmd_gains(c, prior_path);
    else if (verb == "msweep")
      cmd_msweep(c, prior_path);
    else if (verb == "degree-study")
      cmd_degree_study(c, prior_path);
    else
      throw ConfigError("unknown command '" + verb + "'");
    return 0;
  } catch (const TrainingError& e) {
    err << "training failed at epoch " << e.epoch() << " (" << e.term() << "): " << e.what() << '\n';
    return 3;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const FormatError& e) {
    err << "input error: " << e.what() << '\n';
    return 2;
  } catch (const UnsupportedError& e) {
    err << "unsupported: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    err << "invalid argument: " << e.what() << '\n';
    return 2;
  } catch (const fs::filesystem_error& e) {
    err << "file error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "failure: " << e.what() << '\n';
    return 3;
  }
}

template void save_prior<1>(const std::string&, const Prior<1>&, const std::string&);
template void save_prior<2>(const std::string&, const Prior<2>&, const std::string&);
template std::shared_ptr<Prior<1>> load_prior<1>(const std::string&, const Problem<1>&);
template std::shared_ptr<Prior<2>> load_prior<2>(const std::string&, const Problem<2>&);

}  // namespace enfem
