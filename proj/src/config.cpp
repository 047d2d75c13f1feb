#include "enfem/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "enfem/analysis.hpp"
#include "enfem/catalog.hpp"
#include "enfem/errors.hpp"

namespace enfem {

void RunConfig::set_seed(std::uint64_t s) {
  seed = s;
  network.seed = s;
  training.seed = s;
}

RunConfig default_config(const std::string& problem) {
  const auto e = catalog_entry(problem);
  RunConfig c;
  c.problem = problem;
  c.network = e.network;
  c.training = e.training;
  c.mu = e.mu_eval;
  if (e.dim == 1)
    c.box = make_problem<1>(problem)->parameter_box();
  else
    c.box = make_problem<2>(problem)->parameter_box();
  c.set_seed(e.network.seed);
  return c;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <class T>
T parse_number(const std::string& key, const std::string& s) {
  T v{};
  const auto* end = s.data() + s.size();
  const auto r = std::from_chars(s.data(), end, v);
  if (r.ec != std::errc() || r.ptr != end) throw ConfigError("invalid value for " + key + ": '" + s + "'");
  return v;
}

template <class T>
std::vector<T> parse_list(const std::string& key, const std::string& s) {
  std::vector<T> out;
  for (const auto& item : split(s, ',')) out.push_back(parse_number<T>(key, item));
  return out;
}

ParamBox parse_box(const std::string& key, const std::string& s) {
  ParamBox box;
  for (const auto& item : split(s, ',')) {
    const auto parts = split(item, ':');
    if (parts.size() != 2) throw ConfigError("invalid interval for " + key + ": '" + item + "'");
    box.push_back({parse_number<double>(key, parts[0]), parse_number<double>(key, parts[1])});
  }
  return box;
}

template <class T>
std::string join(const std::vector<T>& v, const std::function<std::string(const T&)>& f) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + f(v[i]);
  return s;
}

std::string num(double v) { return format_double(v); }

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

const std::map<std::string, std::map<std::string, Setter>>& setters() {
  static const std::map<std::string, std::map<std::string, Setter>> table = {
      {"problem",
       {
           {"id", [](RunConfig&, const std::string&, const std::string&) {}},  // handled first
           {"mu", [](RunConfig& c, auto& k, auto& v) { c.mu = parse_list<double>(k, v); }},
           {"box", [](RunConfig& c, auto& k, auto& v) { c.box = parse_box(k, v); }},
           {"n_p", [](RunConfig& c, auto& k, auto& v) { c.n_p = parse_number<int>(k, v); }},
           {"reference_n", [](RunConfig& c, auto& k, auto& v) { c.reference_n = parse_number<int>(k, v); }},
           {"reference_k", [](RunConfig& c, auto& k, auto& v) { c.reference_k = parse_number<int>(k, v); }},
       }},
      {"mesh",
       {
           {"n", [](RunConfig& c, auto& k, auto& v) { c.n = parse_list<int>(k, v); }},
           {"k", [](RunConfig& c, auto& k, auto& v) { c.k = parse_list<int>(k, v); }},
       }},
      {"training",
       {
           {"lr", [](RunConfig& c, auto& k, auto& v) { c.training.lr = parse_number<double>(k, v); }},
           {"decay", [](RunConfig& c, auto& k, auto& v) { c.training.decay = parse_number<double>(k, v); }},
           {"n_epochs", [](RunConfig& c, auto& k, auto& v) { c.training.n_epochs = parse_number<int>(k, v); }},
           {"n_switch", [](RunConfig& c, auto& k, auto& v) { c.training.n_switch = parse_number<int>(k, v); }},
           {"batch_size", [](RunConfig& c, auto& k, auto& v) { c.training.batch_size = parse_number<int>(k, v); }},
           {"n_col", [](RunConfig& c, auto& k, auto& v) { c.training.n_col = parse_number<int>(k, v); }},
           {"n_bc", [](RunConfig& c, auto& k, auto& v) { c.training.n_bc = parse_number<int>(k, v); }},
           {"n_data", [](RunConfig& c, auto& k, auto& v) { c.training.n_data = parse_number<int>(k, v); }},
           {"w_r", [](RunConfig& c, auto& k, auto& v) { c.training.weights.residual = parse_number<double>(k, v); }},
           {"w_b", [](RunConfig& c, auto& k, auto& v) { c.training.weights.boundary = parse_number<double>(k, v); }},
           {"w_data", [](RunConfig& c, auto& k, auto& v) { c.training.weights.data = parse_number<double>(k, v); }},
           {"w_sob", [](RunConfig& c, auto& k, auto& v) { c.training.weights.sobolev = parse_number<double>(k, v); }},
           {"layers", [](RunConfig& c, auto& k, auto& v) { c.network.hidden = parse_list<int>(k, v); }},
           {"activation",
            [](RunConfig& c, auto& k, auto& v) {
              try {
                c.network.activation = parse_activation(v);
              } catch (const std::exception&) {
                throw ConfigError("invalid value for " + k + ": '" + v + "'");
              }
            }},
           {"n_fourier", [](RunConfig& c, auto& k, auto& v) { c.network.n_fourier = parse_number<int>(k, v); }},
           {"composition",
            [](RunConfig& c, auto& k, auto& v) {
              if (v != "exact" && v != "raw") throw ConfigError("invalid value for " + k + ": '" + v + "'");
              c.composition = v;
            }},
       }},
      {"enrichment",
       {
           {"modes",
            [](RunConfig& c, auto&, auto& v) {
              c.modes.clear();
              for (const auto& s : split(v, ',')) c.modes.push_back(parse_enrichment_mode(s));
            }},
           {"lifts", [](RunConfig& c, auto& k, auto& v) { c.lifts = parse_list<double>(k, v); }},
           {"bc_mode", [](RunConfig& c, auto&, auto& v) { c.bc_mode = parse_bc_mode(v); }},
           {"m", [](RunConfig& c, auto& k, auto& v) { c.interp_degree = parse_number<int>(k, v); }},
           {"m_list", [](RunConfig& c, auto& k, auto& v) { c.m_list = parse_list<int>(k, v); }},
           {"quad_degree", [](RunConfig& c, auto& k, auto& v) { c.quad_degree = parse_number<int>(k, v); }},
           {"prior",
            [](RunConfig& c, auto& k, auto& v) {
              if (v != "file" && v != "exact" && v != "zero" && v.rfind("perturbed:", 0) != 0)
                throw ConfigError("invalid value for " + k + ": '" + v + "'");
              if (v.rfind("perturbed:", 0) == 0) parse_number<double>(k, v.substr(10));
              c.prior = v;
            }},
       }},
      {"output",
       {
           {"directory", [](RunConfig& c, auto&, auto& v) { c.directory = v; }},
           {"seed", [](RunConfig& c, auto& k, auto& v) { c.set_seed(parse_number<std::uint64_t>(k, v)); }},
           {"samples", [](RunConfig& c, auto& k, auto& v) { c.samples = parse_number<int>(k, v); }},
       }},
  };
  return table;
}

void validate(const RunConfig& c) {
  const int np = static_cast<int>(c.box.size());
  if (static_cast<int>(c.mu.size()) != np)
    throw ConfigError("mu has " + std::to_string(c.mu.size()) + " entries, the problem has " + std::to_string(np));
  for (const auto& [lo, hi] : c.box)
    if (!(lo <= hi)) throw ConfigError("empty parameter interval");
  if (c.n_p < 1) throw ConfigError("n_p must be positive");
  if (c.n.empty() || c.k.empty()) throw ConfigError("mesh sizes and degrees must be given");
  for (int n : c.n)
    if (n < 2) throw ConfigError("mesh size must be at least 2");
  for (int k : c.k)
    if (k < 1 || k > 3) throw ConfigError("degree k must be 1, 2 or 3");
  if (c.reference_n < 2 || c.reference_k < 1 || c.reference_k > 3) throw ConfigError("invalid reference mesh");
  const auto& t = c.training;
  if (t.n_epochs < 0 || t.n_switch < 0 || t.batch_size < 0 || t.n_col < 1 || t.n_bc < 0 || t.n_data < 0)
    throw ConfigError("invalid training sizes");
  if (!(t.lr > 0.0) || !(t.decay > 0.0)) throw ConfigError("learning rate and decay must be positive");
  for (int w : c.network.hidden)
    if (w < 1) throw ConfigError("layer widths must be positive");
  if (c.network.n_fourier < 0) throw ConfigError("n_fourier must be non-negative");
  if (c.samples < 0) throw ConfigError("samples must be non-negative");
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  // Collect entries first: the problem id selects the defaults.
  struct Entry {
    std::string section, key, value;
    int line;
  };
  std::vector<Entry> entries;
  std::string section, line;
  std::istringstream is(text);
  int lineno = 0;
  std::string problem = "lap1d";
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("line " + std::to_string(lineno) + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (!setters().contains(section)) throw ConfigError("unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    if (section.empty()) throw ConfigError("line " + std::to_string(lineno) + ": key outside a section");
    Entry e{section, trim(line.substr(0, eq)), trim(line.substr(eq + 1)), lineno};
    if (!setters().at(section).contains(e.key)) throw ConfigError("unknown key '" + e.key + "' in [" + section + "]");
    if (section == "problem" && e.key == "id") problem = e.value;
    entries.push_back(std::move(e));
  }
  RunConfig c = default_config(problem);
  for (const auto& e : entries) setters().at(e.section).at(e.key)(c, e.section + "." + e.key, e.value);
  validate(c);
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string to_text(const RunConfig& c) {
  auto ints = [](const std::vector<int>& v) { return join<int>(v, [](const int& x) { return std::to_string(x); }); };
  auto doubles = [](const std::vector<double>& v) { return join<double>(v, num); };
  std::ostringstream os;
  const auto& t = c.training;
  os << "[problem]\n"
     << "id = " << c.problem << '\n'
     << "mu = " << doubles(c.mu) << '\n'
     << "box = "
     << join<std::array<double, 2>>(c.box, [](const std::array<double, 2>& b) { return num(b[0]) + ":" + num(b[1]); })
     << '\n'
     << "n_p = " << c.n_p << '\n'
     << "reference_n = " << c.reference_n << '\n'
     << "reference_k = " << c.reference_k << "\n\n"
     << "[mesh]\n"
     << "n = " << ints(c.n) << '\n'
     << "k = " << ints(c.k) << "\n\n"
     << "[training]\n"
     << "lr = " << num(t.lr) << '\n'
     << "decay = " << num(t.decay) << '\n'
     << "n_epochs = " << t.n_epochs << '\n'
     << "n_switch = " << t.n_switch << '\n'
     << "batch_size = " << t.batch_size << '\n'
     << "n_col = " << t.n_col << '\n'
     << "n_bc = " << t.n_bc << '\n'
     << "n_data = " << t.n_data << '\n'
     << "w_r = " << num(t.weights.residual) << '\n'
     << "w_b = " << num(t.weights.boundary) << '\n'
     << "w_data = " << num(t.weights.data) << '\n'
     << "w_sob = " << num(t.weights.sobolev) << '\n'
     << "layers = " << ints(c.network.hidden) << '\n'
     << "activation = " << to_string(c.network.activation) << '\n'
     << "n_fourier = " << c.network.n_fourier << '\n'
     << "composition = " << c.composition << "\n\n"
     << "[enrichment]\n"
     << "modes = "
     << join<EnrichmentMode>(c.modes, [](const EnrichmentMode& m) { return to_string(m); }) << '\n'
     << "lifts = " << doubles(c.lifts) << '\n'
     << "bc_mode = " << to_string(c.bc_mode) << '\n'
     << "m = " << c.interp_degree << '\n'
     << "m_list = " << ints(c.m_list) << '\n'
     << "quad_degree = " << c.quad_degree << '\n'
     << "prior = " << c.prior << "\n\n"
     << "[output]\n"
     << "directory = " << c.directory << '\n'
     << "seed = " << c.seed << '\n'
     << "samples = " << c.samples << '\n';
  return os.str();
}

}  // namespace enfem
