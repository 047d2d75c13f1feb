#include "enfem/network.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <random>
#include <stdexcept>

#include "enfem/errors.hpp"

namespace enfem {

namespace {

constexpr char kMagic[8] = {'E', 'N', 'F', 'E', 'M', 'N', 'N', '1'};
constexpr std::uint32_t kVersion = 1;
constexpr int kChunk = 512;

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Blocked jets: a matrix rows x (size * B) whose k-th block of B columns
// holds Taylor coefficient k of every entry.
template <int Dim, int K>
struct Blocked {
  using Layout = JetLayout<Dim, K>;

  static auto block(Eigen::MatrixXd& m, int k, int b) { return m.middleCols(static_cast<Eigen::Index>(k) * b, b); }
  static auto block(const Eigen::MatrixXd& m, int k, int b) {
    return m.middleCols(static_cast<Eigen::Index>(k) * b, b);
  }

  // r = a * b (truncated), assuming b has a zero constant block.
  static void mul_no_const(const Eigen::MatrixXd& a, const Eigen::MatrixXd& d, Eigen::MatrixXd& r, int b) {
    r.setZero(a.rows(), a.cols());
    for (const auto& p : Layout::products) {
      if (p.rhs == 0) continue;
      block(r, p.out, b).array() += block(a, p.lhs, b).array() * block(d, p.rhs, b).array();
    }
  }

  // sum_n derivs[n] / n! delta^n with delta = z - z0.
  static void compose(const Eigen::MatrixXd& delta, const std::vector<Eigen::ArrayXXd>& derivs, int first,
                      Eigen::MatrixXd& r, int b) {
    r.setZero(delta.rows(), delta.cols());
    block(r, 0, b).array() = derivs[first + K] / static_cast<double>(factorial(K));
    Eigen::MatrixXd tmp;
    for (int n = K - 1; n >= 0; --n) {
      mul_no_const(r, delta, tmp, b);
      r.swap(tmp);
      block(r, 0, b).array() += derivs[first + n] / static_cast<double>(factorial(n));
    }
  }

  // sigma(Z) and sigma'(Z) as jets.
  static void activate(Activation act, const Eigen::MatrixXd& z, int b, Eigen::MatrixXd& a, Eigen::MatrixXd* g) {
    const Eigen::ArrayXXd z0 = block(z, 0, b).array();
    std::vector<Eigen::ArrayXXd> d(K + 2);
    if (act == Activation::Sine) {
      const Eigen::ArrayXXd s = z0.sin(), c = z0.cos();
      for (int n = 0; n < K + 2; ++n) {
        switch (n % 4) {
          case 0: d[n] = s; break;
          case 1: d[n] = c; break;
          case 2: d[n] = -s; break;
          default: d[n] = -c; break;
        }
      }
    } else {
      // d^n tanh = P_n(t), P_{n+1} = (1 - t^2) P_n'
      const Eigen::ArrayXXd t = z0.tanh();
      std::vector<double> poly(K + 3, 0.0);
      poly[1] = 1.0;
      for (int n = 0; n < K + 2; ++n) {
        Eigen::ArrayXXd v = Eigen::ArrayXXd::Constant(t.rows(), t.cols(), poly[K + 2]);
        for (int i = K + 1; i >= 0; --i) v = v * t + poly[i];
        d[n] = v;
        std::vector<double> der(K + 3, 0.0), next(K + 3, 0.0);
        for (int i = 1; i < K + 3; ++i) der[i - 1] = poly[i] * i;
        for (int i = 0; i < K + 3; ++i) {
          next[i] += der[i];
          if (i + 2 < K + 3) next[i + 2] -= der[i];
        }
        poly = next;
      }
    }
    Eigen::MatrixXd delta = z;
    block(delta, 0, b).setZero();
    compose(delta, d, 0, a, b);
    if (g) compose(delta, d, 1, *g, b);
  }

  // Reverse of A = sigma(Z): adj_Z[j] = sum_{(i,j,k)} adj_A[k] G[i].
  static void activate_backward(const Eigen::MatrixXd& adj_a, const Eigen::MatrixXd& g, int b,
                                Eigen::MatrixXd& adj_z) {
    adj_z.setZero(adj_a.rows(), adj_a.cols());
    for (const auto& p : Layout::products)
      block(adj_z, p.rhs, b).array() += block(adj_a, p.out, b).array() * block(g, p.lhs, b).array();
  }
};

}  // namespace

std::uint64_t sub_seed(std::uint64_t seed, const std::string& name) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char ch : name) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return splitmix64(seed ^ h);
}

std::string to_string(Activation a) { return a == Activation::Sine ? "sine" : "tanh"; }

Activation parse_activation(const std::string& s) {
  if (s == "sine" || s == "sin") return Activation::Sine;
  if (s == "tanh") return Activation::Tanh;
  throw ConfigError("unknown activation '" + s + "'");
}

int MlpConfig::num_params() const {
  int n = 0, prev = input_width();
  for (int w : hidden) {
    n += w * prev + w;
    prev = w;
  }
  return n + prev + 1 + 2 * n_fourier;
}

void MlpNetwork::layout() {
  if (config_.n_spatial < 1 || config_.n_spatial > 2) throw std::invalid_argument("networks take 1 or 2 spatial inputs");
  if (config_.n_params < 0 || config_.n_fourier < 0) throw std::invalid_argument("negative network dimension");
  for (int w : config_.hidden)
    if (w < 1) throw std::invalid_argument("hidden widths must be positive");
  widths_.clear();
  widths_.push_back(config_.input_width());
  for (int w : config_.hidden) widths_.push_back(w);
  widths_.push_back(1);
  offsets_.clear();
  int off = 0;
  for (int l = 0; l + 1 < static_cast<int>(widths_.size()); ++l) {
    offsets_.push_back(off);
    off += widths_[l + 1] * widths_[l] + widths_[l + 1];
  }
  fourier_offset_ = off;
  params_.assign(off + 2 * config_.n_fourier, 0.0);
}

MlpNetwork::MlpNetwork(MlpConfig config) : config_(std::move(config)) {
  layout();
  std::mt19937_64 rng(sub_seed(config_.seed, "init"));
  for (int l = 0; l < num_layers(); ++l) {
    const int fan_in = widths_[l], fan_out = widths_[l + 1];
    const double lim = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> u(-lim, lim);
    double* w = params_.data() + weight_offset(l);
    for (int i = 0; i < fan_in * fan_out; ++i) w[i] = u(rng);
  }
  for (int l = 0; l < config_.n_fourier; ++l) {
    params_[fourier_offset_ + l] = l + 1.0;
    params_[fourier_offset_ + config_.n_fourier + l] = l + 1.0;
  }
}

template <int Dim, int K>
void MlpNetwork::run_chunk(std::span<const Point<Dim>> x, std::span<const double> mu, std::span<Jet<Dim, K>> out,
                           NetworkTape* tape) const {
  using B = Blocked<Dim, K>;
  using Layout = JetLayout<Dim, K>;
  constexpr int C = Layout::size;
  const int b = static_cast<int>(x.size());
  const int p = config_.n_params;
  const int nf = config_.n_fourier;
  const bool shared_mu = static_cast<int>(mu.size()) == p;

  Eigen::MatrixXd xin = Eigen::MatrixXd::Zero(widths_[0], static_cast<Eigen::Index>(C) * b);
  for (int i = 0; i < b; ++i) {
    for (int s = 0; s < Dim; ++s) {
      xin(s, i) = x[i][s];
      if constexpr (K >= 1) {
        typename Layout::MultiIndex e{};
        e[s] = 1;
        xin(s, static_cast<Eigen::Index>(Layout::index(e)) * b + i) = 1.0;
      }
    }
    for (int j = 0; j < p; ++j) xin(Dim + j, i) = shared_mu ? mu[j] : mu[static_cast<std::size_t>(i) * p + j];
    for (int l = 0; l < nf; ++l) {
      const double a = params_[fourier_offset_ + l];
      const double bb = params_[fourier_offset_ + nf + l];
      for (int s = 0; s < Dim; ++s) {
        const auto xs = Jet<Dim, K>::variable(x[i][s], s);
        const auto fs = sin(xs * (std::numbers::pi * a));
        const auto fc = cos(xs * (std::numbers::pi * bb));
        const int row = Dim + p + 2 * (l * Dim + s);
        for (int k = 0; k < C; ++k) {
          xin(row, static_cast<Eigen::Index>(k) * b + i) = fs.c[k];
          xin(row + 1, static_cast<Eigen::Index>(k) * b + i) = fc.c[k];
        }
      }
    }
  }
  if (tape) {
    tape->batch = b;
    tape->inputs.clear();
    tape->slopes.clear();
    tape->coords.resize(Dim, b);
    for (int i = 0; i < b; ++i)
      for (int s = 0; s < Dim; ++s) tape->coords(s, i) = x[i][s];
  }

  Eigen::MatrixXd cur = std::move(xin), z, a, g;
  const int nl = num_layers();
  for (int l = 0; l < nl; ++l) {
    const int in = widths_[l], o = widths_[l + 1];
    // Owned copies keep Eigen's kernels independent of the parameter
    // vector's address, which bit-exact reruns rely on.
    const Eigen::MatrixXd w = Eigen::Map<const Eigen::MatrixXd>(params_.data() + weight_offset(l), o, in);
    const Eigen::VectorXd bias = Eigen::Map<const Eigen::VectorXd>(params_.data() + bias_offset(l), o);
    z.noalias() = w * cur;
    B::block(z, 0, b).colwise() += bias;
    if (l + 1 == nl) {
      if (tape) tape->inputs.push_back(std::move(cur));
      cur = std::move(z);
      break;
    }
    B::activate(config_.activation, z, b, a, tape ? &g : nullptr);
    if (tape) {
      tape->inputs.push_back(std::move(cur));
      tape->slopes.push_back(g);
    }
    cur = a;
  }
  for (int i = 0; i < b; ++i)
    for (int k = 0; k < C; ++k) out[i].c[k] = cur(0, static_cast<Eigen::Index>(k) * b + i);
}

template <int Dim, int K>
void MlpNetwork::evaluate(std::span<const Point<Dim>> x, std::span<const double> mu, std::span<Jet<Dim, K>> out,
                          NetworkTape* tape) const {
  if (Dim != config_.n_spatial) throw std::invalid_argument("network expects a different spatial dimension");
  const std::size_t p = config_.n_params;
  if (!(mu.size() == p || mu.size() == p * x.size()))
    throw std::invalid_argument("network expects " + std::to_string(p) + " parameters per point");
  if (out.size() != x.size()) throw std::invalid_argument("output span size mismatch");
  if (tape) {
    run_chunk<Dim, K>(x, mu, out, tape);
    return;
  }
  const bool shared = mu.size() == p;
  for (std::size_t s = 0; s < x.size(); s += kChunk) {
    const std::size_t n = std::min<std::size_t>(kChunk, x.size() - s);
    run_chunk<Dim, K>(x.subspan(s, n), shared ? mu : mu.subspan(s * p, n * p), out.subspan(s, n), nullptr);
  }
}

template <int Dim, int K>
void MlpNetwork::backward(const NetworkTape& tape, std::span<const std::array<double, Jet<Dim, K>::size>> adj,
                          std::span<double> grad) const {
  using B = Blocked<Dim, K>;
  constexpr int C = Jet<Dim, K>::size;
  const int b = tape.batch;
  if (static_cast<int>(adj.size()) != b) throw std::invalid_argument("adjoint size does not match the tape");
  if (static_cast<int>(grad.size()) != num_params()) throw std::invalid_argument("gradient size mismatch");

  Eigen::MatrixXd adj_cur(1, static_cast<Eigen::Index>(C) * b);
  for (int i = 0; i < b; ++i)
    for (int k = 0; k < C; ++k) adj_cur(0, static_cast<Eigen::Index>(k) * b + i) = adj[i][k];

  const int nl = num_layers();
  Eigen::MatrixXd adj_z, adj_in, gw_l;
  Eigen::VectorXd gb_l;
  for (int l = nl - 1; l >= 0; --l) {
    const int in = widths_[l], o = widths_[l + 1];
    if (l + 1 < nl) {
      B::activate_backward(adj_cur, tape.slopes[l], b, adj_z);
    } else {
      adj_z = std::move(adj_cur);
    }
    Eigen::Map<Eigen::MatrixXd> gw(grad.data() + weight_offset(l), o, in);
    Eigen::Map<Eigen::VectorXd> gb(grad.data() + bias_offset(l), o);
    gw_l.noalias() = adj_z * tape.inputs[l].transpose();
    gb_l = B::block(adj_z, 0, b).rowwise().sum();
    gw += gw_l;
    gb += gb_l;
    if (l == 0 && config_.n_fourier == 0) break;
    const Eigen::MatrixXd w = Eigen::Map<const Eigen::MatrixXd>(params_.data() + weight_offset(l), o, in);
    adj_in.noalias() = w.transpose() * adj_z;
    adj_cur = std::move(adj_in);
  }
  if (config_.n_fourier == 0) return;

  // adj_cur now holds the adjoint of the input features
  const int p = config_.n_params;
  const int nf = config_.n_fourier;
  for (int l = 0; l < nf; ++l) {
    const double a = params_[fourier_offset_ + l];
    const double bb = params_[fourier_offset_ + nf + l];
    double ga = 0.0, gbf = 0.0;
    for (int i = 0; i < b; ++i) {
      for (int s = 0; s < Dim; ++s) {
        const auto xs = Jet<Dim, K>::variable(tape.coords(s, i), s);
        // d/da sin(pi a x) = pi x cos(pi a x), d/db cos(pi b x) = -pi x sin(pi b x)
        const auto da = xs * cos(xs * (std::numbers::pi * a)) * std::numbers::pi;
        const auto db = xs * sin(xs * (std::numbers::pi * bb)) * (-std::numbers::pi);
        const int row = Dim + p + 2 * (l * Dim + s);
        for (int k = 0; k < C; ++k) {
          ga += adj_cur(row, static_cast<Eigen::Index>(k) * b + i) * da.c[k];
          gbf += adj_cur(row + 1, static_cast<Eigen::Index>(k) * b + i) * db.c[k];
        }
      }
    }
    grad[fourier_offset_ + l] += ga;
    grad[fourier_offset_ + nf + l] += gbf;
  }
}

template <int Dim>
double MlpNetwork::forward(const Point<Dim>& x, std::span<const double> mu) const {
  Jet<Dim, 0> out;
  evaluate<Dim, 0>(std::span<const Point<Dim>>(&x, 1), mu, std::span<Jet<Dim, 0>>(&out, 1));
  return out.value();
}

template <int Dim>
DerivativeBundle<Dim> MlpNetwork::input_derivatives(const Point<Dim>& x, std::span<const double> mu,
                                                    int order) const {
  if (order < 1 || order > 3) throw UnsupportedError("input derivatives are available for orders 1 to 3");
  Jet<Dim, 3> j;
  evaluate<Dim, 3>(std::span<const Point<Dim>>(&x, 1), mu, std::span<Jet<Dim, 3>>(&j, 1));
  DerivativeBundle<Dim> d;
  d.order = order;
  d.value = j.value();
  for (int s = 0; s < Dim; ++s) d.gradient[s] = j.first(s);
  if (order >= 2)
    for (int s = 0; s < Dim; ++s)
      for (int t = 0; t < Dim; ++t) d.hessian[s][t] = j.second(s, t);
  if (order >= 3)
    for (int s = 0; s < Dim; ++s)
      for (int t = 0; t < Dim; ++t) d.grad_laplacian[s] += j.third(s, t, t);
  return d;
}

namespace {

template <class T>
void put(std::ostream& os, T v) {
  static_assert(std::endian::native == std::endian::little, "weights files are little-endian");
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is) {
  T v;
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw FormatError("weights file is truncated");
  return v;
}

}  // namespace

void MlpNetwork::save(std::ostream& os) const {
  os.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(os, kVersion);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(config_.activation));
  put<std::uint32_t>(os, config_.n_spatial);
  put<std::uint32_t>(os, config_.n_params);
  put<std::uint32_t>(os, config_.n_fourier);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(config_.hidden.size()));
  for (int w : config_.hidden) put<std::uint32_t>(os, w);
  put<std::uint64_t>(os, config_.seed);
  put<std::uint64_t>(os, params_.size());
  for (double v : params_) put<double>(os, v);
}

MlpNetwork MlpNetwork::load(std::istream& is) {
  char magic[sizeof(kMagic)];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) throw FormatError("not a weights file (bad magic)");
  if (get<std::uint32_t>(is) != kVersion) throw FormatError("unsupported weights file version");
  MlpConfig c;
  const auto act = get<std::uint32_t>(is);
  if (act > 1) throw FormatError("unknown activation id in weights file");
  c.activation = static_cast<Activation>(act);
  c.n_spatial = static_cast<int>(get<std::uint32_t>(is));
  c.n_params = static_cast<int>(get<std::uint32_t>(is));
  c.n_fourier = static_cast<int>(get<std::uint32_t>(is));
  const auto nh = get<std::uint32_t>(is);
  if (c.n_spatial < 1 || c.n_spatial > 2 || c.n_params > 64 || c.n_fourier > 4096 || nh > 1024)
    throw FormatError("implausible weights file header");
  for (std::uint32_t i = 0; i < nh; ++i) {
    const auto w = get<std::uint32_t>(is);
    if (w == 0 || w > 1u << 16) throw FormatError("implausible layer width in weights file");
    c.hidden.push_back(static_cast<int>(w));
  }
  c.seed = get<std::uint64_t>(is);
  MlpNetwork net;
  net.config_ = c;
  net.layout();
  const auto n = get<std::uint64_t>(is);
  if (n != net.params_.size()) throw FormatError("weights file parameter count does not match its layer widths");
  for (auto& v : net.params_) v = get<double>(is);
  if (is.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes in weights file");
  return net;
}

void MlpNetwork::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot write weights file " + path);
  save(os);
  if (!os) throw FormatError("failed writing weights file " + path);
}

MlpNetwork MlpNetwork::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open weights file " + path);
  return load(is);
}

#define ENFEM_NET_ORDER(D, K)                                                                                    \
  template void MlpNetwork::evaluate<D, K>(std::span<const Point<D>>, std::span<const double>,                 \
                                           std::span<Jet<D, K>>, NetworkTape*) const;                          \
  template void MlpNetwork::backward<D, K>(const NetworkTape&,                                                  \
                                           std::span<const std::array<double, Jet<D, K>::size>>,                \
                                           std::span<double>) const;
#define ENFEM_NET_DIM(D)                                                                                          \
  ENFEM_NET_ORDER(D, 0)                                                                                          \
  ENFEM_NET_ORDER(D, 1)                                                                                          \
  ENFEM_NET_ORDER(D, 2)                                                                                          \
  ENFEM_NET_ORDER(D, 3)                                                                                          \
  ENFEM_NET_ORDER(D, 4)                                                                                          \
  template double MlpNetwork::forward<D>(const Point<D>&, std::span<const double>) const;                      \
  template DerivativeBundle<D> MlpNetwork::input_derivatives<D>(const Point<D>&, std::span<const double>, int) \
      const;

ENFEM_NET_DIM(1)
ENFEM_NET_DIM(2)

}  // namespace enfem
