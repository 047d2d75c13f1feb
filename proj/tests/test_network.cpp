#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "enfem/errors.hpp"
#include "enfem/network.hpp"

using namespace enfem;

namespace {

MlpNetwork small_net(int dim, Activation act, int n_fourier, std::uint64_t seed) {
  MlpConfig c;
  c.n_spatial = dim;
  c.n_params = 2;
  c.hidden = {7, 5};
  c.activation = act;
  c.n_fourier = n_fourier;
  c.seed = seed;
  MlpNetwork net(c);
  // non-zero biases so that every path is exercised
  std::mt19937_64 rng(seed + 99);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (int l = 0; l < net.num_layers(); ++l)
    for (int i = 0; i < net.width(l + 1); ++i) net.params()[net.bias_offset(l) + i] = u(rng);
  return net;
}

bool close(double a, double b, double tol, double value_scale) {
  return std::abs(a - b) <= tol * (1.0 + std::abs(b) + value_scale);
}

}  // namespace

TEST_CASE("parameter counts") {
  MlpConfig c;
  c.n_spatial = 1;
  c.n_params = 1;
  CHECK(c.num_params() == 3);
  CHECK(MlpNetwork(c).num_params() == 3);
  MlpConfig p;
  p.n_spatial = 2;
  p.n_params = 2;
  p.hidden = {40, 60, 60, 60, 40};
  CHECK(p.num_params() == 12461);
  p.n_fourier = 3;
  CHECK(MlpNetwork(p).num_params() == 12461 + 40 * 12 + 6);
}

TEST_CASE("initialisation is seeded and bounded") {
  MlpConfig c;
  c.n_spatial = 2;
  c.n_params = 2;
  c.hidden = {10, 10};
  c.n_fourier = 2;
  c.seed = 7;
  const MlpNetwork a(c), b(c);
  CHECK(std::equal(a.params().begin(), a.params().end(), b.params().begin()));
  c.seed = 8;
  const MlpNetwork d(c);
  CHECK(!std::equal(a.params().begin(), a.params().end(), d.params().begin()));
  const double lim = std::sqrt(6.0 / (a.width(0) + 10));
  for (int i = 0; i < 10 * a.width(0); ++i) CHECK(std::abs(a.params()[a.weight_offset(0) + i]) <= lim);
  for (int i = 0; i < 10; ++i) CHECK(a.params()[a.bias_offset(0) + i] == 0.0);
  CHECK(a.params()[a.fourier_offset()] == 1.0);
  CHECK(a.params()[a.fourier_offset() + 1] == 2.0);
  CHECK(a.params()[a.fourier_offset() + 2] == 1.0);
}

TEST_CASE("forward examples") {
  MlpConfig c;
  c.n_spatial = 1;
  c.n_params = 1;
  c.hidden = {4};
  MlpNetwork zero(c);
  for (auto& v : zero.params()) v = 0.0;
  const double mu[1] = {0.3};
  CHECK(zero.forward<1>({0.7}, mu) == 0.0);

  MlpConfig lin;
  lin.n_spatial = 1;
  lin.n_params = 1;
  MlpNetwork id(lin);
  id.params()[0] = 1.0;  // weight on x
  id.params()[1] = 0.0;  // weight on mu
  id.params()[2] = 0.0;
  CHECK(id.forward<1>({0.42}, mu) == 0.42);

  MlpConfig th;
  th.n_spatial = 1;
  th.hidden = {1};
  th.activation = Activation::Tanh;
  MlpNetwork t(th);
  t.params()[0] = 1.0;
  t.params()[1] = 0.0;
  t.params()[2] = 1.0;
  t.params()[3] = 0.0;
  CHECK(t.forward<1>({0.5}, {}) == doctest::Approx(std::tanh(0.5)));
  const auto d = t.input_derivatives<1>({0.0}, {}, 3);
  CHECK(d.gradient[0] == doctest::Approx(1.0));
  CHECK(d.hessian[0][0] == doctest::Approx(0.0));
  CHECK(d.grad_laplacian[0] == doctest::Approx(-2.0));
  CHECK_THROWS_AS(t.input_derivatives<1>({0.0}, {}, 4), UnsupportedError);
  CHECK_THROWS_AS(t.forward<1>({0.0}, mu), std::invalid_argument);
  CHECK_THROWS_AS(t.forward<2>({0.0, 0.0}, {}), std::invalid_argument);

  MlpConfig three;
  three.n_spatial = 1;
  MlpNetwork f(three);
  f.params()[0] = 3.0;
  f.params()[1] = 0.0;
  const auto g = f.input_derivatives<1>({0.2}, {}, 2);
  CHECK(g.gradient[0] == 3.0);
  CHECK(g.hessian[0][0] == 0.0);
}

// Fourth-order central stencil with step h.
template <class F>
double central(F f, double h) {
  return (8.0 * (f(h) - f(-h)) - (f(2 * h) - f(-2 * h))) / (12.0 * h);
}

TEST_CASE("input derivatives match finite differences") {
  const double h = 1e-4;
  const double mu[2] = {0.3, -0.4};
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (auto act : {Activation::Sine, Activation::Tanh}) {
    const auto net = small_net(2, act, 2, 11);
    for (int n = 0; n < 50; ++n) {
      const Point<2> x{u(rng), u(rng)};
      const auto d = net.input_derivatives<2>(x, mu, 3);
      const double scale = std::abs(d.value);
      for (int s = 0; s < 2; ++s) {
        auto shifted = [&](double t) {
          Point<2> p = x;
          p[s] += t;
          return p;
        };
        CHECK(close(d.gradient[s], central([&](double t) { return net.forward<2>(shifted(t), mu); }, h), 1e-6, scale));
        for (int r = 0; r < 2; ++r) {
          const double fd =
              central([&](double t) { return net.input_derivatives<2>(shifted(t), mu, 1).gradient[r]; }, h);
          CHECK(close(d.hessian[s][r], fd, 1e-6, scale));
        }
        const double fd3 = central(
            [&](double t) {
              const auto dd = net.input_derivatives<2>(shifted(t), mu, 2);
              return dd.hessian[0][0] + dd.hessian[1][1];
            },
            h);
        CHECK(close(d.grad_laplacian[s], fd3, 1e-6, scale));
      }
      CHECK(d.hessian[0][1] == doctest::Approx(d.hessian[1][0]).epsilon(1e-12));
    }
  }
}

TEST_CASE("parameter gradients of a derivative-based loss match finite differences") {
  for (auto act : {Activation::Sine, Activation::Tanh}) {
    auto net = small_net(2, act, 2, 5);
    std::vector<Point<2>> x{{0.1, 0.2}, {-0.3, 0.8}, {0.5, -0.6}};
    const std::vector<double> mu{0.3, -0.4};
    using J = Jet<2, 3>;
    // residual r = Laplacian + grad(Laplacian)_x + u, loss = sum r^2
    auto residual = [](const J& j) { return j.laplacian() + j.third(0, 0, 0) + j.third(0, 1, 1) + j.value(); };
    auto loss = [&](const MlpNetwork& n) {
      std::vector<J> out(x.size());
      n.evaluate<2, 3>(x, mu, out);
      double s = 0.0;
      for (const auto& j : out) s += residual(j) * residual(j);
      return s;
    };
    std::vector<J> out(x.size());
    NetworkTape tape;
    net.evaluate<2, 3>(x, mu, out, &tape);
    std::vector<std::array<double, J::size>> adj(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      adj[i].fill(0.0);
      // d residual / d coefficient: value 1; Laplacian 2 per pure second; third derivatives 6 and 2
      adj[i][0] = 1.0;
      adj[i][JetLayout<2, 3>::index({2, 0})] = 2.0;
      adj[i][JetLayout<2, 3>::index({0, 2})] = 2.0;
      adj[i][JetLayout<2, 3>::index({3, 0})] = 6.0;
      adj[i][JetLayout<2, 3>::index({1, 2})] = 2.0;
      for (auto& a : adj[i]) a *= 2.0 * residual(out[i]);
    }
    std::vector<double> grad(net.num_params(), 0.0);
    net.backward<2, 3>(tape, adj, grad);

    const double eps = 1e-6;
    for (int i = 0; i < net.num_params(); ++i) {
      const double keep = net.params()[i];
      net.params()[i] = keep + eps;
      const double lp = loss(net);
      net.params()[i] = keep - eps;
      const double lm = loss(net);
      net.params()[i] = keep;
      const double fd = (lp - lm) / (2 * eps);
      CHECK(std::abs(grad[i] - fd) <= 1e-5 * (1.0 + std::abs(fd)));
    }
  }
}

TEST_CASE("single-weight chain rule and empty batch") {
  MlpConfig c;
  c.n_spatial = 1;
  MlpNetwork net(c);
  net.params()[0] = 2.0;  // f(x) = w x + b
  net.params()[1] = 0.5;
  const std::vector<Point<1>> x{{0.3}};
  std::vector<Jet<1, 0>> out(1);
  NetworkTape tape;
  net.evaluate<1, 0>(x, {}, out, &tape);
  const std::vector<std::array<double, 1>> adj{{2.0 * out[0].value()}};
  std::vector<double> g(2, 0.0);
  net.backward<1, 0>(tape, adj, g);
  CHECK(g[0] == doctest::Approx(2.0 * out[0].value() * 0.3));

  std::vector<Jet<1, 0>> none;
  NetworkTape empty;
  net.evaluate<1, 0>(std::span<const Point<1>>(), {}, none, &empty);
  std::vector<double> g0(2, 0.0);
  net.backward<1, 0>(empty, std::span<const std::array<double, 1>>(), g0);
  CHECK(g0[0] == 0.0);
  CHECK(g0[1] == 0.0);
}

TEST_CASE("weights round trip and format errors") {
  const auto net = small_net(2, Activation::Sine, 3, 4);
  std::stringstream ss;
  net.save(ss);
  const std::string bytes = ss.str();
  std::istringstream in(bytes);
  const auto back = MlpNetwork::load(in);
  CHECK(back.num_params() == net.num_params());
  CHECK(std::equal(back.params().begin(), back.params().end(), net.params().begin()));
  const double mu[2] = {0.1, 0.2};
  CHECK(back.forward<2>({0.3, 0.4}, mu) == net.forward<2>({0.3, 0.4}, mu));
  CHECK(back.config().activation == Activation::Sine);

  std::istringstream truncated(bytes.substr(0, bytes.size() - 5));
  CHECK_THROWS_AS(MlpNetwork::load(truncated), FormatError);
  std::istringstream garbage("not a weights file at all");
  CHECK_THROWS_AS(MlpNetwork::load(garbage), FormatError);
  // loading into a problem with another spatial dimension
  CHECK_THROWS_AS(back.forward<1>({0.3}, mu), std::invalid_argument);
}

TEST_CASE("evaluation is pure and chunking does not change results") {
  const auto net = small_net(1, Activation::Tanh, 0, 3);
  std::vector<Point<1>> x(1500);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = {static_cast<double>(i) / 1500};
  const std::vector<double> mu{0.2, 0.1};
  std::vector<Jet<1, 2>> a(x.size()), b(x.size());
  net.evaluate<1, 2>(x, mu, a);
  net.evaluate<1, 2>(x, mu, b);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(a[i].c == b[i].c);
  Jet<1, 2> single;
  net.evaluate<1, 2>(std::span<const Point<1>>(&x[1234], 1), mu, std::span<Jet<1, 2>>(&single, 1));
  CHECK(single.c[2] == doctest::Approx(a[1234].c[2]).epsilon(1e-13));
}
