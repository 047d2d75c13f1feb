#pragma once

// Multilayer perceptron with sine or tanh hidden activations, a linear
// output layer and optional trainable Fourier features.
//
// Inputs are (x, mu, features) with features sin(pi a_l x_s), cos(pi b_l x_s)
// for l = 1..n_f and each spatial coordinate s. Parameters live in one flat
// vector: for each layer W (out x in, column-major) then b; then a_1..a_nf,
// then b_1..b_nf.
//
// Evaluation propagates truncated Taylor jets in the spatial inputs through
// the network in batches, so exact input derivatives and gradients with
// respect to the parameters of any loss built on them come from one forward
// and one reverse sweep.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "enfem/jet.hpp"

namespace enfem {

enum class Activation : std::uint32_t { Sine = 0, Tanh = 1 };

std::string to_string(Activation a);
Activation parse_activation(const std::string& s);

struct MlpConfig {
  int n_spatial = 1;
  int n_params = 0;
  std::vector<int> hidden;  // hidden layer widths; the output width is 1
  Activation activation = Activation::Tanh;
  int n_fourier = 0;
  std::uint64_t seed = 0;

  int input_width() const { return n_spatial + n_params + 2 * n_fourier * n_spatial; }
  // Number of trainable scalars for this architecture.
  int num_params() const;
};

// Value, spatial gradient, Hessian and (order 3) the gradient of the Laplacian.
template <int Dim>
struct DerivativeBundle {
  double value = 0.0;
  std::array<double, Dim> gradient{};
  std::array<std::array<double, Dim>, Dim> hessian{};
  std::array<double, Dim> grad_laplacian{};
  int order = 0;
};

// Intermediate state kept by a taped evaluation for the reverse sweep.
struct NetworkTape {
  int batch = 0;
  std::vector<Eigen::MatrixXd> inputs;  // input of each layer, blocked by jet coefficient
  std::vector<Eigen::MatrixXd> slopes;  // sigma'(Z) jets of the hidden layers
  Eigen::MatrixXd coords;               // spatial coordinates, n_spatial x batch
};

class MlpNetwork {
 public:
  MlpNetwork() = default;
  // Glorot-uniform weights, zero biases and frequencies a_l = b_l = l.
  explicit MlpNetwork(MlpConfig config);

  const MlpConfig& config() const { return config_; }
  int num_params() const { return static_cast<int>(params_.size()); }
  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }

  // Jets of order K of the network output at x[i] with parameters mu. mu is
  // either one parameter vector shared by all points or n_params values per
  // point. With a tape, intermediate state is kept for backward().
  template <int Dim, int K>
  void evaluate(std::span<const Point<Dim>> x, std::span<const double> mu, std::span<Jet<Dim, K>> out,
                NetworkTape* tape = nullptr) const;

  // Accumulates into grad the parameter gradient of sum_i sum_c adj[i][c] out[i].c[c].
  template <int Dim, int K>
  void backward(const NetworkTape& tape, std::span<const std::array<double, Jet<Dim, K>::size>> adj,
                std::span<double> grad) const;

  template <int Dim>
  double forward(const Point<Dim>& x, std::span<const double> mu) const;

  template <int Dim>
  DerivativeBundle<Dim> input_derivatives(const Point<Dim>& x, std::span<const double> mu, int order) const;

  void save(std::ostream& os) const;
  static MlpNetwork load(std::istream& is);
  void save(const std::string& path) const;
  static MlpNetwork load(const std::string& path);

  // Parameter offsets of layer l's weights and bias, and of the frequencies.
  int weight_offset(int layer) const { return offsets_[layer]; }
  int bias_offset(int layer) const { return offsets_[layer] + widths_[layer + 1] * widths_[layer]; }
  int fourier_offset() const { return fourier_offset_; }
  int num_layers() const { return static_cast<int>(widths_.size()) - 1; }
  int width(int i) const { return widths_[i]; }

 private:
  MlpConfig config_;
  std::vector<int> widths_;  // input, hidden..., 1
  std::vector<int> offsets_;
  int fourier_offset_ = 0;
  std::vector<double> params_;

  void layout();
  template <int Dim, int K>
  void run_chunk(std::span<const Point<Dim>> x, std::span<const double> mu, std::span<Jet<Dim, K>> out,
                 NetworkTape* tape) const;
};

std::uint64_t sub_seed(std::uint64_t seed, const std::string& name);

}  // namespace enfem
