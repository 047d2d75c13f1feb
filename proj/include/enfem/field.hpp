#pragma once

#include <functional>
#include <span>
#include <vector>

#include "enfem/jet.hpp"

namespace enfem {

// A scalar field exposing value, gradient and Hessian (a second-order jet)
// at batches of points. Batching lets network-backed fields evaluate many
// points per matrix product.
template <int Dim>
class DifferentiableField {
 public:
  virtual ~DifferentiableField() = default;

  virtual void evaluate(std::span<const Point<Dim>> x, std::span<Jet<Dim, 2>> out) const = 0;

  Jet<Dim, 2> operator()(const Point<Dim>& x) const {
    Jet<Dim, 2> j;
    evaluate(std::span<const Point<Dim>>(&x, 1), std::span<Jet<Dim, 2>>(&j, 1));
    return j;
  }

  std::vector<Jet<Dim, 2>> evaluate(std::span<const Point<Dim>> x) const {
    std::vector<Jet<Dim, 2>> out(x.size());
    evaluate(x, out);
    return out;
  }
};

template <int Dim>
class FunctionField final : public DifferentiableField<Dim> {
 public:
  using Fn = std::function<Jet<Dim, 2>(const Point<Dim>&)>;
  explicit FunctionField(Fn fn) : fn_(std::move(fn)) {}

  using DifferentiableField<Dim>::evaluate;
  void evaluate(std::span<const Point<Dim>> x, std::span<Jet<Dim, 2>> out) const override {
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = fn_(x[i]);
  }

 private:
  Fn fn_;
};

template <int Dim>
class ZeroField final : public DifferentiableField<Dim> {
 public:
  using DifferentiableField<Dim>::evaluate;
  void evaluate(std::span<const Point<Dim>> x, std::span<Jet<Dim, 2>> out) const override {
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = Jet<Dim, 2>{};
  }
};

}  // namespace enfem
