#pragma once

// Forward-mode dual number with N tangent directions. Used to obtain the
// gradient of per-point loss terms with respect to the network output jet.

#include <array>

namespace enfem {

template <int N>
struct Dual {
  double v = 0.0;
  std::array<double, N> d{};

  Dual() = default;
  Dual(double value) : v(value) {}  // NOLINT: implicit promotion from constants

  static Dual seed(double value, int direction) {
    Dual r(value);
    r.d[direction] = 1.0;
    return r;
  }

  Dual& operator+=(const Dual& o) {
    v += o.v;
    for (int i = 0; i < N; ++i) d[i] += o.d[i];
    return *this;
  }
  Dual& operator-=(const Dual& o) {
    v -= o.v;
    for (int i = 0; i < N; ++i) d[i] -= o.d[i];
    return *this;
  }
  Dual& operator*=(double s) {
    v *= s;
    for (auto& x : d) x *= s;
    return *this;
  }
};

template <int N>
Dual<N> operator+(Dual<N> a, const Dual<N>& b) {
  return a += b;
}
template <int N>
Dual<N> operator-(Dual<N> a, const Dual<N>& b) {
  return a -= b;
}
template <int N>
Dual<N> operator-(Dual<N> a) {
  return a *= -1.0;
}
template <int N>
Dual<N> operator*(const Dual<N>& a, const Dual<N>& b) {
  Dual<N> r(a.v * b.v);
  for (int i = 0; i < N; ++i) r.d[i] = a.d[i] * b.v + a.v * b.d[i];
  return r;
}
template <int N>
Dual<N> operator*(Dual<N> a, double s) {
  return a *= s;
}
template <int N>
Dual<N> operator*(double s, Dual<N> a) {
  return a *= s;
}
template <int N>
Dual<N> operator+(Dual<N> a, double s) {
  a.v += s;
  return a;
}
template <int N>
Dual<N> operator+(double s, Dual<N> a) {
  a.v += s;
  return a;
}
template <int N>
Dual<N> operator-(Dual<N> a, double s) {
  a.v -= s;
  return a;
}
template <int N>
Dual<N> operator-(double s, const Dual<N>& a) {
  return (-a) + s;
}

}  // namespace enfem
