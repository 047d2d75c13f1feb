#pragma once

// Truncated multivariate Taylor arithmetic.
//
// A Jet<Dim, Order, T> stores the Taylor coefficients c_a = d^a u / a! of a
// scalar field at one point, for every multi-index |a| <= Order. Products
// are truncated convolutions, so composing closed-form functions, level
// sets and network outputs propagates exact derivatives to the stated order.
//
// Coefficient layout is graded: degree 0, then degree 1, ... In 2D the
// degree-n block is ordered by increasing y exponent: (n,0), (n-1,1), ...

#include <array>
#include <cmath>
#include <cstddef>
#include <type_traits>

namespace enfem {

template <int Dim>
using Point = std::array<double, Dim>;

constexpr int binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  long long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return static_cast<int>(r);
}

constexpr long long factorial(int n) {
  long long r = 1;
  for (int i = 2; i <= n; ++i) r *= i;
  return r;
}

template <int Dim, int Order>
struct JetLayout {
  static_assert(Dim == 1 || Dim == 2, "jets support one or two spatial dimensions");
  static_assert(Order >= 0);

  using MultiIndex = std::array<int, Dim>;
  static constexpr int size = binomial(Order + Dim, Dim);

  static constexpr int degree(const MultiIndex& a) {
    int n = 0;
    for (int s = 0; s < Dim; ++s) n += a[s];
    return n;
  }

  static constexpr int index(const MultiIndex& a) {
    if constexpr (Dim == 1) {
      return a[0];
    } else {
      const int n = a[0] + a[1];
      return n * (n + 1) / 2 + a[1];
    }
  }

  static constexpr std::array<MultiIndex, size> make_exponents() {
    std::array<MultiIndex, size> e{};
    int k = 0;
    for (int n = 0; n <= Order; ++n) {
      if constexpr (Dim == 1) {
        e[k++] = MultiIndex{n};
      } else {
        for (int b = 0; b <= n; ++b) e[k++] = MultiIndex{n - b, b};
      }
    }
    return e;
  }
  static constexpr std::array<MultiIndex, size> exponents = make_exponents();

  // a! for each coefficient, converting Taylor coefficients to derivatives.
  static constexpr std::array<double, size> make_factorials() {
    std::array<double, size> f{};
    for (int i = 0; i < size; ++i) {
      double v = 1.0;
      for (int s = 0; s < Dim; ++s) v *= static_cast<double>(factorial(exponents[i][s]));
      f[i] = v;
    }
    return f;
  }
  static constexpr std::array<double, size> factorials = make_factorials();

  static constexpr int count_products() {
    int n = 0;
    for (int i = 0; i < size; ++i)
      for (int j = 0; j < size; ++j)
        if (degree(exponents[i]) + degree(exponents[j]) <= Order) ++n;
    return n;
  }
  static constexpr int num_products = count_products();

  // Triples (i, j, k) with exponents[i] + exponents[j] == exponents[k].
  struct Product {
    int lhs, rhs, out;
  };
  static constexpr std::array<Product, num_products> make_products() {
    std::array<Product, num_products> p{};
    int n = 0;
    for (int i = 0; i < size; ++i) {
      for (int j = 0; j < size; ++j) {
        if (degree(exponents[i]) + degree(exponents[j]) > Order) continue;
        MultiIndex s{};
        for (int d = 0; d < Dim; ++d) s[d] = exponents[i][d] + exponents[j][d];
        p[n++] = Product{i, j, index(s)};
      }
    }
    return p;
  }
  static constexpr std::array<Product, num_products> products = make_products();
};

template <int Dim, int Order, class T = double>
class Jet {
 public:
  using Layout = JetLayout<Dim, Order>;
  using MultiIndex = typename Layout::MultiIndex;
  using value_type = T;
  static constexpr int dim = Dim;
  static constexpr int order = Order;
  static constexpr int size = Layout::size;

  std::array<T, size> c{};

  Jet() = default;

  static Jet constant(const T& v) {
    Jet j;
    j.c[0] = v;
    return j;
  }

  // Coordinate function x_s evaluated at `v`.
  static Jet variable(const T& v, int s) {
    Jet j;
    j.c[0] = v;
    if constexpr (Order >= 1) {
      MultiIndex e{};
      e[s] = 1;
      j.c[Layout::index(e)] = T(1.0);
    }
    return j;
  }

  const T& value() const { return c[0]; }

  T derivative(const MultiIndex& a) const {
    const int i = Layout::index(a);
    return c[i] * Layout::factorials[i];
  }

  T first(int s) const {
    static_assert(Order >= 1);
    MultiIndex e{};
    e[s] = 1;
    return c[Layout::index(e)];
  }

  T second(int s, int t) const {
    static_assert(Order >= 2);
    MultiIndex e{};
    e[s] += 1;
    e[t] += 1;
    return derivative(e);
  }

  T third(int s, int t, int r) const {
    static_assert(Order >= 3);
    MultiIndex e{};
    e[s] += 1;
    e[t] += 1;
    e[r] += 1;
    return derivative(e);
  }

  std::array<T, Dim> gradient() const {
    std::array<T, Dim> g{};
    for (int s = 0; s < Dim; ++s) g[s] = first(s);
    return g;
  }

  T laplacian() const {
    T l{};
    for (int s = 0; s < Dim; ++s) l = l + second(s, s);
    return l;
  }

  // Partial derivative along x_s, lowering the order by one.
  Jet<Dim, Order - 1, T> diff(int s) const {
    static_assert(Order >= 1);
    using Lower = JetLayout<Dim, Order - 1>;
    Jet<Dim, Order - 1, T> r;
    for (int i = 0; i < Lower::size; ++i) {
      MultiIndex a = Lower::exponents[i];
      const double scale = static_cast<double>(a[s] + 1);
      a[s] += 1;
      r.c[i] = c[Layout::index(a)] * scale;
    }
    return r;
  }

  template <int K>
  Jet<Dim, K, T> truncate() const {
    static_assert(K <= Order);
    Jet<Dim, K, T> r;
    for (int i = 0; i < Jet<Dim, K, T>::size; ++i) r.c[i] = c[i];
    return r;
  }

  Jet& operator+=(const Jet& o) {
    for (int i = 0; i < size; ++i) c[i] = c[i] + o.c[i];
    return *this;
  }
  Jet& operator-=(const Jet& o) {
    for (int i = 0; i < size; ++i) c[i] = c[i] - o.c[i];
    return *this;
  }
  Jet& operator*=(double s) {
    for (int i = 0; i < size; ++i) c[i] = c[i] * s;
    return *this;
  }
};

template <int D, int O, class T>
Jet<D, O, T> operator+(Jet<D, O, T> a, const Jet<D, O, T>& b) {
  return a += b;
}
template <int D, int O, class T>
Jet<D, O, T> operator-(Jet<D, O, T> a, const Jet<D, O, T>& b) {
  return a -= b;
}
template <int D, int O, class T>
Jet<D, O, T> operator-(Jet<D, O, T> a) {
  for (auto& v : a.c) v = -v;
  return a;
}
template <int D, int O, class T>
Jet<D, O, T> operator+(Jet<D, O, T> a, double s) {
  a.c[0] = a.c[0] + s;
  return a;
}
template <int D, int O, class T>
Jet<D, O, T> operator+(double s, Jet<D, O, T> a) {
  return a + s;
}
template <int D, int O, class T>
Jet<D, O, T> operator-(Jet<D, O, T> a, double s) {
  a.c[0] = a.c[0] - s;
  return a;
}
template <int D, int O, class T>
Jet<D, O, T> operator-(double s, const Jet<D, O, T>& a) {
  return (-a) + s;
}
template <int D, int O, class T>
Jet<D, O, T> operator*(Jet<D, O, T> a, double s) {
  return a *= s;
}
template <int D, int O, class T>
Jet<D, O, T> operator*(double s, Jet<D, O, T> a) {
  return a *= s;
}
template <int D, int O, class T>
Jet<D, O, T> operator/(Jet<D, O, T> a, double s) {
  return a *= (1.0 / s);
}

// Truncated product; mixed scalar types are allowed (e.g. double x Dual).
template <int D, int O, class A, class B>
auto operator*(const Jet<D, O, A>& a, const Jet<D, O, B>& b) {
  using R = decltype(std::declval<A>() * std::declval<B>());
  Jet<D, O, R> r;
  for (const auto& p : JetLayout<D, O>::products) r.c[p.out] = r.c[p.out] + a.c[p.lhs] * b.c[p.rhs];
  return r;
}

template <int D, int O, class A, class B>
  requires(!std::is_same_v<A, B>)
auto operator+(const Jet<D, O, A>& a, const Jet<D, O, B>& b) {
  using R = decltype(std::declval<A>() + std::declval<B>());
  Jet<D, O, R> r;
  for (int i = 0; i < Jet<D, O, R>::size; ++i) r.c[i] = a.c[i] + b.c[i];
  return r;
}

// f(z) for an analytic f given its derivatives f^(n)(z0), n = 0..O.
template <int D, int O>
Jet<D, O> compose(const Jet<D, O>& z, const std::array<double, O + 1>& derivs) {
  Jet<D, O> delta = z;
  delta.c[0] = 0.0;
  Jet<D, O> r = Jet<D, O>::constant(derivs[O] / static_cast<double>(factorial(O)));
  for (int n = O - 1; n >= 0; --n) {
    r = r * delta;
    r.c[0] += derivs[n] / static_cast<double>(factorial(n));
  }
  return r;
}

namespace detail {

template <int O>
std::array<double, O + 1> sin_derivs(double x) {
  const double s = std::sin(x), co = std::cos(x);
  const double cycle[4] = {s, co, -s, -co};
  std::array<double, O + 1> d{};
  for (int n = 0; n <= O; ++n) d[n] = cycle[n % 4];
  return d;
}

template <int O>
std::array<double, O + 1> cos_derivs(double x) {
  const double s = std::sin(x), co = std::cos(x);
  const double cycle[4] = {co, -s, -co, s};
  std::array<double, O + 1> d{};
  for (int n = 0; n <= O; ++n) d[n] = cycle[n % 4];
  return d;
}

// Derivatives of tanh are polynomials in t = tanh(x): P_{n+1}(t) = (1 - t^2) P_n'(t).
template <int O>
std::array<double, O + 1> tanh_derivs(double x) {
  const double t = std::tanh(x);
  std::array<double, O + 2> poly{};  // coefficients of P_n in t
  poly[1] = 1.0;
  std::array<double, O + 1> d{};
  d[0] = t;
  for (int n = 1; n <= O; ++n) {
    std::array<double, O + 2> der{}, next{};
    for (int i = 1; i < O + 2; ++i) der[i - 1] = poly[i] * i;
    for (int i = 0; i < O + 2; ++i) {
      next[i] += der[i];
      if (i + 2 < O + 2) next[i + 2] -= der[i];
    }
    poly = next;
    double v = 0.0;
    for (int i = O + 1; i >= 0; --i) v = v * t + poly[i];
    d[n] = v;
  }
  return d;
}

}  // namespace detail

template <int D, int O>
Jet<D, O> sin(const Jet<D, O>& z) {
  return compose(z, detail::sin_derivs<O>(z.value()));
}

template <int D, int O>
Jet<D, O> cos(const Jet<D, O>& z) {
  return compose(z, detail::cos_derivs<O>(z.value()));
}

template <int D, int O>
Jet<D, O> tanh(const Jet<D, O>& z) {
  return compose(z, detail::tanh_derivs<O>(z.value()));
}

template <int D, int O>
Jet<D, O> exp(const Jet<D, O>& z) {
  std::array<double, O + 1> d;
  d.fill(std::exp(z.value()));
  return compose(z, d);
}

template <int D, int O>
Jet<D, O> log(const Jet<D, O>& z) {
  const double x = z.value();
  std::array<double, O + 1> d{};
  d[0] = std::log(x);
  double p = 1.0 / x;
  for (int n = 1; n <= O; ++n) {
    d[n] = p;
    p *= -static_cast<double>(n) / x;
  }
  return compose(z, d);
}

template <int D, int O>
Jet<D, O> reciprocal(const Jet<D, O>& z) {
  const double x = z.value();
  std::array<double, O + 1> d{};
  double p = 1.0 / x;
  for (int n = 0; n <= O; ++n) {
    d[n] = p;
    p *= -static_cast<double>(n + 1) / x;
  }
  return compose(z, d);
}

template <int D, int O>
Jet<D, O> sqrt(const Jet<D, O>& z) {
  const double x = z.value();
  std::array<double, O + 1> d{};
  // d^n x^(1/2) = (1/2)(1/2 - 1)...(1/2 - n + 1) x^(1/2 - n)
  double coeff = 1.0;
  for (int n = 0; n <= O; ++n) {
    d[n] = coeff * std::pow(x, 0.5 - n);
    coeff *= (0.5 - n);
  }
  return compose(z, d);
}

template <int D, int O>
Jet<D, O> operator/(const Jet<D, O>& a, const Jet<D, O>& b) {
  return a * reciprocal(b);
}

template <int D, int O, class T>
Jet<D, O, T> square(const Jet<D, O, T>& a) {
  return a * a;
}

}  // namespace enfem
