#pragma once

// Truncated Taylor series ("jets") with the usual forward-mode recurrences.
//
// A Jet<T> of order K stores c[k] = f^(k)(x0) / k! for k = 0..K. Arithmetic
// combines jets coefficient-wise so that every derivative up to order K is
// exact up to round-off: no differencing anywhere. Binary operations on jets of
// different order truncate to the smaller order.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>

namespace wkb {

inline constexpr int kMaxJetOrder = 15;

template <class T>
class Jet {
 public:
  Jet() = default;

  /// Constant jet of the given order.
  Jet(T value, int order) : order_(order) {
    check_order(order);
    c_.fill(T(0));
    c_[0] = value;
  }

  /// The independent variable x expanded at x0.
  static Jet variable(T x0, int order) {
    Jet j(x0, order);
    if (order >= 1) j.c_[1] = T(1);
    return j;
  }

  /// Jet from derivative values f(x0), f'(x0), ..., f^(order)(x0).
  template <class Range>
  static Jet from_derivatives(const Range& derivs, int order) {
    Jet j(T(0), order);
    T fact(1);
    for (int k = 0; k <= order; ++k) {
      if (k > 0) fact *= T(k);
      j.c_[k] = T(derivs[static_cast<std::size_t>(k)]) / fact;
    }
    return j;
  }

  [[nodiscard]] int order() const noexcept { return order_; }
  [[nodiscard]] const T& operator[](int k) const { return c_[static_cast<std::size_t>(k)]; }
  T& operator[](int k) { return c_[static_cast<std::size_t>(k)]; }
  [[nodiscard]] const T& value() const { return c_[0]; }

  /// k-th derivative at the expansion point.
  [[nodiscard]] T derivative_value(int k) const {
    if (k < 0 || k > order_) throw std::out_of_range("Jet: derivative order exceeds jet order");
    T fact(1);
    for (int j = 2; j <= k; ++j) fact *= T(j);
    return c_[static_cast<std::size_t>(k)] * fact;
  }

  /// d/dx of the series; the result has order one less.
  [[nodiscard]] Jet derivative() const {
    if (order_ == 0) throw std::out_of_range("Jet: cannot differentiate an order-0 jet");
    Jet d(T(0), order_ - 1);
    for (int k = 0; k < order_; ++k) d.c_[k] = T(k + 1) * c_[k + 1];
    return d;
  }

  [[nodiscard]] Jet truncated(int order) const {
    Jet r = *this;
    r.order_ = std::min(order_, order);
    for (int k = r.order_ + 1; k <= kMaxJetOrder; ++k) r.c_[k] = T(0);
    return r;
  }

  Jet& operator+=(const Jet& o) {
    order_ = std::min(order_, o.order_);
    for (int k = 0; k <= order_; ++k) c_[k] += o.c_[k];
    return *this;
  }
  Jet& operator-=(const Jet& o) {
    order_ = std::min(order_, o.order_);
    for (int k = 0; k <= order_; ++k) c_[k] -= o.c_[k];
    return *this;
  }
  Jet& operator*=(const T& s) {
    for (int k = 0; k <= order_; ++k) c_[k] *= s;
    return *this;
  }
  Jet& operator+=(const T& s) {
    c_[0] += s;
    return *this;
  }

  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator+(Jet a, const T& s) { return a += s; }
  friend Jet operator+(const T& s, Jet a) { return a += s; }
  friend Jet operator-(Jet a, const T& s) { return a += -s; }
  friend Jet operator-(const T& s, const Jet& a) { return -a + s; }
  friend Jet operator*(Jet a, const T& s) { return a *= s; }
  friend Jet operator*(const T& s, Jet a) { return a *= s; }
  friend Jet operator/(Jet a, const T& s) {
    for (int k = 0; k <= a.order_; ++k) a.c_[k] /= s;
    return a;
  }
  friend Jet operator-(Jet a) {
    for (int k = 0; k <= a.order_; ++k) a.c_[k] = -a.c_[k];
    return a;
  }

  friend Jet operator*(const Jet& a, const Jet& b) {
    Jet r(T(0), std::min(a.order_, b.order_));
    for (int k = 0; k <= r.order_; ++k) {
      T acc(0);
      for (int j = 0; j <= k; ++j) acc += a.c_[j] * b.c_[k - j];
      r.c_[k] = acc;
    }
    return r;
  }

  friend Jet operator/(const Jet& a, const Jet& b) {
    Jet q(T(0), std::min(a.order_, b.order_));
    for (int k = 0; k <= q.order_; ++k) {
      T acc = a.c_[k];
      for (int j = 1; j <= k; ++j) acc -= b.c_[j] * q.c_[k - j];
      q.c_[k] = acc / b.c_[0];
    }
    return q;
  }

  friend Jet operator/(const T& s, const Jet& b) { return Jet(s, b.order_) / b; }

 private:
  static void check_order(int order) {
    if (order < 0 || order > kMaxJetOrder) throw std::out_of_range("Jet: order out of range");
  }

  int order_ = 0;
  std::array<T, kMaxJetOrder + 1> c_{};
};

/// a^r for real r. Requires a(x0) != 0 unless r is a non-negative integer.
template <class T>
Jet<T> pow(const Jet<T>& a, const T& r) {
  using std::floor;
  using std::pow;
  const int n = a.order();
  if (r >= T(0) && floor(r) == r && r <= T(64)) {
    // Repeated squaring keeps integer powers valid at a(x0) = 0.
    auto e = static_cast<unsigned>(static_cast<long double>(r));
    Jet<T> result(T(1), n);
    Jet<T> base = a;
    while (e != 0U) {
      if ((e & 1U) != 0U) result = result * base;
      e >>= 1U;
      if (e != 0U) base = base * base;
    }
    return result;
  }
  Jet<T> p(T(0), n);
  p[0] = pow(a[0], r);
  for (int k = 1; k <= n; ++k) {
    T acc(0);
    for (int j = 1; j <= k; ++j) acc += (T(j) * (r + T(1)) - T(k)) * a[j] * p[k - j];
    p[k] = acc / (T(k) * a[0]);
  }
  return p;
}

template <class T>
Jet<T> sqrt(const Jet<T>& a) {
  return pow(a, T(0.5));
}

template <class T>
Jet<T> exp(const Jet<T>& a) {
  using std::exp;
  Jet<T> e(T(0), a.order());
  e[0] = exp(a[0]);
  for (int k = 1; k <= a.order(); ++k) {
    T acc(0);
    for (int j = 1; j <= k; ++j) acc += T(j) * a[j] * e[k - j];
    e[k] = acc / T(k);
  }
  return e;
}

template <class T>
Jet<T> log(const Jet<T>& a) {
  using std::log;
  Jet<T> l(T(0), a.order());
  l[0] = log(a[0]);
  for (int k = 1; k <= a.order(); ++k) {
    T acc(0);
    for (int j = 1; j < k; ++j) acc += T(j) * l[j] * a[k - j];
    l[k] = (a[k] - acc / T(k)) / a[0];
  }
  return l;
}

template <class T>
struct SinCos {
  Jet<T> sin;
  Jet<T> cos;
};

template <class T>
SinCos<T> sincos(const Jet<T>& a) {
  using std::cos;
  using std::sin;
  SinCos<T> sc{Jet<T>(T(0), a.order()), Jet<T>(T(0), a.order())};
  sc.sin[0] = sin(a[0]);
  sc.cos[0] = cos(a[0]);
  for (int k = 1; k <= a.order(); ++k) {
    T s(0);
    T c(0);
    for (int j = 1; j <= k; ++j) {
      s += T(j) * a[j] * sc.cos[k - j];
      c -= T(j) * a[j] * sc.sin[k - j];
    }
    sc.sin[k] = s / T(k);
    sc.cos[k] = c / T(k);
  }
  return sc;
}

template <class T>
Jet<T> sin(const Jet<T>& a) {
  return sincos(a).sin;
}

template <class T>
Jet<T> cos(const Jet<T>& a) {
  return sincos(a).cos;
}

/// General power a^g with a jet exponent, through exp(g log a).
template <class T>
Jet<T> pow(const Jet<T>& a, const Jet<T>& g) {
  bool constant_exponent = true;
  for (int k = 1; k <= g.order(); ++k) constant_exponent = constant_exponent && g[k] == T(0);
  if (constant_exponent) return pow(a.truncated(g.order()), g[0]);
  return exp(g * log(a));
}

}  // namespace wkb
