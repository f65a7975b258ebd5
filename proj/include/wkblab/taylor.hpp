#pragma once

#include <array>
#include <cmath>

namespace wkblab {

// Truncated Taylor series c0 + c1 e + ... + cN e^N, used to get exact
// derivatives of the one-variable cutoffs.
template <int N>
struct Taylor {
  std::array<double, N + 1> c{};

  static Taylor variable(double x0) {
    Taylor r;
    r.c[0] = x0;
    if constexpr (N >= 1) r.c[1] = 1.0;
    return r;
  }
  static Taylor constant(double v) {
    Taylor r;
    r.c[0] = v;
    return r;
  }

  // k-th derivative at the expansion point.
  double derivative(int k) const {
    double f = 1.0;
    for (int i = 2; i <= k; ++i) f *= i;
    return c[k] * f;
  }

  Taylor& operator+=(const Taylor& o) {
    for (int i = 0; i <= N; ++i) c[i] += o.c[i];
    return *this;
  }
  Taylor& operator-=(const Taylor& o) {
    for (int i = 0; i <= N; ++i) c[i] -= o.c[i];
    return *this;
  }
  Taylor& operator*=(double s) {
    for (auto& v : c) v *= s;
    return *this;
  }
};

template <int N>
Taylor<N> operator+(Taylor<N> a, const Taylor<N>& b) { return a += b; }
template <int N>
Taylor<N> operator-(Taylor<N> a, const Taylor<N>& b) { return a -= b; }
template <int N>
Taylor<N> operator*(Taylor<N> a, double s) { return a *= s; }
template <int N>
Taylor<N> operator*(double s, Taylor<N> a) { return a *= s; }
template <int N>
Taylor<N> operator+(Taylor<N> a, double s) { a.c[0] += s; return a; }
template <int N>
Taylor<N> operator-(double s, Taylor<N> a) {
  for (auto& v : a.c) v = -v;
  a.c[0] += s;
  return a;
}

template <int N>
Taylor<N> operator*(const Taylor<N>& a, const Taylor<N>& b) {
  Taylor<N> r;
  for (int i = 0; i <= N; ++i)
    for (int j = 0; i + j <= N; ++j) r.c[i + j] += a.c[i] * b.c[j];
  return r;
}

template <int N>
Taylor<N> reciprocal(const Taylor<N>& a) {
  Taylor<N> r;
  r.c[0] = 1.0 / a.c[0];
  for (int k = 1; k <= N; ++k) {
    double s = 0.0;
    for (int j = 1; j <= k; ++j) s += a.c[j] * r.c[k - j];
    r.c[k] = -s * r.c[0];
  }
  return r;
}

template <int N>
Taylor<N> operator/(const Taylor<N>& a, const Taylor<N>& b) {
  return a * reciprocal(b);
}

template <int N>
Taylor<N> exp(const Taylor<N>& a) {
  // r' = a' r
  Taylor<N> r;
  r.c[0] = std::exp(a.c[0]);
  for (int k = 1; k <= N; ++k) {
    double s = 0.0;
    for (int j = 1; j <= k; ++j) s += j * a.c[j] * r.c[k - j];
    r.c[k] = s / k;
  }
  return r;
}

template <int N>
Taylor<N> sqrt(const Taylor<N>& a) {
  Taylor<N> r;
  r.c[0] = std::sqrt(a.c[0]);
  for (int k = 1; k <= N; ++k) {
    double s = a.c[k];
    for (int j = 1; j < k; ++j) s -= r.c[j] * r.c[k - j];
    r.c[k] = s / (2.0 * r.c[0]);
  }
  return r;
}

}  // namespace wkblab
