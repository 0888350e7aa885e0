#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace rigidcal {

/// Truncated Taylor series in one variable: c[k] = f^(k)(t0) / k!.
/// Arithmetic propagates exact derivatives up to order N-1.
template <std::size_t N>
struct Taylor {
  std::array<double, N> c{};

  Taylor() = default;
  Taylor(double value) { c[0] = value; }  // NOLINT(google-explicit-constructor)

  /// The independent variable at t0.
  static Taylor variable(double t0) {
    Taylor t(t0);
    if constexpr (N > 1) {
      t.c[1] = 1.0;
    }
    return t;
  }

  [[nodiscard]] double value() const { return c[0]; }
  /// k-th derivative.
  [[nodiscard]] double derivative(std::size_t k) const {
    double f = 1.0;
    for (std::size_t i = 2; i <= k; ++i) {
      f *= static_cast<double>(i);
    }
    return c[k] * f;
  }

  Taylor& operator+=(const Taylor& o) {
    for (std::size_t k = 0; k < N; ++k) c[k] += o.c[k];
    return *this;
  }
  Taylor& operator-=(const Taylor& o) {
    for (std::size_t k = 0; k < N; ++k) c[k] -= o.c[k];
    return *this;
  }
  Taylor& operator*=(double s) {
    for (double& v : c) v *= s;
    return *this;
  }
};

template <std::size_t N>
Taylor<N> operator+(Taylor<N> a, const Taylor<N>& b) { return a += b; }
template <std::size_t N>
Taylor<N> operator-(Taylor<N> a, const Taylor<N>& b) { return a -= b; }
template <std::size_t N>
Taylor<N> operator-(Taylor<N> a) { return a *= -1.0; }
template <std::size_t N>
Taylor<N> operator*(Taylor<N> a, double s) { return a *= s; }
template <std::size_t N>
Taylor<N> operator*(double s, Taylor<N> a) { return a *= s; }

template <std::size_t N>
Taylor<N> operator*(const Taylor<N>& a, const Taylor<N>& b) {
  Taylor<N> out;
  for (std::size_t k = 0; k < N; ++k) {
    for (std::size_t j = 0; j <= k; ++j) {
      out.c[k] += a.c[j] * b.c[k - j];
    }
  }
  return out;
}

template <std::size_t N>
Taylor<N> operator/(const Taylor<N>& a, const Taylor<N>& b) {
  Taylor<N> q;
  for (std::size_t k = 0; k < N; ++k) {
    double s = a.c[k];
    for (std::size_t j = 1; j <= k; ++j) {
      s -= b.c[j] * q.c[k - j];
    }
    q.c[k] = s / b.c[0];
  }
  return q;
}

/// sin and cos together via s' = c x', c' = -s x'.
template <std::size_t N>
void sincos(const Taylor<N>& x, Taylor<N>& s, Taylor<N>& co) {
  s = Taylor<N>();
  co = Taylor<N>();
  s.c[0] = std::sin(x.c[0]);
  co.c[0] = std::cos(x.c[0]);
  for (std::size_t k = 1; k < N; ++k) {
    double ss = 0.0, cc = 0.0;
    for (std::size_t j = 1; j <= k; ++j) {
      const double jx = static_cast<double>(j) * x.c[j];
      ss += jx * co.c[k - j];
      cc -= jx * s.c[k - j];
    }
    s.c[k] = ss / static_cast<double>(k);
    co.c[k] = cc / static_cast<double>(k);
  }
}

template <std::size_t N>
Taylor<N> sin(const Taylor<N>& x) {
  Taylor<N> s, c;
  sincos(x, s, c);
  return s;
}

template <std::size_t N>
Taylor<N> cos(const Taylor<N>& x) {
  Taylor<N> s, c;
  sincos(x, s, c);
  return c;
}

/// Derivative series d/dt, one order shorter in content (top coefficient becomes 0).
template <std::size_t N>
Taylor<N> differentiate(const Taylor<N>& x) {
  Taylor<N> d;
  for (std::size_t k = 0; k + 1 < N; ++k) {
    d.c[k] = static_cast<double>(k + 1) * x.c[k + 1];
  }
  return d;
}

/// atan2(y, x), integrating theta' = (x y' - y x') / (x^2 + y^2).
template <std::size_t N>
Taylor<N> atan2(const Taylor<N>& y, const Taylor<N>& x) {
  const Taylor<N> rate = (x * differentiate(y) - y * differentiate(x)) / (x * x + y * y);
  Taylor<N> th;
  th.c[0] = std::atan2(y.c[0], x.c[0]);
  for (std::size_t k = 1; k < N; ++k) {
    th.c[k] = rate.c[k - 1] / static_cast<double>(k);
  }
  return th;
}

}  // namespace rigidcal
