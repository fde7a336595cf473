#pragma once

// Truncated multivariate Taylor arithmetic ("jets") over N real variables up
// to total order ORD, plus a complex wrapper that works for both plain
// doubles and jets.  Evaluating a numeric routine on jet scalars yields the
// exact partial derivatives of its output, which is how kernel derivatives
// are computed without finite-difference steps near singularities.

#include <array>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <type_traits>
#include <vector>

namespace dbar {

namespace detail {

// Monomial basis of polynomials of total degree <= ORD in N variables,
// graded-lex ordered, with a precomputed sparse multiplication table.
template <int N, int ORD>
struct JetTables {
  struct Triple {
    int i, j, k;
  };
  std::vector<std::array<uint8_t, N>> mono;
  std::vector<Triple> table;  // i <= j, deg_i + deg_j <= ORD
  std::array<int, N> var_index{};

  static const JetTables& instance() {
    static JetTables t;
    return t;
  }

  int index_of(const std::array<uint8_t, N>& m) const {
    for (size_t i = 0; i < mono.size(); ++i)
      if (mono[i] == m) return static_cast<int>(i);
    return -1;
  }

 private:
  JetTables() {
    std::array<uint8_t, N> cur{};
    for (int d = 0; d <= ORD; ++d) emit(cur, 0, d);
    for (int v = 0; v < N; ++v) {
      std::array<uint8_t, N> e{};
      e[v] = 1;
      var_index[v] = index_of(e);
    }
    const int M = static_cast<int>(mono.size());
    for (int i = 0; i < M; ++i)
      for (int j = i; j < M; ++j) {
        int d = 0;
        std::array<uint8_t, N> s{};
        bool ok = true;
        for (int v = 0; v < N; ++v) {
          s[v] = static_cast<uint8_t>(mono[i][v] + mono[j][v]);
          d += s[v];
          if (d > ORD) {
            ok = false;
            break;
          }
        }
        if (ok) table.push_back({i, j, index_of(s)});
      }
  }
  void emit(std::array<uint8_t, N>& cur, int pos, int rem) {
    if (pos == N - 1) {
      cur[pos] = static_cast<uint8_t>(rem);
      mono.push_back(cur);
      cur[pos] = 0;
      return;
    }
    for (int k = rem; k >= 0; --k) {
      cur[pos] = static_cast<uint8_t>(k);
      emit(cur, pos + 1, rem - k);
    }
    cur[pos] = 0;
  }
};

constexpr int binom(int n, int k) {
  long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return static_cast<int>(r);
}

}  // namespace detail

template <int N, int ORD>
struct Jet {
  static constexpr int size = detail::binom(N + ORD, ORD);
  std::array<double, size> c{};

  Jet() = default;
  Jet(double v) { c[0] = v; }  // NOLINT: implicit by design

  static Jet variable(int v, double x0) {
    Jet r(x0);
    r.c[tables().var_index[v]] = 1.0;
    return r;
  }

  double value() const { return c[0]; }

  // Coefficient-to-derivative conversion: d^m f = c_m * m!.
  double deriv(const std::array<uint8_t, N>& m) const {
    int idx = tables().index_of(m);
    if (idx < 0) return 0.0;
    double fact = 1.0;
    for (int v = 0; v < N; ++v)
      for (int i = 2; i <= m[v]; ++i) fact *= i;
    return c[idx] * fact;
  }
  double d1(int v) const { return c[tables().var_index[v]]; }

  // Formal derivative as a jet; coefficients of top degree are dropped, so
  // the result is valid only up to order ORD-1.
  Jet derive(int v) const {
    const auto& T = tables();
    Jet r;
    for (int i = 0; i < size; ++i) {
      if (c[i] == 0.0) continue;
      auto m = T.mono[i];
      if (m[v] == 0) continue;
      double k = m[v];
      m[v]--;
      r.c[T.index_of(m)] += k * c[i];
    }
    return r;
  }

  Jet operator-() const {
    Jet r;
    for (int i = 0; i < size; ++i) r.c[i] = -c[i];
    return r;
  }
  Jet& operator+=(const Jet& o) {
    for (int i = 0; i < size; ++i) c[i] += o.c[i];
    return *this;
  }
  Jet& operator-=(const Jet& o) {
    for (int i = 0; i < size; ++i) c[i] -= o.c[i];
    return *this;
  }
  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator*(const Jet& a, const Jet& b) {
    Jet r;
    for (const auto& t : tables().table) {
      double s = a.c[t.i] * b.c[t.j];
      if (t.i != t.j) s += a.c[t.j] * b.c[t.i];
      r.c[t.k] += s;
    }
    return r;
  }
  Jet& operator*=(const Jet& o) { return *this = *this * o; }
  friend Jet operator*(Jet a, double s) {
    for (int i = 0; i < Jet::size; ++i) a.c[i] *= s;
    return a;
  }
  friend Jet operator*(double s, Jet a) { return a * s; }
  friend Jet operator/(const Jet& a, const Jet& b) { return a * recip(b); }
  friend Jet operator/(Jet a, double s) { return a * (1.0 / s); }

  // Nilpotent part e = f - f(0); series in e terminate at order ORD.
  friend Jet recip(const Jet& f) {
    double a = f.c[0];
    Jet e = f;
    e.c[0] = 0.0;
    e = e * (1.0 / a);
    Jet r(1.0), p(1.0);
    double sign = -1.0;
    for (int k = 1; k <= ORD; ++k) {
      p = p * e;
      r += p * sign;
      sign = -sign;
    }
    return r * (1.0 / a);
  }
  friend Jet sqrt(const Jet& f) {
    double a = f.c[0];
    assert(a > 0.0);
    Jet e = f;
    e.c[0] = 0.0;
    e = e * (1.0 / a);
    Jet r(1.0), p(1.0);
    double coef = 1.0, half = 0.5;
    for (int k = 1; k <= ORD; ++k) {
      coef *= (half - (k - 1)) / k;
      p = p * e;
      r += p * coef;
    }
    return r * std::sqrt(a);
  }
  friend Jet exp(const Jet& f) {
    Jet e = f;
    e.c[0] = 0.0;
    Jet r(1.0), p(1.0);
    double fact = 1.0;
    for (int k = 1; k <= ORD; ++k) {
      fact /= k;
      p = p * e;
      r += p * fact;
    }
    return r * std::exp(f.c[0]);
  }

  static const detail::JetTables<N, ORD>& tables() {
    return detail::JetTables<N, ORD>::instance();
  }
};

// Scalar fallbacks so the same generic code instantiates on double.
inline double recip(double x) { return 1.0 / x; }
inline double value_of(double x) { return x; }
template <int N, int ORD>
double value_of(const Jet<N, ORD>& j) {
  return j.value();
}

// Complex numbers over a generic real scalar (double or Jet).  std::complex
// is only specified for builtin floating types, hence this small wrapper.
template <class T>
struct Cx {
  T re{}, im{};
  Cx() = default;
  Cx(T r) : re(r) {}  // NOLINT
  Cx(T r, T i) : re(r), im(i) {}
  template <class U = T, class = std::enable_if_t<!std::is_same_v<U, double>>>
  Cx(double r) : re(T(r)) {}  // NOLINT

  friend Cx operator+(const Cx& a, const Cx& b) { return {a.re + b.re, a.im + b.im}; }
  friend Cx operator-(const Cx& a, const Cx& b) { return {a.re - b.re, a.im - b.im}; }
  Cx operator-() const { return {-re, -im}; }
  friend Cx operator*(const Cx& a, const Cx& b) {
    return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
  }
  friend Cx operator*(const Cx& a, double s) { return {a.re * s, a.im * s}; }
  friend Cx operator*(double s, const Cx& a) { return a * s; }
  friend Cx operator/(const Cx& a, const Cx& b) {
    T inv = recip(b.re * b.re + b.im * b.im);
    return {(a.re * b.re + a.im * b.im) * inv, (a.im * b.re - a.re * b.im) * inv};
  }
  friend Cx operator/(const Cx& a, double s) { return {a.re * (1.0 / s), a.im * (1.0 / s)}; }
  Cx& operator+=(const Cx& o) { return *this = *this + o; }
  Cx& operator-=(const Cx& o) { return *this = *this - o; }
  Cx& operator*=(const Cx& o) { return *this = *this * o; }

  friend Cx conj(const Cx& a) { return {a.re, -a.im}; }
  friend T abs2(const Cx& a) { return a.re * a.re + a.im * a.im; }
};

using CD = Cx<double>;

inline double abs_val(const CD& z) { return std::hypot(z.re, z.im); }
template <int N, int ORD>
double abs_val(const Cx<Jet<N, ORD>>& z) {
  return std::hypot(z.re.value(), z.im.value());
}
inline CD value_of(const CD& z) { return z; }
template <int N, int ORD>
CD value_of(const Cx<Jet<N, ORD>>& z) {
  return {z.re.value(), z.im.value()};
}

}  // namespace dbar
