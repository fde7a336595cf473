#pragma once

// Exterior algebra of complex differential forms on C^n in the variables
// (z, zbar, zeta, zetabar), with coefficients in a generic complex scalar.
// Basis covectors are tracked as bitmasks; only canonically ordered wedge
// monomials are stored, with signs absorbed into the coefficients.
//
// Integration convention for mixed-variable forms: when integrating in the
// zeta variable, the dzeta/dzetabar part of each monomial is moved in front
// of any dz/dzbar factors (picking up the reordering sign) and then paired
// with Lebesgue measure; the z-part is carried along unchanged.

#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <vector>

#include "dbar/jet.hpp"

namespace dbar {

enum VarGroup : int { DZ = 0, DZBAR = 1, DZETA = 2, DZETABAR = 3 };

namespace formdet {
inline int slot(VarGroup g, int j) { return 8 * static_cast<int>(g) + j; }
inline uint32_t bit(VarGroup g, int j) { return 1u << slot(g, j); }
inline int popcount(uint32_t x) { return __builtin_popcount(x); }
// Parity of the permutation that merges monomial b into monomial a.
inline int merge_sign(uint32_t a, uint32_t b) {
  int par = 0;
  uint32_t rest = b;
  while (rest) {
    int p = __builtin_ctz(rest);
    rest &= rest - 1;
    par += popcount(a >> (p + 1));
  }
  return (par & 1) ? -1 : 1;
}
inline bool is_zero(const CD& z) { return z.re == 0.0 && z.im == 0.0; }
template <int N, int ORD>
bool is_zero(const Cx<Jet<N, ORD>>& z) {
  for (double v : z.re.c)
    if (v != 0.0) return false;
  for (double v : z.im.c)
    if (v != 0.0) return false;
  return true;
}
}  // namespace formdet

// Ordered index tuple (1-based entries, strictly increasing).
struct MultiIndex {
  std::vector<int> entries;
  explicit MultiIndex(std::vector<int> e = {}) : entries(std::move(e)) {
    for (size_t i = 0; i + 1 < entries.size(); ++i)
      if (entries[i] >= entries[i + 1])
        throw std::invalid_argument("MultiIndex entries must strictly increase");
  }
  uint32_t mask(VarGroup g) const {
    uint32_t m = 0;
    for (int e : entries) m |= formdet::bit(g, e - 1);
    return m;
  }
};

struct Degrees {
  int z = 0, zbar = 0, zeta = 0, zetabar = 0;
  bool operator==(const Degrees&) const = default;
};

template <class CT>
struct Form {
  int n = 2;
  std::map<uint32_t, CT> c;

  Form() = default;
  explicit Form(int dim) : n(dim) {}

  static Form scalar(int dim, CT v) {
    Form f(dim);
    f.c[0] = v;
    f.prune();
    return f;
  }
  static Form covector(int dim, VarGroup g, int j, CT v = CT(1.0)) {
    Form f(dim);
    f.c[formdet::bit(g, j)] = v;
    f.prune();
    return f;
  }

  bool empty() const { return c.empty(); }
  void prune() {
    for (auto it = c.begin(); it != c.end();)
      it = formdet::is_zero(it->second) ? c.erase(it) : std::next(it);
  }

  static Degrees degrees_of(uint32_t k) {
    using formdet::popcount;
    return {popcount(k & 0xffu), popcount((k >> 8) & 0xffu), popcount((k >> 16) & 0xffu),
            popcount((k >> 24) & 0xffu)};
  }
  // Degree record of a homogeneous form; throws on mixed content.
  Degrees degrees() const {
    if (c.empty()) return {};
    Degrees d = degrees_of(c.begin()->first);
    for (const auto& [k, v] : c)
      if (!(degrees_of(k) == d)) throw std::logic_error("inhomogeneous form");
    return d;
  }
  bool is_homogeneous() const {
    if (c.empty()) return true;
    Degrees d = degrees_of(c.begin()->first);
    for (const auto& [k, v] : c)
      if (!(degrees_of(k) == d)) return false;
    return true;
  }

  Form& operator+=(const Form& o) {
    check_dim(o);
    for (const auto& [k, v] : o.c) {
      auto it = c.find(k);
      if (it == c.end())
        c[k] = v;
      else
        it->second += v;
    }
    prune();
    return *this;
  }
  friend Form operator+(Form a, const Form& b) { return a += b; }
  friend Form operator-(Form a, const Form& b) { return a += b * CT(-1.0); }
  friend Form operator*(const Form& a, const CT& s) {
    Form r(a.n);
    for (const auto& [k, v] : a.c) r.c[k] = v * s;
    r.prune();
    return r;
  }
  friend Form operator*(const CT& s, const Form& a) { return a * s; }

  void check_dim(const Form& o) const {
    if (n != o.n) throw std::invalid_argument("form dimension mismatch");
  }

  double max_abs() const {
    double m = 0.0;
    for (const auto& [k, v] : c) m = std::max(m, abs_val(v));
    return m;
  }
};

template <class CT>
Form<CT> wedge(const Form<CT>& a, const Form<CT>& b) {
  a.check_dim(b);
  Form<CT> r(a.n);
  for (const auto& [ka, va] : a.c)
    for (const auto& [kb, vb] : b.c) {
      if (ka & kb) continue;  // repeated covector
      int s = formdet::merge_sign(ka, kb);
      CT term = va * vb;
      if (s < 0) term = -term;
      auto it = r.c.find(ka | kb);
      if (it == r.c.end())
        r.c[ka | kb] = term;
      else
        it->second += term;
    }
  r.prune();
  return r;
}

template <class CT>
Form<CT> wedge_pow(const Form<CT>& a, int p) {
  Form<CT> r = Form<CT>::scalar(a.n, CT(1.0));
  for (int i = 0; i < p; ++i) r = wedge(r, a);
  return r;
}

// Interior product with the dual vector of the basis covector (g, j).
template <class CT>
Form<CT> contract_basis(const Form<CT>& f, VarGroup g, int j) {
  Form<CT> r(f.n);
  const int s = formdet::slot(g, j);
  const uint32_t b = 1u << s;
  for (const auto& [k, v] : f.c) {
    if (!(k & b)) continue;
    int sign = (formdet::popcount(k & (b - 1)) & 1) ? -1 : 1;
    r.c[k & ~b] = sign > 0 ? v : -v;
  }
  r.prune();
  return r;
}

// Interior product with a (0,1)-vector field; vf[j] pairs with covector j of
// the group.  contract(v, theta ^ g) = <v,theta> g - theta ^ contract(v, g).
template <class CT>
Form<CT> contract(const std::vector<CT>& vf, const Form<CT>& f, VarGroup g) {
  Form<CT> r(f.n);
  for (int j = 0; j < f.n; ++j) r += contract_basis(f, g, j) * vf[j];
  return r;
}

// Vertical projection in the antiholomorphic slots of the given group.
// u must be the unit coefficient vector of the defining gradient covector
// theta = sum_j u_j dbar_j; the projection is theta ^ i_{dual(theta)} f and
// depends only on u, not on any completion of it to a frame.
template <class CT>
Form<CT> project_vertical(const Form<CT>& f, const std::vector<CT>& u, VarGroup g) {
  Form<CT> theta(f.n);
  std::vector<CT> dual(f.n);
  for (int j = 0; j < f.n; ++j) {
    theta.c[formdet::bit(g, j)] = u[j];
    dual[j] = conj(u[j]);
  }
  theta.prune();
  return wedge(theta, contract(dual, f, g));
}

template <class CT>
Form<CT> project_tangential(const Form<CT>& f, const std::vector<CT>& u, VarGroup g) {
  return f - project_vertical(f, u, g);
}

// Linear substitution of the covectors of one group: e_{g,j} -> sum_i A[i][j] e'_{g,i}.
// Used to express forms in a rotated frame (testing aid).
template <class CT>
Form<CT> substitute_covectors(const Form<CT>& f, VarGroup g,
                              const std::vector<std::vector<CT>>& A) {
  Form<CT> r(f.n);
  for (const auto& [k, v] : f.c) {
    Form<CT> acc = Form<CT>::scalar(f.n, v);
    uint32_t rest = k;
    // Peel slots in ascending canonical order so no extra signs appear.
    while (rest) {
      int p = __builtin_ctz(rest);
      rest &= rest - 1;
      int grp = p / 8, j = p % 8;
      Form<CT> lin(f.n);
      if (grp == static_cast<int>(g)) {
        for (int i = 0; i < f.n; ++i) lin.c[formdet::bit(g, i)] = A[i][j];
        lin.prune();
      } else {
        lin.c[1u << p] = CT(1.0);
      }
      acc = wedge(acc, lin);
    }
    r += acc;
  }
  return r;
}

// Select the component of given zbar-degree (the "(0,q) in z" grading).
template <class CT>
Form<CT> component_zbar_degree(const Form<CT>& f, int q) {
  Form<CT> r(f.n);
  for (const auto& [k, v] : f.c)
    if (Form<CT>::degrees_of(k).zbar == q) r.c[k] = v;
  return r;
}

// dzeta_{1..n} ^ dzetabar_{1..n} = vol_const(n) * dLebesgue.
inline CD vol_const(int n) {
  CD c{1.0, 0.0};
  for (int i = 0; i < n; ++i) c = c * CD{0.0, -2.0};  // (-2i)^n
  if ((n * (n - 1) / 2) % 2) c = -c;
  return c;
}

// Integrand extraction for integration in zeta: returns the z-part form
// whose coefficients multiply Lebesgue measure.  Monomials that do not carry
// the full dzeta^n ^ dzetabar^n volume factor integrate to zero.
template <class CT>
Form<CT> zeta_volume_part(const Form<CT>& f) {
  const uint32_t zeta_full = ((1u << f.n) - 1) << 16;
  const uint32_t zetabar_full = ((1u << f.n) - 1) << 24;
  CD vc = vol_const(f.n);
  Form<CT> r(f.n);
  for (const auto& [k, v] : f.c) {
    if ((k & zeta_full) != zeta_full || (k & zetabar_full) != zetabar_full) continue;
    uint32_t zpart = k & 0xffffu;
    // Move the zeta-block in front of the z-block.
    int a = formdet::popcount(zpart);
    int b = 2 * f.n;
    int sign = ((a * b) & 1) ? -1 : 1;
    CT term = v * CT(vc.re, vc.im);
    if (sign < 0) term = -term;
    auto it = r.c.find(zpart);
    if (it == r.c.end())
      r.c[zpart] = term;
    else
      it->second += term;
  }
  r.prune();
  return r;
}

template <class CT>
double form_distance(const Form<CT>& a, const Form<CT>& b) {
  double m = 0.0;
  Form<CT> d = a - b;
  for (const auto& [k, v] : d.c) m = std::max(m, abs_val(v));
  return m;
}

}  // namespace dbar
