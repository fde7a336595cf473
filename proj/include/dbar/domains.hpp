#pragma once

// Model convex domains given by polynomial defining functions in (z, zbar),
// with symbolic derivative tables, Euclidean boundary distance, and
// empirical line-type probes.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "dbar/jet.hpp"

namespace dbar {

constexpr int kMaxDim = 3;

template <class T>
using CVec = std::vector<Cx<T>>;  // point of C^n, scalar-generic

using CPoint = std::vector<std::complex<double>>;

inline CVec<double> to_cvec(const CPoint& z) {
  CVec<double> r(z.size());
  for (size_t i = 0; i < z.size(); ++i) r[i] = {z[i].real(), z[i].imag()};
  return r;
}
inline CPoint to_cpoint(const CVec<double>& z) {
  CPoint r(z.size());
  for (size_t i = 0; i < z.size(); ++i) r[i] = {z[i].re, z[i].im};
  return r;
}

// Mixed Wirtinger multi-index: holo[k] derivatives in z_k, anti[k] in zbar_k.
struct DerivIndex {
  std::array<uint8_t, kMaxDim> holo{}, anti{};
  int order() const {
    int s = 0;
    for (int i = 0; i < kMaxDim; ++i) s += holo[i] + anti[i];
    return s;
  }
  bool operator<(const DerivIndex& o) const {
    if (holo != o.holo) return holo < o.holo;
    return anti < o.anti;
  }
  static DerivIndex d_z(int k) {
    DerivIndex d;
    d.holo[k] = 1;
    return d;
  }
  static DerivIndex d_zbar(int k) {
    DerivIndex d;
    d.anti[k] = 1;
    return d;
  }
};

// Polynomial in z_1..z_n, zbar_1..zbar_n with complex coefficients.
struct ZPoly {
  struct Term {
    std::array<uint8_t, kMaxDim> a{}, b{};  // z exponents, zbar exponents
    std::complex<double> coef;
  };
  int n = 2;
  std::vector<Term> terms;

  ZPoly() = default;
  explicit ZPoly(int dim) : n(dim) {}

  void add_term(std::array<uint8_t, kMaxDim> a, std::array<uint8_t, kMaxDim> b,
                std::complex<double> coef) {
    terms.push_back({a, b, coef});
  }

  template <class T>
  Cx<T> eval(const CVec<T>& z) const {
    Cx<T> s(T(0.0));
    for (const auto& t : terms) {
      Cx<T> m(T(t.coef.real()), T(t.coef.imag()));
      for (int k = 0; k < n; ++k) {
        for (int i = 0; i < t.a[k]; ++i) m *= z[k];
        Cx<T> zb = conj(z[k]);
        for (int i = 0; i < t.b[k]; ++i) m *= zb;
      }
      s += m;
    }
    return s;
  }

  ZPoly derivative(const DerivIndex& d) const {
    ZPoly p = *this;
    for (int k = 0; k < n; ++k) {
      for (int i = 0; i < d.holo[k]; ++i) p = p.d_one(k, false);
      for (int i = 0; i < d.anti[k]; ++i) p = p.d_one(k, true);
    }
    return p;
  }

 private:
  ZPoly d_one(int k, bool bar) const {
    ZPoly r(n);
    for (const auto& t : terms) {
      auto e = bar ? t.b[k] : t.a[k];
      if (e == 0) continue;
      Term nt = t;
      nt.coef *= static_cast<double>(e);
      if (bar)
        nt.b[k]--;
      else
        nt.a[k]--;
      r.terms.push_back(nt);
    }
    return r;
  }
};

struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A domain {rho < 0} with exact symbolic partial derivatives of rho up to
// maxOrder, declared q-types, and a collar {|rho| < T1} around the boundary.
class DefiningDomain {
 public:
  int n = 2;
  int max_order = 8;
  std::vector<int> type_vector;  // (m_1, ..., m_n)
  double collar_width = 0.2;     // T1
  double inradius = 1.0;
  double bounding_radius = 2.0;  // all of {rho < T1} inside this |z|-ball
  std::string kind = "custom";
  double ball_radius = 1.0;  // meaningful for kind == "ball"

  explicit DefiningDomain(ZPoly rho) : rho_(std::move(rho)) { n = rho_.n; }

  template <class T>
  T rho(const CVec<T>& z) const {
    return rho_.eval(z).re;  // rho is real-valued; imaginary part cancels
  }

  const ZPoly& deriv_poly(const DerivIndex& d) const {
    if (d.order() > max_order) throw DomainError("derivative order exceeds maxOrder");
    auto it = cache_.find(d);
    if (it != cache_.end()) return it->second;
    return cache_.emplace(d, rho_.derivative(d)).first->second;
  }

  template <class T>
  Cx<T> rho_deriv(const CVec<T>& z, const DerivIndex& d) const {
    return deriv_poly(d).eval(z);
  }

  // Coefficient vector of dbar(rho): u_j = d rho / d zbar_j.
  template <class T>
  CVec<T> dbar_rho(const CVec<T>& z) const {
    CVec<T> g(n);
    for (int k = 0; k < n; ++k) g[k] = rho_deriv(z, DerivIndex::d_zbar(k));
    return g;
  }

  // Unit vector u with theta_1 = sum u_j dzetabar_j; errors on vanishing gradient.
  template <class T>
  CVec<T> unit_dbar_rho(const CVec<T>& z) const {
    CVec<T> g = dbar_rho(z);
    T n2(0.0);
    for (int k = 0; k < n; ++k) n2 += abs2(g[k]);
    if (value_of(n2) < 1e-24) throw DomainError("vanishing gradient");
    T inv = recip(sqrt(n2));
    for (int k = 0; k < n; ++k) g[k] = g[k] * Cx<T>(inv);
    return g;
  }

  // Real gradient (d/dx_k, d/dy_k) of rho as a 2n-vector.
  std::vector<double> real_grad(const CVec<double>& z) const {
    std::vector<double> g(2 * n);
    for (int k = 0; k < n; ++k) {
      CD dz = rho_deriv(z, DerivIndex::d_z(k));
      g[2 * k] = 2.0 * dz.re;
      g[2 * k + 1] = -2.0 * dz.im;
    }
    return g;
  }

  // Real 2n x 2n Hessian of rho from the Wirtinger second derivatives.
  std::vector<std::vector<double>> real_hessian(const CVec<double>& z) const {
    std::vector<std::vector<double>> H(2 * n, std::vector<double>(2 * n, 0.0));
    for (int k = 0; k < n; ++k)
      for (int l = 0; l < n; ++l) {
        DerivIndex dkl, dklbar;
        dkl.holo[k]++;
        dkl.holo[l]++;
        dklbar.holo[k]++;
        dklbar.anti[l]++;
        CD zz = rho_deriv(z, dkl);      // d2 rho / dz_k dz_l
        CD zzb = rho_deriv(z, dklbar);  // d2 rho / dz_k dzbar_l
        // x_k x_l: 2 Re(zz + zzb); x_k y_l: -2 Im(zz) + 2 Im(zzb) ... derive via
        // d/dx = d/dz + d/dzbar, d/dy = i(d/dz - d/dzbar) applied twice.
        H[2 * k][2 * l] += 2.0 * (zz.re + zzb.re);
        H[2 * k][2 * l + 1] += -2.0 * zz.im + 2.0 * zzb.im;
        H[2 * k + 1][2 * l] += -2.0 * zz.im - 2.0 * zzb.im;
        H[2 * k + 1][2 * l + 1] += -2.0 * zz.re + 2.0 * zzb.re;
      }
    return H;
  }

  bool in_domain(const CVec<double>& z) const { return rho(z) < 0.0; }
  bool in_collar(const CVec<double>& z) const { return std::abs(rho(z)) < collar_width; }
  bool in_outer_collar(const CVec<double>& z) const {
    double r = rho(z);
    return r > 0.0 && r < collar_width;
  }

  // Euclidean distance to {rho = 0}: gradient descent onto the level set,
  // then foot-point iteration along the boundary normal.  Iterations are
  // seeded from several boundary candidates and the smallest foot wins, so
  // deep interior points on the cut locus resolve to the nearest sheet.
  double dist_to_boundary(const CVec<double>& z, int max_iter = 60) const {
    if (kind == "ball") {
      double r = 0.0;
      for (int k = 0; k < n; ++k) r += abs2(z[k]);
      return std::abs(std::sqrt(r) - ball_radius);
    }
    double r0 = rho(z);
    if (r0 == 0.0) return 0.0;
    {
      auto g = real_grad(z);
      double gn = 0.0;
      for (double v : g) gn += v * v;
      gn = std::sqrt(gn);
      if (gn > 1e-8 && std::abs(r0) < 1e-12 * (1.0 + inradius)) return std::abs(r0) / gn;
    }

    // First positive/negative boundary crossing along a unit direction from z.
    auto crossing = [&](const std::vector<double>& nu) {
      auto line_rho = [&](double t) {
        CVec<double> q = z;
        for (int k = 0; k < n; ++k) {
          q[k].re += t * nu[2 * k];
          q[k].im += t * nu[2 * k + 1];
        }
        return rho(q);
      };
      double best = std::numeric_limits<double>::infinity();
      for (double dir : {1.0, -1.0}) {
        double lo = 0.0, hi = dir * 1e-3 * (1.0 + inradius);
        bool found = false;
        for (int grow = 0; grow < 60; ++grow) {
          if (line_rho(hi) * r0 < 0.0) {
            found = true;
            break;
          }
          lo = hi;
          hi *= 2.0;
          if (std::abs(hi) > 4.0 * bounding_radius) break;
        }
        if (!found) continue;
        // Invariant: rho has the sign of r0 at lo and the opposite at hi.
        for (int bis = 0; bis < 54; ++bis) {
          double mid = 0.5 * (lo + hi);
          (line_rho(mid) * r0 < 0.0 ? hi : lo) = mid;
          if (std::abs(hi - lo) < 1e-14 * (1.0 + std::abs(hi))) break;
        }
        double t = 0.5 * (lo + hi);
        if (std::abs(t) < std::abs(best)) best = t;
      }
      return best;
    };

    // Candidate foot seeds: the gradient-flow image of z and the axis bases.
    std::vector<CVec<double>> seeds;
    {
      CVec<double> p = z;
      for (int it = 0; it < max_iter; ++it) {
        double r = rho(p);
        if (std::abs(r) < 1e-13 * (1.0 + inradius)) break;
        auto g = real_grad(p);
        double g2 = 0.0;
        for (double v : g) g2 += v * v;
        if (g2 < 1e-28) throw DomainError("vanishing gradient in distance iteration");
        for (int k = 0; k < n; ++k) {
          p[k].re -= r * g[2 * k] / g2;
          p[k].im -= r * g[2 * k + 1] / g2;
        }
      }
      seeds.push_back(p);
      for (int k = 0; k < n; ++k) {
        CVec<double> dir(n);
        dir[k] = {1.0, 0.0};
        double rb = boundary_radius(dir);
        CVec<double> q(n);
        q[k] = {rb, 0.0};
        seeds.push_back(q);
      }
    }

    double best = std::numeric_limits<double>::infinity();
    for (auto p : seeds) {
      double d_prev = -1.0;
      for (int it = 0; it < max_iter; ++it) {
        auto g = real_grad(p);
        double gn = 0.0;
        for (double v : g) gn += v * v;
        gn = std::sqrt(gn);
        if (gn < 1e-14) break;
        std::vector<double> nu(2 * n);
        for (int k = 0; k < 2 * n; ++k) nu[k] = g[k] / gn;
        double t = crossing(nu);
        if (!std::isfinite(t)) break;
        for (int k = 0; k < n; ++k) {
          p[k].re = z[k].re + t * nu[2 * k];
          p[k].im = z[k].im + t * nu[2 * k + 1];
        }
        double d = std::abs(t);
        if (d_prev >= 0.0 && std::abs(d - d_prev) <= 1e-9 * (d + 1e-300)) {
          d_prev = d;
          break;
        }
        d_prev = d;
      }
      if (d_prev >= 0.0) best = std::min(best, d_prev);
    }
    if (!std::isfinite(best)) throw DomainError("distance iteration did not converge");
    return best;
  }

  // Signed distance: negative inside.
  double signed_dist(const CVec<double>& z) const {
    double d = dist_to_boundary(z);
    return rho(z) < 0.0 ? -d : d;
  }

  // Contact-order probe: slope of log dist(zeta + t v) against log t.
  // Returns the fitted order, or `cap` when the direction is flat beyond the
  // probe range.
  double probe_line_type(const CVec<double>& zeta, const CVec<double>& v, double cap = 16.0,
                         int j_min = 6, int j_max = 14) const {
    if (std::abs(rho(zeta)) > 1e-10) throw DomainError("probe point not on boundary");
    std::vector<double> lx, ly;
    for (int j = j_min; j <= j_max; ++j) {
      double t = std::ldexp(1.0, -j);
      CVec<double> p = zeta;
      for (int k = 0; k < n; ++k) {
        p[k].re += t * v[k].re;
        p[k].im += t * v[k].im;
      }
      double d = dist_to_boundary(p);
      // Contact orders beyond ~3 push the distance below double resolution
      // at the small probe scales; drop unresolvable samples from the fit.
      if (d < 1e-13 * inradius) continue;
      lx.push_back(std::log(t));
      ly.push_back(std::log(d));
    }
    if (lx.size() < 4) return cap;  // flat beyond the probe range
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = static_cast<int>(lx.size());
    for (int i = 0; i < m; ++i) {
      sx += lx[i];
      sy += ly[i];
      sxx += lx[i] * lx[i];
      sxy += lx[i] * ly[i];
    }
    double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    return std::min(slope, cap);
  }

  // Boundary crossing r > 0 along the ray r -> r * dir from the origin
  // (model domains are star-shaped about 0).  Newton iteration; on jet
  // scalars the derivative components converge superlinearly as well.
  template <class T>
  T boundary_radius(const CVec<T>& dir) const {
    T r(1.0);
    for (int it = 0; it < 60; ++it) {
      CVec<T> p(n);
      for (int k = 0; k < n; ++k) p[k] = dir[k] * Cx<T>(r);
      T val = rho(p);
      Cx<T> dr_c(T(0.0));
      for (int k = 0; k < n; ++k) dr_c += rho_deriv(p, DerivIndex::d_z(k)) * dir[k];
      T dr = dr_c.re * 2.0;
      r = r - val * recip(dr);
      if (it > 6 && std::abs(value_of(val)) < 1e-15) break;
    }
    return r;
  }

 private:
  ZPoly rho_;
  mutable std::map<DerivIndex, ZPoly> cache_;
};

inline DefiningDomain make_ball(int n = 2, double radius = 1.0, double T1 = -1.0) {
  ZPoly rho(n);
  for (int k = 0; k < n; ++k) {
    std::array<uint8_t, kMaxDim> a{}, b{};
    a[k] = 1;
    b[k] = 1;
    rho.add_term(a, b, 1.0);
  }
  rho.add_term({}, {}, -radius * radius);
  DefiningDomain d(std::move(rho));
  d.kind = "ball";
  d.ball_radius = radius;
  d.inradius = radius;
  d.bounding_radius = 1.5 * radius;
  d.collar_width = (T1 > 0) ? T1 : 0.2 * radius;
  d.type_vector.assign(n, 2);
  d.type_vector[n - 1] = 1;
  return d;
}

// rho = |z_1|^2 + |z_2|^(2m) - 1; declared type vector (2m, 1).
inline DefiningDomain make_ellipsoid(int m, double T1 = -1.0) {
  ZPoly rho(2);
  rho.add_term({1, 0, 0}, {1, 0, 0}, 1.0);
  std::array<uint8_t, kMaxDim> a{}, b{};
  a[1] = static_cast<uint8_t>(m);
  b[1] = static_cast<uint8_t>(m);
  rho.add_term(a, b, 1.0);
  rho.add_term({}, {}, -1.0);
  DefiningDomain d(std::move(rho));
  d.kind = "ellipsoid";
  d.inradius = 1.0;
  d.bounding_radius = 1.6;
  d.collar_width = (T1 > 0) ? T1 : 0.2;
  d.type_vector = {2 * m, 1};
  return d;
}

inline DefiningDomain make_custom(ZPoly rho, std::vector<int> types, double inradius,
                                  double T1) {
  DefiningDomain d(std::move(rho));
  d.kind = "custom";
  d.type_vector = std::move(types);
  d.inradius = inradius;
  d.collar_width = T1;
  d.bounding_radius = 3.0 * inradius;
  return d;
}

}  // namespace dbar
