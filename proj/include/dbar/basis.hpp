#pragma once

// Minimal bases at a boundary scale: directional radii tau(zeta, v, eps),
// the recursive basis construction, and the anisotropic polydisc ellipsoids
// P_eps(zeta) with sampling, gauge, and covering/engulfing reports.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "dbar/domains.hpp"
#include "dbar/rng.hpp"

namespace dbar {

namespace basisdet {

inline CVec<double> axpy(const CVec<double>& zeta, std::complex<double> lam,
                         const CVec<double>& v) {
  CVec<double> p = zeta;
  for (size_t k = 0; k < p.size(); ++k) {
    p[k].re += lam.real() * v[k].re - lam.imag() * v[k].im;
    p[k].im += lam.real() * v[k].im + lam.imag() * v[k].re;
  }
  return p;
}

inline double max_abs_delta_on_circle(const DefiningDomain& dom, const CVec<double>& zeta,
                                      const CVec<double>& v, double c, int angles = 64) {
  double rho0 = dom.rho(zeta);
  double m = 0.0;
  for (int i = 0; i < angles; ++i) {
    double th = 2.0 * M_PI * i / angles;
    double d = std::abs(dom.rho(axpy(zeta, std::polar(c, th), v)) - rho0);
    m = std::max(m, d);
  }
  return m;
}

// Smallest r > 0 with rho(zeta + r e^{i th} v) = rho(zeta) + eps.  The
// restriction of a convex rho to a ray is convex, so the crossing is unique.
// Bisection bracket followed by Newton steps with the exact ray derivative.
inline double ray_crossing(const DefiningDomain& dom, const CVec<double>& zeta,
                           const CVec<double>& v, double th, double eps, double r_cap) {
  double rho0 = dom.rho(zeta);
  auto delta = [&](double r) {
    return dom.rho(axpy(zeta, std::polar(r, th), v)) - rho0;
  };
  auto ddelta = [&](double r) {
    auto p = axpy(zeta, std::polar(r, th), v);
    std::complex<double> s = 0.0;
    for (int k = 0; k < dom.n; ++k) {
      auto d = dom.rho_deriv(p, DerivIndex::d_z(k));
      s += std::complex<double>(d.re, d.im) * std::complex<double>(v[k].re, v[k].im);
    }
    return 2.0 * (std::polar(1.0, th) * s).real();
  };
  double lo = 0.0, hi = eps;  // initial guess scale
  int guard = 0;
  while (delta(hi) < eps) {
    lo = hi;
    hi *= 2.0;
    if (hi > r_cap || ++guard > 60) return std::numeric_limits<double>::infinity();
  }
  for (int it = 0; it < 40; ++it) {
    double mid = 0.5 * (lo + hi);
    (delta(mid) < eps ? lo : hi) = mid;
    if (hi - lo < 1e-6 * hi) break;
  }
  double t = 0.5 * (lo + hi);
  for (int it = 0; it < 4; ++it) {
    double dd = ddelta(t);
    if (std::abs(dd) < 1e-30) break;
    double step = (delta(t) - eps) / dd;
    double tn = t - step;
    if (tn > lo && tn < hi) t = tn;
    if (std::abs(step) < 1e-15 * t) break;
  }
  return t;
}

}  // namespace basisdet

// Largest c such that |rho(zeta + lambda v) - rho(zeta)| <= eps for all
// |lambda| <= c.  Monotone bisection on c with dense angular sampling.
inline double tau_radius(const DefiningDomain& dom, const CVec<double>& zeta,
                         const CVec<double>& v, double eps, int angles = 64) {
  using basisdet::max_abs_delta_on_circle;
  double cap = 8.0 * dom.bounding_radius;
  double hi = std::min(1e-3, cap), lo = 0.0;
  while (max_abs_delta_on_circle(dom, zeta, v, hi, angles) < eps) {
    lo = hi;
    hi *= 2.0;
    if (hi > cap) throw DomainError("tau: eps exceeds collar budget");
  }
  for (int it = 0; it < 40; ++it) {
    double mid = 0.5 * (lo + hi);
    (max_abs_delta_on_circle(dom, zeta, v, mid, angles) <= eps ? lo : hi) = mid;
    if (hi - lo < 1e-4 * lo && lo > 0.0) break;
  }
  return 0.5 * (lo + hi);
}

// Distance from zeta to {rho = rho(zeta) + eps} within the complex line
// zeta + C v.  Minimum over rays, coarse angular scan plus golden refine.
inline double dist_to_level_on_line(const DefiningDomain& dom, const CVec<double>& zeta,
                                    const CVec<double>& v, double eps, int coarse = 16) {
  double cap = 8.0 * dom.bounding_radius;
  double best = std::numeric_limits<double>::infinity();
  double best_th = 0.0;
  for (int i = 0; i < coarse; ++i) {
    double th = 2.0 * M_PI * i / coarse;
    double r = basisdet::ray_crossing(dom, zeta, v, th, eps, cap);
    if (r < best) {
      best = r;
      best_th = th;
    }
  }
  double span = 2.0 * M_PI / coarse;
  double a = best_th - span, b = best_th + span;
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
  double f1 = basisdet::ray_crossing(dom, zeta, v, x1, eps, cap);
  double f2 = basisdet::ray_crossing(dom, zeta, v, x2, eps, cap);
  for (int it = 0; it < 24; ++it) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - gr * (b - a);
      f1 = basisdet::ray_crossing(dom, zeta, v, x1, eps, cap);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (b - a);
      f2 = basisdet::ray_crossing(dom, zeta, v, x2, eps, cap);
    }
  }
  return std::min(best, std::min(f1, f2));
}

struct BasisResult {
  CVec<double> zeta;
  double eps = 0.0;
  std::vector<CVec<double>> vectors;  // v_1..v_n, orthonormal
  std::vector<double> taus;           // tau_1..tau_n
  std::vector<double> objectives;     // attained level-set distances
  bool converged = true;
  int multiplicity = 1;  // distinct optimizer minima within tolerance
};

namespace basisdet {

inline std::complex<double> cdot(const CVec<double>& a, const CVec<double>& b) {
  // Hermitian inner product <a,b> = sum a_k conj(b_k)
  std::complex<double> s = 0.0;
  for (size_t k = 0; k < a.size(); ++k)
    s += std::complex<double>(a[k].re, a[k].im) * std::complex<double>(b[k].re, -b[k].im);
  return s;
}

inline void normalize(CVec<double>& v) {
  double n2 = 0.0;
  for (auto& c : v) n2 += abs2(c);
  double inv = 1.0 / std::sqrt(n2);
  for (auto& c : v) {
    c.re *= inv;
    c.im *= inv;
  }
}

// Orthonormal complex basis of the orthocomplement of span(fixed).
inline std::vector<CVec<double>> orthocomplement(int n, const std::vector<CVec<double>>& fixed) {
  std::vector<CVec<double>> basis = fixed;
  std::vector<CVec<double>> out;
  for (int j = 0; j < n && static_cast<int>(basis.size()) < n; ++j) {
    CVec<double> e(n);
    e[j] = {1.0, 0.0};
    for (const auto& b : basis) {
      auto p = cdot(e, b);
      for (int k = 0; k < n; ++k) {
        e[k].re -= p.real() * b[k].re - p.imag() * b[k].im;
        e[k].im -= p.real() * b[k].im + p.imag() * b[k].re;
      }
    }
    double n2 = 0.0;
    for (auto& c : e) n2 += abs2(c);
    if (n2 < 1e-12) continue;
    normalize(e);
    basis.push_back(e);
    out.push_back(e);
  }
  return out;
}

inline CVec<double> from_coords(const std::vector<CVec<double>>& bas,
                                const std::vector<double>& x) {
  int n = static_cast<int>(bas[0].size());
  CVec<double> v(n);
  for (size_t i = 0; i < bas.size(); ++i) {
    std::complex<double> ci(x[2 * i], x[2 * i + 1]);
    for (int k = 0; k < n; ++k) {
      v[k].re += ci.real() * bas[i][k].re - ci.imag() * bas[i][k].im;
      v[k].im += ci.real() * bas[i][k].im + ci.imag() * bas[i][k].re;
    }
  }
  return v;
}

// Projected gradient descent on the unit sphere with backtracking.
template <class F>
std::pair<std::vector<double>, double> pgd_minimize(const F& obj, std::vector<double> x,
                                                    double h, double step0, int iters,
                                                    double rel_tol) {
  const int D = static_cast<int>(x.size());
  double f = obj(x);
  double step = step0;
  for (int it = 0; it < iters && step > 1e-12; ++it) {
    std::vector<double> g(D, 0.0);
    for (int i = 0; i < D; ++i) {
      auto xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      double np = 0, nm = 0;
      for (double t : xp) np += t * t;
      for (double t : xm) nm += t * t;
      for (auto& t : xp) t /= std::sqrt(np);
      for (auto& t : xm) t /= std::sqrt(nm);
      g[i] = (obj(xp) - obj(xm)) / (2 * h);
    }
    double dot = 0.0;
    for (int i = 0; i < D; ++i) dot += g[i] * x[i];
    double gn = 0.0;
    for (int i = 0; i < D; ++i) {
      g[i] -= dot * x[i];
      gn += g[i] * g[i];
    }
    gn = std::sqrt(gn);
    if (gn < 1e-14) break;
    bool improved = false;
    bool at_tolerance = false;
    while (step > 1e-12) {
      auto xn = x;
      double norm = 0.0;
      for (int i = 0; i < D; ++i) {
        xn[i] -= step * g[i] / gn;
        norm += xn[i] * xn[i];
      }
      norm = std::sqrt(norm);
      for (auto& t : xn) t /= norm;
      double fn = obj(xn);
      if (fn < f - 1e-15) {
        at_tolerance = (f - fn) < rel_tol * std::abs(f);
        x = xn;
        f = fn;
        improved = true;
        step *= 1.5;
        break;
      }
      step *= 0.5;
    }
    if (!improved || at_tolerance) break;
  }
  return {x, f};
}

inline void phase_normalize(CVec<double>& v) {
  for (auto& c : v) {
    if (abs2(c) > 1e-16) {
      double th = std::atan2(c.im, c.re);
      std::complex<double> ph = std::polar(1.0, -th);
      for (auto& d : v) {
        std::complex<double> w(d.re, d.im);
        w *= ph;
        d = {w.real(), w.imag()};
      }
      return;
    }
  }
}

}  // namespace basisdet

// Recursive minimal-basis construction.  Each direction minimizes the
// distance to the raised level set along its complex line, over the unit
// sphere of the orthocomplement of the earlier directions; multi-start
// projected gradient descent with per-start seeds.
inline BasisResult minimal_basis(const DefiningDomain& dom, const CVec<double>& zeta,
                                 double eps, uint64_t seed = 7, int starts = 8) {
  const int n = dom.n;
  BasisResult res;
  res.zeta = zeta;
  res.eps = eps;
  for (int k = 0; k < n; ++k) {
    auto bas = basisdet::orthocomplement(n, res.vectors);
    const int d = static_cast<int>(bas.size());
    CVec<double> best_v;
    double best_f = std::numeric_limits<double>::infinity();
    int minima = 0;
    if (d == 1) {
      best_v = bas[0];
      best_f = dist_to_level_on_line(dom, zeta, best_v, eps);
      minima = 1;
    } else {
      auto obj = [&](const std::vector<double>& x) {
        auto v = basisdet::from_coords(bas, x);
        basisdet::normalize(v);
        return dist_to_level_on_line(dom, zeta, v, eps);
      };
      std::vector<CVec<double>> optima;
      std::vector<double> best_x;
      for (int s = 0; s < starts; ++s) {
        std::vector<double> x0;
        if (s == 0) {
          // One start at the complex normal expressed in the current
          // orthocomplement coordinates (the generic minimizer basin).
          auto un = dom.unit_dbar_rho(zeta);
          CVec<double> nu(dom.n);
          for (int i = 0; i < dom.n; ++i) nu[i] = conj(un[i]);
          x0.assign(2 * d, 0.0);
          double norm = 0.0;
          for (int i = 0; i < d; ++i) {
            auto p = basisdet::cdot(nu, bas[i]);
            x0[2 * i] = p.real();
            x0[2 * i + 1] = p.imag();
            norm += std::norm(p);
          }
          if (norm < 1e-12) x0 = Rng(derive_seed(seed, 100 * k)).sphere(2 * d);
          else
            for (auto& t : x0) t /= std::sqrt(norm);
        } else {
          Rng rng(derive_seed(seed, 100 * k + s));
          x0 = rng.sphere(2 * d);
        }
        auto [x, f] = basisdet::pgd_minimize(obj, x0, 1e-4, 0.3, 150, 1e-8);
        auto v = basisdet::from_coords(bas, x);
        basisdet::normalize(v);
        if (!std::isfinite(best_f) || f < best_f - 1e-8 * (1.0 + std::abs(best_f))) {
          best_f = f;
          best_v = v;
          best_x = x;
          optima.clear();
          optima.push_back(v);
        } else if (std::isfinite(f) && std::abs(f - best_f) <= 1e-6 * (1.0 + std::abs(best_f))) {
          bool dup = false;
          for (const auto& o : optima)
            if (std::abs(std::abs(basisdet::cdot(v, o)) - 1.0) < 1e-4) dup = true;
          if (!dup) optima.push_back(v);
        }
      }
      minima = std::max<int>(1, static_cast<int>(optima.size()));
      if (best_v.empty()) {
        res.converged = false;
        best_v = bas[0];
        best_f = obj({1.0, 0.0, 0.0, 0.0});
      } else {
        // Fine polish; the flat valley around the minimizer needs small
        // steps once the crossing solver is at machine accuracy.
        auto [xp, fp] = basisdet::pgd_minimize(obj, best_x, 1e-6, 2e-3, 120, 0.0);
        if (fp <= best_f) {
          best_f = fp;
          best_v = basisdet::from_coords(bas, xp);
          basisdet::normalize(best_v);
        }
      }
    }
    basisdet::phase_normalize(best_v);
    res.vectors.push_back(best_v);
    res.objectives.push_back(best_f);
    res.taus.push_back(tau_radius(dom, zeta, best_v, eps));
    res.multiplicity = std::max(res.multiplicity, minima);
  }
  // Stable tie-break: the construction yields nondecreasing radii up to
  // optimizer tolerance; restore ordering when a near-tie lands backwards.
  for (size_t i = 0; i + 1 < res.taus.size(); ++i)
    if (res.taus[i] > res.taus[i + 1]) {
      std::swap(res.taus[i], res.taus[i + 1]);
      std::swap(res.vectors[i], res.vectors[i + 1]);
    }
  return res;
}

struct PolyEllipsoid {
  BasisResult basis;

  // Squared anisotropic gauge; membership in c*P is gauge < c^2.
  double gauge2(const CVec<double>& z) const {
    const auto& V = basis.vectors;
    double s = 0.0;
    for (size_t j = 0; j < V.size(); ++j) {
      std::complex<double> a = 0.0;
      for (size_t k = 0; k < V.size(); ++k)
        a += std::complex<double>(V[j][k].re, -V[j][k].im) *
             std::complex<double>(z[k].re - basis.zeta[k].re, z[k].im - basis.zeta[k].im);
      s += std::norm(a) / (basis.taus[j] * basis.taus[j]);
    }
    return s;
  }
  bool contains(const CVec<double>& z, double dilation = 1.0) const {
    return gauge2(z) < dilation * dilation;
  }
  double volume() const {
    // Real 2n-ball volume with semiaxes tau_j (each doubled as a complex disc).
    int n = static_cast<int>(basis.taus.size());
    double v = (n == 2) ? M_PI * M_PI / 2.0 : std::pow(M_PI, n) / std::tgamma(n + 1);
    for (double t : basis.taus) v *= t * t;
    return v;
  }
  CVec<double> sample(Rng& rng, double scale = 1.0) const {
    int n = static_cast<int>(basis.taus.size());
    auto b = rng.ball(2 * n);
    CVec<double> z = basis.zeta;
    for (int j = 0; j < n; ++j) {
      std::complex<double> a(b[2 * j], b[2 * j + 1]);
      a *= scale * basis.taus[j];
      for (int k = 0; k < n; ++k) {
        std::complex<double> vj(basis.vectors[j][k].re, basis.vectors[j][k].im);
        std::complex<double> t = a * vj;
        z[k].re += t.real();
        z[k].im += t.imag();
      }
    }
    return z;
  }
  CVec<double> sample_boundary(Rng& rng, double scale = 1.0) const {
    int n = static_cast<int>(basis.taus.size());
    auto b = rng.sphere(2 * n);
    CVec<double> z = basis.zeta;
    for (int j = 0; j < n; ++j) {
      std::complex<double> a(b[2 * j], b[2 * j + 1]);
      a *= scale * basis.taus[j];
      for (int k = 0; k < n; ++k) {
        std::complex<double> vj(basis.vectors[j][k].re, basis.vectors[j][k].im);
        std::complex<double> t = a * vj;
        z[k].re += t.real();
        z[k].im += t.imag();
      }
    }
    return z;
  }
};

struct EngulfReport {
  double shrink_constant = 0.0;  // smallest C with P_eps(z') in C * P_{eps/2}(zeta)
  double expand_constant = 0.0;  // smallest c with 2 P_eps(z') in P_{c eps}(zeta)
  int trials = 0;
};

inline EngulfReport engulf_check(const DefiningDomain& dom, const CVec<double>& zeta,
                                 double eps, int trials, uint64_t seed = 11,
                                 int samples_per_trial = 40) {
  PolyEllipsoid P{minimal_basis(dom, zeta, eps, seed)};
  PolyEllipsoid Phalf{minimal_basis(dom, zeta, eps / 2.0, seed)};
  Rng rng(derive_seed(seed, 555));
  EngulfReport rep;
  rep.trials = trials;
  for (int t = 0; t < trials; ++t) {
    CVec<double> zp = P.sample(rng);
    PolyEllipsoid Pp{minimal_basis(dom, zp, eps, derive_seed(seed, t))};
    for (int s = 0; s < samples_per_trial; ++s) {
      auto w = Pp.sample_boundary(rng);
      rep.shrink_constant = std::max(rep.shrink_constant, std::sqrt(Phalf.gauge2(w)));
    }
    // Bisect the dilation factor c for the expanded inclusion.
    std::vector<CVec<double>> pts;
    for (int s = 0; s < samples_per_trial; ++s) pts.push_back(Pp.sample_boundary(rng, 2.0));
    auto fits = [&](double c) {
      PolyEllipsoid Pc{minimal_basis(dom, zeta, c * eps, seed)};
      for (const auto& w : pts)
        if (Pc.gauge2(w) >= 1.0) return false;
      return true;
    };
    double lo = 1.0, hi = 2.0;
    while (!fits(hi) && hi < 64.0) hi *= 2.0;
    for (int it = 0; it < 8; ++it) {
      double mid = 0.5 * (lo + hi);
      (fits(mid) ? hi : lo) = mid;
    }
    rep.expand_constant = std::max(rep.expand_constant, hi);
  }
  return rep;
}

// Largest dyadic eps whose ellipsoids stay inside the collar at all probes.
inline double find_eps0(const DefiningDomain& dom, const std::vector<CVec<double>>& probes,
                        uint64_t seed = 3) {
  Rng rng(derive_seed(seed, 99));
  for (int k = 2; k < 40; ++k) {
    double eps = std::ldexp(1.0, -k);
    bool ok = true;
    for (const auto& zeta : probes) {
      if (std::abs(dom.rho(zeta)) >= dom.collar_width) continue;
      PolyEllipsoid P{minimal_basis(dom, zeta, eps, seed)};
      for (int s = 0; s < 50 && ok; ++s)
        if (!dom.in_collar(P.sample_boundary(rng))) ok = false;
      if (!ok) break;
    }
    if (ok) return eps;
  }
  throw DomainError("no admissible eps0 found");
}

}  // namespace dbar
