#pragma once

// Holomorphic support functions on the model domains and the induced Leray
// maps.  Two kinds: the finite-type construction (a polynomial in z - zeta
// whose coefficients come from the defining-function derivative tables) and
// the classical quadratic one for the ball.  Both are represented as exact
// polynomials in u = z - zeta, so the Leray coefficients come from monomial
// t-integrals with no quadrature error.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <stdexcept>
#include <vector>

#include "dbar/domains.hpp"
#include "dbar/rng.hpp"

namespace dbar {

struct SupportParams {
  double M1 = 4.0, M2 = 1.0, M3 = 2.0;
  int m_cap = 2;  // even truncation order, matches the domain 1-type
  void validate() const {
    if (M1 < 1 || M2 < 1 || M3 < 1) throw std::invalid_argument("M1,M2,M3 must be >= 1");
    if (m_cap < 2 || m_cap % 2 != 0)
      throw std::invalid_argument("support truncation order must be even and >= 2");
  }
};

enum class SupportKind { FiniteType, BallQuadratic };

namespace supdet {

inline uint32_t ukey(const std::array<uint8_t, kMaxDim>& e) {
  return e[0] | (e[1] << 4) | (e[2] << 8);
}
inline std::array<uint8_t, kMaxDim> unkey(uint32_t k) {
  return {static_cast<uint8_t>(k & 15), static_cast<uint8_t>((k >> 4) & 15),
          static_cast<uint8_t>((k >> 8) & 15)};
}
inline int key_total(uint32_t k) {
  auto e = unkey(k);
  return e[0] + e[1] + e[2];
}

}  // namespace supdet

// Polynomial in u = z - zeta with coefficients over a generic scalar.
template <class T>
struct UPoly {
  int n = 2;
  std::map<uint32_t, Cx<T>> terms;

  explicit UPoly(int dim = 2) : n(dim) {}

  void add(const std::array<uint8_t, kMaxDim>& e, const Cx<T>& c) {
    auto k = supdet::ukey(e);
    auto it = terms.find(k);
    if (it == terms.end())
      terms[k] = c;
    else
      it->second += c;
  }

  friend UPoly operator*(const UPoly& a, const UPoly& b) {
    UPoly r(a.n);
    for (const auto& [ka, va] : a.terms)
      for (const auto& [kb, vb] : b.terms) {
        auto ea = supdet::unkey(ka), eb = supdet::unkey(kb);
        std::array<uint8_t, kMaxDim> e{};
        for (int i = 0; i < kMaxDim; ++i) e[i] = static_cast<uint8_t>(ea[i] + eb[i]);
        r.add(e, va * vb);
      }
    return r;
  }
  friend UPoly operator+(UPoly a, const UPoly& b) {
    for (const auto& [k, v] : b.terms) a.add(supdet::unkey(k), v);
    return a;
  }
  friend UPoly operator*(const UPoly& a, const Cx<T>& s) {
    UPoly r(a.n);
    for (const auto& [k, v] : a.terms) r.terms[k] = v * s;
    return r;
  }

  Cx<T> eval(const CVec<T>& u) const {
    Cx<T> s(T(0.0));
    for (const auto& [k, v] : terms) {
      auto e = supdet::unkey(k);
      Cx<T> m = v;
      for (int i = 0; i < n; ++i)
        for (int p = 0; p < e[i]; ++p) m *= u[i];
      s += m;
    }
    return s;
  }

  // Leray coefficient polynomials: Q_j(u) = sum_b c_b b_j u^{b - e_j} / |b|,
  // the closed form of the line integral of dS/dz_j from zeta to z.
  std::vector<UPoly> leray_components() const {
    std::vector<UPoly> Q(n, UPoly(n));
    for (const auto& [k, v] : terms) {
      auto e = supdet::unkey(k);
      int tot = supdet::key_total(k);
      if (tot == 0) continue;
      for (int j = 0; j < n; ++j) {
        if (e[j] == 0) continue;
        auto em = e;
        em[j]--;
        Q[j].add(em, v * (static_cast<double>(e[j]) / tot));
      }
    }
    return Q;
  }
};

// Unitary matrix whose first row is conj(u), for unit u; deterministic
// completion, with an optional extra rotation of the tangential rows.
template <class T>
std::vector<CVec<T>> frame_rows(const CVec<T>& u, double completion_angle = 0.0) {
  int n = static_cast<int>(u.size());
  std::vector<CVec<T>> rows;
  CVec<T> r1(n);
  for (int j = 0; j < n; ++j) r1[j] = conj(u[j]);
  rows.push_back(r1);
  if (n == 2) {
    CVec<T> r2(n);
    r2[0] = -u[1];
    r2[1] = u[0];
    if (completion_angle != 0.0) {
      Cx<T> ph(T(std::cos(completion_angle)), T(std::sin(completion_angle)));
      r2[0] = r2[0] * ph;
      r2[1] = r2[1] * ph;
    }
    rows.push_back(r2);
  } else {
    // Gram-Schmidt of standard basis vectors against the accumulated rows,
    // pivoting on the smallest overlap with u (by value parts).
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      return std::hypot(value_of(u[a]).re, value_of(u[a]).im) <
             std::hypot(value_of(u[b]).re, value_of(u[b]).im);
    });
    for (int idx : order) {
      if (static_cast<int>(rows.size()) == n) break;
      CVec<T> e(n);
      e[idx] = Cx<T>(T(1.0));
      for (const auto& r : rows) {
        Cx<T> p(T(0.0));
        for (int k = 0; k < n; ++k) p += e[k] * conj(r[k]);
        for (int k = 0; k < n; ++k) e[k] -= p * r[k];
      }
      T n2(0.0);
      for (int k = 0; k < n; ++k) n2 += abs2(e[k]);
      if (value_of(n2) < 1e-12) continue;
      T inv = recip(sqrt(n2));
      for (int k = 0; k < n; ++k) e[k] = e[k] * Cx<T>(inv);
      rows.push_back(e);
    }
  }
  return rows;
}

// S as a polynomial in u = z - zeta at fixed zeta (scalar-generic so the
// zeta-dependence can itself be differentiated by evaluating on jets).
template <class T>
UPoly<T> support_poly(SupportKind kind, const DefiningDomain& dom, const SupportParams& par,
                      const CVec<T>& zeta, double completion_angle = 0.0) {
  const int n = dom.n;
  UPoly<T> S(n);
  if (kind == SupportKind::BallQuadratic) {
    // sum_j conj(zeta_j) (zeta_j - z_j) = - sum_j conj(zeta_j) u_j
    for (int j = 0; j < n; ++j) {
      std::array<uint8_t, kMaxDim> e{};
      e[j] = 1;
      S.add(e, -conj(zeta[j]));
    }
    return S;
  }
  par.validate();
  auto rows = frame_rows(dom.unit_dbar_rho(zeta), completion_angle);
  // omega_a = sum_k rows[a][k] u_k as linear polynomials
  std::vector<UPoly<T>> omega;
  for (int a = 0; a < n; ++a) {
    UPoly<T> w(n);
    for (int k = 0; k < n; ++k) {
      std::array<uint8_t, kMaxDim> e{};
      e[k] = 1;
      w.add(e, rows[a][k]);
    }
    omega.push_back(w);
  }
  S = omega[0] * Cx<T>(T(3.0)) + omega[0] * omega[0] * Cx<T>(T(par.M1));

  // Tangential corrections: for each even order 2j, all multi-indices over
  // the tangential slots; the pure w-derivative of rho(zeta + Phi^dagger w)
  // expands multinomially into holomorphic derivatives of rho at zeta.
  for (int j = 1; 2 * j <= par.m_cap; ++j) {
    double weight = -std::pow(par.M3, std::pow(4.0, j)) / par.M2;
    if (j % 2 == 0) weight = -weight;  // (-1)^j
    // enumerate alpha over slots 2..n with |alpha| = 2j
    std::vector<std::array<uint8_t, kMaxDim>> alphas;
    std::function<void(int, int, std::array<uint8_t, kMaxDim>)> rec =
        [&](int slot, int rem, std::array<uint8_t, kMaxDim> cur) {
          if (slot == n - 1) {
            cur[slot] = static_cast<uint8_t>(rem);
            alphas.push_back(cur);
            return;
          }
          for (int t = 0; t <= rem; ++t) {
            cur[slot] = static_cast<uint8_t>(t);
            rec(slot + 1, rem - t, cur);
          }
        };
    if (n >= 2) rec(1, 2 * j, {});
    for (const auto& alpha : alphas) {
      // derivative operator product over tangential directions
      std::map<std::array<uint8_t, kMaxDim>, Cx<T>> op;
      op[{}] = Cx<T>(T(1.0));
      for (int a = 1; a < n; ++a)
        for (int rep = 0; rep < alpha[a]; ++rep) {
          std::map<std::array<uint8_t, kMaxDim>, Cx<T>> nxt;
          for (const auto& [idx, coef] : op)
            for (int k = 0; k < n; ++k) {
              auto ni = idx;
              ni[k]++;
              auto c = coef * conj(rows[a][k]);
              auto it = nxt.find(ni);
              if (it == nxt.end())
                nxt[ni] = c;
              else
                it->second += c;
            }
          op = std::move(nxt);
        }
      Cx<T> dval(T(0.0));
      for (const auto& [idx, coef] : op) {
        DerivIndex d;
        d.holo = idx;
        dval += coef * dom.rho_deriv(zeta, d);
      }
      double fact = 1.0;
      for (int a = 0; a < n; ++a)
        for (int t = 2; t <= alpha[a]; ++t) fact *= t;
      // omega^alpha
      UPoly<T> mono(n);
      mono.add({}, Cx<T>(T(1.0)));
      for (int a = 1; a < n; ++a)
        for (int rep = 0; rep < alpha[a]; ++rep) mono = mono * omega[a];
      S = S + mono * (dval * (weight / fact));
    }
  }
  return S;
}

template <class T>
struct LeraySample {
  Cx<T> S;
  CVec<T> Q;                      // Leray coefficients at (z, zeta)
  std::vector<CVec<T>> dQ_dzbar;  // dQ_dzbar[j][k] = d Q_j / d zetabar_k
};

// Scalar-path sample: the zeta-antiholomorphic derivatives of the Leray map
// come from a first-order jet lift of zeta.
struct LerayScalarSample {
  CD S;
  CVec<double> Q;
  std::vector<CVec<double>> dQ_dzbar;
};

class LerayFamily {
 public:
  LerayFamily(SupportKind kind, const DefiningDomain& dom, SupportParams par)
      : kind_(kind), dom_(dom), par_(par) {}

  SupportKind kind() const { return kind_; }
  const SupportParams& params() const { return par_; }
  const DefiningDomain& domain() const { return dom_; }

  CD S(const CVec<double>& z, const CVec<double>& zeta, double completion_angle = 0.0) const {
    auto P = support_poly(kind_, dom_, par_, zeta, completion_angle);
    return P.eval(diff(z, zeta));
  }
  CVec<double> Q(const CVec<double>& z, const CVec<double>& zeta) const {
    auto P = support_poly(kind_, dom_, par_, zeta);
    auto Qp = P.leray_components();
    CVec<double> q(dom_.n);
    auto u = diff(z, zeta);
    for (int j = 0; j < dom_.n; ++j) q[j] = Qp[j].eval(u);
    return q;
  }

  LerayScalarSample sample(const CVec<double>& z, const CVec<double>& zeta) const {
    using J = Jet<4, 1>;
    const int n = dom_.n;
    CVec<J> zj(n), zetaj(n);
    for (int k = 0; k < n; ++k) {
      zj[k] = {J(z[k].re), J(z[k].im)};
      zetaj[k] = {J::variable(2 * k, zeta[k].re), J::variable(2 * k + 1, zeta[k].im)};
    }
    auto P = support_poly(kind_, dom_, par_, zetaj);
    auto Qp = P.leray_components();
    CVec<J> u(n);
    for (int k = 0; k < n; ++k) u[k] = zj[k] - zetaj[k];
    LerayScalarSample s;
    auto Sv = P.eval(u);
    s.S = {Sv.re.value(), Sv.im.value()};
    s.Q.resize(n);
    s.dQ_dzbar.assign(n, CVec<double>(n));
    for (int j = 0; j < n; ++j) {
      auto Qv = Qp[j].eval(u);
      s.Q[j] = {Qv.re.value(), Qv.im.value()};
      for (int k = 0; k < n; ++k) {
        // d/dzetabar_k = (d/dx_k + i d/dy_k)/2 on complex values
        double rex = Qv.re.d1(2 * k), rey = Qv.re.d1(2 * k + 1);
        double imx = Qv.im.d1(2 * k), imy = Qv.im.d1(2 * k + 1);
        s.dQ_dzbar[j][k] = {0.5 * (rex - imy), 0.5 * (imx + rey)};
      }
    }
    return s;
  }

  // Full jet sample over the 8 real coordinates of (z, zeta); variables
  // 0..3 are (x1,y1,x2,y2) of z and 4..7 those of zeta.  The returned
  // dQ entries are valid one order below ORD.
  template <int ORD>
  LeraySample<Jet<8, ORD>> sample_jet(const CVec<double>& z, const CVec<double>& zeta) const {
    using J = Jet<8, ORD>;
    const int n = dom_.n;
    CVec<J> zj(n), zetaj(n);
    for (int k = 0; k < n; ++k) {
      zj[k] = {J::variable(2 * k, z[k].re), J::variable(2 * k + 1, z[k].im)};
      zetaj[k] = {J::variable(4 + 2 * k, zeta[k].re), J::variable(4 + 2 * k + 1, zeta[k].im)};
    }
    auto P = support_poly(kind_, dom_, par_, zetaj);
    auto Qp = P.leray_components();
    CVec<J> u(n);
    for (int k = 0; k < n; ++k) u[k] = zj[k] - zetaj[k];
    LeraySample<J> s;
    s.S = P.eval(u);
    s.Q.resize(n);
    s.dQ_dzbar.assign(n, CVec<J>(n));
    for (int j = 0; j < n; ++j) {
      s.Q[j] = Qp[j].eval(u);
      for (int k = 0; k < n; ++k) {
        J rex = s.Q[j].re.derive(4 + 2 * k), rey = s.Q[j].re.derive(4 + 2 * k + 1);
        J imx = s.Q[j].im.derive(4 + 2 * k), imy = s.Q[j].im.derive(4 + 2 * k + 1);
        s.dQ_dzbar[j][k] = {(rex - imy) * 0.5, (imx + rey) * 0.5};
      }
    }
    return s;
  }

  // The bound-side support function: the quadratic ball kind satisfies the
  // two-sided bound with the opposite sign, see README for the convention.
  double bound_side_real_part(const CVec<double>& z, const CVec<double>& zeta) const {
    CD s = S(z, zeta);
    return kind_ == SupportKind::BallQuadratic ? -s.re : s.re;
  }

  static CVec<double> diff(const CVec<double>& z, const CVec<double>& zeta) {
    CVec<double> u(z.size());
    for (size_t k = 0; k < z.size(); ++k)
      u[k] = {z[k].re - zeta[k].re, z[k].im - zeta[k].im};
    return u;
  }

 private:
  SupportKind kind_;
  const DefiningDomain& dom_;
  SupportParams par_;
};

struct CalibrationReport {
  SupportParams params;
  double M4 = 0.0;
  long violations = -1;
  long samples = 0;
};

namespace supdet {
inline double cdist(const CVec<double>& a, const CVec<double>& b) {
  double s = 0.0;
  for (size_t k = 0; k < a.size(); ++k) {
    double dx = a[k].re - b[k].re, dy = a[k].im - b[k].im;
    s += dx * dx + dy * dy;
  }
  return std::sqrt(s);
}

inline CVec<double> sample_region(const DefiningDomain& dom, Rng& rng, bool collar_only,
                                  bool outside_only = false) {
  for (int it = 0; it < 100000; ++it) {
    CVec<double> z(dom.n);
    for (int k = 0; k < dom.n; ++k) {
      z[k].re = rng.uniform(-dom.bounding_radius, dom.bounding_radius);
      z[k].im = rng.uniform(-dom.bounding_radius, dom.bounding_radius);
    }
    double r = dom.rho(z);
    if (collar_only) {
      if (outside_only ? (r > 0 && r < dom.collar_width) : std::abs(r) < dom.collar_width)
        return z;
    } else {
      if (r < dom.collar_width) return z;  // Omega together with the collar
    }
  }
  throw DomainError("rejection sampling failed");
}
}  // namespace supdet

// Smallest M4 (over a doubling schedule) for which the two-sided support
// bound Re S <= M4*max(0, rho(z)-rho(zeta)) - |z-zeta|^m / M4 holds on all
// sampled pairs with |z - zeta| < 1/M4.
inline CalibrationReport calibrate_M4(const LerayFamily& fam, long budget, uint64_t seed,
                                      double M4_cap = 65536.0) {
  const auto& dom = fam.domain();
  int m = fam.kind() == SupportKind::BallQuadratic ? 2 : fam.params().m_cap;
  CalibrationReport rep;
  rep.params = fam.params();
  long per_zeta = 64;
  long n_zeta = std::max<long>(1, budget / per_zeta);
  for (double M4 = 2.0; M4 <= M4_cap; M4 *= 2.0) {
    Rng rng(derive_seed(seed, static_cast<uint64_t>(M4)));
    long viol = 0, used = 0;
    for (long i = 0; i < n_zeta; ++i) {
      auto zeta = supdet::sample_region(dom, rng, true);
      auto P = support_poly(fam.kind(), dom, fam.params(), zeta);
      double rz0 = dom.rho(zeta);
      for (long j = 0; j < per_zeta; ++j) {
        auto dir = rng.cball(dom.n);
        CVec<double> z = zeta;
        for (int k = 0; k < dom.n; ++k) {
          z[k].re += dir[k].re / M4;
          z[k].im += dir[k].im / M4;
        }
        if (dom.rho(z) >= dom.collar_width) continue;
        double d = supdet::cdist(z, zeta);
        if (d >= 1.0 / M4) continue;
        ++used;
        CD S = P.eval(LerayFamily::diff(z, zeta));
        double lhs = fam.kind() == SupportKind::BallQuadratic ? -S.re : S.re;
        double rhs = M4 * std::max(0.0, dom.rho(z) - rz0) - std::pow(d, m) / M4;
        if (lhs > rhs + 1e-12) ++viol;
      }
    }
    rep.M4 = M4;
    rep.violations = viol;
    rep.samples = used;
    if (viol == 0) return rep;
  }
  return rep;
}

// Escalates (M1, M2, M3) until the calibration passes.
inline CalibrationReport auto_calibrate(SupportKind kind, const DefiningDomain& dom,
                                        long budget, uint64_t seed) {
  SupportParams par;
  par.m_cap = (kind == SupportKind::BallQuadratic) ? 2 : dom.type_vector[0];
  for (int round = 0; round < 6; ++round) {
    LerayFamily fam(kind, dom, par);
    auto rep = calibrate_M4(fam, budget, seed);
    if (rep.violations == 0) return rep;
    if (round % 2 == 0)
      par.M3 *= 2.0;
    else
      par.M1 *= 2.0;
  }
  throw std::runtime_error("support calibration failed to find admissible parameters");
}

// Minimum |S| over far pairs z in Omega, zeta outside in the collar,
// |z - zeta| >= 1/(2 M4): certifies a zero-free far region at this scale.
inline double zero_margin(const LerayFamily& fam, long budget, double M4, uint64_t seed) {
  const auto& dom = fam.domain();
  Rng rng(derive_seed(seed, 31337));
  double margin = std::numeric_limits<double>::infinity();
  long per_zeta = 64;
  long n_zeta = std::max<long>(1, budget / per_zeta);
  for (long i = 0; i < n_zeta; ++i) {
    auto zeta = supdet::sample_region(dom, rng, true, true);
    auto P = support_poly(fam.kind(), dom, fam.params(), zeta);
    for (long j = 0; j < per_zeta; ++j) {
      CVec<double> z(dom.n);
      for (int k = 0; k < dom.n; ++k) {
        z[k].re = rng.uniform(-dom.bounding_radius, dom.bounding_radius);
        z[k].im = rng.uniform(-dom.bounding_radius, dom.bounding_radius);
      }
      if (!dom.in_domain(z)) continue;
      if (supdet::cdist(z, zeta) < 0.5 / M4) continue;
      CD S = P.eval(LerayFamily::diff(z, zeta));
      margin = std::min(margin, abs_val(S));
    }
  }
  return margin;
}

}  // namespace dbar
