#pragma once

// Integral kernels: the Bochner-Martinelli form B and the Cauchy-Fantappie
// form K generated by a Leray map, their bidegree components, tangential and
// vertical parts in the zeta variable, and derivative envelopes.
//
// All evaluators are generic over the real scalar, so instantiating them on
// jets yields exact derivatives of the (projected) kernel coefficients; the
// projection frame is recomputed at the perturbed base point, i.e.
// derivatives are taken after the projection.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "dbar/domains.hpp"
#include "dbar/forms.hpp"
#include "dbar/support.hpp"

namespace dbar {

inline CD two_pi_i_pow_inv(int n) {
  CD c{1.0, 0.0};
  for (int i = 0; i < n; ++i) c = c / CD{0.0, 2.0 * M_PI};
  return c;
}

template <class T>
T dist2(const CVec<T>& z, const CVec<T>& zeta) {
  T s(0.0);
  for (size_t k = 0; k < z.size(); ++k) s += abs2(z[k] - zeta[k]);
  return s;
}

template <class T>
Form<Cx<T>> b_form(const CVec<T>& z, const CVec<T>& zeta) {
  int n = static_cast<int>(z.size());
  Form<Cx<T>> b(n);
  for (int j = 0; j < n; ++j) b += Form<Cx<T>>::covector(n, DZETA, j, conj(zeta[j]) - conj(z[j]));
  return b;
}

template <class T>
Form<Cx<T>> dbar_b_form(int n) {
  Form<Cx<T>> r(n);
  for (int j = 0; j < n; ++j) {
    auto dzetabar = Form<Cx<T>>::covector(n, DZETABAR, j);
    auto dzbar = Form<Cx<T>>::covector(n, DZBAR, j);
    auto dzeta = Form<Cx<T>>::covector(n, DZETA, j);
    r += wedge(dzetabar - dzbar, dzeta);
  }
  return r;
}

// Full Bochner-Martinelli form; component q has degree (0,q) in z and
// (n, n-1-q) in zeta.
template <class T>
Form<Cx<T>> bm_form(const CVec<T>& z, const CVec<T>& zeta) {
  int n = static_cast<int>(z.size());
  T d2 = dist2(z, zeta);
  if (value_of(d2) < 1e-16) throw std::domain_error("coincident points in kernel");
  T w = recip(d2);
  T wn = w;
  for (int i = 1; i < n; ++i) wn = wn * w;  // |z-zeta|^{-2n}
  CD cpi = two_pi_i_pow_inv(n);
  Cx<T> scale{T(cpi.re) * wn, T(cpi.im) * wn};
  return wedge(b_form(z, zeta), wedge_pow(dbar_b_form<T>(n), n - 1)) * scale;
}

template <class T>
Form<Cx<T>> bm_kernel(const CVec<T>& z, const CVec<T>& zeta, int q) {
  return component_zbar_degree(bm_form(z, zeta), q);
}

// Full Cauchy-Fantappie form from a Leray sample; component q has degree
// (0,q) in z and (n, n-2-q) in zeta.  K_n vanishes identically.
template <class T>
Form<Cx<T>> cf_form(const LeraySample<T>& ls, const CVec<T>& z, const CVec<T>& zeta) {
  int n = static_cast<int>(z.size());
  T d2 = dist2(z, zeta);
  if (value_of(d2) < 1e-16) throw std::domain_error("coincident points in kernel");
  if (abs_val(ls.S) < 1e-14) throw std::domain_error("support function vanishes at sample");
  Form<Cx<T>> Qf(n);
  for (int j = 0; j < n; ++j) Qf += Form<Cx<T>>::covector(n, DZETA, j, ls.Q[j]);
  Form<Cx<T>> dbarQ(n);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k)
      dbarQ += wedge(Form<Cx<T>>::covector(n, DZETABAR, k, ls.dQ_dzbar[j][k]),
                     Form<Cx<T>>::covector(n, DZETA, j));
  auto db = dbar_b_form<T>(n);
  auto bf = b_form(z, zeta);
  Cx<T> Sinv = Cx<T>(T(1.0)) / ls.S;
  T w = recip(d2);
  CD cpi = two_pi_i_pow_inv(n);

  Form<Cx<T>> K(n);
  Cx<T> Spow = Sinv;
  for (int k = 1; k <= n - 1; ++k) {
    T wpow(1.0);
    for (int i = 0; i < n - k; ++i) wpow = wpow * w;
    Form<Cx<T>> term = wedge(bf, wedge(Qf, wedge(wedge_pow(db, n - 1 - k), wedge_pow(dbarQ, k - 1))));
    Cx<T> scale = Spow * Cx<T>(wpow);
    if (k % 2) scale = -scale;
    K += term * scale;
    Spow = Spow * Sinv;
  }
  return K * Cx<T>(T(cpi.re), T(cpi.im));
}

template <class T>
Form<Cx<T>> cf_kernel(const LeraySample<T>& ls, const CVec<T>& z, const CVec<T>& zeta, int q) {
  return component_zbar_degree(cf_form(ls, z, zeta), q);
}

inline LeraySample<double> to_plain(const LerayScalarSample& s) {
  LeraySample<double> r;
  r.S = s.S;
  r.Q = s.Q;
  r.dQ_dzbar = s.dQ_dzbar;
  return r;
}

// Projections of a kernel form in the zeta variable only.
template <class T>
struct ProjectedPair {
  Form<Cx<T>> top, bot;
};

template <class T>
ProjectedPair<T> kernel_project(const Form<Cx<T>>& K, const DefiningDomain& dom,
                                const CVec<T>& zeta) {
  auto u = dom.unit_dbar_rho(zeta);
  auto bot = project_vertical(K, u, DZETABAR);
  return {K - bot, bot};
}

// Max abs over all components of all derivatives of total order <= k, read
// from jet coefficients (the jet must have been built over 8 variables).
template <int ORD>
double deriv_envelope(const Form<Cx<Jet<8, ORD>>>& f, int k) {
  double m = 0.0;
  const auto& tab = Jet<8, ORD>::tables();
  for (const auto& [key, v] : f.c) {
    (void)key;
    for (size_t i = 0; i < tab.mono.size(); ++i) {
      int d = 0;
      for (int t = 0; t < 8; ++t) d += tab.mono[i][t];
      if (d > k) continue;
      double re = v.re.deriv(tab.mono[i]);
      double im = v.im.deriv(tab.mono[i]);
      m = std::max(m, std::hypot(re, im));
    }
  }
  return m;
}

enum class KernelPart { Top, Bot, Full };

// One-stop evaluation used by the quadrature experiments: the magnitude
// |D^k K^part_(q)| at (z, zeta), derivatives after projection.
class KernelOracle {
 public:
  KernelOracle(const LerayFamily& fam, int q) : fam_(fam), q_(q) {}

  // j = 0 fast path on plain scalars.
  double magnitude(const CVec<double>& z, const CVec<double>& zeta, KernelPart part) const {
    auto ls = to_plain(fam_.sample(z, zeta));
    auto K = cf_kernel(ls, z, zeta, q_);
    if (part == KernelPart::Full) return K.max_abs();
    auto pr = kernel_project(K, fam_.domain(), zeta);
    return (part == KernelPart::Top ? pr.top : pr.bot).max_abs();
  }

  // Derivative envelope |D^k (K^part)| via order-3 jets (k <= 2).
  double deriv_magnitude(const CVec<double>& z, const CVec<double>& zeta, KernelPart part,
                         int k) const {
    if (k == 0) return magnitude(z, zeta, part);
    if (k > 2) throw std::invalid_argument("derivative order beyond configured maximum");
    using J = Jet<8, 3>;
    auto ls = fam_.template sample_jet<3>(z, zeta);
    const int n = fam_.domain().n;
    CVec<J> zj(n), zetaj(n);
    for (int i = 0; i < n; ++i) {
      zj[i] = {J::variable(2 * i, z[i].re), J::variable(2 * i + 1, z[i].im)};
      zetaj[i] = {J::variable(4 + 2 * i, zeta[i].re), J::variable(4 + 2 * i + 1, zeta[i].im)};
    }
    auto K = cf_kernel(ls, zj, zetaj, q_);
    if (part == KernelPart::Full) return deriv_envelope(K, k);
    auto pr = kernel_project(K, fam_.domain(), zetaj);
    return deriv_envelope(part == KernelPart::Top ? pr.top : pr.bot, k);
  }

  const LerayFamily& family() const { return fam_; }
  int q() const { return q_; }

 private:
  const LerayFamily& fam_;
  int q_;
};

// Single directional derivative of a projected kernel coefficient table by
// fourth-order central differences; used to cross-check the jet scheme.
// var indexes the 8 real coordinates of (z, zeta).
inline Form<CD> kernel_fd_derivative(const LerayFamily& fam, int q, KernelPart part,
                                     const CVec<double>& z, const CVec<double>& zeta, int var,
                                     double h) {
  double sep = std::sqrt(value_of(dist2(z, zeta)));
  if (sep < 10.0 * h) throw std::domain_error("finite-difference step too close to singularity");
  auto eval = [&](double off) {
    CVec<double> zz = z, zt = zeta;
    double* target = nullptr;
    if (var < 4)
      target = (var % 2 == 0) ? &zz[var / 2].re : &zz[var / 2].im;
    else
      target = ((var - 4) % 2 == 0) ? &zt[(var - 4) / 2].re : &zt[(var - 4) / 2].im;
    *target += off;
    auto ls = to_plain(fam.sample(zz, zt));
    auto K = cf_kernel(ls, zz, zt, q);
    if (part == KernelPart::Full) return K;
    auto pr = kernel_project(K, fam.domain(), zt);
    return part == KernelPart::Top ? pr.top : pr.bot;
  };
  auto f1 = eval(h), f2 = eval(2 * h), fm1 = eval(-h), fm2 = eval(-2 * h);
  CD c8{8.0, 0.0}, c1{1.0, 0.0};
  Form<CD> num = (f1 - fm1) * c8 - (f2 - fm2) * c1;
  return num * CD{1.0 / (12.0 * h), 0.0};
}

}  // namespace dbar
