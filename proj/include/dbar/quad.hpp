#pragma once

// Stratified Monte Carlo over the model regions (interior, collar, shells),
// seeded and reproducible, with common-random-number point sets; the generic
// Schur-test checker; log-log exponent fits; and the kernel-estimate
// experiment drivers (shell integrals and weighted collar integrals).

#include <cmath>
#include <algorithm>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "dbar/basis.hpp"
#include "dbar/kernels.hpp"
#include "dbar/rng.hpp"

namespace dbar {

struct IntegralEstimate {
  double value = 0.0;
  double stderr_ = 0.0;
  long samples = 0;
  uint64_t seed = 0;
};

// A weighted point set: integral(f) ~ sum w_i f(x_i).  Strata keep their own
// sample ranges so the stratified variance formula applies.
struct PointSet {
  std::vector<CVec<double>> pts;
  std::vector<double> w;
  std::vector<std::pair<size_t, size_t>> strata;  // [begin, end) per stratum
  uint64_t seed = 0;

  template <class F>
  IntegralEstimate integrate(const F& f) const {
    IntegralEstimate est;
    est.seed = seed;
    est.samples = static_cast<long>(pts.size());
    double var_acc = 0.0;
    for (auto [b, e] : strata) {
      if (e == b) continue;
      double mean = 0.0, m2 = 0.0;
      long n = 0;
      for (size_t i = b; i < e; ++i) {
        // zero-weight points are rejection placeholders; they contribute to
        // the variance but the integrand is never evaluated there
        double v = (w[i] == 0.0) ? 0.0 : f(pts[i]) * w[i];
        ++n;
        double d = v - mean;
        mean += d / n;
        m2 += d * (v - mean);
      }
      est.value += mean * n;
      if (n > 1) var_acc += m2 / (n - 1) * n;  // variance of the stratum sum
    }
    est.stderr_ = std::sqrt(var_acc);
    return est;
  }
};

// Region sampled by a PointSet builder.
enum class Region { Interior, CollarOutside, Collar, BallMinusDomain };

namespace quaddet {
inline double box_volume(double half, int n) { return std::pow(2.0 * half, 2 * n); }
}  // namespace quaddet

// Plain rejection point set over a region; weights sum to the region volume
// in expectation (box volume times indicator acceptance handled per point).
inline PointSet sample_region(const DefiningDomain& dom, Region reg, long budget,
                              uint64_t seed) {
  PointSet ps;
  ps.seed = seed;
  Rng rng(seed);
  double half = dom.bounding_radius;
  double w_box = quaddet::box_volume(half, dom.n) / budget;
  ps.pts.reserve(budget);
  auto accept = [&](const CVec<double>& z) {
    double r = dom.rho(z);
    switch (reg) {
      case Region::Interior:
        return r < 0.0;
      case Region::CollarOutside:
        return r > 0.0 && r < dom.collar_width;
      case Region::Collar:
        return std::abs(r) < dom.collar_width;
      case Region::BallMinusDomain: {
        double n2 = 0.0;
        for (int k = 0; k < dom.n; ++k) n2 += abs2(z[k]);
        return r >= 0.0 && n2 < half * half;
      }
    }
    return false;
  };
  for (long i = 0; i < budget; ++i) {
    CVec<double> z(dom.n);
    for (int k = 0; k < dom.n; ++k)
      z[k] = {rng.uniform(-half, half), rng.uniform(-half, half)};
    ps.pts.push_back(z);
    ps.w.push_back(accept(z) ? w_box : 0.0);
  }
  ps.strata.push_back({0, ps.pts.size()});
  return ps;
}

// Radially stratified point set around a singular center: dyadic annuli with
// per-stratum sample floors, plus an outer bulk stratum.  Points outside the
// requested region are kept with zero weight so point sets remain usable as
// common random numbers across nearby centers.
inline PointSet sample_region_stratified(const DefiningDomain& dom, Region reg,
                                         const CVec<double>& center, long budget,
                                         uint64_t seed, int levels = 8,
                                         double r_outer = -1.0) {
  PointSet ps;
  ps.seed = seed;
  if (r_outer <= 0.0) r_outer = 0.5 * dom.inradius;
  auto in_region = [&](const CVec<double>& z) {
    double r = dom.rho(z);
    switch (reg) {
      case Region::Interior:
        return r < 0.0;
      case Region::CollarOutside:
        return r > 0.0 && r < dom.collar_width;
      case Region::Collar:
        return std::abs(r) < dom.collar_width;
      default:
        return false;
    }
  };
  // annuli [r_outer 2^-(l+1), r_outer 2^-l], innermost collapses to a disc
  long per = std::max<long>(64, budget / (levels + 3));
  for (int l = 0; l < levels; ++l) {
    double hi = r_outer * std::ldexp(1.0, -l);
    double lo = (l == levels - 1) ? 0.0 : 0.5 * hi;
    Rng rng(derive_seed(seed, 1000 + l));
    size_t b = ps.pts.size();
    double vol = M_PI * M_PI / 2.0 * (std::pow(hi, 4) - std::pow(lo, 4));
    for (long i = 0; i < per; ++i) {
      auto dir = rng.csphere(dom.n);
      double u = rng.uniform();
      double r = std::pow(u * (std::pow(hi, 4) - std::pow(lo, 4)) + std::pow(lo, 4), 0.25);
      CVec<double> z = center;
      for (int k = 0; k < dom.n; ++k) {
        z[k].re += r * dir[k].re;
        z[k].im += r * dir[k].im;
      }
      ps.pts.push_back(z);
      ps.w.push_back(in_region(z) ? vol / per : 0.0);
    }
    ps.strata.push_back({b, ps.pts.size()});
  }
  // bulk stratum: whole bounding box minus the stratified ball
  {
    Rng rng(derive_seed(seed, 999));
    size_t b = ps.pts.size();
    double half = dom.bounding_radius;
    long nb = std::max<long>(256, budget - per * levels);
    double w_box = quaddet::box_volume(half, dom.n) / nb;
    for (long i = 0; i < nb; ++i) {
      CVec<double> z(dom.n);
      for (int k = 0; k < dom.n; ++k)
        z[k] = {rng.uniform(-half, half), rng.uniform(-half, half)};
      double d2c = 0.0;
      for (int k = 0; k < dom.n; ++k) d2c += abs2(z[k] - center[k]);
      bool inside_strata = d2c < r_outer * r_outer;
      ps.pts.push_back(z);
      ps.w.push_back((!inside_strata && in_region(z)) ? w_box : 0.0);
    }
    ps.strata.push_back({b, ps.pts.size()});
  }
  return ps;
}

// Point set over the anisotropic shell P_eps(zeta) \ P_{eps/2}(zeta).
inline PointSet sample_shell(const PolyEllipsoid& P, const PolyEllipsoid& Phalf, long budget,
                             uint64_t seed) {
  PointSet ps;
  ps.seed = seed;
  Rng rng(seed);
  double w = P.volume() / budget;
  for (long i = 0; i < budget; ++i) {
    auto z = P.sample(rng);
    ps.pts.push_back(z);
    ps.w.push_back(Phalf.gauge2(z) >= 1.0 ? w : 0.0);
  }
  ps.strata.push_back({0, ps.pts.size()});
  return ps;
}

template <class F>
IntegralEstimate integrate(const F& f, const PointSet& ps) {
  return ps.integrate(f);
}

struct FitResult {
  double slope = 0.0;
  double stderr_ = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  // rms of log residuals
};

// Least-squares slope of log(value) against log(x).
inline FitResult fit_exponent(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 4)
    throw std::invalid_argument("exponent fit needs at least 4 usable levels");
  int m = static_cast<int>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::vector<double> lx(m), ly(m);
  for (int i = 0; i < m; ++i) {
    if (x[i] <= 0.0 || y[i] <= 0.0) throw std::invalid_argument("nonpositive fit datum");
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
    sx += lx[i];
    sy += ly[i];
    sxx += lx[i] * lx[i];
    sxy += lx[i] * ly[i];
  }
  FitResult r;
  double den = m * sxx - sx * sx;
  r.slope = (m * sxy - sx * sy) / den;
  r.intercept = (sy - r.slope * sx) / m;
  double ss = 0.0;
  for (int i = 0; i < m; ++i) {
    double e = ly[i] - (r.intercept + r.slope * lx[i]);
    ss += e * e;
  }
  r.residual = std::sqrt(ss / m);
  if (m > 2) r.stderr_ = std::sqrt(ss / (m - 2) / (sxx - sx * sx / m));
  return r;
}

// ---------------------------------------------------------------------------
// Schur-test checker

struct SchurReport {
  double A = 0.0;            // max^{1/gamma} of the two row/column sups
  double safety = 1.1;       // reported sampling safety factor on the sup
  double row_sup = 0.0, col_sup = 0.0;
};

// Kernel oracle G(x, y); mu/nu given as point sets; the essential sups are
// approximated by maxima over the sampled fibers and reported with a safety
// factor, never silently absorbed.
template <class G>
SchurReport schur_bound(const G& g, double gamma, const PointSet& mu, const PointSet& nu,
                        long fibers) {
  if (gamma < 1.0) throw std::invalid_argument("schur exponent must be >= 1");
  SchurReport rep;
  long step_nu = std::max<long>(1, static_cast<long>(nu.pts.size()) / fibers);
  for (size_t iy = 0; iy < nu.pts.size(); iy += step_nu) {
    auto est = mu.integrate([&](const CVec<double>& x) {
      return std::pow(std::abs(g(x, nu.pts[iy])), gamma);
    });
    rep.col_sup = std::max(rep.col_sup, est.value);
  }
  long step_mu = std::max<long>(1, static_cast<long>(mu.pts.size()) / fibers);
  for (size_t ix = 0; ix < mu.pts.size(); ix += step_mu) {
    auto est = nu.integrate([&](const CVec<double>& y) {
      return std::pow(std::abs(g(mu.pts[ix], y)), gamma);
    });
    rep.row_sup = std::max(rep.row_sup, est.value);
  }
  rep.A = std::pow(std::max(rep.row_sup, rep.col_sup), 1.0 / gamma);
  return rep;
}

// Discrete companion: exact p -> q operator norms of a nonnegative matrix
// for the exponent triples covered by the Schur test.
// T f(y) = sum_x G(x,y) f(x).
inline double matrix_norm_1_to_1(const std::vector<std::vector<double>>& G) {
  double m = 0.0;
  for (const auto& row : G) {
    double s = 0.0;
    for (double v : row) s += std::abs(v);
    m = std::max(m, s);
  }
  return m;  // sup over unit atoms in x of the L1 norm in y
}
inline double matrix_norm_inf_to_inf(const std::vector<std::vector<double>>& G) {
  double m = 0.0;
  size_t ny = G.empty() ? 0 : G[0].size();
  for (size_t y = 0; y < ny; ++y) {
    double s = 0.0;
    for (const auto& row : G) s += std::abs(row[y]);
    m = std::max(m, s);
  }
  return m;
}
inline double matrix_norm_1_to_2(const std::vector<std::vector<double>>& G) {
  double m = 0.0;
  for (const auto& row : G) {
    double s = 0.0;
    for (double v : row) s += v * v;
    m = std::max(m, std::sqrt(s));
  }
  return m;
}
inline double matrix_schur_A(const std::vector<std::vector<double>>& G, double gamma) {
  double rs = 0.0, cs = 0.0;
  size_t ny = G.empty() ? 0 : G[0].size();
  for (const auto& row : G) {
    double s = 0.0;
    for (double v : row) s += std::pow(std::abs(v), gamma);
    rs = std::max(rs, s);
  }
  for (size_t y = 0; y < ny; ++y) {
    double s = 0.0;
    for (const auto& row : G) s += std::pow(std::abs(row[y]), gamma);
    cs = std::max(cs, s);
  }
  return std::pow(std::max(rs, cs), 1.0 / gamma);
}

// ---------------------------------------------------------------------------
// Kernel experiments

struct ShellRow {
  double eps = 0.0;
  double top = 0.0, bot = 0.0;
  double top_gamma = 0.0, bot_gamma = 0.0;
  double top_err = 0.0, bot_err = 0.0;
  long samples = 0;
};

struct ShellSuite {
  std::vector<ShellRow> rows;
  double gamma_q = 0.0;
  FitResult top_fit, bot_fit, top_gamma_fit, bot_gamma_fit;
  bool bot_degenerate = false;  // vertical part identically zero (n = 2)
};

inline int r_exponent(int n, int q, int m_q) { return (n - q + 1) * m_q + 2 * q; }

// Per-shell integrals of |D^j K^{top/bot}| and their gamma_q powers over
// Omega intersect P_eps \ P_{eps/2} at a fixed external zeta.
inline ShellSuite shell_integral_suite(const KernelOracle& oracle, const CVec<double>& zeta,
                                       int j, const std::vector<double>& eps_sweep,
                                       long budget, uint64_t seed) {
  const auto& dom = oracle.family().domain();
  int m_q = dom.type_vector[0];
  int rq = r_exponent(dom.n, oracle.q() + 1, m_q);
  ShellSuite out;
  out.gamma_q = static_cast<double>(rq) / (rq - 1);
  double bot_peak = 0.0;
  for (double eps : eps_sweep) {
    PolyEllipsoid P{minimal_basis(dom, zeta, eps, derive_seed(seed, 1))};
    PolyEllipsoid Ph{minimal_basis(dom, zeta, eps / 2, derive_seed(seed, 1))};
    auto ps = sample_shell(P, Ph, budget, derive_seed(seed, static_cast<uint64_t>(1e6 * eps)));
    ShellRow row;
    row.eps = eps;
    row.samples = budget;
    auto top = ps.integrate([&](const CVec<double>& w) {
      if (!dom.in_domain(w)) return 0.0;
      return oracle.deriv_magnitude(w, zeta, KernelPart::Top, j);
    });
    auto bot = ps.integrate([&](const CVec<double>& w) {
      if (!dom.in_domain(w)) return 0.0;
      return oracle.deriv_magnitude(w, zeta, KernelPart::Bot, j);
    });
    auto topg = ps.integrate([&](const CVec<double>& w) {
      if (!dom.in_domain(w)) return 0.0;
      return std::pow(oracle.deriv_magnitude(w, zeta, KernelPart::Top, j), out.gamma_q);
    });
    auto botg = ps.integrate([&](const CVec<double>& w) {
      if (!dom.in_domain(w)) return 0.0;
      return std::pow(oracle.deriv_magnitude(w, zeta, KernelPart::Bot, j), out.gamma_q);
    });
    row.top = top.value;
    row.top_err = top.stderr_;
    row.bot = bot.value;
    row.bot_err = bot.stderr_;
    row.top_gamma = topg.value;
    row.bot_gamma = botg.value;
    out.rows.push_back(row);
    bot_peak = std::max(bot_peak, std::abs(row.bot));
  }
  std::vector<double> xs, ys;
  for (const auto& r : out.rows) {
    xs.push_back(r.eps);
    ys.push_back(r.top);
  }
  out.top_fit = fit_exponent(xs, ys);
  ys.clear();
  for (const auto& r : out.rows) ys.push_back(r.top_gamma);
  out.top_gamma_fit = fit_exponent(xs, ys);
  out.bot_degenerate = bot_peak < 1e-14;
  if (!out.bot_degenerate) {
    ys.clear();
    for (const auto& r : out.rows) ys.push_back(r.bot);
    out.bot_fit = fit_exponent(xs, ys);
    ys.clear();
    for (const auto& r : out.rows) ys.push_back(r.bot_gamma);
    out.bot_gamma_fit = fit_exponent(xs, ys);
  }
  return out;
}

struct WeightedRow {
  double dist = 0.0;
  double value = 0.0, stderr_ = 0.0;
  double value_gamma = 0.0, stderr_gamma = 0.0;
  long samples = 0;
};

struct WeightedSuite {
  std::vector<WeightedRow> rows;
  double gamma_q = 0.0;
  FitResult fit, fit_gamma;
};

// Weighted collar integrals dist(zeta)^s |D^k K^part(z, zeta)| dV(zeta) (and
// the gamma_q-power variant) for z on a dyadic approach schedule toward a
// boundary anchor; fits the dist(z)-exponent.
inline WeightedSuite weighted_kernel_suite(const KernelOracle& oracle,
                                           const CVec<double>& anchor, KernelPart part, int k,
                                           double s, const std::vector<double>& dists,
                                           long budget, uint64_t seed) {
  const auto& dom = oracle.family().domain();
  int m_q = dom.type_vector[0];
  int rq = r_exponent(dom.n, oracle.q() + 1, m_q);
  WeightedSuite out;
  out.gamma_q = static_cast<double>(rq) / (rq - 1);
  // inward unit normal at the anchor
  auto g = dom.real_grad(anchor);
  double gn = 0.0;
  for (double v : g) gn += v * v;
  gn = std::sqrt(gn);
  double d_min = *std::min_element(dists.begin(), dists.end());
  double r_outer = 0.5 * dom.inradius;
  int levels =
      std::clamp(static_cast<int>(std::ceil(std::log2(r_outer / d_min))) + 2, 8, 18);
  for (double d : dists) {
    CVec<double> z = anchor;
    for (int i = 0; i < dom.n; ++i) {
      z[i].re -= d * g[2 * i] / gn;
      z[i].im -= d * g[2 * i + 1] / gn;
    }
    auto ps = sample_region_stratified(dom, Region::CollarOutside, anchor, budget,
                                       derive_seed(seed, static_cast<uint64_t>(1e9 * d)),
                                       levels, r_outer);
    WeightedRow row;
    row.dist = dom.dist_to_boundary(z);
    row.samples = static_cast<long>(ps.pts.size());
    auto est = ps.integrate([&](const CVec<double>& zeta) {
      double dz = dom.dist_to_boundary(zeta);
      return std::pow(dz, s) * oracle.deriv_magnitude(z, zeta, part, k);
    });
    auto estg = ps.integrate([&](const CVec<double>& zeta) {
      double dz = dom.dist_to_boundary(zeta);
      return std::pow(std::pow(dz, s) * oracle.deriv_magnitude(z, zeta, part, k), out.gamma_q);
    });
    row.value = est.value;
    row.stderr_ = est.stderr_;
    row.value_gamma = estg.value;
    row.stderr_gamma = estg.stderr_;
    out.rows.push_back(row);
  }
  std::vector<double> xs, ys, yg;
  for (const auto& r : out.rows) {
    xs.push_back(r.dist);
    ys.push_back(r.value);
    yg.push_back(r.value_gamma);
  }
  out.fit = fit_exponent(xs, ys);
  out.fit_gamma = fit_exponent(xs, yg);
  return out;
}

// Exact arithmetic identity behind the gamma_q exponents: for each (p, m_p),
// (n-p+1)(1-g) + (2p-1)(1-g)/m_p + 1/m_p = 0 at g = r_p / (r_p - 1).
inline double gamma_exponent_identity(int n, int p, int m_p) {
  int rp = r_exponent(n, p, m_p);
  double g = static_cast<double>(rp) / (rp - 1);
  return (n - p + 1) * (1 - g) + (2.0 * p - 1) * (1 - g) / m_p + 1.0 / m_p;
}

}  // namespace dbar
