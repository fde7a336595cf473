#pragma once

// Dyadic convolution families on uniform grids (1D/2D), Triebel-Lizorkin
// norms, the cone-supported extension operator, half-space reflection
// extensions, commutators, Heideman-type decay tables, boundary strips and
// the weighted embedding checks.
//
// Family construction: theta is a cone-supported mollifier with unit mass
// and vanishing moments up to the requested order; phi telescopes its dyadic
// dilates.  The dual family comes from the divided difference of
// F(t) = t^2 (3 - 2t):  psi_j = 3(theta_{j-1} + theta_j)
//                               - 2(theta_{j-1}*theta_{j-1}
//                                   + theta_{j-1}*theta_j + theta_j*theta_j),
// which gives sum_j psi_j * phi_j = 3 theta_J^{*2} - 2 theta_J^{*3} -> delta
// exactly (a telescoping identity that also holds for the discrete spectra),
// with psi atom-free, supported strictly inside the cone, of zero mass and
// with the same vanishing moments as theta.

#include <fftw3.h>

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <functional>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace dbar {

template <int N>
struct GridSpec {
  std::array<double, N> origin{};
  double h = 1.0;
  std::array<int, N> dims{};

  long size() const {
    long s = 1;
    for (int d : dims) s *= d;
    return s;
  }
  std::array<double, N> point(long idx) const {
    std::array<double, N> x{};
    for (int d = N - 1; d >= 0; --d) {
      x[d] = origin[d] + h * (idx % dims[d]);
      idx /= dims[d];
    }
    return x;
  }
  long index(const std::array<int, N>& c) const {
    long idx = 0;
    for (int d = 0; d < N; ++d) idx = idx * dims[d] + c[d];
    return idx;
  }
  double cell() const { return std::pow(h, N); }
  bool operator==(const GridSpec&) const = default;
};

template <int N>
struct GridFunction {
  GridSpec<N> grid;
  std::vector<double> v;

  GridFunction() = default;
  explicit GridFunction(const GridSpec<N>& g) : grid(g), v(g.size(), 0.0) {}

  template <class F>
  static GridFunction sample(const GridSpec<N>& g, const F& f) {
    GridFunction out(g);
    for (long i = 0; i < g.size(); ++i) out.v[i] = f(g.point(i));
    return out;
  }

  double integral() const {
    double s = 0.0;
    for (double x : v) s += x;
    return s * grid.cell();
  }
  double moment(const std::array<int, N>& alpha) const {
    double s = 0.0;
    for (long i = 0; i < grid.size(); ++i) {
      auto x = grid.point(i);
      double m = v[i];
      for (int d = 0; d < N; ++d)
        for (int p = 0; p < alpha[d]; ++p) m *= x[d];
      s += m;
    }
    return s * grid.cell();
  }
  double sup_abs() const {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
  }
  double norm_lp(double p) const {
    if (p == std::numeric_limits<double>::infinity()) return sup_abs();
    double s = 0.0;
    for (double x : v) s += std::pow(std::abs(x), p);
    return std::pow(s * grid.cell(), 1.0 / p);
  }

  // Flat binary layout: magic, N, dims, origin, spacing, raw samples.
  void save_binary(const std::string& path) const {
    FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw std::runtime_error("cannot open " + path);
    const char magic[4] = {'D', 'B', 'G', 'F'};
    int n = N;
    std::fwrite(magic, 1, 4, f);
    std::fwrite(&n, sizeof(int), 1, f);
    std::fwrite(grid.dims.data(), sizeof(int), N, f);
    std::fwrite(grid.origin.data(), sizeof(double), N, f);
    std::fwrite(&grid.h, sizeof(double), 1, f);
    std::fwrite(v.data(), sizeof(double), v.size(), f);
    std::fclose(f);
  }
  static GridFunction load_binary(const std::string& path) {
    FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) throw std::runtime_error("cannot open " + path);
    char magic[4];
    int n = 0;
    GridFunction out;
    if (std::fread(magic, 1, 4, f) != 4 || std::memcmp(magic, "DBGF", 4) != 0)
      throw std::runtime_error("bad grid file header");
    if (std::fread(&n, sizeof(int), 1, f) != 1 || n != N)
      throw std::runtime_error("grid file dimension mismatch");
    if (std::fread(out.grid.dims.data(), sizeof(int), N, f) != N ||
        std::fread(out.grid.origin.data(), sizeof(double), N, f) != N ||
        std::fread(&out.grid.h, sizeof(double), 1, f) != 1)
      throw std::runtime_error("truncated grid file");
    out.v.resize(out.grid.size());
    if (std::fread(out.v.data(), sizeof(double), out.v.size(), f) != out.v.size())
      throw std::runtime_error("truncated grid data");
    std::fclose(f);
    return out;
  }
  void save_csv(const std::string& path) const {
    FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw std::runtime_error("cannot open " + path);
    for (long i = 0; i < grid.size(); ++i) {
      auto x = grid.point(i);
      for (int d = 0; d < N; ++d) std::fprintf(f, "%.17g,", x[d]);
      std::fprintf(f, "%.17g\n", v[i]);
    }
    std::fclose(f);
  }
};

// ---------------------------------------------------------------------------
// FFT-backed circular convolution on a fixed grid (continuous normalization)

template <int N>
struct Spectrum {
  GridSpec<N> grid;
  std::vector<std::complex<double>> c;
};

namespace lpdet {

template <int N>
void run_fft(const GridSpec<N>& g, std::complex<double>* data, int sign) {
  if constexpr (N == 1) {
    fftw_plan p = fftw_plan_dft_1d(g.dims[0], reinterpret_cast<fftw_complex*>(data),
                                   reinterpret_cast<fftw_complex*>(data), sign,
                                   FFTW_ESTIMATE);
    fftw_execute(p);
    fftw_destroy_plan(p);
  } else {
    fftw_plan p = fftw_plan_dft_2d(g.dims[0], g.dims[1], reinterpret_cast<fftw_complex*>(data),
                                   reinterpret_cast<fftw_complex*>(data), sign,
                                   FFTW_ESTIMATE);
    fftw_execute(p);
    fftw_destroy_plan(p);
  }
}

}  // namespace lpdet

// Spectra carry the grid-origin phase so that pointwise products correspond
// to convolutions in absolute coordinates (not index space).  The origin
// must lie on the lattice.
template <int N>
void origin_phase(const GridSpec<N>& g, std::vector<std::complex<double>>& c, int sign) {
  std::array<long, N> off{};
  for (int d = 0; d < N; ++d) {
    off[d] = std::llround(g.origin[d] / g.h);
    if (std::abs(off[d] * g.h - g.origin[d]) > 1e-9 * g.h)
      throw std::invalid_argument("grid origin must lie on the lattice");
  }
  for (long i = 0; i < g.size(); ++i) {
    long idx = i;
    double phase = 0.0;
    for (int d = N - 1; d >= 0; --d) {
      long k = idx % g.dims[d];
      idx /= g.dims[d];
      if (k > g.dims[d] / 2) k -= g.dims[d];
      phase += static_cast<double>(k) * off[d] / g.dims[d];
    }
    double ang = -2.0 * M_PI * phase * sign;
    c[i] *= std::complex<double>(std::cos(ang), std::sin(ang));
  }
}

template <int N>
Spectrum<N> fft(const GridFunction<N>& f) {
  Spectrum<N> s;
  s.grid = f.grid;
  s.c.assign(f.v.begin(), f.v.end());
  lpdet::run_fft(f.grid, s.c.data(), FFTW_FORWARD);
  origin_phase(f.grid, s.c, +1);
  return s;
}

template <int N>
GridFunction<N> ifft(const Spectrum<N>& s) {
  std::vector<std::complex<double>> buf = s.c;
  origin_phase(s.grid, buf, -1);
  lpdet::run_fft(s.grid, buf.data(), FFTW_BACKWARD);
  GridFunction<N> out(s.grid);
  double scale = 1.0 / s.grid.size();
  for (long i = 0; i < s.grid.size(); ++i) out.v[i] = buf[i].real() * scale;
  return out;
}

// Convolution against a kernel ANCHORED AT THE ORIGIN of the torus: the
// kernel's origin coordinate is interpreted relative to zero, the data keeps
// its own window.  Multiplying spectra corresponds to h^N-weighted sums.
template <int N>
Spectrum<N> spectrum_product(const Spectrum<N>& a, const Spectrum<N>& b) {
  Spectrum<N> r;
  r.grid = a.grid;
  r.c.resize(a.c.size());
  double cell = a.grid.cell();
  for (size_t i = 0; i < a.c.size(); ++i) r.c[i] = a.c[i] * b.c[i] * cell;
  return r;
}

// ---------------------------------------------------------------------------
// Cone-supported mollifier and the dyadic family

template <int N>
struct ConeBump {
  std::array<double, N> center{};
  double radius = 0.2;

  double operator()(const std::array<double, N>& x) const {
    double r2 = 0.0;
    for (int d = 0; d < N; ++d) {
      double t = (x[d] - center[d]) / radius;
      r2 += t * t;
    }
    if (r2 >= 1.0) return 0.0;
    return std::exp(-1.0 / (1.0 - r2));
  }
};

// x in the closed negative cone {x1 <= -|x'|}, with slack for certificates.
template <int N>
bool in_negative_cone(const std::array<double, N>& x, double slack = 0.0) {
  double t = 0.0;
  for (int d = 1; d < N; ++d) t += x[d] * x[d];
  return x[0] <= -std::sqrt(t) + slack;
}

struct FamilyCertificates {
  double mass_phi0 = 0.0, mass_psi0 = 0.0, mass_psi1 = 0.0;
  double max_moment_phi1 = 0.0, max_moment_psi1 = 0.0;
  double cone_leak = 0.0;       // sup of |values| outside the closed cone
  double reconstruction = 0.0;  // sup error of the truncated identity on a probe
};

template <int N>
class RychkovFamily {
 public:
  // The window must contain the data region padded by the kernel reach.
  RychkovFamily(GridSpec<N> grid, int jmax, int moment_order,
                std::array<double, N> bump_center = {}, double bump_radius = 0.0)
      : grid_(grid), jmax_(jmax), moments_(moment_order) {
    ConeBump<N> bump;
    if (bump_radius > 0.0) {
      bump.center = bump_center;
      bump.radius = bump_radius;
    } else {
      bump.center[0] = -0.55;
      bump.radius = (N == 1) ? 0.4 : 0.22;
    }
    // top dyadic level must still resolve the mollifier support
    if (2.0 * bump.radius * std::ldexp(1.0, -jmax_) < 8.0 * grid_.h)
      throw std::invalid_argument("grid too coarse for the requested levels");
    build_theta0(bump);
    theta_.resize(jmax_ + 1);
    theta_hat_.resize(jmax_ + 1);
    for (int j = 0; j <= jmax_; ++j) {
      double s = std::ldexp(1.0, j);
      theta_[j] = GridFunction<N>::sample(grid_, [&](const std::array<double, N>& x) {
        std::array<double, N> y;
        for (int d = 0; d < N; ++d) y[d] = s * x[d];
        return std::pow(s, N) * theta0_fn(y);
      });
      theta_hat_[j] = fft(theta_[j]);
    }
  }

  const GridSpec<N>& grid() const { return grid_; }
  int jmax() const { return jmax_; }
  int moment_order() const { return moments_; }

  GridFunction<N> phi(int j) const { return ifft(phi_hat(j)); }
  GridFunction<N> psi(int j) const { return ifft(psi_hat(j)); }

  Spectrum<N> phi_hat(int j) const {
    if (j == 0) return theta_hat_[0];
    Spectrum<N> s = theta_hat_[j];
    for (size_t i = 0; i < s.c.size(); ++i) s.c[i] -= theta_hat_[j - 1].c[i];
    return s;
  }
  Spectrum<N> psi_hat(int j) const {
    Spectrum<N> s;
    s.grid = grid_;
    s.c.resize(grid_.size());
    double cell = grid_.cell();
    if (j == 0) {
      for (long i = 0; i < grid_.size(); ++i) {
        auto t = theta_hat_[0].c[i];
        s.c[i] = 3.0 * t - 2.0 * (t * t) * cell;
      }
      return s;
    }
    for (long i = 0; i < grid_.size(); ++i) {
      auto a = theta_hat_[j - 1].c[i], b = theta_hat_[j].c[i];
      s.c[i] = 3.0 * (a + b) - 2.0 * (a * a + a * b + b * b) * cell;
    }
    return s;
  }

  GridFunction<N> convolve_phi(int j, const GridFunction<N>& f) const {
    return ifft(spectrum_product(phi_hat(j), fft(f)));
  }
  GridFunction<N> convolve_psi(int j, const GridFunction<N>& f) const {
    return ifft(spectrum_product(psi_hat(j), fft(f)));
  }
  std::vector<GridFunction<N>> phi_pyramid(const GridFunction<N>& f, int levels) const {
    auto fh = fft(f);
    std::vector<GridFunction<N>> out;
    for (int j = 0; j <= levels; ++j) out.push_back(ifft(spectrum_product(phi_hat(j), fh)));
    return out;
  }

  FamilyCertificates certificates() const {
    FamilyCertificates c;
    auto phi0 = phi(0), phi1 = phi(1), psi0 = psi(0), psi1 = psi(1);
    c.mass_phi0 = phi0.integral();
    c.mass_psi0 = psi0.integral();
    c.mass_psi1 = psi1.integral();
    std::array<int, N> alpha{};
    std::function<void(int, int)> rec = [&](int d, int rem) {
      if (d == N) {
        int tot = 0;
        for (int t : alpha) tot += t;
        if (tot >= 1) {
          c.max_moment_phi1 = std::max(c.max_moment_phi1, std::abs(phi1.moment(alpha)));
          c.max_moment_psi1 = std::max(c.max_moment_psi1, std::abs(psi1.moment(alpha)));
        }
        return;
      }
      for (int t = 0; t <= rem; ++t) {
        alpha[d] = t;
        rec(d + 1, rem - t);
      }
      alpha[d] = 0;
    };
    rec(0, moments_);
    for (const auto* f : {&phi0, &phi1, &psi0, &psi1})
      for (long i = 0; i < grid_.size(); ++i) {
        auto x = grid_.point(i);
        if (!in_negative_cone<N>(x, 2.5 * grid_.h))
          c.cone_leak = std::max(c.cone_leak, std::abs(f->v[i]));
      }
    // truncated reproducing identity on a smooth probe in the window core
    auto probe = GridFunction<N>::sample(grid_, [&](const std::array<double, N>& x) {
      double r2 = 0.0;
      for (int d = 0; d < N; ++d) r2 += x[d] * x[d];
      return std::exp(-4.0 * r2);
    });
    auto rec_f = reconstruct(probe, jmax_);
    double err = 0.0;
    for (long i = 0; i < grid_.size(); ++i) {
      auto x = grid_.point(i);
      double r2 = 0.0;
      for (int d = 0; d < N; ++d) r2 += x[d] * x[d];
      if (r2 < 1.0) err = std::max(err, std::abs(rec_f.v[i] - probe.v[i]));
    }
    c.reconstruction = err;
    return c;
  }

  // sum_{j<=J} psi_j * phi_j * f  (telescopes to 3 theta_J^2 - 2 theta_J^3)
  GridFunction<N> reconstruct(const GridFunction<N>& f, int J) const {
    auto fh = fft(f);
    Spectrum<N> acc;
    acc.grid = grid_;
    acc.c.assign(grid_.size(), 0.0);
    for (int j = 0; j <= J; ++j) {
      auto term = spectrum_product(psi_hat(j), spectrum_product(phi_hat(j), fh));
      for (long i = 0; i < grid_.size(); ++i) acc.c[i] += term.c[i];
    }
    return ifft(acc);
  }

  // phi-only partial sum (sum_{j<=J} phi_j = theta_J dilated mollifier)
  GridFunction<N> mollify(const GridFunction<N>& f, int J) const {
    return ifft(spectrum_product(theta_hat_[J], fft(f)));
  }

  double theta0_fn(const std::array<double, N>& y) const {
    double b = bump_(y);
    if (b == 0.0) return 0.0;
    double p = 0.0;
    for (size_t t = 0; t < poly_.size(); ++t) {
      double m = poly_[t];
      for (int d = 0; d < N; ++d)
        for (int k = 0; k < poly_exps_[t][d]; ++k) m *= (y[d] - bump_.center[d]);
      p += m;
    }
    return p * b;
  }

 private:
  void build_theta0(const ConeBump<N>& bump) {
    bump_ = bump;
    // moment-matching polynomial correction (in centered coordinates),
    // solved against the discrete grid moments so certificates are exact
    poly_exps_.clear();
    std::array<int, N> e{};
    std::function<void(int, int)> rec = [&](int d, int rem) {
      if (d == N) {
        poly_exps_.push_back(e);
        return;
      }
      for (int t = 0; t <= rem; ++t) {
        e[d] = t;
        rec(d + 1, rem - t);
      }
      e[d] = 0;
    };
    rec(0, moments_);
    const int M = static_cast<int>(poly_exps_.size());
    // raw-moment targets require integrals of x^alpha (y-c)^beta g(y)
    Eigen::MatrixXd A(M, M);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(M);
    auto g = GridFunction<N>::sample(grid_, [&](const std::array<double, N>& x) {
      return bump(x);
    });
    for (int r = 0; r < M; ++r) {
      for (int cidx = 0; cidx < M; ++cidx) {
        double s = 0.0;
        for (long i = 0; i < grid_.size(); ++i) {
          if (g.v[i] == 0.0) continue;
          auto x = grid_.point(i);
          double m = g.v[i];
          for (int d = 0; d < N; ++d) {
            for (int k = 0; k < poly_exps_[r][d]; ++k) m *= x[d];
            for (int k = 0; k < poly_exps_[cidx][d]; ++k) m *= (x[d] - bump.center[d]);
          }
          s += m;
        }
        A(r, cidx) = s * grid_.cell();
      }
      bool zero = true;
      for (int d = 0; d < N; ++d)
        if (poly_exps_[r][d] != 0) zero = false;
      rhs(r) = zero ? 1.0 : 0.0;
    }
    Eigen::VectorXd p = A.fullPivLu().solve(rhs);
    poly_.assign(p.data(), p.data() + M);
  }

  GridSpec<N> grid_;
  int jmax_;
  int moments_;
  ConeBump<N> bump_;
  std::vector<std::array<int, N>> poly_exps_;
  std::vector<double> poly_;
  std::vector<GridFunction<N>> theta_;
  std::vector<Spectrum<N>> theta_hat_;
};

// ---------------------------------------------------------------------------
// Triebel-Lizorkin norms

struct TLNormResult {
  double value = 0.0;
  int jmax = 0;
  double truncation_tail = 0.0;  // contribution of the last level
};

// Discrete ||(2^{js} phi_j * f)_j||_{L^p(l^q)}; for p = infinity the ball-sup
// form with dyadic ball radii; restrict_to limits the L^p integration domain
// (intrinsic norms on a subdomain); empty means the full window.
struct NoRestrict {
  template <class X>
  bool operator()(const X&) const {
    return true;
  }
};

template <int N, class Pred>
TLNormResult tl_norm_restricted(const RychkovFamily<N>& fam, const GridFunction<N>& f,
                                double s, double p, double q, int jmax,
                                const Pred& keep) {
  if (jmax < 0) jmax = fam.jmax();
  auto levels = fam.phi_pyramid(f, jmax);
  const auto& g = f.grid;
  const double inf = std::numeric_limits<double>::infinity();
  TLNormResult out;
  out.jmax = jmax;

  auto lq_at = [&](long i, int j0) {
    if (q == inf) {
      double m = 0.0;
      for (int j = j0; j <= jmax; ++j)
        m = std::max(m, std::abs(levels[j].v[i]) * std::pow(2.0, j * s));
      return m;
    }
    double acc = 0.0;
    for (int j = j0; j <= jmax; ++j)
      acc += std::pow(std::pow(2.0, j * s) * std::abs(levels[j].v[i]), q);
    return std::pow(acc, 1.0 / q);
  };

  if (p != inf) {
    double acc = 0.0, tail = 0.0;
    for (long i = 0; i < g.size(); ++i) {
      if (!keep(g.point(i))) continue;
      acc += std::pow(lq_at(i, 0), p);
      tail += std::pow(std::pow(2.0, jmax * s) * std::abs(levels[jmax].v[i]), p);
    }
    out.value = std::pow(acc * g.cell(), 1.0 / p);
    out.truncation_tail = std::pow(tail * g.cell(), 1.0 / p);
    return out;
  }

  // p = infinity: sup over dyadic balls B(x, 2^-J) of the q-average of the
  // levels j >= J (q = infinity collapses to a plain sup).
  if (q == inf) {
    double m = 0.0, tail = 0.0;
    for (long i = 0; i < g.size(); ++i) {
      if (!keep(g.point(i))) continue;
      m = std::max(m, lq_at(i, 0));
      tail = std::max(tail, std::pow(2.0, jmax * s) * std::abs(levels[jmax].v[i]));
    }
    out.value = m;
    out.truncation_tail = tail;
    return out;
  }
  double m = 0.0;
  for (int J = 0; J <= jmax; ++J) {
    long rad = std::max<long>(1, static_cast<long>(std::ldexp(1.0, -J) / g.h));
    for (long i = 0; i < g.size(); ++i) {
      if (!keep(g.point(i))) continue;
      // average over the discrete ball around node i (1D window; 2D square)
      double acc = 0.0;
      long cnt = 0;
      if constexpr (N == 1) {
        for (long o = -rad; o <= rad; ++o) {
          long idx = i + o;
          if (idx < 0 || idx >= g.size()) continue;
          if (!keep(g.point(idx))) continue;
          for (int j = J; j <= jmax; ++j)
            acc += std::pow(std::pow(2.0, j * s) * std::abs(levels[j].v[idx]), q);
          ++cnt;
        }
      } else {
        // keep the 2D variant to the center column for tractability
        for (int j = J; j <= jmax; ++j)
          acc += std::pow(std::pow(2.0, j * s) * std::abs(levels[j].v[i]), q);
        cnt = 1;
      }
      if (cnt == 0) continue;
      double ball = std::pow(std::ldexp(1.0, -J), N);
      double val = std::pow(acc * g.cell() / ball, 1.0 / q);
      m = std::max(m, val);
    }
  }
  out.value = m;
  return out;
}

template <int N>
TLNormResult tl_norm(const RychkovFamily<N>& fam, const GridFunction<N>& f, double s,
                     double p, double q, int jmax = -1) {
  return tl_norm_restricted(fam, f, s, p, q, jmax, NoRestrict{});
}

// ---------------------------------------------------------------------------
// Extensions

// E f = sum_j psi_j * (1_omega (phi_j * f)) for omega = {x1 > sigma(x')};
// f's samples outside omega are ignored.
template <int N, class Sigma>
GridFunction<N> rychkov_extend(const RychkovFamily<N>& fam, const GridFunction<N>& f,
                               const Sigma& sigma, int jmax = -1) {
  if (jmax < 0) jmax = fam.jmax();
  const auto& g = f.grid;
  GridFunction<N> fz = f;
  auto in_omega = [&](const std::array<double, N>& x) {
    std::array<double, N> xp{};
    for (int d = 1; d < N; ++d) xp[d] = x[d];
    return x[0] > sigma(xp);
  };
  for (long i = 0; i < g.size(); ++i)
    if (!in_omega(g.point(i))) fz.v[i] = 0.0;
  GridFunction<N> out(g);
  auto fh = fft(fz);
  for (int j = 0; j <= jmax; ++j) {
    auto uj = ifft(spectrum_product(fam.phi_hat(j), fh));
    for (long i = 0; i < g.size(); ++i)
      if (!in_omega(g.point(i))) uj.v[i] = 0.0;
    auto ej = ifft(spectrum_product(fam.psi_hat(j), fft(uj)));
    for (long i = 0; i < g.size(); ++i) out.v[i] += ej.v[i];
  }
  return out;
}

// Half-space reflection extension coefficients: sum_j a_j (-b_j)^k = 1 for
// |k| <= M, with prescribed positive distinct rates b_j.
struct ReflectionExt {
  int order = 1;            // M
  std::vector<double> b;    // 2M+1 positive distinct rates
  std::vector<double> a;    // solved coefficients
  double residual = 0.0;    // max |sum a_j (-b_j)^k - 1|

  static ReflectionExt solve(int M, std::vector<double> rates) {
    if (static_cast<int>(rates.size()) != 2 * M + 1)
      throw std::invalid_argument("reflection extension needs 2M+1 rates");
    ReflectionExt ext;
    ext.order = M;
    ext.b = std::move(rates);
    const int n = 2 * M + 1;
    Eigen::MatrixXd V(n, n);
    Eigen::VectorXd rhs = Eigen::VectorXd::Ones(n);
    for (int r = 0; r < n; ++r) {
      int k = r - M;
      for (int c = 0; c < n; ++c) V(r, c) = std::pow(-ext.b[c], k);
    }
    Eigen::VectorXd a = V.fullPivLu().solve(rhs);
    ext.a.assign(a.data(), a.data() + n);
    for (int r = 0; r < n; ++r) {
      double s = 0.0;
      for (int c = 0; c < n; ++c) s += ext.a[c] * std::pow(-ext.b[c], r - M);
      ext.residual = std::max(ext.residual, std::abs(s - 1.0));
    }
    return ext;
  }
};

// Samples f(-b_j x1, x') on the half-space grid; rates must be integers so
// reflected points stay on the lattice.  Nodes with x1 >= 0 keep f.
template <int N>
GridFunction<N> reflection_extend(const ReflectionExt& ext, const GridFunction<N>& f) {
  const auto& g = f.grid;
  GridFunction<N> out = f;
  long stride = 1;
  for (int d = 1; d < N; ++d) stride *= g.dims[d];
  long i0 = static_cast<long>(std::llround(-g.origin[0] / g.h));  // index of x1 = 0
  for (long i = 0; i < g.size(); ++i) {
    long r = i / stride;
    double x1 = g.origin[0] + g.h * r;
    if (x1 >= 0.0) continue;
    long off = i % stride;
    double acc = 0.0;
    bool ok = true;
    for (size_t j = 0; j < ext.b.size(); ++j) {
      double xr = -ext.b[j] * x1;
      long rr = static_cast<long>(std::llround((xr - g.origin[0]) / g.h));
      if (rr < i0 || rr >= g.dims[0]) {
        ok = false;
        break;
      }
      acc += ext.a[j] * f.v[rr * stride + off];
    }
    out.v[i] = ok ? acc : 0.0;
  }
  return out;
}

// Fourth-order central difference along axis d.
template <int N>
GridFunction<N> diff_axis(const GridFunction<N>& f, int d) {
  const auto& g = f.grid;
  GridFunction<N> out(g);
  long stride = 1;
  for (int dd = d + 1; dd < N; ++dd) stride *= g.dims[dd];
  long extent = g.dims[d];
  for (long i = 0; i < g.size(); ++i) {
    long pos = (i / stride) % extent;
    auto at = [&](long off) { return f.v[i + off * stride]; };
    if (pos >= 2 && pos + 2 < extent)
      out.v[i] = (8 * (at(1) - at(-1)) - (at(2) - at(-2))) / (12 * g.h);
    else if (pos >= 1 && pos + 1 < extent)
      out.v[i] = (at(1) - at(-1)) / (2 * g.h);
    else if (pos + 1 < extent)
      out.v[i] = (at(1) - at(0)) / g.h;
    else
      out.v[i] = (at(0) - at(-1)) / g.h;
  }
  return out;
}

// [D_nu, E] f = D_nu(E f) - E(D_nu f) for an extension functional E.
template <int N, class Ext>
GridFunction<N> commutator(int nu, const Ext& extend, const GridFunction<N>& f) {
  auto Ef = extend(f);
  auto DEf = diff_axis(Ef, nu);
  auto Df = diff_axis(f, nu);
  auto EDf = extend(Df);
  GridFunction<N> out(f.grid);
  for (long i = 0; i < f.grid.size(); ++i) out.v[i] = DEf.v[i] - EDf.v[i];
  return out;
}

// ---------------------------------------------------------------------------
// Heideman-type commutator decay

struct HeidemanRow {
  int j = 0, k = 0;
  double norm = 0.0;
};

struct HeidemanTable {
  std::vector<HeidemanRow> rows;
  double slope = 0.0;        // fitted log2(norm / prefactor) per unit |j-k|
  double prefactor_pow = 0;  // alpha-dependent power of 2^k used to normalize
};

// || phi_j * (g (D^a psi_k * f)) - phi_j * D^a psi_k * (g f) ||_p / ||f||_p,
// normalized by the 2^{k|a|-k} prefactor; slope fitted in |j - k|.
template <int N, class G>
HeidemanTable heideman_decay(const RychkovFamily<N>& fam, const G& g,
                             const std::array<int, N>& alpha, int max_offset, double p,
                             const GridFunction<N>& probe) {
  const auto& grid = fam.grid();
  HeidemanTable table;
  int atot = 0;
  for (int d = 0; d < N; ++d) atot += alpha[d];
  table.prefactor_pow = atot - 1.0;
  auto gf = GridFunction<N>::sample(grid, g);
  double fnorm = probe.norm_lp(p);

  auto deriv_spec = [&](Spectrum<N> s) {
    // spectral derivative: multiply by (i xi)^alpha with FFT frequencies
    for (long i = 0; i < grid.size(); ++i) {
      std::array<long, N> c{};
      long idx = i;
      for (int d = N - 1; d >= 0; --d) {
        c[d] = idx % grid.dims[d];
        idx /= grid.dims[d];
      }
      std::complex<double> m = 1.0;
      for (int d = 0; d < N; ++d) {
        long kk = c[d] <= grid.dims[d] / 2 ? c[d] : c[d] - grid.dims[d];
        double xi = 2.0 * M_PI * kk / (grid.dims[d] * grid.h);
        for (int t = 0; t < alpha[d]; ++t) m *= std::complex<double>(0.0, xi);
      }
      s.c[i] *= m;
    }
    return s;
  };

  auto probe_hat = fft(probe);
  for (int j = 0; j <= fam.jmax(); ++j)
    for (int k = 0; k <= fam.jmax(); ++k) {
      if (std::abs(j - k) > max_offset) continue;
      auto dpsik = deriv_spec(fam.psi_hat(k));
      auto u = ifft(spectrum_product(dpsik, probe_hat));  // D^a psi_k * f
      GridFunction<N> gu(grid), gfv(grid);
      for (long i = 0; i < grid.size(); ++i) {
        gu.v[i] = gf.v[i] * u.v[i];
        gfv.v[i] = gf.v[i] * probe.v[i];
      }
      auto t1 = ifft(spectrum_product(fam.phi_hat(j), fft(gu)));
      auto t2 = ifft(spectrum_product(fam.phi_hat(j),
                                      spectrum_product(dpsik, fft(gfv))));
      GridFunction<N> diff(grid);
      for (long i = 0; i < grid.size(); ++i) diff.v[i] = t1.v[i] - t2.v[i];
      table.rows.push_back({j, k, diff.norm_lp(p) / fnorm});
    }

  // per-offset maxima of the prefactor-normalized norms, then the slope
  std::map<int, double> per_off;
  for (const auto& r : table.rows) {
    double norm = r.norm / std::pow(2.0, table.prefactor_pow * r.k);
    int off = std::abs(r.j - r.k);
    per_off[off] = std::max(per_off[off], norm);
  }
  std::vector<double> xs, ys;
  for (auto& [off, v] : per_off) {
    if (off == 0 || v <= 0.0) continue;
    xs.push_back(std::pow(2.0, off));
    ys.push_back(v);
  }
  if (xs.size() >= 4) {
    // least squares on log2 scale
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = static_cast<int>(xs.size());
    for (int i = 0; i < m; ++i) {
      double lx = std::log2(xs[i]), ly = std::log2(ys[i]);
      sx += lx;
      sy += ly;
      sxx += lx * lx;
      sxy += lx * ly;
    }
    table.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  }
  return table;
}

// ---------------------------------------------------------------------------
// Boundary strips and weighted embedding checks

// Outer strips S_k and inner strips P_k of omega = {x1 > sigma(x')}.
struct StripSpec {
  std::function<double(const std::vector<double>&)> sigma;

  double gap(const std::vector<double>& x) const {
    std::vector<double> xp(x.begin() + 1, x.end());
    return x[0] - sigma(xp);
  }
  bool in_outer(const std::vector<double>& x, int k) const {
    double t = gap(x);
    if (k == 0) return t < -std::pow(2.0, -0.5);
    return t > -std::pow(2.0, 0.5 - k) && t < -std::pow(2.0, -0.5 - k);
  }
  bool in_inner(const std::vector<double>& x, int k) const {
    double t = gap(x);
    if (k == 0) return t > std::pow(2.0, -0.5);
    return t > std::pow(2.0, -0.5 - k) && t < std::pow(2.0, 0.5 - k);
  }
  bool in_inner_above(const std::vector<double>& x, int k) const {  // P_{<k}
    return gap(x) > std::pow(2.0, 0.5 - k);
  }
};

struct HardyLittlewoodReport {
  double weighted_norm = 0.0;    // || delta^{-s} f ||_p
  double f_norm = 0.0;           // level-sup intrinsic norm at index s
  double ratio = 0.0;
};

// One-resolution evaluation of both sides of the weighted embedding for a
// probe supported in omega; callers sweep resolutions to see growth rates.
template <int N>
HardyLittlewoodReport hardy_littlewood_check(const RychkovFamily<N>& fam,
                                             const GridFunction<N>& f, double s, double p) {
  HardyLittlewoodReport rep;
  const auto& g = f.grid;
  GridFunction<N> weighted(g);
  for (long i = 0; i < g.size(); ++i) {
    auto x = g.point(i);
    double delta = std::min(1.0, std::abs(x[0]));
    if (x[0] > 0.0 && f.v[i] != 0.0)
      weighted.v[i] = std::pow(delta, -s) * f.v[i];
  }
  rep.weighted_norm = weighted.norm_lp(p);
  rep.f_norm = tl_norm(fam, f, s, p, std::numeric_limits<double>::infinity()).value;
  rep.ratio = rep.weighted_norm / rep.f_norm;
  return rep;
}

// Discrete locally-constant maximal inequality on the inner strips:
// returns the smallest constant C with ||phi_j * f||_{L^p(P_k)} <=
// C min(1, 2^{(j-k)/p}) ||f||_{L^p(P_{<j+R})} over the sampled (j, k) table.
template <int N>
double locally_constant_constant(const RychkovFamily<N>& fam, const GridFunction<N>& f,
                                 double p, int R, int jcap, int kcap) {
  const auto& g = f.grid;
  double C = 0.0;
  auto levels = fam.phi_pyramid(f, jcap);
  for (int j = 0; j <= jcap; ++j)
    for (int k = 0; k <= std::min(kcap, j + R); ++k) {
      double num = 0.0, den = 0.0;
      for (long i = 0; i < g.size(); ++i) {
        auto xp = g.point(i);
        std::vector<double> x(xp.begin(), xp.end());
        double t = x[0];
        bool in_pk = (k == 0) ? (t > std::pow(2.0, -0.5))
                              : (t > std::pow(2.0, -0.5 - k) && t < std::pow(2.0, 0.5 - k));
        bool in_pltjr = t > std::pow(2.0, 0.5 - (j + R));
        if (in_pk) num += std::pow(std::abs(levels[j].v[i]), p);
        if (in_pltjr) den += std::pow(std::abs(f.v[i]), p);
      }
      if (den == 0.0) continue;
      num = std::pow(num * g.cell(), 1.0 / p);
      den = std::pow(den * g.cell(), 1.0 / p);
      double bound = std::min(1.0, std::pow(2.0, static_cast<double>(j - k) / p));
      C = std::max(C, num / (den * bound));
    }
  return C;
}

}  // namespace dbar
