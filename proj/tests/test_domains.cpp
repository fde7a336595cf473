#include "dbar/domains.hpp"

#include <Eigen/Dense>
#include <catch2/catch_amalgamated.hpp>

#include "dbar/rng.hpp"

using namespace dbar;

namespace {

CVec<double> boundary_point(const DefiningDomain& dom, Rng& rng) {
  auto dir = rng.csphere(dom.n);
  double r = dom.boundary_radius(dir);
  CVec<double> p(dom.n);
  for (int k = 0; k < dom.n; ++k) p[k] = dir[k] * Cx<double>(r);
  return p;
}

// Complex tangent direction at a boundary point of a 2d domain.
CVec<double> complex_tangent(const DefiningDomain& dom, const CVec<double>& zeta) {
  auto u = dom.unit_dbar_rho(zeta);
  return {-conj(u[1]), conj(u[0])};
}

}  // namespace

TEST_CASE("defining function values and exact derivatives") {
  auto ball = make_ball(2);
  CVec<double> origin = {{0, 0}, {0, 0}};
  CHECK(ball.rho(origin) == Catch::Approx(-1.0));

  DerivIndex d11;
  d11.holo[0] = 1;
  d11.anti[0] = 1;
  Rng rng(1);
  for (int i = 0; i < 10; ++i) {
    auto z = rng.cball(2);
    auto v = ball.rho_deriv(z, d11);
    CHECK(v.re == Catch::Approx(1.0));
    CHECK(std::abs(v.im) < 1e-15);
  }

  auto ell = make_ellipsoid(2);
  DerivIndex d22;
  d22.holo[1] = 2;
  d22.anti[1] = 2;
  CVec<double> p = {{0, 0}, {0.37, -0.12}};
  auto v = ell.rho_deriv(p, d22);
  CHECK(v.re == Catch::Approx(4.0));
  CHECK(std::abs(v.im) < 1e-14);
}

TEST_CASE("derivative oracle consistent with central differences") {
  auto ell = make_ellipsoid(2);
  Rng rng(3);
  // Each cached table is differenced against the previous order; fourth
  // order central steps on polynomial evaluations stay well under 1e-6.
  auto wirtinger_fd = [&](const DerivIndex& base, int var, bool bar, const CVec<double>& z) {
    double h = 1e-3;
    auto eval = [&](double dx, double dy) {
      CVec<double> w = z;
      w[var].re += dx;
      w[var].im += dy;
      return ell.rho_deriv(w, base);
    };
    auto cd = [&](bool ydir) {
      auto f1 = eval(ydir ? 0 : h, ydir ? h : 0), f2 = eval(ydir ? 0 : 2 * h, ydir ? 2 * h : 0);
      auto fm1 = eval(ydir ? 0 : -h, ydir ? -h : 0),
           fm2 = eval(ydir ? 0 : -2 * h, ydir ? -2 * h : 0);
      return CD{(8 * (f1.re - fm1.re) - (f2.re - fm2.re)) / (12 * h),
                (8 * (f1.im - fm1.im) - (f2.im - fm2.im)) / (12 * h)};
    };
    CD dx = cd(false), dy = cd(true);
    // d/dz = (dx - i dy)/2,  d/dzbar = (dx + i dy)/2
    if (!bar) return CD{0.5 * (dx.re + dy.im), 0.5 * (dx.im - dy.re)};
    return CD{0.5 * (dx.re - dy.im), 0.5 * (dx.im + dy.re)};
  };
  for (int trial = 0; trial < 100; ++trial) {
    auto z = rng.cball(2);
    DerivIndex base;
    int total = static_cast<int>(rng.uniform(0, 3.999));
    for (int i = 0; i < total; ++i) {
      int var = rng.uniform() < 0.5 ? 0 : 1;
      if (rng.uniform() < 0.5)
        base.holo[var]++;
      else
        base.anti[var]++;
    }
    int var = rng.uniform() < 0.5 ? 0 : 1;
    bool bar = rng.uniform() < 0.5;
    DerivIndex next = base;
    (bar ? next.anti[var] : next.holo[var])++;
    auto exact = ell.rho_deriv(z, next);
    auto fd = wirtinger_fd(base, var, bar, z);
    CHECK(std::hypot(exact.re - fd.re, exact.im - fd.im) <=
          1e-6 * (1.0 + std::hypot(exact.re, exact.im)));
  }
}

TEST_CASE("distance to boundary") {
  auto ball = make_ball(2);
  CVec<double> origin = {{0, 0}, {0, 0}};
  CHECK(ball.dist_to_boundary(origin) == Catch::Approx(1.0).epsilon(1e-10));
  CVec<double> z09 = {{0.9, 0}, {0, 0}};
  CHECK(ball.dist_to_boundary(z09) == Catch::Approx(0.1).epsilon(1e-10));

  auto ell = make_ellipsoid(2);
  CVec<double> p = {{0, 0}, {0.5, 0}};
  CHECK(ell.dist_to_boundary(p) == Catch::Approx(0.5).epsilon(1e-8));

  // generic ellipsoid points: residual of the foot-point conditions
  Rng rng(17);
  for (int i = 0; i < 20; ++i) {
    auto z = rng.cball(2);
    z[0].re *= 0.9;
    double d = ell.dist_to_boundary(z);
    CHECK(d >= 0.0);
    // distance never exceeds the ray gap and is positive inside
    auto dir = z;
    double nn = 0;
    for (auto& c : dir) nn += abs2(c);
    if (nn > 1e-8) {
      nn = std::sqrt(nn);
      for (auto& c : dir) {
        c.re /= nn;
        c.im /= nn;
      }
      double rb = ell.boundary_radius(dir);
      CHECK(d <= (rb - nn) + 1e-8);
    }
  }
}

TEST_CASE("line type probes") {
  auto ball = make_ball(2);
  CVec<double> zeta = {{1, 0}, {0, 0}};
  CVec<double> tangent = {{0, 0}, {1, 0}};
  CVec<double> normal = {{1, 0}, {0, 0}};
  CHECK(ball.probe_line_type(zeta, tangent) == Catch::Approx(2.0).margin(0.05));
  CHECK(ball.probe_line_type(zeta, normal) == Catch::Approx(1.0).margin(0.05));

  auto ell = make_ellipsoid(2);
  CHECK(ell.probe_line_type(zeta, tangent) == Catch::Approx(4.0).margin(0.1));
  CHECK(ell.probe_line_type(zeta, normal) == Catch::Approx(1.0).margin(0.05));
}

TEST_CASE("declared types match probe maxima") {
  Rng rng(23);
  for (auto* domp : {new auto(make_ball(2)), new auto(make_ellipsoid(2))}) {
    const DefiningDomain& dom = *domp;
    double worst = 0.0;
    // axis points where the flat directions live, plus random boundary points
    std::vector<CVec<double>> pts = {{{1, 0}, {0, 0}}, {{-1, 0}, {0, 0}}};
    for (int i = 0; i < 50; ++i) pts.push_back(boundary_point(dom, rng));
    for (const auto& p : pts)
      worst = std::max(worst, dom.probe_line_type(p, complex_tangent(dom, p)));
    CHECK(worst == Catch::Approx(static_cast<double>(dom.type_vector[0])).margin(0.1));
    delete domp;
  }
}

TEST_CASE("collar Hessians are positive semidefinite") {
  Rng rng(5);
  for (auto dom : {make_ball(2), make_ellipsoid(2)}) {
    int found = 0;
    while (found < 2000) {
      CVec<double> z(2);
      for (int k = 0; k < 2; ++k)
        z[k] = {rng.uniform(-1.3, 1.3), rng.uniform(-1.3, 1.3)};
      if (!dom.in_collar(z)) continue;
      ++found;
      auto H = dom.real_hessian(z);
      Eigen::Matrix4d M;
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) M(i, j) = H[i][j];
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(M);
      CHECK(es.eigenvalues().minCoeff() > -1e-10);
    }
  }
}

TEST_CASE("level sets at shifted heights keep their probed type") {
  // The sub-level domains at heights +-T1/2 are probed instead of assuming a
  // normalized defining function; see module documentation.
  auto ell = make_ellipsoid(2);
  for (double t : {-ell.collar_width / 2, ell.collar_width / 2}) {
    // shifted domain: rho - t
    ZPoly p(2);
    p.add_term({1, 0, 0}, {1, 0, 0}, 1.0);
    p.add_term({2, 0, 0}, {2, 0, 0}, 0.0);
    std::array<uint8_t, kMaxDim> a{}, b{};
    a[1] = 2;
    b[1] = 2;
    p.add_term(a, b, 1.0);
    p.add_term({}, {}, -1.0 - t);
    auto shifted = make_custom(std::move(p), ell.type_vector, 1.0, ell.collar_width);
    CVec<double> dir = {{1, 0}, {0, 0}};
    double rb = shifted.boundary_radius(dir);
    CVec<double> zeta = {{rb, 0}, {0, 0}};
    CVec<double> tangent = {{0, 0}, {1, 0}};
    CHECK(shifted.probe_line_type(zeta, tangent) == Catch::Approx(4.0).margin(0.15));
  }
}

TEST_CASE("boundary radius on jets matches implicit derivatives") {
  auto ell = make_ellipsoid(2);
  using J = Jet<2, 2>;
  // direction (cos a, sin a) with a, plus radial scaling variable unused
  double a0 = 0.4;
  J a = J::variable(0, a0);
  CVec<J> dir = {{cos(a0) - (a - J(a0)) * std::sin(a0), J(0.0)},
                 {sin(a0) + (a - J(a0)) * std::cos(a0), J(0.0)}};
  // first-order direction perturbation is enough for a derivative check
  J r = ell.boundary_radius(dir);
  double h = 1e-6;
  CVec<double> d1 = {{std::cos(a0 + h), 0}, {std::sin(a0 + h), 0}};
  CVec<double> d2 = {{std::cos(a0 - h), 0}, {std::sin(a0 - h), 0}};
  double fd = (ell.boundary_radius(d1) - ell.boundary_radius(d2)) / (2 * h);
  CHECK(r.d1(0) == Catch::Approx(fd).epsilon(1e-5));
}
