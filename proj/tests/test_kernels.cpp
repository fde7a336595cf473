#include "dbar/kernels.hpp"

#include <catch2/catch_amalgamated.hpp>
#include <complex>

#include "dbar/basis.hpp"

using namespace dbar;

namespace {
CVec<double> boundary_point(const DefiningDomain& dom, Rng& rng) {
  auto dir = rng.csphere(dom.n);
  double r = dom.boundary_radius(dir);
  CVec<double> p(dom.n);
  for (int k = 0; k < dom.n; ++k) p[k] = dir[k] * Cx<double>(r);
  return p;
}
}  // namespace

TEST_CASE("Bochner-Martinelli degrees and homogeneity") {
  Rng rng(1);
  auto z = rng.cball(2);
  CVec<double> zeta = {{1.2, 0.1}, {0.3, -0.4}};
  auto B = bm_form(z, zeta);

  // only q in {0,1} appear; B_q has degrees (0, q; 2, 1-q)
  for (const auto& [k, v] : B.c) {
    auto d = Form<CD>::degrees_of(k);
    CHECK(d.z == 0);
    CHECK(d.zeta == 2);
    CHECK((d.zbar == 0 || d.zbar == 1));
    CHECK(d.zetabar == 1 - d.zbar);
  }
  CHECK(!component_zbar_degree(B, 0).empty());
  CHECK(!component_zbar_degree(B, 1).empty());
  CHECK(component_zbar_degree(B, 2).empty());

  // |B| scales as |z - zeta|^{1-2n}: doubling the separation divides the
  // largest coefficient by 2^{2n-1} = 8
  CVec<double> z2(2);
  for (int k = 0; k < 2; ++k) {
    z2[k].re = zeta[k].re + 2.0 * (z[k].re - zeta[k].re);
    z2[k].im = zeta[k].im + 2.0 * (z[k].im - zeta[k].im);
  }
  CHECK(bm_form(z, zeta).max_abs() / bm_form(z2, zeta).max_abs() ==
        Catch::Approx(8.0).epsilon(1e-12));
}

TEST_CASE("Bochner-Martinelli swap reflection") {
  // In the fixed-role representation the generating covector flips sign
  // under exchanging the two points while the remaining factors are even,
  // so the whole kernel mirrors to its negative at the swapped pair.
  Rng rng(2);
  for (int rep = 0; rep < 20; ++rep) {
    auto z = rng.cball(2);
    auto zeta = rng.cball(2);
    double sep = std::sqrt(value_of(dist2(z, zeta)));
    if (sep < 0.3) continue;
    auto Bzz = bm_form(z, zeta);
    auto Bsw = bm_form(zeta, z);
    CHECK(form_distance(Bsw, Bzz * CD{-1.0, 0.0}) < 1e-13 * (1.0 + Bzz.max_abs()));
  }
}

TEST_CASE("Cauchy-Fantappie kernel closed form at n = 2") {
  auto ball = make_ball(2);
  LerayFamily fam(SupportKind::BallQuadratic, ball, SupportParams{});
  CVec<double> zeta = {{1, 0}, {0, 0}};
  CVec<double> z = {{0.5, 0}, {0.3, 0}};
  auto ls = to_plain(fam.sample(z, zeta));
  auto K = cf_form(ls, z, zeta);

  // single k = 1 term: K = -(2 pi i)^{-2} b ^ Q / (|z-zeta|^2 S)
  // with b = (0.5, -0.3), Q = (-1, 0), S = 1/2, |z-zeta|^2 = 0.34
  double expect = (1.0 / (4 * M_PI * M_PI)) * (-0.3) / (0.34 * 0.5);
  uint32_t key = formdet::bit(DZETA, 0) | formdet::bit(DZETA, 1);
  REQUIRE(K.c.count(key) == 1);
  CHECK(K.c.at(key).re == Catch::Approx(expect).epsilon(1e-12));
  CHECK(std::abs(K.c.at(key).im) < 1e-14);

  // all content sits in z-bar degree 0; the top degree vanishes identically
  CHECK(component_zbar_degree(K, 0).c.size() == K.c.size());
  CHECK(component_zbar_degree(K, 1).empty());
  for (const auto& [k, v] : K.c) {
    auto d = Form<CD>::degrees_of(k);
    CHECK(d.z == 0);
    CHECK(d.zbar == 0);
    CHECK(d.zeta == 2);
    CHECK(d.zetabar == 0);
  }
}

TEST_CASE("kernel projections in the zeta variable") {
  auto ball = make_ball(2);
  LerayFamily fam(SupportKind::BallQuadratic, ball, SupportParams{});
  Rng rng(5);
  for (int rep = 0; rep < 30; ++rep) {
    auto zeta_dir = rng.csphere(2);
    CVec<double> zeta(2);
    for (int k = 0; k < 2; ++k) zeta[k] = zeta_dir[k] * Cx<double>(1.05);
    auto z = rng.cball(2);
    for (auto& c : z) {
      c.re *= 0.8;
      c.im *= 0.8;
    }
    // the CF kernel has no dzetabar factor at n = 2: vertical part vanishes
    auto ls = to_plain(fam.sample(z, zeta));
    auto K = cf_kernel(ls, z, zeta, 0);
    auto pr = kernel_project(K, ball, zeta);
    CHECK(pr.bot.max_abs() == 0.0);
    CHECK(form_distance(pr.top, K) == 0.0);

    // BM kernel: decomposition and idempotence
    auto B = bm_kernel(z, zeta, 0);
    auto pb = kernel_project(B, ball, zeta);
    CHECK(form_distance(pb.top + pb.bot, B) < 1e-13 * (1.0 + B.max_abs()));
    auto pbb = kernel_project(pb.bot, ball, zeta);
    CHECK(form_distance(pbb.bot, pb.bot) < 1e-13 * (1.0 + B.max_abs()));
    CHECK(pbb.top.max_abs() < 1e-13 * (1.0 + B.max_abs()));
  }
}

TEST_CASE("jet derivatives match finite differences away from the singularity") {
  auto ball = make_ball(2);
  LerayFamily fam(SupportKind::BallQuadratic, ball, SupportParams{});
  CVec<double> zeta = {{1.02, 0.01}, {0.05, -0.02}};
  CVec<double> z = {{0.55, -0.1}, {0.22, 0.3}};

  using J = Jet<8, 3>;
  auto ls = fam.sample_jet<3>(z, zeta);
  CVec<J> zj(2), zetaj(2);
  for (int i = 0; i < 2; ++i) {
    zj[i] = {J::variable(2 * i, z[i].re), J::variable(2 * i + 1, z[i].im)};
    zetaj[i] = {J::variable(4 + 2 * i, zeta[i].re), J::variable(4 + 2 * i + 1, zeta[i].im)};
  }
  auto Kj = cf_kernel(ls, zj, zetaj, 0);
  auto prj = kernel_project(Kj, ball, zetaj);

  for (int var : {0, 1, 4, 6, 7}) {
    auto fd = kernel_fd_derivative(fam, 0, KernelPart::Top, z, zeta, var, 1e-5);
    for (const auto& [k, v] : prj.top.c) {
      std::array<uint8_t, 8> m{};
      m[var] = 1;
      CD jet_d{v.re.deriv(m), v.im.deriv(m)};
      auto it = fd.c.find(k);
      CD fd_d = (it == fd.c.end()) ? CD{0, 0} : it->second;
      CHECK(abs_val(jet_d - fd_d) < 1e-6 * (1.0 + abs_val(jet_d)));
    }
  }

  // order-0 envelope equals the plain magnitude
  KernelOracle oracle(fam, 0);
  CHECK(oracle.deriv_magnitude(z, zeta, KernelPart::Top, 0) ==
        Catch::Approx(oracle.magnitude(z, zeta, KernelPart::Top)).epsilon(1e-12));

  // first derivative of the |z-zeta|^{-2} factor against the chain rule
  double d2v = value_of(dist2(z, zeta));
  J d2j = dist2(zj, zetaj);
  std::array<uint8_t, 8> m{};
  m[0] = 1;
  double analytic = -std::pow(d2v, -2.0) * d2j.d1(0);
  J invd2 = recip(d2j);
  CHECK(invd2.deriv(m) == Catch::Approx(analytic).epsilon(1e-10));
}

TEST_CASE("fd scheme refuses near the singularity") {
  auto ball = make_ball(2);
  LerayFamily fam(SupportKind::BallQuadratic, ball, SupportParams{});
  CVec<double> zeta = {{1.001, 0}, {0, 0}};
  CVec<double> z = {{1.0005, 0}, {0, 0}};
  CHECK_THROWS(kernel_fd_derivative(fam, 0, KernelPart::Top, z, zeta, 0, 1e-3));
}

TEST_CASE("tangential fraction bounds in minimal-basis coordinates") {
  // |Q ^ dbarQ| coefficients: tangential block controlled by eps / tau_2^2,
  // all components by 1 / tau_2, with constants bounded over a dyadic sweep.
  auto ell = make_ellipsoid(2);
  SupportParams pe;
  pe.m_cap = 4;
  LerayFamily fam(SupportKind::FiniteType, ell, pe);
  Rng rng(31);
  double c_top = 0.0, c_all = 0.0;
  for (auto zdir : {0.0, 0.6}) {
    CVec<double> zeta = {{std::sqrt(1.0 - zdir * zdir) + 2e-4, 0}, {zdir, 0}};
    for (int k = 6; k <= 10; k += 2) {
      double eps = std::ldexp(1.0, -k);
      PolyEllipsoid P{minimal_basis(ell, zeta, eps)};
      const auto& Bv = P.basis.vectors;
      std::vector<std::vector<CD>> A(2, std::vector<CD>(2));
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) A[i][j] = conj(Bv[i][j]);
      for (int s = 0; s < 25; ++s) {
        auto z = P.sample(rng);
        if (!ell.in_domain(z)) continue;
        auto ls = to_plain(fam.sample(z, zeta));
        Form<CD> Qf(2), dbarQ(2);
        for (int j = 0; j < 2; ++j) Qf += Form<CD>::covector(2, DZETA, j, ls.Q[j]);
        for (int j = 0; j < 2; ++j)
          for (int l = 0; l < 2; ++l)
            dbarQ += wedge(Form<CD>::covector(2, DZETABAR, l, ls.dQ_dzbar[j][l]),
                           Form<CD>::covector(2, DZETA, j));
        auto frac = wedge(Qf, dbarQ);
        // to basis coordinates in the antiholomorphic zeta slots
        auto fb = substitute_covectors(frac, DZETABAR, A);
        double top = 0.0, all = 0.0;
        for (const auto& [key, v] : fb.c) {
          all = std::max(all, abs_val(v));
          if (!(key & formdet::bit(DZETABAR, 0))) top = std::max(top, abs_val(v));
        }
        double t2 = P.basis.taus[1];
        c_top = std::max(c_top, top * t2 * t2 / eps);
        c_all = std::max(c_all, all * t2);
      }
    }
  }
  CHECK(c_top < 64.0);
  CHECK(c_all < 64.0);
}

TEST_CASE("shell envelope of tangential kernel derivatives") {
  auto ball = make_ball(2);
  LerayFamily fam(SupportKind::BallQuadratic, ball, SupportParams{});
  KernelOracle oracle(fam, 0);
  Rng rng(41);
  CVec<double> zeta = {{1.0 + 2e-4, 0}, {0, 0}};
  for (int j = 0; j <= 2; ++j) {
    double cmax = 0.0;
    for (int k = 6; k <= 10; k += 2) {
      double eps = std::ldexp(1.0, -k);
      PolyEllipsoid P{minimal_basis(ball, zeta, eps)};
      PolyEllipsoid Ph{minimal_basis(ball, zeta, eps / 2)};
      for (int s = 0; s < 20; ++s) {
        auto w = P.sample(rng);
        if (Ph.gauge2(w) < 1.0 || !ball.in_domain(w)) continue;
        double sep = std::sqrt(value_of(dist2(w, zeta)));
        double mag = oracle.deriv_magnitude(w, zeta, KernelPart::Top, j);
        double t2 = P.basis.taus[1];
        cmax = std::max(cmax, mag * std::pow(eps, 1 + j) * t2 * t2 * sep);
      }
    }
    CHECK(cmax < 40.0);
  }
}
