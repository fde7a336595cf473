#include "dbar/lp.hpp"

#include <catch2/catch_amalgamated.hpp>

#include "dbar/rng.hpp"

using namespace dbar;

namespace {

GridSpec<1> grid1(double lo, double hi, int n) {
  GridSpec<1> g;
  g.origin = {lo};
  g.dims = {n};
  g.h = (hi - lo) / n;
  return g;
}

const GridSpec<1>& test_grid() {
  static GridSpec<1> g = grid1(-6.5, 1.5, 1 << 17);
  return g;
}

const RychkovFamily<1>& family_m2() {
  static RychkovFamily<1> fam(test_grid(), 10, 2);
  return fam;
}
const RychkovFamily<1>& family_m4() {
  static RychkovFamily<1> fam(test_grid(), 10, 4);
  return fam;
}

}  // namespace

TEST_CASE("family certificates") {
  for (const auto* fam : {&family_m2(), &family_m4()}) {
    auto c = fam->certificates();
    CHECK(std::abs(c.mass_phi0 - 1.0) <= 1e-10);
    CHECK(std::abs(c.mass_psi0 - 1.0) <= 1e-8);
    CHECK(std::abs(c.mass_psi1) <= 1e-8);
    CHECK(c.max_moment_phi1 <= 1e-8);
    CHECK(c.max_moment_psi1 <= 1e-8);
    CHECK(c.cone_leak <= 1e-12);
    CHECK(c.reconstruction <= 1e-4);
  }
}

TEST_CASE("reconstruction error decays with the truncation level") {
  const auto& fam = family_m2();
  auto probe = GridFunction<1>::sample(test_grid(), [](const std::array<double, 1>& x) {
    return std::exp(-x[0] * x[0]);
  });
  std::vector<double> errs;
  for (int J = 3; J <= 9; ++J) {
    auto r = fam.reconstruct(probe, J);
    double e = 0.0;
    for (long i = 0; i < test_grid().size(); ++i) {
      double x = test_grid().point(i)[0];
      if (std::abs(x) < 1.0) e = std::max(e, std::abs(r.v[i] - probe.v[i]));
    }
    errs.push_back(e);
  }
  for (size_t i = 0; i + 1 < errs.size(); ++i)
    CHECK((errs[i + 1] <= 0.6 * errs[i] || errs[i + 1] < 1e-10));
  CHECK(errs.back() <= 1e-6);
}

TEST_CASE("triebel-lizorkin norms") {
  const auto& fam = family_m2();
  const double inf = std::numeric_limits<double>::infinity();

  GridFunction<1> zero(test_grid());
  CHECK(tl_norm(fam, zero, 0.4, 2.0, 2.0).value == 0.0);

  auto f = GridFunction<1>::sample(test_grid(), [](const std::array<double, 1>& x) {
    return std::cos(3 * x[0]) * std::exp(-2 * x[0] * x[0]);
  });

  // two admissible families produce equivalent norms (factor <= 4 here)
  RychkovFamily<1> other(test_grid(), 10, 2, {-0.45}, 0.3);
  for (double s : {0.2, 0.7}) {
    double n1 = tl_norm(fam, f, s, 2.0, 2.0).value;
    double n2 = tl_norm(other, f, s, 2.0, 2.0).value;
    CHECK(n1 / n2 < 4.0);
    CHECK(n2 / n1 < 4.0);
  }

  // monotonicity in the inner exponent: q = infinity below q = 1
  CHECK(tl_norm(fam, f, 0.3, 2.0, inf).value <= tl_norm(fam, f, 0.3, 2.0, 1.0).value);
  CHECK(tl_norm(fam, f, 0.3, inf, inf).value <= tl_norm(fam, f, 0.3, inf, 1.0).value);

  // boundary power: finite for s < a + 1/p, truncation-divergent above
  auto rough = GridFunction<1>::sample(test_grid(), [](const std::array<double, 1>& x) {
    double t = std::max(0.0, x[0]);
    return std::pow(t, 0.3) * std::exp(-4 * x[0] * x[0]);
  });
  double lo6 = tl_norm(fam, rough, 0.6, 2.0, 2.0, 6).value;
  double lo10 = tl_norm(fam, rough, 0.6, 2.0, 2.0, 10).value;
  double hi6 = tl_norm(fam, rough, 0.95, 2.0, 2.0, 6).value;
  double hi10 = tl_norm(fam, rough, 0.95, 2.0, 2.0, 10).value;
  CHECK(lo10 / lo6 < 1.25);
  CHECK(hi10 / hi6 > 1.5);
}

TEST_CASE("cone extension reproduces and respects the reach") {
  const auto& fam = family_m2();
  auto sigma = [](const std::array<double, 1>&) { return 0.0; };

  GridFunction<1> one(test_grid());
  for (auto& v : one.v) v = 1.0;
  auto e1 = rychkov_extend(fam, one, sigma);
  for (long i = 0; i < test_grid().size(); ++i) {
    double x = test_grid().point(i)[0];
    if (x > -0.03 && x < 1.0) CHECK(std::abs(e1.v[i] - 1.0) <= 1e-3);
    if (x < -4.0) CHECK(std::abs(e1.v[i]) <= 1e-10);  // beyond every cone reach
  }

  auto f = GridFunction<1>::sample(test_grid(), [](const std::array<double, 1>& x) {
    double t = x[0] - 0.5;
    return std::exp(-40 * t * t);
  });
  auto ef = rychkov_extend(fam, f, sigma);
  double err = 0.0;
  for (long i = 0; i < test_grid().size(); ++i) {
    double x = test_grid().point(i)[0];
    if (x > 0.0 && x < 1.2) err = std::max(err, std::abs(ef.v[i] - f.v[i]));
  }
  CHECK(err <= 1e-3);

  // commutator with a one-dimensional derivative vanishes inside omega
  auto ext = [&](const GridFunction<1>& u) { return rychkov_extend(fam, u, sigma); };
  auto comm = commutator<1>(0, ext, f);
  double inside = 0.0, outside = 0.0;
  for (long i = 0; i < test_grid().size(); ++i) {
    double x = test_grid().point(i)[0];
    if (x > 0.01 && x < 1.2) inside = std::max(inside, std::abs(comm.v[i]));
    if (x < -0.01 && x > -4.0) outside = std::max(outside, std::abs(comm.v[i]));
  }
  CHECK(inside <= 1e-10);
  CHECK(outside > 1e-3);  // genuinely supported outside
}

TEST_CASE("reflection extension and its commutators") {
  auto ext1 = ReflectionExt::solve(1, {1, 2, 3});
  CHECK(ext1.residual <= 1e-10);
  CHECK(ext1.a[0] == Catch::Approx(-6.0).epsilon(1e-9));
  CHECK(ext1.a[1] == Catch::Approx(16.0).epsilon(1e-9));
  CHECK(ext1.a[2] == Catch::Approx(-9.0).epsilon(1e-9));

  // 2D half-space grid containing x1 = 0 on a node
  GridSpec<2> g;
  g.origin = {-0.5, -0.5};
  g.h = 1.0 / 128;
  g.dims = {128, 128};

  auto f = GridFunction<2>::sample(g, [](const std::array<double, 2>& x) {
    return std::sin(2 * x[0] + 1) * std::cos(3 * x[1]);
  });

  auto apply = [&](const ReflectionExt& e) {
    return [&g, e](const GridFunction<2>& u) { return reflection_extend(e, u); };
  };

  auto ext2 = ReflectionExt::solve(2, {1, 2, 3, 4, 5});
  CHECK(ext2.residual <= 1e-9);

  // constants extend to constants; linear data continues linearly
  GridFunction<2> one(g);
  for (auto& v : one.v) v = 1.0;
  auto e_one = reflection_extend(ext1, one);
  for (long i = 0; i < g.size(); ++i) {
    auto x = g.point(i);
    if (x[0] < 0 && x[0] > -0.12) CHECK(e_one.v[i] == Catch::Approx(1.0).epsilon(1e-12));
  }
  auto lin = GridFunction<2>::sample(g, [](const std::array<double, 2>& x) { return x[0]; });
  auto e_lin = reflection_extend(ext1, lin);
  for (long i = 0; i < g.size(); ++i) {
    auto x = g.point(i);
    if (x[0] < 0 && x[0] > -0.12)
      CHECK(e_lin.v[i] == Catch::Approx(x[0]).margin(1e-12));
  }

  // tangential derivative commutes exactly with the reflection
  auto comm_t = commutator<2>(1, apply(ext2), f);
  CHECK(comm_t.sup_abs() <= 1e-10);

  // normal commutator: zero inside, nonzero outside
  auto comm_n = commutator<2>(0, apply(ext2), f);
  double inside = 0.0, outside = 0.0;
  for (long i = 0; i < g.size(); ++i) {
    auto x = g.point(i);
    if (x[0] > 0.03) inside = std::max(inside, std::abs(comm_n.v[i]));
    if (x[0] < -0.03 && x[0] > -0.08) outside = std::max(outside, std::abs(comm_n.v[i]));
  }
  CHECK(inside <= 1e-10);
  CHECK(outside > 1e-6);

  // order-zero reflection of f = x1: the commutator flips the sign of the
  // derivative, giving -2 beyond the interface
  auto ext0 = ReflectionExt::solve(0, {1});
  auto comm0 = commutator<2>(0, apply(ext0), lin);
  for (long i = 0; i < g.size(); ++i) {
    auto x = g.point(i);
    if (x[0] < -0.05 && x[0] > -0.3)
      CHECK(comm0.v[i] == Catch::Approx(-2.0).margin(1e-9));
  }

  // constants commute for every direction
  auto comm_c = commutator<2>(0, apply(ext2), one);
  CHECK(comm_c.sup_abs() <= 1e-12);
}

TEST_CASE("heideman commutator decay") {
  const auto& fam2 = family_m2();
  auto probe = GridFunction<1>::sample(test_grid(), [](const std::array<double, 1>& x) {
    return std::exp(-20 * x[0] * x[0]);
  });

  // constant multiplier commutes exactly
  auto tab_const = heideman_decay<1>(
      fam2, [](const std::array<double, 1>&) { return 1.0; }, {0}, 4, 2.0, probe);
  double worst = 0.0;
  for (const auto& r : tab_const.rows) worst = std::max(worst, r.norm);
  CHECK(worst <= 1e-10);

  auto g = [](const std::array<double, 1>& x) { return x[0]; };
  auto tab2 = heideman_decay<1>(fam2, g, {0}, 6, 2.0, probe);
  CHECK(tab2.slope <= -2.0);
  auto tab4 = heideman_decay<1>(family_m4(), g, {0}, 6, 2.0, probe);
  CHECK(tab4.slope <= -4.0);

  // alpha = 1 raises the k-prefactor by one power of 2^k
  auto tab_a1 = heideman_decay<1>(fam2, g, {1}, 6, 2.0, probe);
  std::map<std::pair<int, int>, double> n0, n1;
  for (const auto& r : tab2.rows) n0[{r.j, r.k}] = r.norm;
  for (const auto& r : tab_a1.rows) n1[{r.j, r.k}] = r.norm;
  std::vector<double> ks, ratios;
  for (int k = 3; k <= 9; ++k) {
    double a = n0[{k, k}], b = n1[{k, k}];
    if (a > 0 && b > 0) {
      ks.push_back(std::pow(2.0, k));
      ratios.push_back(b / a);
    }
  }
  REQUIRE(ks.size() >= 4);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < ks.size(); ++i) {
    double lx = std::log2(ks[i]), ly = std::log2(ratios[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  double slope = (ks.size() * sxy - sx * sy) / (ks.size() * sxx - sx * sx);
  CHECK(slope == Catch::Approx(1.0).margin(0.35));
}

TEST_CASE("boundary strips partition and distance comparability") {
  StripSpec strips;
  strips.sigma = [](const std::vector<double>& xp) { return 0.4 * std::sin(xp[0]); };

  // gap 2^-k lands in P_k; gap 2 lands in P_0
  std::vector<double> x = {std::pow(2.0, -3) + strips.sigma({0.7}), 0.7};
  CHECK(strips.in_inner(x, 3));
  CHECK(!strips.in_inner(x, 2));
  std::vector<double> far = {2.0 + strips.sigma({-0.2}), -0.2};
  CHECK(strips.in_inner(far, 0));

  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    double xp = rng.uniform(-2.0, 2.0);
    double gap = std::pow(2.0, rng.uniform(-10.0, 1.0));
    std::vector<double> pt = {gap + strips.sigma({xp}), xp};
    int count = 0, where = -1;
    for (int k = 0; k <= 14; ++k)
      if (strips.in_inner(pt, k)) {
        ++count;
        where = k;
      }
    CHECK(count == 1);

    // dist comparability: 2^{-1-k} <= min(1, dist) <= 2^{1/2-k}
    double dist = std::numeric_limits<double>::infinity();
    for (double t = -3.0; t <= 3.0; t += 1e-3) {
      double dx = pt[1] - t, dy = pt[0] - strips.sigma({t});
      dist = std::min(dist, std::hypot(dx, dy));
    }
    double delta = std::min(1.0, dist);
    CHECK(delta >= std::pow(2.0, -1.0 - where) * (1 - 1e-9));
    CHECK(delta <= std::pow(2.0, 0.5 - where) * (1 + 1e-9));
  }
}

TEST_CASE("weighted embedding probes and the locally constant bound") {
  const auto& fam = family_m2();
  const double inf = std::numeric_limits<double>::infinity();

  auto probe = [&](double a) {
    return GridFunction<1>::sample(test_grid(), [a](const std::array<double, 1>& x) {
      double t = x[0];
      if (t <= 0.0) return 0.0;
      return std::pow(std::min(1.0, t), a) * std::exp(-8 * (t - 0.2) * (t - 0.2));
    });
  };

  // interior-supported probe: both sides finite, ratio stable across scales
  auto smooth = GridFunction<1>::sample(test_grid(), [](const std::array<double, 1>& x) {
    double t = x[0] - 0.6;
    return std::exp(-60 * t * t);
  });
  auto r1 = hardy_littlewood_check(fam, smooth, 0.5, inf);
  CHECK(r1.ratio > 0.0);
  CHECK(std::isfinite(r1.ratio));

  // a = 0.6 > s = 0.5: weighted sup stays bounded as resolution grows
  // a = 0.4 < s: both sides grow; report rates rather than a fixed constant
  auto fine_grid = grid1(-6.5, 1.5, 1 << 18);
  RychkovFamily<1> fine(fine_grid, 11, 2);
  auto probe_fine = [&](double a) {
    return GridFunction<1>::sample(fine_grid, [a](const std::array<double, 1>& x) {
      double t = x[0];
      if (t <= 0.0) return 0.0;
      return std::pow(std::min(1.0, t), a) * std::exp(-8 * (t - 0.2) * (t - 0.2));
    });
  };
  auto ok_coarse = hardy_littlewood_check(fam, probe(0.6), 0.5, inf);
  auto ok_fine = hardy_littlewood_check(fine, probe_fine(0.6), 0.5, inf);
  CHECK(ok_fine.weighted_norm / ok_coarse.weighted_norm < 1.1);
  CHECK(ok_fine.ratio < 3.0 * ok_coarse.ratio + 3.0);

  auto bad_coarse = hardy_littlewood_check(fam, probe(0.4), 0.5, inf);
  auto bad_fine = hardy_littlewood_check(fine, probe_fine(0.4), 0.5, inf);
  CHECK(bad_fine.weighted_norm > 1.05 * bad_coarse.weighted_norm);  // divergence
  CHECK(bad_fine.f_norm > bad_coarse.f_norm * 0.9);  // the right side grows too

  // locally constant maximal bound with a uniform constant
  int R = 6;
  double C1 = locally_constant_constant(fam, probe(0.6), 2.0, R, 8, 8);
  double C2 = locally_constant_constant(fam, smooth, 2.0, R, 8, 8);
  CHECK(C1 < 64.0);
  CHECK(C2 < 64.0);
}
