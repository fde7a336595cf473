#include "dbar/jet.hpp"

#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <complex>

using namespace dbar;

TEST_CASE("jet arithmetic reproduces analytic derivatives") {
  using J = Jet<3, 3>;
  J x = J::variable(0, 0.7), y = J::variable(1, -0.3), z = J::variable(2, 1.4);
  // f = x^2 y + sqrt(z) / (1 + x)
  J f = x * x * y + sqrt(z) * recip(1.0 + x);

  double X = 0.7, Y = -0.3, Z = 1.4;
  CHECK(f.value() == Catch::Approx(X * X * Y + std::sqrt(Z) / (1 + X)).epsilon(1e-13));
  CHECK(f.d1(0) == Catch::Approx(2 * X * Y - std::sqrt(Z) / ((1 + X) * (1 + X))).epsilon(1e-12));
  CHECK(f.d1(1) == Catch::Approx(X * X).epsilon(1e-13));
  CHECK(f.d1(2) == Catch::Approx(0.5 / std::sqrt(Z) / (1 + X)).epsilon(1e-12));
  CHECK(f.deriv({2, 0, 0}) ==
        Catch::Approx(2 * Y + 2 * std::sqrt(Z) / std::pow(1 + X, 3)).epsilon(1e-12));
  CHECK(f.deriv({1, 1, 0}) == Catch::Approx(2 * X).epsilon(1e-12));
  CHECK(f.deriv({0, 0, 2}) == Catch::Approx(-0.25 * std::pow(Z, -1.5) / (1 + X)).epsilon(1e-12));
}

TEST_CASE("jet exp and formal derivative") {
  using J = Jet<2, 3>;
  J x = J::variable(0, 0.2), y = J::variable(1, 0.5);
  J f = exp(x * y);
  CHECK(f.value() == Catch::Approx(std::exp(0.1)).epsilon(1e-13));
  CHECK(f.d1(0) == Catch::Approx(0.5 * std::exp(0.1)).epsilon(1e-12));
  // derive() agrees with the analytic partial up to order 2
  J g = f.derive(0);  // y exp(xy)
  CHECK(g.value() == Catch::Approx(0.5 * std::exp(0.1)).epsilon(1e-12));
  CHECK(g.d1(1) == Catch::Approx(std::exp(0.1) * (1 + 0.1)).epsilon(1e-12));
}

TEST_CASE("complex jets divide and conjugate") {
  using J = Jet<2, 2>;
  Cx<J> z{J::variable(0, 1.2), J::variable(1, -0.4)};
  Cx<J> w = Cx<J>(J(1.0)) / z;
  Cx<J> check = w * z;
  CHECK(check.re.value() == Catch::Approx(1.0).epsilon(1e-13));
  CHECK(std::abs(check.im.value()) < 1e-13);
  // d/dx (1/z) = -1/z^2 at z = 1.2 - 0.4i
  std::complex<double> zc{1.2, -0.4};
  std::complex<double> d = -1.0 / (zc * zc);
  CHECK(w.re.d1(0) == Catch::Approx(d.real()).epsilon(1e-12));
  CHECK(w.im.d1(0) == Catch::Approx(d.imag()).epsilon(1e-12));
  CHECK(abs2(z).value() == Catch::Approx(std::norm(zc)).epsilon(1e-13));
}
