#pragma once

// Seeded RNG utilities.  Substreams are derived from a master seed with
// splitmix so estimates are reproducible and strata are independent.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "dbar/domains.hpp"

namespace dbar {

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline uint64_t derive_seed(uint64_t master, uint64_t stream) {
  return splitmix64(master ^ splitmix64(stream + 0x1234abcdull));
}

struct Rng {
  std::mt19937_64 gen;
  explicit Rng(uint64_t seed) : gen(seed) {}

  double uniform(double a = 0.0, double b = 1.0) {
    return std::uniform_real_distribution<double>(a, b)(gen);
  }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(gen); }

  // Uniform point on the unit sphere of R^d.
  std::vector<double> sphere(int d) {
    std::vector<double> v(d);
    double n2 = 0.0;
    do {
      n2 = 0.0;
      for (int i = 0; i < d; ++i) {
        v[i] = normal();
        n2 += v[i] * v[i];
      }
    } while (n2 < 1e-20);
    double inv = 1.0 / std::sqrt(n2);
    for (auto& x : v) x *= inv;
    return v;
  }

  // Uniform point in the unit ball of R^d.
  std::vector<double> ball(int d) {
    auto v = sphere(d);
    double r = std::pow(uniform(), 1.0 / d);
    for (auto& x : v) x *= r;
    return v;
  }

  CVec<double> cball(int n) {
    auto v = ball(2 * n);
    CVec<double> z(n);
    for (int k = 0; k < n; ++k) z[k] = {v[2 * k], v[2 * k + 1]};
    return z;
  }
  CVec<double> csphere(int n) {
    auto v = sphere(2 * n);
    CVec<double> z(n);
    for (int k = 0; k < n; ++k) z[k] = {v[2 * k], v[2 * k + 1]};
    return z;
  }
};

}  // namespace dbar
