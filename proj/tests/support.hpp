#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "ves/algebra.hpp"

namespace ves::testing {

// Seeded generator for property tests.
class Gen {
 public:
  explicit Gen(std::uint64_t seed = 20240611) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  double log_uniform(double lo, double hi) { return std::exp(uniform(std::log(lo), std::log(hi))); }
  std::size_t index(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }
  bool coin(double p = 0.5) { return uniform(0.0, 1.0) < p; }

  // (alpha, beta) with Delta = 4 alpha - beta^2 in [dlo, dhi].
  std::pair<double, double> elliptic(double dlo = 0.1, double dhi = 10.0) {
    const double beta = uniform(-5.0, 5.0);
    const double delta = uniform(dlo, dhi);
    return {(delta + beta * beta) / 4.0, beta};
  }

 private:
  std::mt19937_64 rng_;
};

template <class T>
double max_abs(const GridField<T>& f) {
  return norms(f).max;
}

// max |f - g| on the common valid set.
template <class T>
double max_diff(const GridField<T>& a, const GridField<T>& b) {
  return norms(difference(a, b)).max;
}

// Observed order of e(h) over grids g, g/2, g/4.
template <class Fn>
double observed_order(const GridSpec& base, Fn&& err_at) {
  std::vector<std::pair<double, double>> pts;
  for (int l = 0; l < 3; ++l) {
    const GridSpec g = base.refined(l);
    pts.emplace_back(g.h(), err_at(g));
  }
  return convergence_order(pts);
}

// lambda = x + i: alpha = x^2 + 1, beta = -2x, T = 1.
inline EllipticStructure control_structure() {
  return EllipticStructure::from_lambda("x + i", [](double x, double) {
    return std::optional<std::array<cplx, 3>>({cplx(x, 1.0), cplx(1.0, 0.0), cplx(0.0, 0.0)});
  });
}

// Same structure with the partials withheld.
inline EllipticStructure without_partials(const EllipticStructure& s) {
  return EllipticStructure::closed_form("fd", [s](double x, double y) -> std::optional<StructurePoint> {
    StructurePoint p = s.at(x, y);
    p.partials.reset();
    return p;
  });
}

inline cplx delta_lambda(double x, double y, double delta) { return cplx(y, delta) / (1.0 + x); }

}  // namespace ves::testing
