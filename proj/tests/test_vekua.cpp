#include <gtest/gtest.h>

#include "support.hpp"
#include "ves/burgers.hpp"
#include "ves/vekua.hpp"

using namespace ves;
using ves::testing::control_structure;
using ves::testing::delta_lambda;
using ves::testing::Gen;
using ves::testing::max_abs;
using ves::testing::observed_order;
using ves::testing::without_partials;

namespace {

const GridSpec kGrid(-0.5, 2.0, -1.0, 1.0, 51, 41);
const GridSpec kSmooth(0.0, 2.0, -1.0, 1.0, 81, 81);

CanonicalChart chart_of(const EllipticStructure& s, const GridSpec& g = kGrid) {
  return build_chart(lambda_from_structure(s, g));
}

ComplexGridField constant_field(const GridSpec& g, cplx v) { return ComplexGridField(g, v); }

ComplexGridField smooth_coefficient(const GridSpec& g, double a) {
  return sample_all(g, [a](double x, double y) { return cplx(std::cos(a * x + y), 0.3 * x * y + a); });
}

VekuaProblem zero_problem(const SpectralField& lam) {
  const GridSpec& g = lam.grid();
  return {lam, constant_field(g, 0), constant_field(g, 0), constant_field(g, 0)};
}

}  // namespace

TEST(Reduce, HomogeneousIsZero) {
  const auto c = chart_of(delta_family_structure(0.5));
  const auto r = reduce(zero_problem(c.lambda), c);
  EXPECT_EQ(r.A_prime.valid_count(), kGrid.size());
  EXPECT_EQ(max_abs(r.A_prime), 0.0);
  EXPECT_EQ(max_abs(r.B_prime), 0.0);
  EXPECT_EQ(max_abs(r.F_prime), 0.0);
  EXPECT_EQ(r.phi_zero_count, 0u);
}

TEST(Reduce, DeltaFamilyUnitCoefficient) {
  for (double d : {1.0, 0.1, 0.01}) {
    const auto c = chart_of(delta_family_structure(d));
    VekuaProblem p = zero_problem(c.lambda);
    p.A = constant_field(kGrid, 1.0);
    const auto r = reduce(p, c);
    for (std::size_t j = 0; j < kGrid.ny(); ++j) {
      for (std::size_t i = 0; i < kGrid.nx(); ++i) {
        const double x = kGrid.x(i);
        // 2/Phi with Phi = 2 i delta / (1+x)^2
        const cplx expect(0.0, -(1 + x) * (1 + x) / d);
        EXPECT_LE(std::abs(r.A_prime(i, j) - expect), 1e-10 * std::abs(expect)) << d;
      }
    }
  }
}

TEST(Reduce, StandardStructureIsMultiplicationByMinusI) {
  const auto c = chart_of(constant_structure(1, 0));
  VekuaProblem p{c.lambda, smooth_coefficient(kGrid, 1), smooth_coefficient(kGrid, 2), smooth_coefficient(kGrid, 3)};
  const auto r = reduce(p, c);
  for (std::size_t k = 0; k < kGrid.size(); ++k) {
    EXPECT_LE(std::abs(r.A_prime[k] + I * p.A[k]), 1e-15 * std::abs(p.A[k]));
    EXPECT_LE(std::abs(r.B_prime[k] + I * p.B[k]), 1e-15 * std::abs(p.B[k]));
    EXPECT_LE(std::abs(r.F_prime[k] + I * p.F[k]), 1e-15 * std::abs(p.F[k]));
  }
}

TEST(Reduce, CoefficientsTimesPhiRecoverInput) {
  Gen gen(71);
  for (int trial = 0; trial < 5; ++trial) {
    const double d = gen.log_uniform(0.01, 2);
    const auto c = chart_of(delta_family_structure(d));
    auto rnd = [&] {
      ComplexGridField f(kGrid);
      for (std::size_t k = 0; k < f.size(); ++k) f[k] = cplx(gen.uniform(-5, 5), gen.uniform(-5, 5));
      return f;
    };
    const VekuaProblem p{c.lambda, rnd(), rnd(), rnd()};
    const auto r = reduce(p, c);
    for (std::size_t k = 0; k < kGrid.size(); ++k) {
      EXPECT_LE(std::abs(r.A_prime[k] * c.phi[k] - 2.0 * p.A[k]), 1e-13 * std::abs(2.0 * p.A[k]));
      EXPECT_LE(std::abs(r.B_prime[k] * c.phi[k] - 2.0 * p.B[k]), 1e-13 * std::abs(2.0 * p.B[k]));
      EXPECT_LE(std::abs(r.F_prime[k] * c.phi[k] - 2.0 * p.F[k]), 1e-13 * std::abs(2.0 * p.F[k]));
    }
  }
}

TEST(Reduce, RefusesNonRigid) {
  const auto c = chart_of(control_structure());
  try {
    reduce(zero_problem(c.lambda), c);
    FAIL() << "reduction of a non-rigid structure returned coefficients";
  } catch (const RefusalError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::refusal);
    EXPECT_GT(e.max_rho_T(), e.tolerance());
    EXPECT_NE(std::string(e.what()).find("not rigid"), std::string::npos);
  }
  // sampled version, also refused
  const auto fd = chart_of(without_partials(control_structure()));
  EXPECT_THROW(reduce(zero_problem(fd.lambda), fd), RefusalError);
}

TEST(Reduce, PhiZeroPointsAreMasked) {
  auto c = chart_of(constant_structure(1, 0));
  c.phi(7, 9) = cplx(3e-11, 0);
  c.phi(20, 4) = cplx(0, 0);
  VekuaProblem p{c.lambda, constant_field(kGrid, 1), constant_field(kGrid, 1), constant_field(kGrid, 1)};
  const auto r = reduce(p, c);
  EXPECT_EQ(r.phi_zero_count, 2u);
  EXPECT_FALSE(r.A_prime.valid(7, 9));
  EXPECT_FALSE(r.F_prime.valid(20, 4));
  EXPECT_EQ(r.A_prime.valid_count(), kGrid.size() - 2);
  for (std::size_t k = 0; k < kGrid.size(); ++k) {
    if (r.A_prime.valid(k)) EXPECT_GE(std::abs(c.phi[k]), phi_zero_threshold(c.lambda.lambda[k]));
  }
  EXPECT_DOUBLE_EQ(phi_zero_threshold(cplx(0, 1)), 2e-10);
}

TEST(WirtingerInXi, StandardExamples) {
  const auto c = chart_of(constant_structure(1, 0));
  const auto xi = wirtinger_in_xi(c.xi, c);
  const auto xib = wirtinger_in_xi(map(c.xi, [](cplx v) { return std::conj(v); }), c);
  const auto ie = eroded(c.xi, 1);
  for (std::size_t k = 0; k < kGrid.size(); ++k) {
    if (!ie.valid(k)) continue;
    EXPECT_LE(std::abs(xi.f_xi[k] - 1.0), 1e-12);
    EXPECT_LE(std::abs(xi.f_xibar[k]), 1e-12);
    EXPECT_LE(std::abs(xib.f_xi[k]), 1e-12);
    EXPECT_LE(std::abs(xib.f_xibar[k] - 1.0), 1e-12);
  }
}

TEST(WirtingerInXi, HolomorphicPassengerOrder) {
  const auto st = delta_family_structure(0.5);
  const auto err = [&](const GridSpec& g) {
    const auto c = chart_of(st, g);
    const auto f = map(c.xi, [](cplx v) { return v * v; });
    const auto d = wirtinger_in_xi(f, c);
    ComplexGridField e(g);
    for (std::size_t k = 0; k < g.size(); ++k) {
      e[k] = std::abs(d.f_xi[k] - 2.0 * c.xi[k]) + std::abs(d.f_xibar[k]);
      e.set_valid(k, d.f_xi.valid(k));
    }
    e.restrict_to(eroded(c.xi, kResidualMargin));
    return max_abs(e);
  };
  EXPECT_NEAR(observed_order(kSmooth, err), 2.0, 0.2);
}

TEST(WirtingerInXi, ChainRuleClosure) {
  // a non-holomorphic f: (f_x + lambda f_y) - f_xibar Phi vanishes only to O(h^2),
  // and the solved f_xi must reproduce f_x through the system
  const auto st = delta_family_structure(0.7);
  auto fn = [](double x, double y) { return cplx(std::sin(x) * y, std::exp(0.5 * x - y)); };
  const auto err = [&](const GridSpec& g) {
    const auto c = chart_of(st, g);
    const auto f = sample_all(g, fn);
    const auto fx = partial_x(f, 2), fy = partial_y(f, 2);
    const auto d = wirtinger_in_xi(fx, fy, c);
    double worst_exact = 0;
    ComplexGridField e(g);
    for (std::size_t k = 0; k < g.size(); ++k) {
      e.set_valid(k, d.f_xi.valid(k));
      if (!d.f_xi.valid(k)) continue;
      const cplx rebuilt = d.f_xi[k] * c.xi_x[k] + d.f_xibar[k] * std::conj(c.xi_x[k]);
      worst_exact = std::max(worst_exact, std::abs(rebuilt - fx[k]) / (1 + std::abs(fx[k])));
      // exact derivative of f
      const double x = g.x(k % g.nx()), y = g.y(k / g.nx());
      const cplx ex(std::cos(x) * y, 0.5 * std::exp(0.5 * x - y));
      const cplx ey(std::sin(x), -std::exp(0.5 * x - y));
      e[k] = (ex + c.lambda.lambda[k] * ey) - d.f_xibar[k] * c.phi[k];
    }
    EXPECT_LE(worst_exact, 1e-13);
    e.restrict_to(eroded(c.xi, kResidualMargin));
    return max_abs(e);
  };
  EXPECT_NEAR(observed_order(kSmooth, err), 2.0, 0.2);
}

TEST(WirtingerInXi, SingularSystemIsMasked) {
  auto c = chart_of(constant_structure(1, 0));
  c.xi_x(5, 5) = cplx(1, 0);
  c.xi_y(5, 5) = cplx(2, 0);
  const auto d = wirtinger_in_xi(c.xi, c);
  EXPECT_FALSE(d.f_xi.valid(5, 5));
  EXPECT_FALSE(d.f_xibar.valid(5, 5));
}

TEST(Manufacture, HolomorphicPassengerSolvesHomogeneous) {
  const auto c = chart_of(delta_family_structure(0.3));
  const auto g = seed::parse_seed("exp(w) + w^3");
  const auto f = holomorphic_passenger(c, g);
  const auto p = manufacture(c.lambda, constant_field(kGrid, 0), constant_field(kGrid, 0), f);
  double scale = 0;
  for (std::size_t k = 0; k < kGrid.size(); ++k) scale = std::max(scale, std::abs((*f.fx)[k]));
  EXPECT_LE(max_abs(p.F), 1e-14 * scale);
  // f = g(xi) pointwise
  for (std::size_t k = 0; k < kGrid.size(); k += 17) {
    EXPECT_LE(std::abs(f.f[k] - (std::exp(c.xi[k]) + std::pow(c.xi[k], 3))), 1e-13 * std::abs(f.f[k]));
  }
}

TEST(Manufacture, ConjugateXiForcingIsHalfPhi) {
  const auto c = chart_of(delta_family_structure(0.3));
  const auto f = conjugate_xi_passenger(c);
  const auto p = manufacture(c.lambda, constant_field(kGrid, 0), constant_field(kGrid, 0), f);
  for (std::size_t k = 0; k < kGrid.size(); ++k) {
    EXPECT_LE(std::abs(p.F[k] - 0.5 * c.phi[k]), 1e-13 * std::abs(c.phi[k]));
  }
  const auto r = reduce(p, c);
  for (std::size_t k = 0; k < kGrid.size(); ++k) EXPECT_LE(std::abs(r.F_prime[k] - 1.0), 1e-13);
}

TEST(ReducedResidual, HomogeneousHolomorphicOrder) {
  const auto st = delta_family_structure(0.5);
  const auto g = seed::parse_seed("w^2");
  const auto err = [&](const GridSpec& grid) {
    const auto c = chart_of(st, grid);
    const auto f = holomorphic_passenger(c, g);
    const auto r = reduce(manufacture(c.lambda, constant_field(grid, 0), constant_field(grid, 0), f), c);
    return reduced_residual(f.f, r).norms.max;
  };
  EXPECT_NEAR(observed_order(kSmooth, err), 2.0, 0.2);
}

TEST(ReducedResidual, ManufacturedOrders) {
  for (double d : {1.0, 0.1}) {
    const auto st = delta_family_structure(d);
    for (int order : {2, 4}) {
      const auto err = [&](const GridSpec& grid) {
        const auto c = chart_of(st, grid);
        const auto f = passenger_from_xi(
            c,
            [](cplx z) {
              const cplx zb = std::conj(z);
              return XiJet{std::exp(z) * zb + zb * zb, std::exp(z) * zb, std::exp(z) + 2.0 * zb};
            },
            "exp(xi) conj(xi) + conj(xi)^2");
        const auto p = manufacture(c.lambda, smooth_coefficient(grid, 1), smooth_coefficient(grid, 2), f);
        return reduced_residual(f.f, reduce(p, c), order).norms.max;
      };
      const GridSpec base = order == 2 ? kSmooth : kSmooth.refined(1);
      EXPECT_NEAR(observed_order(base, err), order, 0.2) << d << " " << order;
    }
  }
}

TEST(ReducedResidual, ConjugateXiClosesTheLoop) {
  const auto st = delta_family_structure(0.4);
  const auto err = [&](const GridSpec& grid) {
    const auto c = chart_of(st, grid);
    const auto f = conjugate_xi_passenger(c);
    const auto A = smooth_coefficient(grid, 1), B = smooth_coefficient(grid, 2);
    const auto r = reduce(manufacture(c.lambda, A, B, f), c);
    // F' = 1 + A' conj(xi) + B' xi
    double worst = 0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const cplx expect = 1.0 + r.A_prime[k] * f.f[k] + r.B_prime[k] * c.xi[k];
      worst = std::max(worst, std::abs(r.F_prime[k] - expect) / std::abs(expect));
    }
    EXPECT_LE(worst, 1e-12);
    return reduced_residual(f.f, r).norms.max;
  };
  EXPECT_NEAR(observed_order(kSmooth, err), 2.0, 0.2);
}

TEST(ReducedResidual, ClassicalCoordinatesOracle) {
  // lambda = i: xi = y - i x, so d/dxibar = (d/dy - i d/dx)/2 computed directly
  const auto c = chart_of(constant_structure(1, 0));
  const auto f = sample_all(kGrid, [](double x, double y) { return cplx(x * x * y, std::sin(x + 2 * y)); });
  const auto A = smooth_coefficient(kGrid, 1), B = smooth_coefficient(kGrid, 2), F = smooth_coefficient(kGrid, 3);
  const auto r = reduce(VekuaProblem{c.lambda, A, B, F}, c);
  const auto rep = reduced_residual(f, r);
  const auto fx = partial_x(f, 2), fy = partial_y(f, 2);
  double worst = 0;
  std::size_t n = 0;
  for (std::size_t k = 0; k < kGrid.size(); ++k) {
    if (!rep.residual.valid(k)) continue;
    ++n;
    const cplx fxib = 0.5 * (fy[k] - I * fx[k]);
    const cplx direct = fxib - I * A[k] * f[k] - I * B[k] * std::conj(f[k]) + I * F[k];
    worst = std::max(worst, std::abs(rep.residual[k] - direct));
  }
  EXPECT_GT(n, 0u);
  EXPECT_LE(worst, 1e-12);
}

TEST(ReducedResidual, EmptyRegion) {
  const GridSpec g(0.0, 1.0, 0.0, 1.0, 5, 5);
  const auto c = chart_of(constant_structure(1, 0), g);
  auto p = zero_problem(c.lambda);
  for (std::size_t k = 0; k < g.size(); ++k) p.F.set_valid(k, false);
  EXPECT_THROW(reduced_residual(c.xi, reduce(p, c)), Error);
}

TEST(AxisIdentity, Examples) {
  const auto c = chart_of(delta_family_structure(0.2));
  const auto g = seed::parse_seed("w^2");
  const auto f = holomorphic_passenger(c, g);
  EXPECT_LE(passenger_axis_identity(f.f, g), 1e-13);
  EXPECT_LE(passenger_axis_identity(f.f, [](double y) { return cplx(y * y, 0); }), 1e-13);

  std::vector<cplx> samples(kGrid.ny());
  for (std::size_t j = 0; j < kGrid.ny(); ++j) samples[j] = kGrid.y(j) * kGrid.y(j);
  EXPECT_LE(passenger_axis_identity(f.f, samples), 1e-13);
  samples[13] += 1e-3;
  EXPECT_GE(passenger_axis_identity(f.f, samples), 1e-3 - 1e-15);

  const GridSpec off(0.5, 1.0, -1.0, 1.0, 11, 11);
  EXPECT_THROW(passenger_axis_identity(ComplexGridField(off), g), Error);
  EXPECT_THROW(passenger_axis_identity(f.f, std::vector<cplx>(3)), Error);
}

TEST(CoefficientBound, DeltaFamilyOnUnitStrip) {
  const GridSpec g(0.0, 1.0, -1.0, 1.0, 41, 41);
  for (double d : {1.0, 0.1}) {
    const auto c = chart_of(delta_family_structure(d), g);
    VekuaProblem p = zero_problem(c.lambda);
    p.A = constant_field(g, 1.0);
    p.B = smooth_coefficient(g, 1);
    const auto rep = coefficient_bound_report(reduce(p, c), p, 0);
    // |Phi| = 2 delta / (1+x)^2 is smallest at x = 1
    EXPECT_NEAR(rep.min_abs_phi, d / 2, 1e-12 * d);
    EXPECT_NEAR(rep.bound_factor, 2 / d, 1e-10 / d);
    EXPECT_LE(rep.ratio_A_max, rep.bound_factor * (1 + 1e-12));
    EXPECT_LE(rep.ratio_A_rms, rep.bound_factor);
    EXPECT_TRUE(rep.holds);
    EXPECT_FALSE(rep.C.has_value());
    EXPECT_EQ(rep.points, g.size());
  }
}

TEST(CoefficientBound, StandardStructure) {
  const auto c = chart_of(constant_structure(1, 0));
  VekuaProblem p{c.lambda, smooth_coefficient(kGrid, 1), smooth_coefficient(kGrid, 2), constant_field(kGrid, 0)};
  const auto rep = coefficient_bound_report(reduce(p, c), p, 2);
  EXPECT_DOUBLE_EQ(rep.bound_factor, 0.5);
  EXPECT_NEAR(rep.ratio_A_max, 0.5, 1e-15);
  EXPECT_TRUE(rep.holds);
  EXPECT_EQ(rep.points, (kGrid.nx() - 4) * (kGrid.ny() - 4));
}

TEST(CoefficientBound, BurgersExponentialSeed) {
  const Seed s = expression_seed("1i*exp(w)");
  const GridSpec g(-0.4, 0.4, -1.0, 1.0, 41, 41);
  const auto sol = burgers_field(s, g);
  const auto c = build_chart(sol.spectral());
  VekuaProblem p{c.lambda, smooth_coefficient(g, 1), smooth_coefficient(g, 2), constant_field(g, 0)};
  const auto rep = coefficient_bound_report(reduce(p, c), p, 2, &sol.J);
  ASSERT_TRUE(rep.C.has_value());
  EXPECT_GT(rep.c1, 0.0);
  EXPECT_GE(rep.min_abs_phi, 2 * rep.c1 / *rep.C * (1 - 1e-12));
  EXPECT_TRUE(rep.holds);
}

TEST(CoefficientBound, EmptyRegion) {
  const GridSpec g(0.0, 1.0, 0.0, 1.0, 5, 5);
  const auto c = chart_of(constant_structure(1, 0), g);
  const auto p = zero_problem(c.lambda);
  EXPECT_THROW(coefficient_bound_report(reduce(p, c), p, 3), Error);
}
