#include <gtest/gtest.h>

#include "support.hpp"
#include "ves/numerics.hpp"

using namespace ves;
using ves::testing::Gen;
using ves::testing::max_abs;
using ves::testing::max_diff;
using ves::testing::observed_order;

namespace {

const GridSpec kGrid(-0.5, 2.0, -1.0, 1.0, 41, 33);

ComplexGridField field(const GridSpec& g, cplx (*fn)(double, double)) { return sample_all(g, fn); }

}  // namespace

TEST(GridSpec, RejectsBadBounds) {
  EXPECT_THROW(GridSpec(1, 1, 0, 1, 5, 5), Error);
  EXPECT_THROW(GridSpec(0, 1, 2, 1, 5, 5), Error);
  EXPECT_THROW(GridSpec(0, 1, 0, 1, 4, 5), Error);
  EXPECT_THROW(GridSpec(0, 1, 0, 1, 5, 4), Error);
}

TEST(GridSpec, EndpointsAndSpacing) {
  const GridSpec g(-0.5, 2.0, -1.0, 1.0, 201, 201);
  EXPECT_DOUBLE_EQ(g.hx(), 2.5 / 200);
  EXPECT_DOUBLE_EQ(g.hy(), 0.01);
  EXPECT_EQ(g.x(200), 2.0);
  EXPECT_EQ(g.y(200), 1.0);
  EXPECT_EQ(g.y(100), 0.0);
  ASSERT_TRUE(g.axis_column().has_value());
  EXPECT_EQ(*g.axis_column(), 40u);
  const GridSpec r = g.refined(2);
  EXPECT_EQ(r.nx(), 801u);
  EXPECT_DOUBLE_EQ(r.hx(), g.hx() / 4);
}

TEST(PartialX, LinearIsExact) {
  for (int order : {2, 4}) {
    auto d = partial_x(field(kGrid, [](double x, double) { return cplx(x, 0); }), order);
    auto one = map(d, [](const cplx&) { return cplx(1, 0); });
    EXPECT_LE(max_diff(d, one), 1e-12);
  }
}

TEST(PartialX, QuadraticIsExactAtOrderTwo) {
  auto d = partial_x(field(kGrid, [](double x, double y) { return cplx(x * x, y); }), 2);
  auto want = sample_all(kGrid, [](double x, double) { return cplx(2 * x, 0); });
  EXPECT_LE(max_diff(d, want), 1e-12);
}

TEST(PartialX, QuarticIsExactAtOrderFour) {
  auto d = partial_x(field(kGrid, [](double x, double) { return cplx(x * x * x * x, x * x * x); }), 4);
  auto want = sample_all(kGrid, [](double x, double) { return cplx(4 * x * x * x, 3 * x * x); });
  EXPECT_LE(max_diff(d, want), 1e-11);
}

TEST(PartialX, ExpErrorMatchesLeadingTerm) {
  const GridSpec g(0.0, 1.0, 0.0, 0.04, 101, 5);
  auto d = partial_x(field(g, [](double x, double) { return cplx(std::exp(x), 0); }), 2);
  auto exact = sample_all(g, [](double x, double) { return cplx(std::exp(x), 0); });
  // central difference error ~ h^2 f'''/6
  double worst = 0.0;
  for (std::size_t k = 0; k < d.size(); ++k) {
    if (!d.valid(k)) continue;
    const double x = g.x(k % g.nx());
    const double lead = g.hx() * g.hx() * std::exp(x) / 6.0;
    worst = std::max(worst, std::abs((d[k] - exact[k]).real() - lead) / lead);
  }
  EXPECT_LT(worst, 1e-3);
}

TEST(PartialX, ExpObservedOrder) {
  const double p = observed_order(GridSpec(0.0, 1.0, 0.0, 1.0, 21, 21), [](const GridSpec& g) {
    auto d = partial_x(field(g, [](double x, double) { return cplx(std::exp(x), 0); }), 2);
    return max_diff(d, sample_all(g, [](double x, double) { return cplx(std::exp(x), 0); }));
  });
  EXPECT_GE(p, 1.8);
  EXPECT_LE(p, 2.2);
}

TEST(PartialY, LinearQuadraticAndSine) {
  auto d1 = partial_y(field(kGrid, [](double, double y) { return cplx(y, 0); }));
  EXPECT_LE(max_diff(d1, map(d1, [](const cplx&) { return cplx(1, 0); })), 1e-12);
  auto d2 = partial_y(field(kGrid, [](double, double y) { return cplx(y * y, 0); }));
  EXPECT_LE(max_diff(d2, sample_all(kGrid, [](double, double y) { return cplx(2 * y, 0); })), 1e-12);

  for (int order : {2, 4}) {
    const double p = observed_order(GridSpec(0.0, 1.0, 0.0, 2.0, 11, 11), [order](const GridSpec& g) {
      auto d = partial_y(field(g, [](double, double y) { return cplx(std::sin(y), 0); }), order);
      return max_diff(d, sample_all(g, [](double, double y) { return cplx(std::cos(y), 0); }));
    });
    EXPECT_NEAR(p, order, 0.3) << "order " << order;
  }
}

TEST(PartialX, BoundaryLayersMasked) {
  for (int order : {2, 4}) {
    const std::size_t m = order / 2;
    auto d = partial_x(field(kGrid, [](double x, double) { return cplx(x, 0); }), order);
    for (std::size_t j = 0; j < kGrid.ny(); ++j) {
      for (std::size_t i = 0; i < kGrid.nx(); ++i) {
        EXPECT_EQ(d.valid(i, j), i >= m && i + m < kGrid.nx());
      }
    }
  }
}

TEST(PartialX, MaskPropagatesThroughStencil) {
  auto f = field(kGrid, [](double x, double y) { return cplx(x * y, 0); });
  f(10, 7) = cplx(1e300, 0);
  f.set_valid(10, 7, false);
  auto d2 = partial_x(f, 2);
  EXPECT_FALSE(d2.valid(9, 7));
  EXPECT_FALSE(d2.valid(11, 7));
  EXPECT_TRUE(d2.valid(12, 7));
  EXPECT_TRUE(d2.valid(10, 6));
  auto d4 = partial_x(f, 4);
  EXPECT_FALSE(d4.valid(8, 7));
  EXPECT_FALSE(d4.valid(12, 7));
  EXPECT_LT(max_abs(d4), 10.0);
}

TEST(PartialX, RejectsBadOrder) {
  auto f = field(kGrid, [](double x, double) { return cplx(x, 0); });
  EXPECT_THROW(partial_x(f, 3), Error);
}

TEST(Wirtinger, Monomials) {
  auto z = wirtinger(field(kGrid, [](double x, double y) { return cplx(x, y); }));
  EXPECT_LE(max_diff(z.d_z, map(z.d_z, [](const cplx&) { return cplx(1, 0); })), 1e-12);
  EXPECT_LE(max_abs(z.d_zbar), 1e-12);
  auto zb = wirtinger(field(kGrid, [](double x, double y) { return cplx(x, -y); }));
  EXPECT_LE(max_abs(zb.d_z), 1e-12);
  EXPECT_LE(max_diff(zb.d_zbar, map(zb.d_zbar, [](const cplx&) { return cplx(1, 0); })), 1e-12);
}

TEST(Wirtinger, ModulusSquared) {
  // |z|^2 is quadratic, so order-2 differences are exact as well
  auto w = wirtinger(field(kGrid, [](double x, double y) { return cplx(x * x + y * y, 0); }));
  EXPECT_LE(max_diff(w.d_z, sample_all(kGrid, [](double x, double y) { return cplx(x, -y); })), 1e-12);
  EXPECT_LE(max_diff(w.d_zbar, sample_all(kGrid, [](double x, double y) { return cplx(x, y); })), 1e-12);
}

TEST(Wirtinger, ReconstructsPartials) {
  auto f = field(kGrid, [](double x, double y) { return std::exp(cplx(x * y, x - y)); });
  auto w = wirtinger(f);
  auto fx = partial_x(f), fy = partial_y(f);
  EXPECT_LE(max_diff(fx, zip(w.d_z, w.d_zbar, [](cplx a, cplx b) { return a + b; })), 1e-12);
  EXPECT_LE(max_diff(fy, zip(w.d_z, w.d_zbar, [](cplx a, cplx b) { return I * (a - b); })), 1e-12);
}

TEST(Wirtinger, RealFieldsGiveConjugatePair) {
  Gen gen(7);
  for (int trial = 0; trial < 20; ++trial) {
    const double a = gen.uniform(-2, 2), b = gen.uniform(-2, 2), c = gen.uniform(-2, 2);
    auto f = sample_all(kGrid, [&](double x, double y) { return cplx(std::sin(a * x + b * y) + c * x * y, 0); });
    auto w = wirtinger(f, trial % 2 ? 4 : 2);
    for (std::size_t k = 0; k < f.size(); ++k) {
      if (!w.d_z.valid(k)) continue;
      EXPECT_EQ(w.d_zbar[k], std::conj(w.d_z[k]));
    }
  }
}

TEST(ConvergenceOrder, ExactHalvings) {
  EXPECT_NEAR(convergence_order({{0.1, 1e-2}, {0.05, 2.5e-3}}), 2.0, 1e-12);
  EXPECT_NEAR(convergence_order({{0.1, 1e-3}, {0.05, 1.25e-4}}), 3.0, 1e-12);
}

TEST(ConvergenceOrder, LeastSquaresSlope) {
  // three points off a line: slope is the regression slope
  const double p = convergence_order({{1.0, 1.0}, {0.5, 0.3}, {0.25, 0.06}});
  const double lx[3] = {0.0, std::log(0.5), std::log(0.25)};
  const double ly[3] = {0.0, std::log(0.3), std::log(0.06)};
  const double mx = (lx[0] + lx[1] + lx[2]) / 3, my = (ly[0] + ly[1] + ly[2]) / 3;
  double sxy = 0, sxx = 0;
  for (int k = 0; k < 3; ++k) {
    sxy += (lx[k] - mx) * (ly[k] - my);
    sxx += (lx[k] - mx) * (lx[k] - mx);
  }
  EXPECT_NEAR(p, sxy / sxx, 1e-12);
}

TEST(ConvergenceOrder, Errors) {
  try {
    convergence_order({{0.1, 1e-2}, {0.05, 0.0}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::numerical);
    EXPECT_NE(std::string(e.what()).find("exact or invalid residual"), std::string::npos);
  }
  EXPECT_THROW(convergence_order({{0.1, 1e-2}}), Error);
  EXPECT_THROW(convergence_order({{0.05, 1e-2}, {0.1, 1e-3}}), Error);
  EXPECT_THROW(convergence_order({{0.1, 1e-2}, {0.1, 1e-3}}), Error);
}

TEST(Norms, MaskedPointsIgnored) {
  RealGridField f(kGrid, 2.0);
  f[3] = 1e300;
  f.set_valid(3, false);
  const Norms n = norms(f);
  EXPECT_EQ(n.count, kGrid.size() - 1);
  EXPECT_EQ(n.max, 2.0);
  EXPECT_NEAR(n.rms, 2.0, 1e-15);
}

TEST(Norms, RmsOracle) {
  RealGridField f(GridSpec(0, 1, 0, 1, 5, 5));
  double ss = 0;
  for (std::size_t k = 0; k < f.size(); ++k) {
    f[k] = static_cast<double>(k) - 7.0;
    ss += f[k] * f[k];
  }
  EXPECT_NEAR(norms(f).rms, std::sqrt(ss / 25.0), 1e-14);
  EXPECT_EQ(norms(f).max, 17.0);
}

TEST(Eroded, MatchesBruteForce) {
  Gen gen(11);
  const GridSpec g(0, 1, 0, 1, 23, 19);
  for (int trial = 0; trial < 30; ++trial) {
    RealGridField f(g, 1.0);
    for (std::size_t k = 0; k < f.size(); ++k) f.set_valid(k, !gen.coin(0.03));
    const std::size_t c = gen.index(4);
    auto e = eroded(f, c);
    for (std::size_t j = 0; j < g.ny(); ++j) {
      for (std::size_t i = 0; i < g.nx(); ++i) {
        bool want = i >= c && j >= c && i + c < g.nx() && j + c < g.ny();
        for (std::size_t jj = j - std::min(j, c); want && jj <= std::min(g.ny() - 1, j + c); ++jj) {
          for (std::size_t ii = i - std::min(i, c); want && ii <= std::min(g.nx() - 1, i + c); ++ii) {
            want = f.valid(ii, jj);
          }
        }
        ASSERT_EQ(e.valid(i, j), want) << i << "," << j << " c=" << c;
      }
    }
  }
}

TEST(Zip, MaskIsConjunction) {
  RealGridField a(kGrid, 1.0), b(kGrid, 2.0);
  a.set_valid(0, false);
  b.set_valid(1, false);
  auto c = zip(a, b, [](double u, double v) { return u + v; });
  EXPECT_FALSE(c.valid(0));
  EXPECT_FALSE(c.valid(1));
  EXPECT_TRUE(c.valid(2));
  EXPECT_EQ(c[2], 3.0);
  EXPECT_THROW(zip(a, RealGridField(kGrid.refined()), [](double u, double v) { return u + v; }), Error);
}

TEST(Sample, NulloptMasks) {
  auto f = sample(kGrid, [](double x, double) -> std::optional<double> {
    if (x < 0) return std::nullopt;
    return x;
  });
  for (std::size_t i = 0; i < kGrid.nx(); ++i) EXPECT_EQ(f.valid(i, 0), kGrid.x(i) >= 0);
}
