#include <gtest/gtest.h>

#include <cmath>

#include "homog/besov.hpp"
#include "homog/errors.hpp"

using namespace homog;

namespace {

GridRoughPath brownian_lift(std::size_t n, std::size_t m, RngStream& rng) {
  std::vector<double> steps(n * m);
  for (auto& v : steps) v = rng.normal() / std::sqrt(static_cast<double>(n));
  return lift_steps(steps, m);
}

// X(t) = t sampled on n cells.
GridRoughPath linear_path(std::size_t n) {
  return lift_steps(std::vector<double>(n, 1.0 / static_cast<double>(n)), 1);
}

}  // namespace

TEST(Interpolant, ExactAtAnchors) {
  RngStream rng(1, 1);
  const GridRoughPath rp = brownian_lift(64, 2, rng);
  const ContinuousRoughPath crp(rp);
  std::vector<double> x(2), mm(4);
  for (std::size_t j = 0; j <= 64; ++j) {
    const double t = static_cast<double>(j) / 64.0;
    crp.X(t, x);
    crp.M(t, mm);
    for (std::size_t a = 0; a < 2; ++a) ASSERT_EQ(x[a], rp.X(j)[a]);
    for (std::size_t c = 0; c < 4; ++c) ASSERT_EQ(mm[c], rp.M(j)[c]);
  }
}

TEST(Interpolant, SingleCellIsStraightLine) {
  const GridRoughPath rp = lift_steps(std::vector<double>{0.6, -0.2}, 2);
  const ContinuousRoughPath crp(rp);
  std::vector<double> x(2);
  for (double t : {0.0, 0.25, 0.5, 0.9, 1.0}) {
    crp.X(t, x);
    EXPECT_NEAR(x[0], 0.6 * t, 1e-15);
    EXPECT_NEAR(x[1], -0.2 * t, 1e-15);
  }
  EXPECT_THROW(crp.X(1.5, x), DomainError);
}

TEST(Interpolant, InnerCellSecondLevelByHand) {
  // One cell with jump a and second level c. For s = lambda:
  // XX~(s,1) = theta c - theta lambda a (x) a, theta = 1 - lambda.
  const std::vector<double> a = {0.5, -1.0};
  const std::vector<double> c = {0.3, 0.1, -0.7, 0.2};
  std::vector<double> x = {0.0, 0.0, a[0], a[1]};
  std::vector<double> mm = {0.0, 0.0, 0.0, 0.0, c[0], c[1], c[2], c[3]};
  const ContinuousRoughPath crp(GridRoughPath(1, 2, x, mm));
  for (double lambda : {0.1, 0.5, 0.8}) {
    const Increment inc = crp.increment(lambda, 1.0);
    const double theta = 1.0 - lambda;
    for (std::size_t i = 0; i < 2; ++i) {
      EXPECT_NEAR(inc.x[i], theta * a[i], 1e-15);
      for (std::size_t j = 0; j < 2; ++j) {
        EXPECT_NEAR(inc.xx[i * 2 + j], theta * c[i * 2 + j] - theta * lambda * a[i] * a[j], 1e-15);
      }
    }
  }
}

TEST(Interpolant, IncrementsSatisfyChen) {
  RngStream rng(2, 2);
  const ContinuousRoughPath crp(brownian_lift(32, 2, rng));
  for (int t = 0; t < 200; ++t) {
    double s = rng.uniform(), u = rng.uniform(), v = rng.uniform();
    const Increment sv = crp.increment(s, v), su = crp.increment(s, u), uv = crp.increment(u, v);
    for (std::size_t i = 0; i < 2; ++i) {
      ASSERT_NEAR(sv.x[i], su.x[i] + uv.x[i], 1e-13);
      for (std::size_t j = 0; j < 2; ++j) {
        ASSERT_NEAR(sv.xx[i * 2 + j], su.xx[i * 2 + j] + uv.xx[i * 2 + j] + su.x[i] * uv.x[j],
                    1e-13);
      }
    }
  }
}

TEST(Besov, ZeroPathIsZero) {
  const ContinuousRoughPath crp(lift_steps(std::vector<double>(16, 0.0), 1));
  EXPECT_EQ(besov_norm(crp, 0.4, 8.0, 64), 0.0);
  EXPECT_EQ(embedding_check_var(crp, 0.4, 8.0, 64), 0.0);
  EXPECT_EQ(embedding_check_holder(crp, 0.4, 8.0, 64), 0.0);
}

TEST(Besov, LinearPathMatchesAnalyticIntegral) {
  // iint_{[0,1]^2} |u-v|^e du dv = 2 / ((e+1)(e+2)), e = q - q alpha - 1.
  const double alpha = 0.4, q = 8.0, e = q - q * alpha - 1.0;
  const ContinuousRoughPath crp(linear_path(16));
  BesovOptions opts;
  opts.alpha = alpha;
  opts.q = q;
  opts.max_level = 1;
  opts.quadrature = 256;
  const BesovResult r = besov_norm_report(crp, opts);
  const double exact = 2.0 / ((e + 1.0) * (e + 2.0));
  EXPECT_NEAR(r.level1, exact, 1e-3 * exact);
  EXPECT_EQ(r.level2, 0.0);
  const double h = 1.0 / 256.0;
  EXPECT_NEAR(r.band_bound, 2.0 * std::pow(h, e + 1.0) / (e + 1.0), 1e-12);
  EXPECT_LE(exact - r.level1, r.band_bound + 1e-4 * exact);
}

TEST(Besov, NonIntegrableBandIsInfinite) {
  // Level 2 exponent q/2 - q alpha - 1 <= -1 when alpha >= 1/2.
  RngStream rng(3, 3);
  const ContinuousRoughPath crp(brownian_lift(16, 2, rng));
  BesovOptions opts;
  opts.alpha = 0.6;
  opts.q = 8.0;
  opts.quadrature = 64;
  EXPECT_TRUE(std::isinf(besov_norm_report(crp, opts).band_bound));
}

TEST(Besov, DilationScalesNormAndKeepsRatios) {
  RngStream rng(4, 4);
  const GridRoughPath rp = brownian_lift(128, 2, rng);
  const ContinuousRoughPath a(rp), b(rp.dilate(2.5));
  BesovOptions opts;
  opts.quadrature = 128;
  const EmbeddingRatios ra = embedding_ratios(a, opts), rb = embedding_ratios(b, opts);
  EXPECT_NEAR(rb.besov, 2.5 * ra.besov, 1e-12 * rb.besov);
  EXPECT_NEAR(rb.var_ratio, ra.var_ratio, 1e-12 * ra.var_ratio);
  EXPECT_NEAR(rb.holder_ratio, ra.holder_ratio, 1e-12 * ra.holder_ratio);
}

TEST(Besov, ParameterGuards) {
  const ContinuousRoughPath crp(linear_path(4));
  EXPECT_THROW(besov_norm(crp, 0.1, 8.0, 64), ArgumentError);
  EXPECT_THROW(besov_norm(crp, 1.0, 8.0, 64), ArgumentError);
  EXPECT_THROW(besov_norm(crp, 0.6, 1.0, 64), ArgumentError);
  EXPECT_THROW(besov_norm(crp, 0.4, 8.0, 63), ArgumentError);
}

TEST(Besov, ThreadCountDoesNotChangeResult) {
  RngStream rng(5, 5);
  const ContinuousRoughPath crp(brownian_lift(64, 2, rng));
  BesovOptions opts;
  opts.quadrature = 128;
  const double one = besov_norm_report(crp, opts).norm;
  opts.threads = 3;
  EXPECT_EQ(besov_norm_report(crp, opts).norm, one);
}

TEST(VarNorm, MonotoneScalarPathEqualsIncrement) {
  EXPECT_NEAR(homogeneous_var_norm(linear_path(50), 2.5, 1), 1.0, 1e-14);
}

TEST(VarNorm, AgreesWithLevelWisePVarInOneDimensionLevelOne) {
  RngStream rng(6, 6);
  const GridRoughPath rp = brownian_lift(40, 1, rng);
  EXPECT_NEAR(homogeneous_var_norm(rp, 2.5, 1), pvar_level1(rp.samples(), 2.5).value, 1e-12);
}

TEST(HolderNorm, LinearPathAnalytic) {
  // max over distinct nodes of |u - v|^{1 - gamma}: the two extreme nodes.
  const double gamma = 0.275;
  const std::size_t Q = 128;
  const double span = static_cast<double>(Q - 1) / Q;
  EXPECT_NEAR(homogeneous_holder_norm(ContinuousRoughPath(linear_path(8)), gamma, Q, 1),
              std::pow(span, 1.0 - gamma), 1e-14);
}

TEST(ContPathBounds, HoldOnBrownianLifts) {
  RngStream rng(7, 7);
  for (int s = 0; s < 5; ++s) {
    const ContinuousRoughPath crp(brownian_lift(128, 2, rng));
    for (double beta : {0.5, 0.4, 0.25}) {
      RngStream pairs(8, s);
      const ContPathBounds b = cont_path_bounds(crp, beta, 1000, pairs);
      EXPECT_TRUE(b.holds()) << b.level1_ratio << ' ' << b.level2_ratio;
      EXPECT_GT(b.C1, 0.0);
      EXPECT_EQ(b.pairs, 1000u);
    }
  }
}

TEST(ContPathBounds, LinearPathConstants) {
  RngStream pairs(9, 9);
  const ContPathBounds b = cont_path_bounds(ContinuousRoughPath(linear_path(8)), 0.5, 100, pairs);
  EXPECT_NEAR(b.C1, 1.0, 1e-14);
  EXPECT_TRUE(b.holds());
  EXPECT_THROW(cont_path_bounds(ContinuousRoughPath(linear_path(8)), 0.6, 10, pairs),
               ArgumentError);
}
