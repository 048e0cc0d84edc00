#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "homog/errors.hpp"
#include "homog/stats.hpp"

using namespace homog;

namespace {

double ecdf(const std::vector<double>& s, double t) {
  double c = 0.0;
  for (double v : s) c += v <= t;
  return c / static_cast<double>(s.size());
}

}  // namespace

TEST(NormalCdf, KnownValues) {
  EXPECT_NEAR(normal_cdf(0.0), 0.5, 1e-16);
  EXPECT_NEAR(normal_cdf(1.0), 0.8413447460685429, 1e-15);
  EXPECT_NEAR(normal_cdf(-1.959963984540054), 0.025, 1e-15);
  EXPECT_NEAR(normal_cdf(1.0, 1.0, 4.0), 0.5, 1e-16);
  EXPECT_EQ(normal_cdf(-0.1, 0.0, 0.0), 0.0);
  EXPECT_EQ(normal_cdf(0.0, 0.0, 0.0), 1.0);
  EXPECT_THROW(normal_cdf(0.0, 0.0, -1.0), ArgumentError);
}

TEST(KsDistance, TwoSampleMatchesBruteForce) {
  RngStream rng(1, 1);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> a(1 + rng.next_u64() % 40), b(1 + rng.next_u64() % 40);
    // Rounded values force ties within and across samples.
    for (auto& v : a) v = std::round(4.0 * rng.normal()) / 4.0;
    for (auto& v : b) v = std::round(4.0 * rng.normal()) / 4.0;
    double best = 0.0;
    for (const auto* s : {&a, &b}) {
      for (double x : *s) best = std::max(best, std::abs(ecdf(a, x) - ecdf(b, x)));
    }
    EXPECT_NEAR(ks_distance(a, b), best, 1e-15);
  }
}

TEST(KsDistance, OneSampleMatchesBruteForce) {
  RngStream rng(2, 2);
  std::vector<double> a(57);
  for (auto& v : a) v = rng.normal();
  a[3] = a[10];
  auto F = [](double x) { return normal_cdf(x, 0.1, 1.3); };
  double best = 0.0;
  for (double x : a) {
    const double left = ecdf(a, std::nextafter(x, -INFINITY));
    best = std::max({best, std::abs(F(x) - ecdf(a, x)), std::abs(F(x) - left)});
  }
  EXPECT_NEAR(ks_distance(a, F), best, 1e-15);
  EXPECT_THROW(ks_distance(std::vector<double>{}, F), ArgumentError);
}

TEST(KsDistance, IdenticalSamplesAndDisjointSupports) {
  std::vector<double> a = {1.0, 2.0, 3.0};
  EXPECT_EQ(ks_distance(a, a), 0.0);
  EXPECT_EQ(ks_distance(a, std::vector<double>{10.0, 11.0}), 1.0);
}

TEST(BatchMean, HandExample) {
  // Batches {1,2}, {3,4}, {5,6}, {7,8}: means 1.5, 3.5, 5.5, 7.5.
  std::vector<double> s = {1, 2, 3, 4, 5, 6, 7, 8};
  const MeanEstimate est = batch_mean(s, 4);
  EXPECT_DOUBLE_EQ(est.mean, 4.5);
  EXPECT_EQ(est.batches, 4u);
  // sample variance of batch means = 20/3, stderr = sqrt(20/3/4)
  EXPECT_NEAR(est.stderr_, std::sqrt(20.0 / 12.0), 1e-15);
  EXPECT_EQ(batch_mean(std::vector<double>{2.0}, 32).stderr_, 0.0);
}

TEST(BatchMean, IidStandardErrorIsCalibrated) {
  RngStream rng(3, 3);
  std::vector<double> s(64000);
  for (auto& v : s) v = rng.normal();
  const MeanEstimate est = batch_mean(s);
  EXPECT_NEAR(est.stderr_, 1.0 / std::sqrt(64000.0), 0.35 / std::sqrt(64000.0));
}

TEST(MomentChecks, Level2MeanAndCovariance) {
  LiftEnsemble ens(16, 1, 64);
  for (std::size_t k = 0; k < 64; ++k) {
    ens.x[k] = (k % 2 == 0) ? 1.0 : -1.0;
    ens.xx[k] = 0.5 + ((k % 4) < 2 ? 0.01 : -0.01);
  }
  const MomentCheck m = level2_mean_check(ens, 0.5);
  EXPECT_NEAR(m.statistic, 0.5, 1e-15);
  EXPECT_TRUE(m.within());
  const MomentCheck c = covariance_check(ens, 1.0, 0.0);
  EXPECT_EQ(c.statistic, 1.0);
  EXPECT_EQ(c.z, 0.0);
  EXPECT_TRUE(c.within());
  const MomentCheck off = covariance_check(ens, 0.5, 0.0);
  EXPECT_FALSE(off.within());
  EXPECT_THROW(level2_mean_check(ens, 0.5, 1, 0), ArgumentError);
}

TEST(MomentChecks, UncenteredObservableIsRejected) {
  LiftEnsemble ens(16, 1, 64);
  for (std::size_t k = 0; k < 64; ++k) ens.x[k] = 4.0 + 0.01 * static_cast<double>(k % 3);
  EXPECT_THROW(covariance_check(ens, 1.0, 0.0), DomainError);
}

TEST(MomentScaling, LinearUnderDilation) {
  RngStream rng(4, 4);
  std::vector<GridRoughPath> lifts, scaled;
  for (int s = 0; s < 20; ++s) {
    std::vector<double> steps(32 * 2);
    for (auto& v : steps) v = rng.normal() / std::sqrt(32.0);
    lifts.push_back(lift_steps(steps, 2));
    scaled.push_back(lifts.back().dilate(0.5));
  }
  const auto a = moment_scaling_report(lifts, 2.0);
  const auto b = moment_scaling_report(scaled, 2.0);
  ASSERT_EQ(a.level1.size(), 32u);
  EXPECT_EQ(b.max_level1, 0.5 * a.max_level1);
  EXPECT_EQ(b.max_level2, 0.25 * a.max_level2);
}

TEST(MomentScaling, AccumulatorMatchesDirectFormula) {
  std::vector<GridRoughPath> lifts = {lift_steps(std::vector<double>{1.0, 1.0}, 1),
                                      lift_steps(std::vector<double>{-1.0, 1.0}, 1)};
  // q = 2: ||W(t)||_4 over {(1, 2), (-1, 0)} at t = 1/2, 1.
  const auto rep = moment_scaling_report(lifts, 2.0);
  EXPECT_NEAR(rep.level1[0], std::pow(1.0, 0.25) / std::sqrt(0.5), 1e-15);
  EXPECT_NEAR(rep.level1[1], std::pow(8.0, 0.25), 1e-15);
  // WW(0,1) = step0 * step1: 1 and -1, so ||WW||_2 = 1.
  EXPECT_NEAR(rep.level2[1], 1.0, 1e-15);
  EXPECT_EQ(rep.level2[0], 0.0);
  EXPECT_THROW(MomentScalingAccumulator(0, 2.0), ArgumentError);
  EXPECT_THROW(MomentScalingAccumulator(4, 1.0), ArgumentError);
}

TEST(LiftEnsemble, FromPathsTakesTerminalValues) {
  std::vector<GridRoughPath> lifts = {lift_steps(std::vector<double>{1.0, 2.0}, 1),
                                      lift_steps(std::vector<double>{3.0, -1.0}, 1)};
  const LiftEnsemble e = LiftEnsemble::from_paths(lifts);
  EXPECT_EQ(e.count, 2u);
  EXPECT_EQ(e.x[0], 3.0);
  EXPECT_EQ(e.xx[0], 2.0);
  EXPECT_EQ(e.x[1], 2.0);
  EXPECT_EQ(e.xx[1], -3.0);
}
