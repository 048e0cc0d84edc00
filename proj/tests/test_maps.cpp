#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "homog/errors.hpp"
#include "homog/maps.hpp"

using namespace homog;

TEST(LsvStep, DoublingMapBranches) {
  EXPECT_EQ(lsv_step(0.25, 0.0), 0.5);
  EXPECT_EQ(lsv_step(0.5, 0.0), 1.0);
  EXPECT_EQ(lsv_step(0.75, 0.0), 0.5);
  EXPECT_EQ(lsv_step(1.0, 0.0), 1.0);
  EXPECT_EQ(lsv_step(0.0, 0.0), 0.0);
}

TEST(LsvStep, IntermittentBranchMatchesPowerForm) {
  for (double g : {0.1, 0.25, 0.5, 0.9}) {
    for (double y : {1e-9, 1e-3, 0.1, 0.3, 0.49}) {
      const double ref = y * (1.0 + std::pow(2.0, g) * std::pow(y, g));
      EXPECT_NEAR(lsv_step(y, g), ref, 4e-16 * ref) << g << ' ' << y;
    }
    EXPECT_EQ(lsv_step(0.5, g), 1.0);
    EXPECT_EQ(lsv_step(0.8, g), 2.0 * 0.8 - 1.0);
  }
}

TEST(LsvStep, TinyValuesSnapToFixedPoint) {
  EXPECT_EQ(lsv_step(1e-310, 0.3), 0.0);
  EXPECT_GT(lsv_step(1e-299, 0.3), 0.0);
}

TEST(LsvStep, RejectsBadInput) {
  EXPECT_THROW(lsv_step(-0.1, 0.2), DomainError);
  EXPECT_THROW(lsv_step(1.1, 0.2), DomainError);
  EXPECT_THROW(lsv_step(0.3, 1.0), DomainError);
  EXPECT_THROW(MapParams(-0.01), DomainError);
  EXPECT_THROW(MapParams(1.0), DomainError);
}

TEST(MapParams, CltRange) {
  EXPECT_TRUE(MapParams(0.49).admits_clt());
  EXPECT_FALSE(MapParams(0.5).admits_clt());
  EXPECT_FALSE(MapParams(0.7).admits_clt());
}

TEST(Orbit, IterateIsLiteralRecursion) {
  const MapParams p(0.3);
  const Orbit o = iterate_orbit(0.123, p, 500);
  ASSERT_EQ(o.size(), 500u);
  EXPECT_EQ(o[0], 0.123);
  for (std::size_t k = 0; k + 1 < o.size(); ++k) ASSERT_EQ(o[k + 1], lsv_step(o[k], 0.3));
  EXPECT_EQ(o.realization(), OrbitRealization::FloatingPoint);
}

TEST(Orbit, ExactShiftFollowsMapUpToRounding) {
  const MapParams p(0.0);
  const Orbit o = sample_orbit(MeasureSpec::lebesgue(), p, 5000,
                               RngStream::for_task(1, StreamDomain::InitialCondition, 0));
  EXPECT_EQ(o.realization(), OrbitRealization::ExactShift);
  for (std::size_t k = 0; k + 1 < o.size(); ++k) {
    ASSERT_NEAR(o[k + 1], lsv_step(o[k], 0.0), 0x1.0p-52);
  }
}

TEST(Orbit, ExactShiftDoesNotCollapse) {
  // The literal doubling recursion reaches 0 after about 53 steps.
  const Orbit o = sample_orbit(MeasureSpec::lebesgue(), MapParams(0.0), 100000,
                               RngStream::for_task(2, StreamDomain::InitialCondition, 0));
  std::size_t zeros = 0;
  for (std::size_t k = 0; k < o.size(); ++k) zeros += o[k] == 0.0;
  EXPECT_EQ(zeros, 0u);
}

TEST(Orbit, SampleOrbitIsDeterministic) {
  const MapParams p(0.25);
  const auto a = sample_orbit(MeasureSpec::invariant(100), p, 1000, RngStream(7, 8));
  const auto b = sample_orbit(MeasureSpec::invariant(100), p, 1000, RngStream(7, 8));
  for (std::size_t k = 0; k < a.size(); ++k) ASSERT_EQ(a[k], b[k]);
}

TEST(Orbit, CursorMatchesMaterializedOrbit) {
  const MapParams p(0.25);
  const auto o = sample_orbit(MeasureSpec::lebesgue(), p, 2000, RngStream(11, 12));
  OrbitCursor c(MeasureSpec::lebesgue(), p, RngStream(11, 12));
  for (std::size_t k = 0; k < o.size(); ++k) ASSERT_EQ(c.next(), o[k]);
}

TEST(Birkhoff, LebesgueIsInvariantForDoubling) {
  // int cos(2 pi y) dy = 0, int y dy = 1/2.
  const std::size_t N = 1000000;
  const auto o = sample_orbit(MeasureSpec::lebesgue(), MapParams(0.0), N,
                              RngStream::for_task(3, StreamDomain::Reference, 0));
  EXPECT_NEAR(birkhoff_average([](double y) { return std::cos(2.0 * std::numbers::pi * y); }, o),
              0.0, 5e-3);
  EXPECT_NEAR(birkhoff_average([](double y) { return y; }, o), 0.5, 5e-3);
}

TEST(Birkhoff, ConstantObservableIsExact) {
  const auto o = sample_orbit(MeasureSpec::lebesgue(), MapParams(0.3), 12345, RngStream(1, 1));
  EXPECT_EQ(birkhoff_average([](double) { return 0.1; }, o), 0.1);
}

TEST(Birkhoff, StartMeasureDoesNotChangeTheLimit) {
  const MapParams p(0.25);
  const std::size_t N = 2000000;
  auto id = [](double y) { return y; };
  const double a = birkhoff_average(id, sample_orbit(MeasureSpec::lebesgue(), p, N, RngStream(1, 2)));
  const double b =
      birkhoff_average(id, sample_orbit(MeasureSpec::invariant(), p, N, RngStream(1, 3)));
  EXPECT_NEAR(a, b, 1e-2);
}

TEST(Birkhoff, EmptyInputsRejected) {
  EXPECT_THROW(iterate_orbit(0.1, MapParams(0.1), 0), ArgumentError);
}
