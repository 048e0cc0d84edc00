#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "homog/errors.hpp"
#include "homog/rde.hpp"

using namespace homog;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

VectorFieldPair linear_scalar() {
  VectorFieldPair vf;
  vf.d = 1;
  vf.m = 1;
  vf.H = [](std::span<const double> y, std::span<double> o) { o[0] = y[0]; };
  vf.DH = [](std::span<const double>, std::span<double> o) { o[0] = 1.0; };
  return vf;
}

// Path with one cell: X(1) = a, M_1 = c (any c is a valid second level).
GridRoughPath one_cell(std::vector<double> a, std::vector<double> c) {
  const std::size_t m = a.size();
  std::vector<double> x(2 * m, 0.0), mm(2 * m * m, 0.0);
  std::copy(a.begin(), a.end(), x.begin() + m);
  std::copy(c.begin(), c.end(), mm.begin() + m * m);
  return GridRoughPath(1, m, std::move(x), std::move(mm));
}

ProductField test_product(std::size_t variant) {
  ProductField f;
  if (variant == 0) {
    f.d = 1;
    f.m = 1;
    f.h = [](std::span<const double> x, std::span<double> o) { o[0] = std::sin(x[0]); };
    f.dh = [](std::span<const double> x, std::span<double> o) { o[0] = std::cos(x[0]); };
    f.v = VectorObservable::scalar(
        [](double y) { return std::cos(kTwoPi * y) + std::cos(2.0 * kTwoPi * y); });
  } else {
    f.d = 2;
    f.m = 2;
    f.e = 1;
    f.h = [](std::span<const double> x, std::span<double> o) {
      o[0] = 1.0 + 0.1 * x[1];
      o[1] = 0.3;
      o[2] = std::cos(x[0]);
      o[3] = x[0];
    };
    f.dh = [](std::span<const double> x, std::span<double> o) {
      std::fill(o.begin(), o.end(), 0.0);
      o[(0 * 2 + 1) * 2 + 0] = 0.1;
      o[(1 * 2 + 0) * 2 + 0] = -std::sin(x[0]);
      o[(1 * 2 + 0) * 2 + 1] = 1.0;
    };
    f.v = VectorObservable::stack({[](double y) { return std::sin(kTwoPi * y); },
                                   [](double y) { return y - 0.5; }});
    f.g = [](std::span<const double> x, std::span<double> o) {
      o[0] = -x[0];
      o[1] = 1.0;
    };
    f.u = VectorObservable::scalar([](double y) { return y * y; });
  }
  return f;
}

}  // namespace

TEST(SolveRde, LinearFieldOnGridLiftIsProductOfSteps) {
  const std::vector<double> steps = {0.1, -0.2, 0.05, 0.3};
  const GridRoughPath rp = lift_steps(steps, 1);
  const double y0 = 2.0;
  const auto sol = solve_rde(linear_scalar(), nullptr, rp, std::span<const double>(&y0, 1));
  double y = y0;
  for (std::size_t k = 0; k < steps.size(); ++k) {
    y *= 1.0 + steps[k];
    EXPECT_NEAR(sol.path().value(k + 1)[0], y, 1e-14);
  }
}

TEST(SolveRde, SecondLevelTermByHand) {
  // Y_1 = y0 + H(y0) a + H(y0) H'(y0) c with H(y) = y.
  const GridRoughPath rp = one_cell({0.4}, {0.7});
  const double y0 = 1.5;
  const auto sol = solve_rde(linear_scalar(), nullptr, rp, std::span<const double>(&y0, 1));
  EXPECT_NEAR(sol.path().value(1)[0], 1.5 + 1.5 * 0.4 + 1.5 * 0.7, 1e-15);
}

TEST(SolveRde, TwoDimensionalSecondLevelByHand) {
  // d = 1, m = 2, H(y) = (y, y^2), d H = (1, 2y).
  VectorFieldPair vf;
  vf.d = 1;
  vf.m = 2;
  vf.H = [](std::span<const double> y, std::span<double> o) {
    o[0] = y[0];
    o[1] = y[0] * y[0];
  };
  vf.DH = [](std::span<const double> y, std::span<double> o) {
    o[0] = 1.0;
    o[1] = 2.0 * y[0];
  };
  const GridRoughPath rp = one_cell({0.2, -0.1}, {0.3, 0.5, -0.4, 0.6});
  const double y = 0.8;
  const auto sol = solve_rde(vf, nullptr, rp, std::span<const double>(&y, 1));
  const double H[2] = {y, y * y}, dH[2] = {1.0, 2.0 * y};
  const double c[4] = {0.3, 0.5, -0.4, 0.6};
  double ref = y + H[0] * 0.2 + H[1] * -0.1;
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) ref += H[a] * dH[b] * c[a * 2 + b];
  }
  EXPECT_NEAR(sol.path().value(1)[0], ref, 1e-15);
  // Finite-difference Jacobian gives the same step to ~1e-10.
  VectorFieldPair fd = vf;
  fd.DH = nullptr;
  const auto sol_fd = solve_rde(fd, nullptr, rp, std::span<const double>(&y, 1));
  EXPECT_NEAR(sol_fd.path().value(1)[0], ref, 1e-9);
}

TEST(SolveRde, DriftEntersAsYoungSum) {
  VectorFieldPair vf = linear_scalar();
  vf.e = 1;
  vf.F = [](std::span<const double> y, std::span<double> o) { o[0] = -y[0]; };
  const GridRoughPath rp = lift_steps(std::vector<double>{0.0, 0.0}, 1);
  CadlagGridPath V(2, 1, {0.0, 0.5, 0.75});
  const double y0 = 1.0;
  const auto sol = solve_rde(vf, &V, rp, std::span<const double>(&y0, 1));
  EXPECT_NEAR(sol.path().value(1)[0], 0.5, 1e-15);
  EXPECT_NEAR(sol.path().value(2)[0], 0.375, 1e-15);
}

TEST(SolveRde, NonFiniteReportsCell) {
  VectorFieldPair vf;
  vf.d = 1;
  vf.m = 1;
  vf.H = [](std::span<const double> y, std::span<double> o) { o[0] = y[0] * y[0]; };
  vf.DH = [](std::span<const double> y, std::span<double> o) { o[0] = 2.0 * y[0]; };
  const GridRoughPath rp = lift_steps(std::vector<double>(20, 1e30), 1);
  const double y0 = 1.0;
  try {
    solve_rde(vf, nullptr, rp, std::span<const double>(&y0, 1));
    FAIL();
  } catch (const NumericError& e) {
    EXPECT_GE(e.step(), 0);
    EXPECT_LT(e.step(), 20);
  }
}

TEST(FiniteDifference, MatchesAnalyticJacobian) {
  const ProductField f = test_product(1);
  const std::vector<double> x = {0.7, -1.3};
  std::vector<double> fd(8), exact(8);
  finite_difference_DH(f.h, 2, 2, x, fd);
  f.dh(x, exact);
  for (std::size_t i = 0; i < 8; ++i) EXPECT_NEAR(fd[i], exact[i], 1e-9);
}

TEST(RoughIntegral, AdditiveNoiseHasZeroRemainder) {
  VectorFieldPair vf;
  vf.d = 2;
  vf.m = 2;
  vf.H = [](std::span<const double>, std::span<double> o) {
    o[0] = 1.0;
    o[1] = 2.0;
    o[2] = -1.0;
    o[3] = 0.5;
  };
  vf.DH = [](std::span<const double>, std::span<double> o) { std::fill(o.begin(), o.end(), 0.0); };
  RngStream rng(1, 1);
  std::vector<double> steps(2 * 50);
  for (auto& s : steps) s = 0.1 * rng.normal();
  const GridRoughPath rp = lift_steps(steps, 2);
  const std::vector<double> y0 = {0.0, 1.0};
  const auto sol = solve_rde(vf, nullptr, rp, y0);
  for (std::size_t i = 0; i <= 50; i += 7) {
    for (std::size_t j = i; j <= 50; j += 5) {
      for (double r : sol.remainder(rp, i, j)) ASSERT_NEAR(r, 0.0, 1e-13);
    }
  }
  // The integral of H(Y) against X reproduces Y - y0.
  const CadlagGridPath I = rough_integral(vf, sol.path(), rp);
  for (std::size_t k = 0; k <= 50; ++k) {
    for (std::size_t a = 0; a < 2; ++a) {
      ASSERT_NEAR(I.value(k)[a], sol.path().value(k)[a] - y0[a], 1e-13);
    }
  }
}

TEST(RoughIntegral, SolutionIsAFixedPoint) {
  const ProductField f = test_product(1);
  const VectorFieldPair vf = product_vector_fields(f);
  const Orbit o = sample_orbit(MeasureSpec::lebesgue(), MapParams(0.2), 256, RngStream(2, 2));
  const GridRoughPath rp = lift_orbit(f.v, o, 256);
  const CadlagGridPath V = drift_driver(f.u, o, 256);
  const std::vector<double> y0 = {0.1, -0.2};
  const auto sol = solve_rde(vf, &V, rp, y0);
  const CadlagGridPath I = rough_integral(vf, sol.path(), rp);
  const CadlagGridPath J = young_integral(vf.F, 1, sol.path(), V);
  for (std::size_t k = 0; k <= 256; ++k) {
    for (std::size_t a = 0; a < 2; ++a) {
      ASSERT_NEAR(y0[a] + I.value(k)[a] + J.value(k)[a], sol.path().value(k)[a], 1e-12);
    }
  }
}

TEST(Consistency, RdeReproducesFastSlowRecursion) {
  for (std::size_t variant : {0u, 1u}) {
    const ProductField f = test_product(variant);
    const SlowField slow = f.as_slow_field();
    const VectorFieldPair vf = product_vector_fields(f);
    for (double gamma : {0.0, 0.3}) {
      for (std::size_t n : {16u, 1000u}) {
        const Orbit o = sample_orbit(MeasureSpec::lebesgue(), MapParams(gamma), n,
                                     RngStream(3, variant * 100 + n));
        const std::vector<double> xi(f.d, 0.25);
        const CadlagGridPath fs = run_fast_slow(slow, xi, o, n);
        const GridRoughPath rp = lift_orbit(f.v, o, n);
        std::optional<CadlagGridPath> V;
        if (f.e > 0) V = drift_driver(f.u, o, n);
        const auto sol = solve_rde(vf, V ? &*V : nullptr, rp, xi);
        for (std::size_t k = 0; k <= n; ++k) {
          double scale = 0.0;
          for (std::size_t i = 0; i < f.d; ++i) scale = std::max(scale, std::abs(fs.value(k)[i]));
          for (std::size_t i = 0; i < f.d; ++i) {
            ASSERT_LE(std::abs(fs.value(k)[i] - sol.path().value(k)[i]), 1e-12 * (1.0 + scale));
          }
        }
      }
    }
  }
}

TEST(Lipschitz, IdenticalInputsGiveZeroDistance) {
  const ProductField f = test_product(0);
  const VectorFieldPair vf = product_vector_fields(f);
  const Orbit o = sample_orbit(MeasureSpec::lebesgue(), MapParams(0.0), 128, RngStream(4, 4));
  const GridRoughPath rp = lift_orbit(f.v, o, 128);
  const std::vector<double> y0 = {0.3};
  const auto same = lipschitz_probe(vf, nullptr, rp, nullptr, rp, y0, y0, 2.5);
  EXPECT_EQ(same.solution_distance, 0.0);
  EXPECT_EQ(same.ratio(), 0.0);
}

TEST(Lipschitz, RatioStaysBoundedUnderSmallPerturbations) {
  const ProductField f = test_product(0);
  const VectorFieldPair vf = product_vector_fields(f);
  const Orbit o = sample_orbit(MeasureSpec::lebesgue(), MapParams(0.0), 128, RngStream(5, 5));
  const GridRoughPath rp = lift_orbit(f.v, o, 128);
  const std::vector<double> y0 = {0.3};
  double prev = -1.0;
  for (double eps : {1e-2, 1e-3, 1e-4}) {
    const GridRoughPath pert = rp.dilate(1.0 + eps);
    const std::vector<double> y1 = {0.3 + eps};
    const auto probe = lipschitz_probe(vf, nullptr, rp, nullptr, pert, y0, y1, 2.5);
    EXPECT_GT(probe.driver_distance, 0.0);
    EXPECT_TRUE(std::isfinite(probe.ratio()));
    if (prev > 0.0) EXPECT_NEAR(probe.ratio(), prev, 0.2 * prev);
    prev = probe.ratio();
  }
}

TEST(DriftDriver, CumulativeMean) {
  const Orbit o = iterate_orbit(0.3, MapParams(0.0), 4);
  const CadlagGridPath V = drift_driver(VectorObservable::scalar([](double y) { return y; }), o, 4);
  EXPECT_NEAR(V.value(4)[0], (o[0] + o[1] + o[2] + o[3]) / 4.0, 1e-15);
  EXPECT_EQ(V.value(0)[0], 0.0);
}
