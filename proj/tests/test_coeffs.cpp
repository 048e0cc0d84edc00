#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "homog/coeffs.hpp"
#include "homog/errors.hpp"

using namespace homog;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double two_modes(double y) { return std::cos(kTwoPi * y) + std::cos(2.0 * kTwoPi * y); }

const Orbit& doubling_orbit() {
  static const Orbit o = sample_orbit(MeasureSpec::lebesgue(), MapParams(0.0), 1000000,
                                      RngStream::for_task(11, StreamDomain::Reference, 0));
  return o;
}

Eigen::MatrixXd random_psd(std::size_t d, std::size_t rank, RngStream& rng) {
  Eigen::MatrixXd A(d, rank);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < rank; ++j) A(i, j) = rng.normal();
  }
  return A * A.transpose();
}

ProductField sin_two_modes() {
  ProductField f;
  f.d = 1;
  f.m = 1;
  f.h = [](std::span<const double> x, std::span<double> o) { o[0] = std::sin(x[0]); };
  f.dh = [](std::span<const double> x, std::span<double> o) { o[0] = std::cos(x[0]); };
  f.v = VectorObservable::scalar(two_modes);
  return f;
}

}  // namespace

TEST(Estimators, SeriesMatchBruteForce) {
  RngStream rng(1, 1);
  const std::size_t N = 500;
  std::vector<double> v(N), w(N);
  for (std::size_t k = 0; k < N; ++k) {
    v[k] = rng.normal();
    w[k] = 0.5 * v[k] + rng.normal();
  }
  double b1 = 0.0;
  for (std::size_t k = 0; k < N; ++k) b1 += v[k] * w[k];
  EXPECT_NEAR(series_B1(v, w), b1 / N, 1e-14);

  B2Options opts;
  opts.L = 13;
  opts.auto_stop = false;
  double b2 = 0.0;
  for (std::size_t l = 1; l <= 13; ++l) {
    double s = 0.0;
    for (std::size_t k = 0; k + l < N; ++k) s += v[k] * w[k + l];
    b2 += s / static_cast<double>(N - l);
  }
  const B2Estimate est = series_B2(v, w, opts);
  EXPECT_NEAR(est.value, b2, 1e-13);
  EXPECT_EQ(est.terms_used, 13u);
  EXPECT_FALSE(est.auto_stopped);
}

TEST(Estimators, ZeroTruncationGivesZero) {
  std::vector<double> v = {1.0, 2.0, 3.0};
  B2Options opts;
  opts.L = 0;
  EXPECT_EQ(series_B2(v, v, opts).value, 0.0);
  opts.L = -1;
  EXPECT_THROW(series_B2(v, v, opts), ArgumentError);
  EXPECT_THROW(series_B1(v, std::vector<double>{1.0}), ArgumentError);
}

TEST(Estimators, AutoStopAfterRunOfSmallTerms) {
  std::vector<double> v(1000, 0.0);
  v[0] = 1.0;
  B2Options opts;
  opts.L = 50;
  const B2Estimate est = series_B2(v, v, opts);
  EXPECT_TRUE(est.auto_stopped);
  EXPECT_EQ(est.terms_used, opts.stop_run);
  EXPECT_EQ(est.value, 0.0);
}

TEST(Estimators, ConstantObservableIsExact) {
  const Orbit& o = doubling_orbit();
  EXPECT_EQ(estimate_B1([](double) { return 0.3; }, [](double) { return 0.3; }, o), 0.3 * 0.3);
}

TEST(Estimators, FourierOraclesForDoubling) {
  // int v^2 = 1; sum_l int v (v o T^l) = int cos^2(4 pi y) = 1/2.
  const Orbit& o = doubling_orbit();
  EXPECT_NEAR(estimate_B1(two_modes, two_modes, o), 1.0, 2e-2);
  EXPECT_NEAR(estimate_B2(two_modes, two_modes, o, 20).value, 0.5, 2e-2);
  // Orthogonal modes: int cos(2 pi y) sin(2 pi y) = 0 and all lags vanish.
  auto s1 = [](double y) { return std::sin(kTwoPi * y); };
  auto c1 = [](double y) { return std::cos(kTwoPi * y); };
  EXPECT_NEAR(estimate_B1(c1, s1, o), 0.0, 1e-2);
  EXPECT_NEAR(estimate_B2(c1, s1, o, 20).value, 0.0, 2e-2);
}

TEST(PsdSqrt, SquaresBackOnRandomMatrices) {
  RngStream rng(2, 2);
  for (int t = 0; t < 100; ++t) {
    const std::size_t d = 1 + rng.next_u64() % 8;
    const std::size_t rank = 1 + rng.next_u64() % d;
    const Eigen::MatrixXd S = random_psd(d, rank, rng);
    const Eigen::MatrixXd R = psd_sqrt(S);
    EXPECT_LT((R * R - S).norm(), 1e-10 * std::max(1.0, S.norm()));
    EXPECT_LT((R - R.transpose()).norm(), 1e-14);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(R);
    EXPECT_GE(es.eigenvalues().minCoeff(), -1e-7 * std::max(1.0, S.norm()));
  }
}

TEST(PsdSqrt, RejectsNegativeAndAsymmetric) {
  Eigen::MatrixXd neg(2, 2);
  neg << 1.0, 0.0, 0.0, -0.5;
  EXPECT_THROW(psd_sqrt(neg), DomainError);
  Eigen::MatrixXd asym(2, 2);
  asym << 1.0, 0.5, 0.0, 1.0;
  EXPECT_THROW(psd_sqrt(asym), ArgumentError);
  Eigen::MatrixXd tiny(2, 2);
  tiny << 1.0, 0.0, 0.0, -1e-12;
  const Eigen::MatrixXd r = psd_sqrt(tiny);
  EXPECT_EQ(r(1, 1), 0.0);
  EXPECT_NEAR(r(0, 0), 1.0, 1e-15);
}

TEST(ProductCoefficients, HandAssembledFromCovariances) {
  // d = 2, m = 2 with h(x) = [[1, x1], [sin x0, 0.5]].
  ProductField f;
  f.d = 2;
  f.m = 2;
  f.h = [](std::span<const double> x, std::span<double> o) {
    o[0] = 1.0;
    o[1] = x[1];
    o[2] = std::sin(x[0]);
    o[3] = 0.5;
  };
  f.dh = [](std::span<const double> x, std::span<double> o) {
    std::fill(o.begin(), o.end(), 0.0);
    o[(0 * 2 + 1) * 2 + 1] = 1.0;
    o[(1 * 2 + 0) * 2 + 0] = std::cos(x[0]);
  };
  f.v = VectorObservable::stack({two_modes, two_modes});
  ObservableCovariances cov{Eigen::MatrixXd(2, 2), Eigen::MatrixXd(2, 2)};
  cov.B1 << 1.0, 0.2, 0.2, 0.8;
  cov.B2 << 0.5, 0.1, -0.3, 0.25;
  const CoefficientSet set = assemble_product_coefficients(f, {}, cov, nullptr);

  const Vec x = {0.3, -0.7};
  Eigen::MatrixXd h(2, 2);
  h << 1.0, x[1], std::sin(x[0]), 0.5;
  const Eigen::MatrixXd Sigma = h * (cov.B1 + cov.B2 + cov.B2.transpose()) * h.transpose();
  const Vec S = set.Sigma_at(x);
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) EXPECT_NEAR(S[i * 2 + j], Sigma(i, j), 1e-14);
  }
  // atilde^i = sum_{k,a,b} h^k_a d_k h^i_b B2^{ab}; nonzero derivatives:
  // d_1 h^0_1 = 1 and d_0 h^1_0 = cos x0.
  double corr0 = 0.0, corr1 = 0.0;
  for (int a = 0; a < 2; ++a) {
    corr0 += h(1, a) * 1.0 * cov.B2(a, 1);
    corr1 += h(0, a) * std::cos(x[0]) * cov.B2(a, 0);
  }
  const Vec at = set.atilde_at(x);
  EXPECT_NEAR(at[0], corr0, 1e-14);
  EXPECT_NEAR(at[1], corr1, 1e-14);
  const Vec ab = set.abar_at(x);
  EXPECT_EQ(ab[0], 0.0);
  const Vec sig = set.sigma_at(x);
  Eigen::Map<const Eigen::Matrix<double, 2, 2, Eigen::RowMajor>> R(sig.data());
  EXPECT_LT((R * R - Sigma).norm(), 1e-12);
}

TEST(ProductCoefficients, DriftCorrectionForSinField) {
  // atilde - abar = B2 sin(x) cos(x).
  const CoefficientSet set = assemble_product_coefficients(
      sin_two_modes(), {}, doubling_orbit(), B2Options{20, false});
  for (double x : {0.0, 0.5, 1.0}) {
    EXPECT_NEAR(set.atilde_at(std::span<const double>(&x, 1))[0], 0.5 * std::sin(x) * std::cos(x),
                2e-2);
  }
  EXPECT_EQ(set.provenance->mode, "product");
  EXPECT_EQ(set.provenance->truncation, 20);
}

TEST(GeneralCoefficients, AgreeWithProductAssembly) {
  const ProductField pf = sin_two_modes();
  const Orbit o = sample_orbit(MeasureSpec::lebesgue(), MapParams(0.0), 100000,
                               RngStream::for_task(3, StreamDomain::Reference, 0));
  const B2Options opts{20, false};
  const CoefficientSet prod = assemble_product_coefficients(pf, {}, o, opts);
  const CoefficientSet gen = assemble_coefficients(pf.as_slow_field(), {}, o, opts);
  EXPECT_EQ(gen.provenance->mode, "general");
  for (double x : {-1.0, 0.2, 0.9}) {
    const std::span<const double> xs(&x, 1);
    EXPECT_NEAR(gen.Sigma_at(xs)[0], prod.Sigma_at(xs)[0], 1e-12);
    EXPECT_NEAR(gen.atilde_at(xs)[0], prod.atilde_at(xs)[0], 1e-12);
    EXPECT_NEAR(gen.sigma_at(xs)[0], prod.sigma_at(xs)[0], 1e-12);
  }
}

TEST(ProductAbar, UsesBirkhoffMeanOfDrift) {
  ProductField f = sin_two_modes();
  f.e = 1;
  f.g = [](std::span<const double> x, std::span<double> o) { o[0] = 2.0 * x[0]; };
  f.u = VectorObservable::scalar([](double y) { return y; });
  const Orbit& o = doubling_orbit();
  const double ubar = birkhoff_mean(f.u, o)[0];
  const StateFn abar = product_abar(f, o);
  double x = 1.5, out = 0.0;
  abar(std::span<const double>(&x, 1), std::span<double>(&out, 1));
  EXPECT_NEAR(out, 3.0 * ubar, 1e-15);
  EXPECT_NEAR(ubar, 0.5, 1e-2);
}

TEST(Tabulate, ReproducesMultilinearFunctionsExactly) {
  CoefficientSet src;
  src.dim = 2;
  src.abar = [](std::span<const double> x, std::span<double> o) {
    o[0] = 1.0 + 2.0 * x[0] - x[1] + 0.5 * x[0] * x[1];
    o[1] = -x[1];
  };
  src.atilde = src.abar;
  src.Sigma = [](std::span<const double> x, std::span<double> o) {
    o[0] = 2.0 + x[0];
    o[1] = 0.1;
    o[2] = 0.1;
    o[3] = 3.0 + x[1];
  };
  const TensorGrid grid = TensorGrid::uniform(2, -1.0, 1.0, 5);
  EXPECT_EQ(grid.size(), 25u);
  const CoefficientSet tab = tabulate(src, grid, 2);
  EXPECT_EQ(tab.provenance->mode, "tabulated");
  for (const Vec& x : {Vec{0.13, -0.77}, Vec{-0.99, 0.5}, Vec{0.6, 0.6}}) {
    const Vec a = tab.abar_at(x), s = tab.Sigma_at(x);
    EXPECT_NEAR(a[0], 1.0 + 2.0 * x[0] - x[1] + 0.5 * x[0] * x[1], 1e-14);
    EXPECT_NEAR(a[1], -x[1], 1e-14);
    EXPECT_NEAR(s[0], 2.0 + x[0], 1e-14);
    EXPECT_NEAR(s[3], 3.0 + x[1], 1e-14);
  }
  // Constant beyond the grid.
  EXPECT_NEAR(tab.abar_at(Vec{5.0, 0.0})[1], tab.abar_at(Vec{1.0, 0.0})[1], 1e-15);
  EXPECT_NEAR(tab.Sigma_at(Vec{7.0, -9.0})[0], 3.0, 1e-14);
  EXPECT_NEAR(tab.Sigma_at(Vec{7.0, -9.0})[3], 2.0, 1e-14);
}

TEST(CoefficientsCsv, HeaderAndLineEndings) {
  CoefficientSet set = assemble_product_coefficients(
      sin_two_modes(), {}, ObservableCovariances{Eigen::MatrixXd::Constant(1, 1, 1.0),
                                                 Eigen::MatrixXd::Constant(1, 1, 0.5)},
      nullptr);
  std::ostringstream out;
  write_coefficients_csv(out, set, TensorGrid::uniform(1, 0.0, 1.0, 3));
  const std::string s = out.str();
  EXPECT_EQ(s.rfind("x0,abar0,Sigma00,atilde0\r\n", 0), 0u);
  std::size_t lines = 0;
  for (std::size_t i = 0; i + 1 < s.size(); ++i) lines += s[i] == '\r' && s[i + 1] == '\n';
  EXPECT_EQ(lines, 4u);
  EXPECT_NE(s.find("0.5,"), std::string::npos);
}

TEST(EulerMaruyama, DeterministicDriftIsExplicitEuler) {
  CoefficientSet set;
  set.dim = 1;
  set.atilde = [](std::span<const double> x, std::span<double> o) { o[0] = -x[0]; };
  set.sigma = [](std::span<const double>, std::span<double> o) { o[0] = 0.0; };
  EulerMaruyamaOptions opts;
  opts.steps = 100;
  opts.samples = 3;
  const double xi = 2.0;
  const PathEnsemble ens = euler_maruyama(set, std::span<const double>(&xi, 1), opts);
  EXPECT_NEAR(ens.terminal(0, 0), 2.0 * std::pow(0.99, 100), 1e-13);
  EXPECT_NEAR(ens.marginal(1, 1, 0), 2.0 * std::pow(0.99, 50), 1e-13);
  EXPECT_NEAR(ens.sup[2], 2.0 - 2.0 * std::pow(0.99, 100), 1e-13);
}

TEST(EulerMaruyama, ConstantCoefficientsGiveGaussianMoments) {
  CoefficientSet set;
  set.dim = 1;
  set.atilde = [](std::span<const double>, std::span<double> o) { o[0] = 0.3; };
  set.sigma = [](std::span<const double>, std::span<double> o) { o[0] = 0.7; };
  EulerMaruyamaOptions opts;
  opts.steps = 50;
  opts.samples = 20000;
  opts.seed = 5;
  opts.threads = 2;
  const double xi = 1.0;
  const PathEnsemble ens = euler_maruyama(set, std::span<const double>(&xi, 1), opts);
  const auto x = ens.column(3, 0);
  double m = 0.0, v = 0.0;
  for (double t : x) m += t;
  m /= x.size();
  for (double t : x) v += (t - m) * (t - m);
  v /= x.size() - 1;
  EXPECT_NEAR(m, 1.3, 5.0 * 0.7 / std::sqrt(20000.0));
  EXPECT_NEAR(v, 0.49, 5.0 * 0.49 * std::sqrt(2.0 / 20000.0));

  opts.threads = 1;
  const PathEnsemble again = euler_maruyama(set, std::span<const double>(&xi, 1), opts);
  EXPECT_EQ(again.marginals, ens.marginals);
}
