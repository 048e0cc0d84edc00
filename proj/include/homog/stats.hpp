#pragma once

// Desk-scale surrogates for the limit theorems: Kolmogorov-Smirnov distances,
// batch-means error bars, moment scaling of lifts and the first two moments
// of the iterated invariance principle.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "homog/roughpath.hpp"

namespace homog {

/// CDF of N(mean, var); var = 0 gives the step function at mean.
double normal_cdf(double x, double mean = 0.0, double var = 1.0);

/// sup_x |F_a(x) - F_b(x)| between two empirical CDFs.
double ks_distance(std::span<const double> a, std::span<const double> b);
/// sup_x |F_a(x) - cdf(x)|.
double ks_distance(std::span<const double> a, const std::function<double(double)>& cdf);

inline constexpr std::size_t kDefaultBatches = 32;

struct MeanEstimate {
  double mean = 0.0;
  /// Batch-means standard error; 0 for a single sample.
  double stderr_ = 0.0;
  std::size_t batches = 0;
};

/// Mean with a batch-means standard error over `batches` contiguous batches
/// (fewer if there are fewer samples).
MeanEstimate batch_mean(std::span<const double> samples,
                        std::size_t batches = kDefaultBatches);

/// Terminal values (W(1), WW(0,1)) of an ensemble of lifts at level n.
struct LiftEnsemble {
  std::size_t n = 0;
  std::size_t m = 0;
  std::size_t count = 0;
  std::vector<double> x;   // count * m
  std::vector<double> xx;  // count * m * m

  LiftEnsemble() = default;
  LiftEnsemble(std::size_t n_, std::size_t m_, std::size_t count_)
      : n(n_), m(m_), count(count_), x(count_ * m_), xx(count_ * m_ * m_) {}

  static LiftEnsemble from_paths(std::span<const GridRoughPath> lifts);
};

struct MomentCheck {
  double statistic = 0.0;
  double stderr_ = 0.0;
  double target = 0.0;
  /// (statistic - target) / stderr; 0 when both the error and stderr are 0.
  double z = 0.0;
  bool within(double sigmas = 3.0) const;
};

/// Empirical E[WW^{ij}(0,1)] against B2(v^i, v^j).
MomentCheck level2_mean_check(const LiftEnsemble& lifts, double B2_value, std::size_t i = 0,
                              std::size_t j = 0);

/// Empirical E[W^i(1)^2] against B1 + 2 B2. Throws DomainError when the
/// observable is visibly uncentered: |mean W^i(1)| / sqrt(n) above
/// 1e-2 + 3 stderr / sqrt(n).
MomentCheck covariance_check(const LiftEnsemble& lifts, double B1, double B2,
                             std::size_t i = 0);

struct MomentScalingReport {
  /// Index k-1 holds grid time k/n, k = 1..n.
  std::vector<double> level1;  // ||W(k/n)||_{L^{2q}} / (k/n)^{1/2}
  std::vector<double> level2;  // ||WW(0,k/n)||_{L^q} / (k/n)
  double max_level1 = 0.0;
  double max_level2 = 0.0;
};

/// Streaming accumulator so that large ensembles need not be stored.
class MomentScalingAccumulator {
 public:
  MomentScalingAccumulator(std::size_t n, double q);

  void add(const GridRoughPath& lift);
  std::size_t count() const { return count_; }
  MomentScalingReport report() const;

 private:
  std::size_t n_;
  double q_;
  std::size_t count_ = 0;
  std::vector<double> sum1_;
  std::vector<double> sum2_;
};

MomentScalingReport moment_scaling_report(std::span<const GridRoughPath> lifts, double q);

}  // namespace homog
