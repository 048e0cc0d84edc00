#include "homog/stats.hpp"

#include <algorithm>
#include <cmath>

#include "homog/errors.hpp"

namespace homog {

double normal_cdf(double x, double mean, double var) {
  if (var < 0.0) throw ArgumentError("normal_cdf: variance must be >= 0");
  if (var == 0.0) return x < mean ? 0.0 : 1.0;
  return 0.5 * std::erfc(-(x - mean) / std::sqrt(2.0 * var));
}

double ks_distance(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw ArgumentError("ks_distance: empty sample");
  std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  const double na = static_cast<double>(sa.size()), nb = static_cast<double>(sb.size());
  std::size_t i = 0, j = 0;
  double best = 0.0;
  while (i < sa.size() || j < sb.size()) {
    double t;
    if (j == sb.size() || (i < sa.size() && sa[i] <= sb[j])) {
      t = sa[i];
    } else {
      t = sb[j];
    }
    while (i < sa.size() && sa[i] == t) ++i;
    while (j < sb.size() && sb[j] == t) ++j;
    best = std::max(best, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return best;
}

double ks_distance(std::span<const double> a, const std::function<double(double)>& cdf) {
  if (a.empty()) throw ArgumentError("ks_distance: empty sample");
  std::vector<double> s(a.begin(), a.end());
  std::sort(s.begin(), s.end());
  const double n = static_cast<double>(s.size());
  double best = 0.0;
  std::size_t i = 0;
  while (i < s.size()) {
    const double t = s[i];
    const std::size_t below = i;
    while (i < s.size() && s[i] == t) ++i;
    const double F = cdf(t);
    best = std::max({best, std::abs(F - static_cast<double>(below) / n),
                     std::abs(F - static_cast<double>(i) / n)});
  }
  return best;
}

MeanEstimate batch_mean(std::span<const double> samples, std::size_t batches) {
  if (samples.empty()) throw ArgumentError("batch_mean: empty sample");
  if (batches == 0) throw ArgumentError("batch_mean: need at least one batch");
  const std::size_t N = samples.size();
  const std::size_t B = std::min(batches, N);
  MeanEstimate est;
  est.batches = B;
  double total = 0.0;
  for (double v : samples) total += v;
  est.mean = total / static_cast<double>(N);
  if (B < 2) return est;
  std::vector<double> means(B);
  for (std::size_t b = 0; b < B; ++b) {
    const std::size_t lo = b * N / B, hi = (b + 1) * N / B;
    double s = 0.0;
    for (std::size_t k = lo; k < hi; ++k) s += samples[k];
    means[b] = s / static_cast<double>(hi - lo);
  }
  double mb = 0.0;
  for (double v : means) mb += v;
  mb /= static_cast<double>(B);
  double ss = 0.0;
  for (double v : means) ss += (v - mb) * (v - mb);
  est.stderr_ = std::sqrt(ss / static_cast<double>(B * (B - 1)));
  return est;
}

LiftEnsemble LiftEnsemble::from_paths(std::span<const GridRoughPath> lifts) {
  if (lifts.empty()) throw ArgumentError("LiftEnsemble: empty ensemble");
  const std::size_t n = lifts.front().n(), m = lifts.front().dim();
  LiftEnsemble ens(n, m, lifts.size());
  for (std::size_t s = 0; s < lifts.size(); ++s) {
    if (lifts[s].n() != n || lifts[s].dim() != m) {
      throw ArgumentError("LiftEnsemble: lifts must share n and m");
    }
    const auto x = lifts[s].X(n), mm = lifts[s].M(n);
    std::copy(x.begin(), x.end(), ens.x.begin() + s * m);
    std::copy(mm.begin(), mm.end(), ens.xx.begin() + s * m * m);
  }
  return ens;
}

bool MomentCheck::within(double sigmas) const {
  return std::abs(statistic - target) <= sigmas * stderr_;
}

namespace {

MomentCheck compare(std::span<const double> samples, double target) {
  const MeanEstimate est = batch_mean(samples);
  MomentCheck check;
  check.statistic = est.mean;
  check.stderr_ = est.stderr_;
  check.target = target;
  const double diff = est.mean - target;
  if (est.stderr_ > 0.0) {
    check.z = diff / est.stderr_;
  } else {
    check.z = diff == 0.0 ? 0.0 : std::copysign(INFINITY, diff);
  }
  return check;
}

void check_component(const LiftEnsemble& lifts, std::size_t i, std::size_t j) {
  if (lifts.count == 0) throw ArgumentError("moment check: empty ensemble");
  if (i >= lifts.m || j >= lifts.m) throw ArgumentError("moment check: component out of range");
}

}  // namespace

MomentCheck level2_mean_check(const LiftEnsemble& lifts, double B2_value, std::size_t i,
                              std::size_t j) {
  check_component(lifts, i, j);
  std::vector<double> s(lifts.count);
  for (std::size_t k = 0; k < lifts.count; ++k) {
    s[k] = lifts.xx[k * lifts.m * lifts.m + i * lifts.m + j];
  }
  return compare(s, B2_value);
}

MomentCheck covariance_check(const LiftEnsemble& lifts, double B1, double B2, std::size_t i) {
  check_component(lifts, i, i);
  std::vector<double> w(lifts.count), w2(lifts.count);
  for (std::size_t k = 0; k < lifts.count; ++k) {
    w[k] = lifts.x[k * lifts.m + i];
    w2[k] = w[k] * w[k];
  }
  const MeanEstimate first = batch_mean(w);
  const double root_n = std::sqrt(static_cast<double>(lifts.n));
  if (std::abs(first.mean) / root_n > 1e-2 + 3.0 * first.stderr_ / root_n) {
    throw DomainError("covariance_check: observable is not centered");
  }
  return compare(w2, B1 + 2.0 * B2);
}

MomentScalingAccumulator::MomentScalingAccumulator(std::size_t n, double q)
    : n_(n), q_(q), sum1_(n + 1, 0.0), sum2_(n + 1, 0.0) {
  if (n == 0) throw ArgumentError("moment scaling: n must be positive");
  if (!(q > 1.0)) throw ArgumentError("moment scaling: q must be > 1");
}

void MomentScalingAccumulator::add(const GridRoughPath& lift) {
  if (lift.n() != n_) throw ArgumentError("moment scaling: lifts must share n");
  const std::size_t m = lift.dim();
  for (std::size_t k = 1; k <= n_; ++k) {
    const auto x = lift.X(k), mm = lift.M(k);
    double r1 = 0.0, r2 = 0.0;
    for (double v : x) r1 += v * v;
    for (std::size_t c = 0; c < m * m; ++c) r2 += mm[c] * mm[c];
    sum1_[k] += std::pow(r1, q_);        // |W|^{2q}
    sum2_[k] += std::pow(r2, 0.5 * q_);  // |WW|^q
  }
  ++count_;
}

MomentScalingReport MomentScalingAccumulator::report() const {
  if (count_ == 0) throw ArgumentError("moment scaling: empty ensemble");
  MomentScalingReport rep;
  rep.level1.resize(n_);
  rep.level2.resize(n_);
  const double c = static_cast<double>(count_);
  for (std::size_t k = 1; k <= n_; ++k) {
    const double t = static_cast<double>(k) / static_cast<double>(n_);
    rep.level1[k - 1] = std::pow(sum1_[k] / c, 1.0 / (2.0 * q_)) / std::sqrt(t);
    rep.level2[k - 1] = std::pow(sum2_[k] / c, 1.0 / q_) / t;
  }
  rep.max_level1 = *std::max_element(rep.level1.begin(), rep.level1.end());
  rep.max_level2 = *std::max_element(rep.level2.begin(), rep.level2.end());
  return rep;
}

MomentScalingReport moment_scaling_report(std::span<const GridRoughPath> lifts, double q) {
  if (lifts.empty()) throw ArgumentError("moment scaling: empty ensemble");
  MomentScalingAccumulator acc(lifts.front().n(), q);
  for (const auto& lift : lifts) acc.add(lift);
  return acc.report();
}

}  // namespace homog
