#pragma once

// Per-sample path functionals shared by the fast-slow and Euler-Maruyama
// ensembles: marginals at t = 1/4, 1/2, 3/4, 1 and sup_t |x(t) - x(0)|.

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace homog {

inline constexpr std::size_t kMarginalTimes = 4;

struct PathEnsemble {
  std::size_t dim = 0;
  std::size_t samples = 0;
  /// samples x kMarginalTimes x dim; the last time slot is the terminal value.
  std::vector<double> marginals;
  /// samples
  std::vector<double> sup;
  /// Optional full paths, samples x (path_points x dim).
  std::size_t path_points = 0;
  std::vector<double> paths;

  PathEnsemble() = default;
  PathEnsemble(std::size_t d, std::size_t count)
      : dim(d), samples(count), marginals(count * kMarginalTimes * d), sup(count) {}

  double marginal(std::size_t sample, std::size_t slot, std::size_t component) const {
    return marginals[(sample * kMarginalTimes + slot) * dim + component];
  }
  double terminal(std::size_t sample, std::size_t component) const {
    return marginal(sample, kMarginalTimes - 1, component);
  }
  /// Component `c` of the marginal at slot `slot` across all samples.
  std::vector<double> column(std::size_t slot, std::size_t c) const {
    std::vector<double> out(samples);
    for (std::size_t s = 0; s < samples; ++s) out[s] = marginal(s, slot, c);
    return out;
  }
};

/// Records the functionals of one path visited at k = 0..steps.
class PathRecorder {
 public:
  PathRecorder(std::size_t steps, std::span<double> marginals_out)
      : steps_(steps), out_(marginals_out) {}

  void visit(std::size_t k, std::span<const double> x) {
    const std::size_t d = x.size();
    if (k == 0) origin_.assign(x.begin(), x.end());
    double r2 = 0.0;
    for (std::size_t i = 0; i < d; ++i) r2 += (x[i] - origin_[i]) * (x[i] - origin_[i]);
    if (r2 > sup2_) sup2_ = r2;
    for (std::size_t slot = 0; slot < kMarginalTimes; ++slot) {
      if (k == steps_ * (slot + 1) / kMarginalTimes) {
        for (std::size_t i = 0; i < d; ++i) out_[slot * d + i] = x[i];
      }
    }
  }
  double sup() const { return std::sqrt(sup2_); }

 private:
  std::size_t steps_;
  std::span<double> out_;
  std::vector<double> origin_;
  double sup2_ = 0.0;
};

}  // namespace homog
