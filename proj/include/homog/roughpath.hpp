#pragma once

// Level-2 cadlag rough paths sampled on a grid.
//
// A path is stored through its first level X(t_k) and the running second
// level M_k = XX(0, t_k). Two-parameter increments follow from the group law
// (a, M)(b, N) = (a + b, M + a (x) b + N):
//
//   X(s,t)  = X(t) - X(s),
//   XX(s,t) = M(t) - M(s) - X(s) (x) X(s,t).
//
// R^m carries the Euclidean norm and R^{m x m} the Frobenius norm.

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "homog/errors.hpp"
#include "homog/maps.hpp"
#include "homog/observable.hpp"

namespace homog {

class GridRoughPath;

/// Non-owning view of K samples (X_k, M_k) of a level-2 path. Sample times
/// are implicit; only the order matters for variation norms.
struct RoughPathSamples {
  std::size_t count = 0;
  std::size_t dim = 0;
  std::span<const double> x;   // count * dim
  std::span<const double> mm;  // count * dim * dim, row-major

  std::span<const double> X(std::size_t k) const { return x.subspan(k * dim, dim); }
  std::span<const double> M(std::size_t k) const {
    return mm.subspan(k * dim * dim, dim * dim);
  }
};

class GridRoughPath {
 public:
  /// Path on the grid {k/n : k = 0..n}. Requires X_0 = 0 and M_0 = 0.
  GridRoughPath(std::size_t n, std::size_t dim, std::vector<double> x,
                std::vector<double> mm);

  std::size_t n() const { return n_; }
  std::size_t dim() const { return dim_; }
  std::size_t points() const { return n_ + 1; }
  std::span<const double> X(std::size_t k) const { return {x_.data() + k * dim_, dim_}; }
  std::span<const double> M(std::size_t k) const {
    return {mm_.data() + k * dim_ * dim_, dim_ * dim_};
  }
  RoughPathSamples samples() const { return {n_ + 1, dim_, x_, mm_}; }

  /// Same path with X scaled by c and M by c^2 (dilation).
  GridRoughPath dilate(double c) const;

 private:
  std::size_t n_;
  std::size_t dim_;
  std::vector<double> x_;
  std::vector<double> mm_;
};

struct Increment {
  std::vector<double> x;   // dim
  std::vector<double> xx;  // dim * dim, row-major
};

/// Lift of a driver given by its n steps (n * dim values, step k is the jump
/// at t_{k+1}): X(t_j) = sum_{k<j} step_k, M_j = sum_{k<l<j} step_k (x) step_l.
GridRoughPath lift_steps(std::span<const double> steps, std::size_t dim);

/// X(t_j) = n^{-1/2} sum_{k<j} v(Y_k), M_j = n^{-1} sum_{k<l<j} v(Y_k) (x) v(Y_l).
/// O(n m^2).
GridRoughPath lift_orbit(const VectorObservable& v, const Orbit& orbit, std::size_t n);

/// Same lift, consuming a streaming orbit.
GridRoughPath lift_orbit(const VectorObservable& v, OrbitCursor& orbit, std::size_t n);

/// (X(1), M_n) of the lift without storing the path. O(n m^2) time, O(m^2)
/// memory.
Increment lift_terminal(const VectorObservable& v, OrbitCursor& orbit, std::size_t n);

/// Increment over [t_i, t_j]; throws ArgumentError if i > j.
Increment increment(const GridRoughPath& rp, std::size_t i, std::size_t j);

/// Frobenius norm of XX(s,t) - XX(s,u) - XX(u,t) - X(s,u) (x) X(u,t).
double chen_defect(const GridRoughPath& rp, std::size_t i, std::size_t u, std::size_t j);

// ---------------------------------------------------------------------------
// p-variation

/// Paths with more points than this are restricted to a stride-s subgrid.
inline constexpr std::size_t kMaxExactPVarPoints = 8192;

struct PVarResult {
  double value = 0.0;
  /// Subgrid stride; 1 means the value is the exact supremum over grid
  /// partitions, otherwise it is a lower bound.
  std::size_t stride = 1;
  bool exact() const { return stride == 1; }
};

namespace detail {

inline double pow_from_squared(double sq, double p) {
  if (p == 2.0) return sq;
  if (p == 1.0) return std::sqrt(sq);
  return std::pow(sq, 0.5 * p);
}

}  // namespace detail

/// Exact p-variation over grid partitions by dynamic programming:
///   V(0) = 0,  V(j) = max_{i<j} V(i) + |Xi(t_i, t_j)|^p,  result V(K-1)^{1/p}.
/// `squared_norm(i, j)` returns |Xi(t_i, t_j)|^2 for i < j. For a
/// piecewise-constant path the supremum over all partitions of [0,1] is
/// attained on jump times, so the grid search is exact. O(K^2) increments.
template <class SquaredNorm>
PVarResult pvar_dp(std::size_t K, double p, SquaredNorm&& squared_norm,
                   std::size_t max_points = kMaxExactPVarPoints);

/// p-variation of a one-parameter path given as K points of dimension dim.
PVarResult pvar_path(std::span<const double> values, std::size_t dim, double p);

/// p-variation of X (level 1) and of XX (level 2) of a sampled rough path.
PVarResult pvar_level1(const RoughPathSamples& rp, double p);
PVarResult pvar_level2(const RoughPathSamples& rp, double p);

/// ||X||_{p-var} + ||XX||_{p/2-var}^{1/2}. Warns if p is outside [2,3).
double homogeneous_norm(const GridRoughPath& rp, double p);

/// ||X - X~||_{p-var} + ||XX - XX~||_{p/2-var}.
double inhom_distance(const GridRoughPath& a, const GridRoughPath& b, double p);
double inhom_distance(const RoughPathSamples& a, const RoughPathSamples& b, double p);

/// sup_{s,t} |X(s,t) - X~(s,t)| + sup_{s,t} |XX(s,t) - XX~(s,t)|.
double sup_distance(const GridRoughPath& a, const GridRoughPath& b);

/// Upper bound on the Skorokhod-type p-variation distance: the minimum of
/// |w| + ||a ; b o w||_{p-var} over the identity and all piecewise-linear
/// bijections with one knot (s, w(s)) on the grid {k/(refinement*n)}.
double skorokhod_distance_upper(const GridRoughPath& a, const GridRoughPath& b, double p,
                                std::size_t refinement);

struct InterpolationCheck {
  double lhs = 0.0;  // inhom distance at p'
  double rhs = 0.0;  // sup^{1-p/p'} * inhom(p)^{p/p'}
  bool holds(double rel_slack = 1e-10) const { return lhs <= rhs * (1.0 + rel_slack); }
};

InterpolationCheck interpolation_check(const GridRoughPath& a, const GridRoughPath& b,
                                       double p, double p_prime);

// ---------------------------------------------------------------------------

template <class SquaredNorm>
PVarResult pvar_dp(std::size_t K, double p, SquaredNorm&& squared_norm,
                   std::size_t max_points) {
  if (!(p >= 1.0)) throw ArgumentError("pvar: p must be >= 1");
  if (K == 0) throw ArgumentError("pvar: at least one point required");
  if (K == 1) return {0.0, 1};

  std::size_t stride = 1;
  if (K > max_points) stride = (K - 1 + (max_points - 2)) / (max_points - 1);
  std::vector<std::size_t> idx;
  idx.reserve((K - 1) / stride + 2);
  for (std::size_t k = 0; k < K - 1; k += stride) idx.push_back(k);
  idx.push_back(K - 1);

  const std::size_t L = idx.size();
  std::vector<double> best(L, 0.0);
  for (std::size_t j = 1; j < L; ++j) {
    double v = 0.0;
    for (std::size_t i = 0; i < j; ++i) {
      const double cand = best[i] + detail::pow_from_squared(squared_norm(idx[i], idx[j]), p);
      if (cand > v) v = cand;
    }
    best[j] = v;
  }
  return {std::pow(best[L - 1], 1.0 / p), stride};
}

}  // namespace homog
