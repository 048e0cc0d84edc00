#pragma once

// Homogeneous Besov norm of level-2 rough paths
//
//   ||W||^q_{W^{alpha,q}} = sum_{k=1,2} iint |W^k_{u,v}|^{q/k} / |u-v|^{q alpha + 1} du dv
//
// evaluated on the continuous interpolant of a grid rough path, and the
// Besov -> Hoelder and Besov -> 1/alpha-variation embedding ratios.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "homog/roughpath.hpp"
#include "homog/rng.hpp"

namespace homog {

/// X~ linear between the anchors t_j = j/n, XX~(0,.) linear between anchors,
/// two-parameter increments by the group law
///   X~(s,t) = X~(t) - X~(s),  XX~(s,t) = M~(t) - M~(s) - X~(s) (x) X~(s,t),
/// with M~(t) = XX~(0,t). Inside a cell [t_j, t_{j+1}] with a = X(t_j,t_{j+1}),
/// lambda = (s - t_j) n and theta = 1 - lambda this gives
///   XX~(s, t_{j+1}) = theta XX(t_j,t_{j+1}) - theta lambda a (x) a.
class ContinuousRoughPath {
 public:
  explicit ContinuousRoughPath(GridRoughPath rp);

  std::size_t n() const { return rp_.n(); }
  std::size_t dim() const { return rp_.dim(); }
  const GridRoughPath& source() const { return rp_; }

  /// X~(t) and M~(t) = XX~(0,t), t in [0,1]. Exact at anchors.
  void X(double t, std::span<double> out) const;
  void M(double t, std::span<double> out) const;
  /// Group-law increment; valid for either order of s and t.
  Increment increment(double s, double t) const;

  /// n max_j |X(t_j,t_{j+1})|: Lipschitz constant of X~.
  double lipschitz_level1() const;
  /// n max_j |M_{j+1} - M_j|: Lipschitz constant of M~.
  double lipschitz_M() const;
  /// max_j |X(t_j)| = sup_t |X~(t)|.
  double sup_level1() const;

 private:
  // Cell j and offset lambda of t; lambda == 0 exactly at anchors.
  std::size_t locate(double t, double& lambda) const;

  GridRoughPath rp_;
};

ContinuousRoughPath continuous_interpolant(const GridRoughPath& rp);

struct BesovOptions {
  double alpha = 0.4;
  double q = 8.0;
  std::size_t quadrature = 256;
  /// 1 restricts the norm to the first level.
  int max_level = 2;
  std::size_t threads = 1;
};

struct BesovResult {
  /// (level1 + level2)^{1/q}
  double norm = 0.0;
  /// Quadrature values of the two double integrals.
  double level1 = 0.0;
  double level2 = 0.0;
  /// Upper bound on the excluded diagonal band |u - v| < 1/quadrature, in
  /// the same (q-th power) units as level1 + level2; infinite when the
  /// linear-growth bound is not integrable.
  double band_bound = 0.0;
};

/// Midpoint tensor quadrature on Q x Q cells with the diagonal cells dropped.
/// Throws ArgumentError unless q > 1, 1/q < alpha < 1 and Q >= 64.
BesovResult besov_norm_report(const ContinuousRoughPath& crp, const BesovOptions& options);
double besov_norm(const ContinuousRoughPath& crp, double alpha, double q,
                  std::size_t quadrature);

/// (sup_P sum_{[u,v] in P} sum_k |W^k_{u,v}|^{p/k})^{1/p}, sup over partitions
/// with points on the anchors (stride-coarsened above kMaxExactPVarPoints).
double homogeneous_var_norm(const GridRoughPath& rp, double p, int max_level = 2);

/// sum_k max over distinct quadrature nodes of |W^k_{u,v}|^{1/k} / |u-v|^gamma.
/// A lower bound on the Hoelder norm.
double homogeneous_holder_norm(const ContinuousRoughPath& crp, double gamma,
                               std::size_t quadrature, int max_level = 2);

struct EmbeddingRatios {
  double besov = 0.0;
  double var_norm = 0.0;     // at p = 1/alpha
  double holder_norm = 0.0;  // at gamma = alpha - 1/q
  /// var_norm / (T^{alpha - 1/q} besov), T = 1.
  double var_ratio = 0.0;
  /// holder_norm / besov.
  double holder_ratio = 0.0;
};

/// Both ratios; 0/0 is reported as 0 and a zero Besov norm under a nonzero
/// numerator throws DomainError.
EmbeddingRatios embedding_ratios(const ContinuousRoughPath& crp, const BesovOptions& options);
double embedding_check_var(const ContinuousRoughPath& crp, double alpha, double q,
                           std::size_t quadrature = 256);
double embedding_check_holder(const ContinuousRoughPath& crp, double alpha, double q,
                              std::size_t quadrature = 256);

struct ContPathBounds {
  double beta = 0.5;
  /// max over anchor pairs of |X(t_i,t_j)| / |t_j - t_i|^beta.
  double C1 = 0.0;
  /// max over anchor pairs of |XX(t_i,t_j)| / |t_j - t_i|^{2 beta}.
  double C2 = 0.0;
  /// max over sampled (s,t) of |X~(s,t)| / (3^{1-beta} C1 |t-s|^beta).
  double level1_ratio = 0.0;
  /// max over sampled (s,t) of |XX~(s,t)| / (3^{2-2beta} (C2 + C1^2) |t-s|^{2 beta}).
  double level2_ratio = 0.0;
  std::size_t pairs = 0;

  bool holds(double slack = 1e-12) const {
    return level1_ratio <= 1.0 + slack && level2_ratio <= 1.0 + slack;
  }
};

/// Samples `pairs` uniform (s,t) from `rng`. Requires 0 < beta <= 1/2.
ContPathBounds cont_path_bounds(const ContinuousRoughPath& crp, double beta, std::size_t pairs,
                                RngStream& rng);

}  // namespace homog
