#pragma once

// Limiting SDE coefficients
//
//   B1(v,w) = int v w dmu,   B2(v,w) = sum_{l>=1} int v (w o T^l) dmu,
//   B = B1/2 + B2,
//   Sigma^{ij}(x) = B(b^i, b^j) + B(b^j, b^i),   sigma = Sigma^{1/2},
//   atilde^i(x)   = abar^i(x) + sum_k B2(b^k(x,.), d_k b^i(x,.)),
//
// with every mu-integral realized as a Birkhoff average along one long orbit,
// plus the Euler-Maruyama integrator for dX = atilde dt + sigma dB.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "homog/ensemble.hpp"
#include "homog/fastslow.hpp"
#include "homog/maps.hpp"

namespace homog {

double estimate_B1(const Observable& v, const Observable& w, const Orbit& orbit);

struct B2Options {
  static constexpr std::int64_t kDefaultTruncation = 50;

  std::int64_t L = kDefaultTruncation;
  /// Stop once `stop_run` consecutive lag terms fall below
  /// stop_rel * sqrt(B1(v,v) B1(w,w)).
  bool auto_stop = true;
  std::size_t stop_run = 5;
  double stop_rel = 1e-4;
};

struct B2Estimate {
  double value = 0.0;
  /// |last lag term summed|, a proxy for the truncated tail.
  double last_term = 0.0;
  std::size_t terms_used = 0;
  bool auto_stopped = false;
};

/// sum_{l=1}^{L} (N-l)^{-1} sum_{k<N-l} v(Y_k) w(Y_{k+l}).
B2Estimate estimate_B2(const Observable& v, const Observable& w, const Orbit& orbit,
                       const B2Options& options);
B2Estimate estimate_B2(const Observable& v, const Observable& w, const Orbit& orbit,
                       std::int64_t L);

/// Same estimators on pre-sampled series v_k = v(Y_k), w_k = w(Y_k).
double series_B1(std::span<const double> v, std::span<const double> w);
B2Estimate series_B2(std::span<const double> v, std::span<const double> w,
                     const B2Options& options);

/// Unique PSD square root by symmetric eigendecomposition. Eigenvalues in
/// [-tol, 0) are clamped to 0. A negative tol selects 1e-8 * ||S||_2.
/// Throws DomainError ("not PSD") below -tol and ArgumentError when S is not
/// symmetric within tol.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& S, double tol = -1.0);

struct CoefficientProvenance {
  std::string mode;  // "product", "general" or "tabulated"
  std::size_t orbit_length = 0;
  std::int64_t truncation = 0;
  bool auto_stop = false;
  /// Largest number of lag terms summed by any B2 estimate so far.
  std::size_t terms_used = 0;
  /// Largest |last lag term| so far.
  double tail = 0.0;
  double psd_tolerance_rel = 1e-8;
};

/// Evaluable coefficients; all handles write into caller-provided storage:
/// abar, atilde -> d, Sigma, sigma -> d x d row-major.
struct CoefficientSet {
  std::size_t dim = 0;
  StateFn abar;
  StateFn Sigma;
  StateFn sigma;
  StateFn atilde;
  /// Shared so that lazily evaluated sets can update it.
  std::shared_ptr<CoefficientProvenance> provenance;

  Vec abar_at(std::span<const double> x) const;
  Vec Sigma_at(std::span<const double> x) const;
  Vec sigma_at(std::span<const double> x) const;
  Vec atilde_at(std::span<const double> x) const;
};

/// abar(x) = g(x) (Birkhoff mean of u), or zero without a drift.
StateFn product_abar(const ProductField& field, const Orbit& orbit);

/// General fields: lazy per-x estimation with a thread-safe per-x cache.
/// Each new x costs O(N L d^2) plus N evaluations of b and db.
CoefficientSet assemble_coefficients(const SlowField& field, StateFn abar,
                                     const Orbit& orbit, const B2Options& options);

/// Product fields b = h(x) v(y): B1 and B2 are estimated once on the m x m
/// observable pairs, then
///   Sigma(x) = h C h^T with C = B1 + B2 + B2^T,
///   atilde^i = abar^i + sum_{k,a,b} h^k_a d_k h^i_b B2(v^a, v^b).
CoefficientSet assemble_product_coefficients(const ProductField& field, StateFn abar,
                                             const Orbit& orbit, const B2Options& options);

/// The m x m matrices B1(v^a, v^b), B2(v^a, v^b) of a product field.
struct ObservableCovariances {
  Eigen::MatrixXd B1;
  Eigen::MatrixXd B2;
};
ObservableCovariances observable_covariances(const VectorObservable& v, const Orbit& orbit,
                                             const B2Options& options,
                                             CoefficientProvenance* provenance = nullptr);

/// Same assembly from precomputed covariances of field.v.
CoefficientSet assemble_product_coefficients(const ProductField& field, StateFn abar,
                                             const ObservableCovariances& cov,
                                             std::shared_ptr<CoefficientProvenance> provenance);

/// Tensor-product grid with one sorted axis per state coordinate.
struct TensorGrid {
  std::vector<std::vector<double>> axes;

  std::size_t dim() const { return axes.size(); }
  std::size_t size() const;
  /// Node with multi-index given by the flat index (last axis fastest).
  Vec node(std::size_t flat) const;
  /// Uniform axes [lo, hi] with `points` nodes each.
  static TensorGrid uniform(std::size_t d, double lo, double hi, std::size_t points);
};

/// Samples abar, Sigma and atilde on the grid (in parallel) and returns
/// multilinear interpolants, constant beyond the grid; sigma is the PSD root
/// of the interpolated Sigma.
CoefficientSet tabulate(const CoefficientSet& source, const TensorGrid& grid,
                        std::size_t threads);

/// CSV table over the grid: x..., abar..., Sigma..., atilde...
void write_coefficients_csv(std::ostream& out, const CoefficientSet& coeffs,
                            const TensorGrid& grid);

struct EulerMaruyamaOptions {
  std::size_t steps = 1000;
  std::size_t samples = 1000;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  bool keep_paths = false;
};

/// X_{k+1} = X_k + atilde(X_k) dt + sigma(X_k) sqrt(dt) xi_k over [0,1], with
/// the normals of sample s drawn from the EulerMaruyama stream of task s.
PathEnsemble euler_maruyama(const CoefficientSet& coeffs, std::span<const double> xi,
                            const EulerMaruyamaOptions& options);

}  // namespace homog
