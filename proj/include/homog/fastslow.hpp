#pragma once

// Slow recursion
//
//   X_{k+1} = X_k + n^{-1} a(X_k, Y_k) + n^{-1/2} b(X_k, Y_k),   Y_{k+1} = T Y_k,
//
// and its cadlag path x_n(t) = X_{floor(nt)}.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "homog/maps.hpp"
#include "homog/observable.hpp"

namespace homog {

using Vec = std::vector<double>;

/// x -> vector or matrix (row-major), written into `out`.
using StateFn = std::function<void(std::span<const double> x, std::span<double> out)>;
/// (x, y) -> vector or matrix (row-major), written into `out`.
using FieldFn =
    std::function<void(std::span<const double> x, double y, std::span<double> out)>;

/// Drift a, noise b and its Jacobian db (d x d, entry (i,k) = d_k b^i).
/// Empty handles mean "identically zero".
struct SlowField {
  std::size_t dim = 0;
  FieldFn a;
  FieldFn b;
  FieldFn db;
};

/// Product-form field a(x,y) = g(x) u(y), b(x,y) = h(x) v(y) with
/// h : R^d -> R^{d x m}, g : R^d -> R^{d x e}. `dh` holds d_k h_{ij} at
/// index (i*d + k)*m + j. The drift is absent when e == 0.
struct ProductField {
  std::size_t d = 0;
  std::size_t m = 0;
  std::size_t e = 0;
  StateFn h;
  StateFn dh;
  VectorObservable v;
  StateFn g;
  VectorObservable u;

  SlowField as_slow_field() const;
};

class CadlagGridPath {
 public:
  CadlagGridPath() = default;
  /// n cells, values of dimension `dim` at k = 0..n (all zero).
  CadlagGridPath(std::size_t n, std::size_t dim);
  CadlagGridPath(std::size_t n, std::size_t dim, std::vector<double> data);

  std::size_t n() const { return n_; }
  std::size_t dim() const { return dim_; }
  std::span<const double> value(std::size_t k) const {
    return {data_.data() + k * dim_, dim_};
  }
  std::span<double> value(std::size_t k) { return {data_.data() + k * dim_, dim_}; }
  /// Right-continuous evaluation: values[floor(n t)], t in [0,1].
  std::span<const double> at(double t) const;
  std::span<const double> data() const { return data_; }

 private:
  std::size_t n_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> data_;
};

/// Largest n for which run_fast_slow stores the path densely.
inline constexpr std::size_t kMaxDensePathCells = std::size_t{1} << 24;

/// x + a(x,y)/n + b(x,y)/sqrt(n). Throws NumericError on non-finite output.
Vec fs_step(std::span<const double> x, double y, std::size_t n, const SlowField& field);

/// Full path of the recursion driven by orbit[0..n-1].
CadlagGridPath run_fast_slow(const SlowField& field, std::span<const double> xi,
                             const Orbit& orbit, std::size_t n);

/// Streaming variant: calls observer(k, X_k) for k = 0..n without storing the
/// path or the orbit. Returns X_n.
Vec stream_fast_slow(const SlowField& field, std::span<const double> xi,
                     OrbitCursor& orbit, std::size_t n,
                     const std::function<void(std::size_t, std::span<const double>)>& observer);

struct CenterOptions {
  std::size_t min_orbit_length = 100000;
};

/// Subtract the per-x Birkhoff mean of b (and of db) computed at `probes` and
/// interpolated in between: piecewise linear in d = 1, inverse-distance
/// weighting otherwise. The drift is passed through unchanged.
SlowField center_field(const SlowField& raw, const Orbit& reference,
                       std::span<const Vec> probes, const CenterOptions& options = {});

/// Product form: replaces v by v - (Birkhoff mean of v) exactly.
ProductField center_product(const ProductField& raw, const Orbit& reference,
                            const CenterOptions& options = {});

/// Largest |Birkhoff mean of b(x, .)| over the probes.
double centering_residual(const SlowField& field, const Orbit& reference,
                          std::span<const Vec> probes);

/// Empirical mean of a vector observable over the orbit.
Vec birkhoff_mean(const VectorObservable& v, const Orbit& orbit);

/// |n^{-1} sum_{k<n} a(x, Y_k) - abar(x)| (Euclidean norm).
double drift_average_deviation(const SlowField& field, std::span<const double> x,
                               const Orbit& orbit, std::size_t n, const StateFn& abar);

}  // namespace homog
