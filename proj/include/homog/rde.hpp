#pragma once

// Forward (Ito-type) rough integration and RDE solving on grid drivers.
//
// For a driver that is piecewise constant on the grid {k/n}, every
// compensated Riemann sum over a refinement of the jump partition equals the
// sum over the grid cells themselves, so the cell-wise sums below are the
// rough and Young integrals, not approximations of them.

#include <cstddef>
#include <span>
#include <vector>

#include "homog/fastslow.hpp"
#include "homog/roughpath.hpp"

namespace homog {

/// Vector fields of dY = F(Y) dV + H(Y) dX.
///   H  : R^d -> R^{d x m}, index i*m + j
///   DH : R^d -> R^{d x d x m}, d_k H^i_j at index (i*d + k)*m + j
///   F  : R^d -> R^{d x e}, index i*e + j (optional, e = 0 when absent)
/// A missing DH is synthesized by central differences.
struct VectorFieldPair {
  std::size_t d = 0;
  std::size_t m = 0;
  std::size_t e = 0;
  StateFn H;
  StateFn DH;
  StateFn F;

  /// DH if supplied, otherwise central differences with step
  /// eps^{1/3} * max(1, |x_k|) (second-order accurate).
  void eval_DH(std::span<const double> x, std::span<double> out) const;
};

/// Central-difference Jacobian of H, laid out like DH.
void finite_difference_DH(const StateFn& H, std::size_t d, std::size_t m,
                          std::span<const double> x, std::span<double> out);

/// Y together with its Gubinelli derivative Y' = H(Y) (d x m per grid point).
class ControlledOutput {
 public:
  ControlledOutput(CadlagGridPath y, std::vector<double> y_prime, std::size_t m);

  const CadlagGridPath& path() const { return y_; }
  std::span<const double> derivative(std::size_t k) const {
    const std::size_t dm = y_.dim() * m_;
    return {y_prime_.data() + k * dm, dm};
  }
  /// R(s,t) = Y(s,t) - Y'(s) X(s,t) for grid indices i <= j.
  std::vector<double> remainder(const GridRoughPath& rp, std::size_t i, std::size_t j) const;

 private:
  CadlagGridPath y_;
  std::vector<double> y_prime_;
  std::size_t m_;
};

/// Running sum of Xi(t_k, t_{k+1}) with
///   Xi^i = H^i_b(Y) X^b + sum_{k,a,b} H^k_a(Y) d_k H^i_b(Y) XX^{ab},
/// evaluated at the left endpoint. Output starts at 0.
CadlagGridPath rough_integral(const VectorFieldPair& vf, const CadlagGridPath& Y,
                              const GridRoughPath& rp);

/// Left-point sum of F(Y(t_k)) V(t_k, t_{k+1}); F : R^d -> R^{d x e}.
CadlagGridPath young_integral(const StateFn& F, std::size_t e, const CadlagGridPath& Y,
                              const CadlagGridPath& V);

/// Forward solution of Y = y0 + int F(Y-) dV + int H(Y-) dX:
///   Y_{k+1} = Y_k + F(Y_k) V(t_k,t_{k+1}) + H(Y_k) X(t_k,t_{k+1})
///             + (DH H)(Y_k) XX(t_k,t_{k+1}).
/// Pass `V = nullptr` when there is no drift driver.
ControlledOutput solve_rde(const VectorFieldPair& vf, const CadlagGridPath* V,
                           const GridRoughPath& rp, std::span<const double> y0);

struct LipschitzProbe {
  /// |Y_0 - Y~_0| + ||Y - Y~||_{p-var}
  double solution_distance = 0.0;
  /// ||X ; X~||_{p-var} + ||V - V~||_{q-var} + |y0 - y~0|
  double driver_distance = 0.0;
  double ratio() const {
    return driver_distance == 0.0 ? 0.0 : solution_distance / driver_distance;
  }
};

LipschitzProbe lipschitz_probe(const VectorFieldPair& vf, const CadlagGridPath* V,
                               const GridRoughPath& rp, const CadlagGridPath* V_tilde,
                               const GridRoughPath& rp_tilde, std::span<const double> y0,
                               std::span<const double> y0_tilde, double p, double q = 1.0);

/// Drift driver V(t_j) = n^{-1} sum_{k<j} u(Y_k) of a product-form drift.
CadlagGridPath drift_driver(const VectorObservable& u, const Orbit& orbit, std::size_t n);

/// Vector fields (F = g, H = h, DH = dh) matching a product field.
VectorFieldPair product_vector_fields(const ProductField& field);

}  // namespace homog
