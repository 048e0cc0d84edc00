#include "homog/rde.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "homog/errors.hpp"

namespace homog {

namespace {

void check_grid(std::size_t n_path, std::size_t n_driver, const char* what) {
  if (n_path != n_driver) {
    std::ostringstream msg;
    msg << what << ": grid mismatch (" << n_path << " vs " << n_driver << " cells)";
    throw ArgumentError(msg.str());
  }
}

// Scratch for one rough step.
struct RoughStep {
  std::vector<double> H, DH, F, dx, dxx;

  RoughStep(const VectorFieldPair& vf)
      : H(vf.d * vf.m), DH(vf.d * vf.d * vf.m), F(vf.d * vf.e), dx(vf.m), dxx(vf.m * vf.m) {}

  // Loads the cell increment of rp over [t_k, t_{k+1}].
  void load_cell(const GridRoughPath& rp, std::size_t k) {
    const std::size_t m = rp.dim();
    const auto x0 = rp.X(k), x1 = rp.X(k + 1), m0 = rp.M(k), m1 = rp.M(k + 1);
    for (std::size_t a = 0; a < m; ++a) dx[a] = x1[a] - x0[a];
    for (std::size_t a = 0; a < m; ++a) {
      for (std::size_t b = 0; b < m; ++b) {
        dxx[a * m + b] = m1[a * m + b] - m0[a * m + b] - x0[a] * dx[b];
      }
    }
  }

  // out += Xi(t_k, t_{k+1}) evaluated at y.
  void add_xi(const VectorFieldPair& vf, std::span<const double> y, std::span<double> out) {
    const std::size_t d = vf.d, m = vf.m;
    vf.H(y, H);
    const bool second_level =
        std::any_of(dxx.begin(), dxx.end(), [](double v) { return v != 0.0; });
    if (second_level) vf.eval_DH(y, DH);
    for (std::size_t i = 0; i < d; ++i) {
      double s = 0.0;
      for (std::size_t b = 0; b < m; ++b) s += H[i * m + b] * dx[b];
      if (second_level) {
        for (std::size_t k = 0; k < d; ++k) {
          for (std::size_t a = 0; a < m; ++a) {
            const double hka = H[k * m + a];
            if (hka == 0.0) continue;
            for (std::size_t b = 0; b < m; ++b) {
              s += hka * DH[(i * d + k) * m + b] * dxx[a * m + b];
            }
          }
        }
      }
      out[i] += s;
    }
  }
};

}  // namespace

void finite_difference_DH(const StateFn& H, std::size_t d, std::size_t m,
                          std::span<const double> x, std::span<double> out) {
  const double eps13 = std::cbrt(std::numeric_limits<double>::epsilon());
  std::vector<double> xp(x.begin(), x.end()), hp(d * m), hm(d * m);
  for (std::size_t k = 0; k < d; ++k) {
    const double h = eps13 * std::max(1.0, std::abs(x[k]));
    xp[k] = x[k] + h;
    H(xp, hp);
    xp[k] = x[k] - h;
    H(xp, hm);
    xp[k] = x[k];
    const double span = 2.0 * h;
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        out[(i * d + k) * m + j] = (hp[i * m + j] - hm[i * m + j]) / span;
      }
    }
  }
}

void VectorFieldPair::eval_DH(std::span<const double> x, std::span<double> out) const {
  if (DH) {
    DH(x, out);
  } else {
    finite_difference_DH(H, d, m, x, out);
  }
}

ControlledOutput::ControlledOutput(CadlagGridPath y, std::vector<double> y_prime, std::size_t m)
    : y_(std::move(y)), y_prime_(std::move(y_prime)), m_(m) {
  if (y_prime_.size() != (y_.n() + 1) * y_.dim() * m_) {
    throw ArgumentError("ControlledOutput: derivative size must be (n+1)*d*m");
  }
}

std::vector<double> ControlledOutput::remainder(const GridRoughPath& rp, std::size_t i,
                                                std::size_t j) const {
  if (i > j) throw ArgumentError("remainder: requires i <= j");
  check_grid(y_.n(), rp.n(), "remainder");
  const std::size_t d = y_.dim();
  std::vector<double> r(d);
  const auto yi = y_.value(i), yj = y_.value(j), der = derivative(i);
  const auto xi = rp.X(i), xj = rp.X(j);
  for (std::size_t a = 0; a < d; ++a) {
    double s = yj[a] - yi[a];
    for (std::size_t b = 0; b < m_; ++b) s -= der[a * m_ + b] * (xj[b] - xi[b]);
    r[a] = s;
  }
  return r;
}

CadlagGridPath rough_integral(const VectorFieldPair& vf, const CadlagGridPath& Y,
                              const GridRoughPath& rp) {
  check_grid(Y.n(), rp.n(), "rough_integral");
  if (Y.dim() != vf.d || rp.dim() != vf.m) {
    throw ArgumentError("rough_integral: dimension mismatch with the vector fields");
  }
  const std::size_t n = Y.n();
  CadlagGridPath out(n, vf.d);
  RoughStep step(vf);
  for (std::size_t k = 0; k < n; ++k) {
    auto next = out.value(k + 1);
    const auto prev = out.value(k);
    std::copy(prev.begin(), prev.end(), next.begin());
    step.load_cell(rp, k);
    step.add_xi(vf, Y.value(k), next);
  }
  return out;
}

CadlagGridPath young_integral(const StateFn& F, std::size_t e, const CadlagGridPath& Y,
                              const CadlagGridPath& V) {
  check_grid(Y.n(), V.n(), "young_integral");
  if (V.dim() != e) throw ArgumentError("young_integral: driver dimension mismatch");
  const std::size_t n = Y.n(), d = Y.dim();
  CadlagGridPath out(n, d);
  std::vector<double> f(d * e);
  for (std::size_t k = 0; k < n; ++k) {
    auto next = out.value(k + 1);
    const auto prev = out.value(k);
    F(Y.value(k), f);
    const auto v0 = V.value(k), v1 = V.value(k + 1);
    for (std::size_t i = 0; i < d; ++i) {
      double s = prev[i];
      for (std::size_t j = 0; j < e; ++j) s += f[i * e + j] * (v1[j] - v0[j]);
      next[i] = s;
    }
  }
  return out;
}

ControlledOutput solve_rde(const VectorFieldPair& vf, const CadlagGridPath* V,
                           const GridRoughPath& rp, std::span<const double> y0) {
  if (y0.size() != vf.d) throw ArgumentError("solve_rde: y0 dimension mismatch");
  if (rp.dim() != vf.m) throw ArgumentError("solve_rde: driver dimension mismatch");
  const bool drift = V != nullptr && vf.e > 0 && vf.F;
  if (drift) {
    check_grid(V->n(), rp.n(), "solve_rde");
    if (V->dim() != vf.e) throw ArgumentError("solve_rde: drift driver dimension mismatch");
  }
  const std::size_t n = rp.n(), d = vf.d, m = vf.m, e = vf.e;
  CadlagGridPath Y(n, d);
  std::vector<double> y_prime((n + 1) * d * m);
  std::copy(y0.begin(), y0.end(), Y.value(0).begin());
  RoughStep step(vf);
  for (std::size_t k = 0; k < n; ++k) {
    const auto yk = Y.value(k);
    auto next = Y.value(k + 1);
    std::copy(yk.begin(), yk.end(), next.begin());
    if (drift) {
      vf.F(yk, step.F);
      const auto v0 = V->value(k), v1 = V->value(k + 1);
      for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < e; ++j) next[i] += step.F[i * e + j] * (v1[j] - v0[j]);
      }
    }
    step.load_cell(rp, k);
    step.add_xi(vf, yk, next);
    std::copy(step.H.begin(), step.H.end(), y_prime.begin() + k * d * m);
    if (!std::all_of(next.begin(), next.end(), [](double v) { return std::isfinite(v); })) {
      throw NumericError("solve_rde: non-finite state", static_cast<std::int64_t>(k),
                         std::vector<double>(yk.begin(), yk.end()));
    }
  }
  vf.H(Y.value(n), std::span<double>(y_prime.data() + n * d * m, d * m));
  return ControlledOutput(std::move(Y), std::move(y_prime), m);
}

LipschitzProbe lipschitz_probe(const VectorFieldPair& vf, const CadlagGridPath* V,
                               const GridRoughPath& rp, const CadlagGridPath* V_tilde,
                               const GridRoughPath& rp_tilde, std::span<const double> y0,
                               std::span<const double> y0_tilde, double p, double q) {
  check_grid(rp.n(), rp_tilde.n(), "lipschitz_probe");
  const auto sol = solve_rde(vf, V, rp, y0);
  const auto sol_t = solve_rde(vf, V_tilde, rp_tilde, y0_tilde);
  const std::size_t n = rp.n(), d = vf.d;

  double init2 = 0.0;
  for (std::size_t i = 0; i < d; ++i) init2 += (y0[i] - y0_tilde[i]) * (y0[i] - y0_tilde[i]);
  const double init = std::sqrt(init2);

  std::vector<double> diff((n + 1) * d);
  for (std::size_t k = 0; k <= n; ++k) {
    const auto a = sol.path().value(k), b = sol_t.path().value(k);
    for (std::size_t i = 0; i < d; ++i) diff[k * d + i] = a[i] - b[i];
  }
  LipschitzProbe out;
  out.solution_distance = init + pvar_path(diff, d, p).value;

  double drift_dist = 0.0;
  if (V != nullptr && V_tilde != nullptr) {
    check_grid(V->n(), V_tilde->n(), "lipschitz_probe");
    const std::size_t e = V->dim();
    std::vector<double> vdiff((n + 1) * e);
    for (std::size_t k = 0; k <= n; ++k) {
      const auto a = V->value(k), b = V_tilde->value(k);
      for (std::size_t j = 0; j < e; ++j) vdiff[k * e + j] = a[j] - b[j];
    }
    drift_dist = pvar_path(vdiff, e, q).value;
  }
  out.driver_distance = inhom_distance(rp, rp_tilde, p) + drift_dist + init;
  return out;
}

CadlagGridPath drift_driver(const VectorObservable& u, const Orbit& orbit, std::size_t n) {
  if (n == 0) throw ArgumentError("drift_driver: n must be positive");
  if (orbit.size() < n) throw ArgumentError("drift_driver: orbit shorter than n");
  const std::size_t e = u.dim;
  CadlagGridPath V(n, e);
  std::vector<double> buf(e);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k) {
    u.eval(orbit[k], buf);
    const auto prev = V.value(k);
    auto next = V.value(k + 1);
    for (std::size_t j = 0; j < e; ++j) next[j] = prev[j] + inv_n * buf[j];
  }
  return V;
}

VectorFieldPair product_vector_fields(const ProductField& field) {
  VectorFieldPair vf;
  vf.d = field.d;
  vf.m = field.m;
  vf.e = field.e;
  vf.H = field.h;
  vf.DH = field.dh;
  vf.F = field.g;
  return vf;
}

}  // namespace homog
