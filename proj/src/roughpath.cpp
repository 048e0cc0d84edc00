#include "homog/roughpath.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

#include "homog/errors.hpp"
#include "homog/log.hpp"

namespace homog {

namespace {

double level1_sq(const RoughPathSamples& rp, std::size_t i, std::size_t j) {
  const auto xi = rp.X(i);
  const auto xj = rp.X(j);
  double s = 0.0;
  for (std::size_t a = 0; a < rp.dim; ++a) {
    const double d = xj[a] - xi[a];
    s += d * d;
  }
  return s;
}

double level2_sq(const RoughPathSamples& rp, std::size_t i, std::size_t j) {
  const std::size_t m = rp.dim;
  const auto xi = rp.X(i);
  const auto xj = rp.X(j);
  const auto mi = rp.M(i);
  const auto mj = rp.M(j);
  double s = 0.0;
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = 0; b < m; ++b) {
      const double d = mj[a * m + b] - mi[a * m + b] - xi[a] * (xj[b] - xi[b]);
      s += d * d;
    }
  }
  return s;
}

double level1_diff_sq(const RoughPathSamples& p, const RoughPathSamples& q, std::size_t i,
                      std::size_t j) {
  double s = 0.0;
  const auto pi = p.X(i), pj = p.X(j), qi = q.X(i), qj = q.X(j);
  for (std::size_t a = 0; a < p.dim; ++a) {
    const double d = (pj[a] - pi[a]) - (qj[a] - qi[a]);
    s += d * d;
  }
  return s;
}

double level2_diff_sq(const RoughPathSamples& p, const RoughPathSamples& q, std::size_t i,
                      std::size_t j) {
  const std::size_t m = p.dim;
  const auto pxi = p.X(i), pxj = p.X(j), qxi = q.X(i), qxj = q.X(j);
  const auto pmi = p.M(i), pmj = p.M(j), qmi = q.M(i), qmj = q.M(j);
  double s = 0.0;
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = 0; b < m; ++b) {
      const std::size_t ab = a * m + b;
      const double pv = pmj[ab] - pmi[ab] - pxi[a] * (pxj[b] - pxi[b]);
      const double qv = qmj[ab] - qmi[ab] - qxi[a] * (qxj[b] - qxi[b]);
      const double d = pv - qv;
      s += d * d;
    }
  }
  return s;
}

void check_same_shape(const RoughPathSamples& a, const RoughPathSamples& b, const char* what) {
  if (a.count != b.count || a.dim != b.dim) {
    std::ostringstream msg;
    msg << what << ": shape mismatch (" << a.count << " x " << a.dim << " vs " << b.count
        << " x " << b.dim << ")";
    throw ArgumentError(msg.str());
  }
}

// Exact rational time num/den with den > 0.
struct Rational {
  __int128 num;
  __int128 den;
};

bool operator<(const Rational& x, const Rational& y) { return x.num * y.den < y.num * x.den; }
bool operator==(const Rational& x, const Rational& y) { return x.num * y.den == y.num * x.den; }

// omega^{-1}(k/n) for the one-knot time change through (s, w) = (ka/R, kb/R).
Rational inverse_time_change(std::int64_t k, std::int64_t n, std::int64_t ka, std::int64_t kb,
                             std::int64_t R) {
  // omega maps [0, s] -> [0, w] and [s, 1] -> [w, 1] linearly.
  const __int128 K = k, N = n, A = ka, B = kb, RR = R;
  if (K * RR <= B * N) {
    // t = (k/n) * (s/w) = k*ka / (n*kb)
    return {K * A, N * B};
  }
  // t = s + (k/n - w) (1 - s)/(1 - w)
  //   = [A n (R - B) + (K R - N B)(R - A)] / [N R (R - B)]
  return {A * N * (RR - B) + (K * RR - N * B) * (RR - A), N * RR * (RR - B)};
}

}  // namespace

GridRoughPath::GridRoughPath(std::size_t n, std::size_t dim, std::vector<double> x,
                             std::vector<double> mm)
    : n_(n), dim_(dim), x_(std::move(x)), mm_(std::move(mm)) {
  if (n == 0 || dim == 0) throw ArgumentError("GridRoughPath: n and dim must be positive");
  if (x_.size() != (n + 1) * dim || mm_.size() != (n + 1) * dim * dim) {
    throw ArgumentError("GridRoughPath: data sizes must be (n+1)*dim and (n+1)*dim^2");
  }
  for (std::size_t a = 0; a < dim; ++a) {
    if (x_[a] != 0.0) throw ArgumentError("GridRoughPath: X(0) must be 0");
  }
  for (std::size_t a = 0; a < dim * dim; ++a) {
    if (mm_[a] != 0.0) throw ArgumentError("GridRoughPath: M(0) must be 0");
  }
}

GridRoughPath GridRoughPath::dilate(double c) const {
  std::vector<double> x = x_, mm = mm_;
  for (auto& v : x) v *= c;
  for (auto& v : mm) v *= c * c;
  return GridRoughPath(n_, dim_, std::move(x), std::move(mm));
}

GridRoughPath lift_steps(std::span<const double> steps, std::size_t dim) {
  if (dim == 0 || steps.empty() || steps.size() % dim != 0) {
    throw ArgumentError("lift_steps: need a positive number of steps of dimension dim");
  }
  const std::size_t n = steps.size() / dim;
  std::vector<double> x((n + 1) * dim, 0.0);
  std::vector<double> mm((n + 1) * dim * dim, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const double* xk = &x[k * dim];
    double* xn = &x[(k + 1) * dim];
    const double* mk = &mm[k * dim * dim];
    double* mn = &mm[(k + 1) * dim * dim];
    const double* step = &steps[k * dim];
    for (std::size_t a = 0; a < dim; ++a) {
      xn[a] = xk[a] + step[a];
      for (std::size_t b = 0; b < dim; ++b) {
        mn[a * dim + b] = mk[a * dim + b] + xk[a] * step[b];
      }
    }
  }
  return GridRoughPath(n, dim, std::move(x), std::move(mm));
}

GridRoughPath lift_orbit(const VectorObservable& v, const Orbit& orbit, std::size_t n) {
  if (n == 0) throw ArgumentError("lift_orbit: n must be positive");
  if (orbit.size() < n) throw ArgumentError("lift_orbit: orbit shorter than n");
  const std::size_t m = v.dim;
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  std::vector<double> steps(n * m);
  for (std::size_t k = 0; k < n; ++k) {
    std::span<double> out(&steps[k * m], m);
    v.eval(orbit[k], out);
    for (auto& s : out) s *= scale;
  }
  return lift_steps(steps, m);
}

GridRoughPath lift_orbit(const VectorObservable& v, OrbitCursor& orbit, std::size_t n) {
  if (n == 0) throw ArgumentError("lift_orbit: n must be positive");
  const std::size_t m = v.dim;
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  std::vector<double> steps(n * m);
  for (std::size_t k = 0; k < n; ++k) {
    std::span<double> out(&steps[k * m], m);
    v.eval(orbit.next(), out);
    for (auto& s : out) s *= scale;
  }
  return lift_steps(steps, m);
}

Increment lift_terminal(const VectorObservable& v, OrbitCursor& orbit, std::size_t n) {
  if (n == 0) throw ArgumentError("lift_terminal: n must be positive");
  const std::size_t m = v.dim;
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  Increment out{std::vector<double>(m, 0.0), std::vector<double>(m * m, 0.0)};
  std::vector<double> step(m);
  for (std::size_t k = 0; k < n; ++k) {
    v.eval(orbit.next(), step);
    for (auto& s : step) s *= scale;
    for (std::size_t a = 0; a < m; ++a) {
      for (std::size_t b = 0; b < m; ++b) out.xx[a * m + b] += out.x[a] * step[b];
    }
    for (std::size_t a = 0; a < m; ++a) out.x[a] += step[a];
  }
  return out;
}

Increment increment(const GridRoughPath& rp, std::size_t i, std::size_t j) {
  if (i > j) throw ArgumentError("increment: requires i <= j");
  if (j > rp.n()) throw ArgumentError("increment: index beyond the grid");
  const std::size_t m = rp.dim();
  Increment inc{std::vector<double>(m), std::vector<double>(m * m)};
  const auto xi = rp.X(i), xj = rp.X(j), mi = rp.M(i), mj = rp.M(j);
  for (std::size_t a = 0; a < m; ++a) inc.x[a] = xj[a] - xi[a];
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = 0; b < m; ++b) {
      inc.xx[a * m + b] = mj[a * m + b] - mi[a * m + b] - xi[a] * inc.x[b];
    }
  }
  return inc;
}

double chen_defect(const GridRoughPath& rp, std::size_t i, std::size_t u, std::size_t j) {
  if (!(i <= u && u <= j)) throw ArgumentError("chen_defect: requires i <= u <= j");
  const auto st = increment(rp, i, j);
  const auto su = increment(rp, i, u);
  const auto ut = increment(rp, u, j);
  const std::size_t m = rp.dim();
  double s = 0.0;
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = 0; b < m; ++b) {
      const std::size_t ab = a * m + b;
      const double d = st.xx[ab] - su.xx[ab] - ut.xx[ab] - su.x[a] * ut.x[b];
      s += d * d;
    }
  }
  return std::sqrt(s);
}

PVarResult pvar_path(std::span<const double> values, std::size_t dim, double p) {
  if (dim == 0 || values.size() % dim != 0) {
    throw ArgumentError("pvar_path: values must hold K points of dimension dim");
  }
  const std::size_t K = values.size() / dim;
  return pvar_dp(K, p, [&](std::size_t i, std::size_t j) {
    double s = 0.0;
    for (std::size_t a = 0; a < dim; ++a) {
      const double d = values[j * dim + a] - values[i * dim + a];
      s += d * d;
    }
    return s;
  });
}

PVarResult pvar_level1(const RoughPathSamples& rp, double p) {
  return pvar_dp(rp.count, p, [&](std::size_t i, std::size_t j) { return level1_sq(rp, i, j); });
}

PVarResult pvar_level2(const RoughPathSamples& rp, double p) {
  return pvar_dp(rp.count, p, [&](std::size_t i, std::size_t j) { return level2_sq(rp, i, j); });
}

double homogeneous_norm(const GridRoughPath& rp, double p) {
  if (!(p >= 2.0 && p < 3.0)) {
    std::ostringstream msg;
    msg << "homogeneous_norm: p = " << p << " is outside the level-2 range [2,3)";
    warn(msg.str());
  }
  const auto s = rp.samples();
  return pvar_level1(s, p).value + std::sqrt(pvar_level2(s, p / 2.0).value);
}

double inhom_distance(const RoughPathSamples& a, const RoughPathSamples& b, double p) {
  check_same_shape(a, b, "inhom_distance");
  const auto l1 = pvar_dp(a.count, p, [&](std::size_t i, std::size_t j) {
    return level1_diff_sq(a, b, i, j);
  });
  const auto l2 = pvar_dp(a.count, p / 2.0, [&](std::size_t i, std::size_t j) {
    return level2_diff_sq(a, b, i, j);
  });
  return l1.value + l2.value;
}

double inhom_distance(const GridRoughPath& a, const GridRoughPath& b, double p) {
  return inhom_distance(a.samples(), b.samples(), p);
}

double sup_distance(const GridRoughPath& a, const GridRoughPath& b) {
  const auto sa = a.samples(), sb = b.samples();
  check_same_shape(sa, sb, "sup_distance");
  double sup1 = 0.0, sup2 = 0.0;
  for (std::size_t i = 0; i < sa.count; ++i) {
    for (std::size_t j = i + 1; j < sa.count; ++j) {
      sup1 = std::max(sup1, level1_diff_sq(sa, sb, i, j));
      sup2 = std::max(sup2, level2_diff_sq(sa, sb, i, j));
    }
  }
  return std::sqrt(sup1) + std::sqrt(sup2);
}

double skorokhod_distance_upper(const GridRoughPath& a, const GridRoughPath& b, double p,
                                std::size_t refinement) {
  check_same_shape(a.samples(), b.samples(), "skorokhod_distance_upper");
  if (refinement == 0) throw ArgumentError("skorokhod_distance_upper: refinement must be >= 1");
  const std::size_t n = a.n();
  const std::size_t m = a.dim();
  const auto R = static_cast<std::int64_t>(refinement * n);
  const auto N = static_cast<std::int64_t>(n);

  double best = inhom_distance(a, b, p);

  std::vector<double> xa, ma, xb, mb;
  std::vector<Rational> jumps_b(n);
  for (std::int64_t ks = 1; ks < R; ++ks) {
    for (std::int64_t kw = 1; kw < R; ++kw) {
      if (ks == kw) continue;
      const double shift = static_cast<double>(std::abs(ks - kw)) / static_cast<double>(R);
      if (shift >= best) continue;
      // Jumps of a sit at k/n; jumps of b o w at w^{-1}(k/n). Walk both in
      // time order and record (value of a, value of b o w) after each time.
      for (std::int64_t k = 1; k <= N; ++k) jumps_b[k - 1] = inverse_time_change(k, N, ks, kw, R);
      xa.assign(m, 0.0);
      ma.assign(m * m, 0.0);
      xb.assign(m, 0.0);
      mb.assign(m * m, 0.0);
      std::size_t ia = 0, ib = 0;
      while (ia < n || ib < n) {
        const Rational ta{static_cast<__int128>(ia + 1), N};
        bool step_a = false, step_b = false;
        if (ia < n && ib < n) {
          if (ta == jumps_b[ib]) {
            step_a = step_b = true;
          } else if (ta < jumps_b[ib]) {
            step_a = true;
          } else {
            step_b = true;
          }
        } else {
          step_a = ia < n;
          step_b = ib < n;
        }
        if (step_a) ++ia;
        if (step_b) ++ib;
        const auto av = a.X(ia), am = a.M(ia), bv = b.X(ib), bm = b.M(ib);
        xa.insert(xa.end(), av.begin(), av.end());
        ma.insert(ma.end(), am.begin(), am.end());
        xb.insert(xb.end(), bv.begin(), bv.end());
        mb.insert(mb.end(), bm.begin(), bm.end());
      }
      const std::size_t K = xa.size() / m;
      const RoughPathSamples sa{K, m, xa, ma}, sb{K, m, xb, mb};
      best = std::min(best, shift + inhom_distance(sa, sb, p));
    }
  }
  return best;
}

InterpolationCheck interpolation_check(const GridRoughPath& a, const GridRoughPath& b,
                                       double p, double p_prime) {
  if (!(p >= 1.0 && p_prime >= p)) {
    throw ArgumentError("interpolation_check: requires 1 <= p <= p'");
  }
  InterpolationCheck out;
  out.lhs = inhom_distance(a, b, p_prime);
  const double theta = p / p_prime;
  const double sup = sup_distance(a, b);
  const double dist_p = inhom_distance(a, b, p);
  out.rhs = std::pow(sup, 1.0 - theta) * std::pow(dist_p, theta);
  return out;
}

}  // namespace homog
