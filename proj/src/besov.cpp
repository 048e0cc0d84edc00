#include "homog/besov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "homog/errors.hpp"
#include "homog/parallel.hpp"

namespace homog {

namespace {

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

void check_besov_params(double alpha, double q) {
  if (!(q > 1.0)) throw ArgumentError("besov: q must be > 1");
  if (!(alpha > 1.0 / q && alpha < 1.0)) {
    throw ArgumentError("besov: alpha must lie in (1/q, 1)");
  }
}

// X~ and M~ at the quadrature midpoints (a + 1/2)/Q.
struct NodeTable {
  std::size_t Q, m;
  std::vector<double> t, x, mm;

  NodeTable(const ContinuousRoughPath& crp, std::size_t quadrature)
      : Q(quadrature), m(crp.dim()), t(Q), x(Q * m), mm(Q * m * m) {
    for (std::size_t a = 0; a < Q; ++a) {
      t[a] = (static_cast<double>(a) + 0.5) / static_cast<double>(Q);
      crp.X(t[a], std::span<double>(&x[a * m], m));
      crp.M(t[a], std::span<double>(&mm[a * m * m], m * m));
    }
  }

  // Squared norms of W^1_{u_a,u_b} and W^2_{u_a,u_b}.
  void squared(std::size_t a, std::size_t b, double& s1, double& s2) const {
    const double* xa = &x[a * m];
    const double* xb = &x[b * m];
    const double* ma = &mm[a * m * m];
    const double* mb = &mm[b * m * m];
    s1 = 0.0;
    s2 = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double dx = xb[i] - xa[i];
      s1 += dx * dx;
      for (std::size_t j = 0; j < m; ++j) {
        const double v = mb[i * m + j] - ma[i * m + j] - xa[i] * (xb[j] - xa[j]);
        s2 += v * v;
      }
    }
  }
};

double pow_sq(double sq, double e) { return sq == 0.0 ? 0.0 : std::pow(sq, e); }

}  // namespace

ContinuousRoughPath::ContinuousRoughPath(GridRoughPath rp) : rp_(std::move(rp)) {}

std::size_t ContinuousRoughPath::locate(double t, double& lambda) const {
  if (!(t >= 0.0 && t <= 1.0)) throw DomainError("ContinuousRoughPath: t outside [0,1]");
  const std::size_t n = rp_.n();
  const double dn = static_cast<double>(n);
  auto knot = [dn](std::size_t j) { return static_cast<double>(j) / dn; };
  std::size_t j = std::min(static_cast<std::size_t>(t * dn), n);
  while (j > 0 && t < knot(j)) --j;
  while (j < n && t >= knot(j + 1)) ++j;
  if (j == n) {
    lambda = 0.0;
    return n;
  }
  lambda = t == knot(j) ? 0.0 : (t - knot(j)) * dn;
  return j;
}

void ContinuousRoughPath::X(double t, std::span<double> out) const {
  double lambda;
  const std::size_t j = locate(t, lambda);
  const auto x0 = rp_.X(j);
  if (lambda == 0.0) {
    std::copy(x0.begin(), x0.end(), out.begin());
    return;
  }
  const auto x1 = rp_.X(j + 1);
  for (std::size_t i = 0; i < rp_.dim(); ++i) out[i] = x0[i] + lambda * (x1[i] - x0[i]);
}

void ContinuousRoughPath::M(double t, std::span<double> out) const {
  double lambda;
  const std::size_t j = locate(t, lambda);
  const auto m0 = rp_.M(j);
  if (lambda == 0.0) {
    std::copy(m0.begin(), m0.end(), out.begin());
    return;
  }
  const auto m1 = rp_.M(j + 1);
  for (std::size_t c = 0; c < m0.size(); ++c) out[c] = m0[c] + lambda * (m1[c] - m0[c]);
}

Increment ContinuousRoughPath::increment(double s, double t) const {
  const std::size_t m = dim();
  std::vector<double> xs(m), xt(m), ms(m * m), mt(m * m);
  X(s, xs);
  X(t, xt);
  M(s, ms);
  M(t, mt);
  Increment inc{std::vector<double>(m), std::vector<double>(m * m)};
  for (std::size_t i = 0; i < m; ++i) inc.x[i] = xt[i] - xs[i];
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      inc.xx[i * m + j] = mt[i * m + j] - ms[i * m + j] - xs[i] * inc.x[j];
    }
  }
  return inc;
}

double ContinuousRoughPath::lipschitz_level1() const {
  double best = 0.0;
  for (std::size_t j = 0; j < n(); ++j) {
    const auto a = rp_.X(j), b = rp_.X(j + 1);
    double s = 0.0;
    for (std::size_t i = 0; i < dim(); ++i) s += (b[i] - a[i]) * (b[i] - a[i]);
    best = std::max(best, std::sqrt(s));
  }
  return best * static_cast<double>(n());
}

double ContinuousRoughPath::lipschitz_M() const {
  double best = 0.0;
  for (std::size_t j = 0; j < n(); ++j) {
    const auto a = rp_.M(j), b = rp_.M(j + 1);
    double s = 0.0;
    for (std::size_t c = 0; c < a.size(); ++c) s += (b[c] - a[c]) * (b[c] - a[c]);
    best = std::max(best, std::sqrt(s));
  }
  return best * static_cast<double>(n());
}

double ContinuousRoughPath::sup_level1() const {
  double best = 0.0;
  for (std::size_t j = 0; j <= n(); ++j) best = std::max(best, std::sqrt(norm2(rp_.X(j))));
  return best;
}

ContinuousRoughPath continuous_interpolant(const GridRoughPath& rp) {
  return ContinuousRoughPath(rp);
}

BesovResult besov_norm_report(const ContinuousRoughPath& crp, const BesovOptions& options) {
  check_besov_params(options.alpha, options.q);
  if (options.quadrature < 64) throw ArgumentError("besov: quadrature must be >= 64");
  if (options.max_level < 1 || options.max_level > 2) {
    throw ArgumentError("besov: max_level must be 1 or 2");
  }
  const double q = options.q, alpha = options.alpha;
  const NodeTable nodes(crp, options.quadrature);
  const std::size_t Q = nodes.Q;
  const double h = 1.0 / static_cast<double>(Q);
  const double denom_exp = q * alpha + 1.0;
  const bool second = options.max_level == 2;

  std::vector<double> row1(Q, 0.0), row2(Q, 0.0);
  parallel_for(Q, options.threads, [&](std::size_t a) {
    double acc1 = 0.0, acc2 = 0.0;
    for (std::size_t b = 0; b < Q; ++b) {
      if (a == b) continue;
      double s1, s2;
      nodes.squared(a, b, s1, s2);
      const double w = std::pow(std::abs(nodes.t[b] - nodes.t[a]), -denom_exp);
      acc1 += pow_sq(s1, 0.5 * q) * w;
      if (second) acc2 += pow_sq(s2, 0.25 * q) * w;
    }
    row1[a] = acc1;
    row2[a] = acc2;
  });
  BesovResult res;
  for (std::size_t a = 0; a < Q; ++a) {
    res.level1 += row1[a];
    res.level2 += row2[a];
  }
  res.level1 *= h * h;
  res.level2 *= h * h;
  res.norm = std::pow(res.level1 + res.level2, 1.0 / q);

  // Band |u - v| < h: |W^k_{u,v}| <= L_k |u - v| with L_1 the slope of X~ and
  // L_2 = Lip(M~) + sup|X~| Lip(X~); the integrand is then <= L_k^{q/k}|u-v|^e
  // and iint_{|u-v|<h} |u-v|^e <= 2 h^{e+1} / (e+1).
  auto band = [&](double L, double k) {
    const double e = q / k - denom_exp;
    if (L == 0.0) return 0.0;
    if (e <= -1.0) return std::numeric_limits<double>::infinity();
    return 2.0 * std::pow(L, q / k) * std::pow(h, e + 1.0) / (e + 1.0);
  };
  const double L1 = crp.lipschitz_level1();
  res.band_bound = band(L1, 1.0);
  if (second) res.band_bound += band(crp.lipschitz_M() + crp.sup_level1() * L1, 2.0);
  return res;
}

double besov_norm(const ContinuousRoughPath& crp, double alpha, double q,
                  std::size_t quadrature) {
  BesovOptions options;
  options.alpha = alpha;
  options.q = q;
  options.quadrature = quadrature;
  return besov_norm_report(crp, options).norm;
}

double homogeneous_var_norm(const GridRoughPath& rp, double p, int max_level) {
  if (!(p >= 1.0)) throw ArgumentError("var norm: p must be >= 1");
  const std::size_t m = rp.dim();
  const bool second = max_level >= 2;
  auto cost = [&](std::size_t i, std::size_t j) {
    const auto xi = rp.X(i), xj = rp.X(j), mi = rp.M(i), mj = rp.M(j);
    double s1 = 0.0, s2 = 0.0;
    for (std::size_t a = 0; a < m; ++a) {
      const double dx = xj[a] - xi[a];
      s1 += dx * dx;
      if (!second) continue;
      for (std::size_t b = 0; b < m; ++b) {
        const double v = mj[a * m + b] - mi[a * m + b] - xi[a] * (xj[b] - xi[b]);
        s2 += v * v;
      }
    }
    return pow_sq(s1, 0.5 * p) + (second ? pow_sq(s2, 0.25 * p) : 0.0);
  };
  const std::size_t K = rp.points();
  std::size_t stride = 1;
  if (K > kMaxExactPVarPoints) {
    stride = (K - 1 + (kMaxExactPVarPoints - 2)) / (kMaxExactPVarPoints - 1);
  }
  std::vector<std::size_t> idx;
  for (std::size_t k = 0; k < K - 1; k += stride) idx.push_back(k);
  idx.push_back(K - 1);
  std::vector<double> best(idx.size(), 0.0);
  for (std::size_t j = 1; j < idx.size(); ++j) {
    double v = 0.0;
    for (std::size_t i = 0; i < j; ++i) v = std::max(v, best[i] + cost(idx[i], idx[j]));
    best[j] = v;
  }
  return std::pow(best.back(), 1.0 / p);
}

double homogeneous_holder_norm(const ContinuousRoughPath& crp, double gamma,
                               std::size_t quadrature, int max_level) {
  if (quadrature < 2) throw ArgumentError("holder norm: need at least two nodes");
  const NodeTable nodes(crp, quadrature);
  double best1 = 0.0, best2 = 0.0;
  for (std::size_t a = 0; a < nodes.Q; ++a) {
    for (std::size_t b = 0; b < nodes.Q; ++b) {
      if (a == b) continue;
      double s1, s2;
      nodes.squared(a, b, s1, s2);
      const double w = std::pow(std::abs(nodes.t[b] - nodes.t[a]), gamma);
      best1 = std::max(best1, std::sqrt(s1) / w);
      if (max_level >= 2) best2 = std::max(best2, std::pow(s2, 0.25) / w);
    }
  }
  return best1 + best2;
}

EmbeddingRatios embedding_ratios(const ContinuousRoughPath& crp, const BesovOptions& options) {
  const BesovResult besov = besov_norm_report(crp, options);
  EmbeddingRatios r;
  r.besov = besov.norm;
  r.var_norm = homogeneous_var_norm(crp.source(), 1.0 / options.alpha, options.max_level);
  r.holder_norm = homogeneous_holder_norm(crp, options.alpha - 1.0 / options.q,
                                          options.quadrature, options.max_level);
  if (r.besov == 0.0) {
    if (r.var_norm != 0.0 || r.holder_norm != 0.0) {
      throw DomainError("embedding check: zero Besov norm with nonzero variation");
    }
    return r;
  }
  r.var_ratio = r.var_norm / r.besov;
  r.holder_ratio = r.holder_norm / r.besov;
  return r;
}

double embedding_check_var(const ContinuousRoughPath& crp, double alpha, double q,
                           std::size_t quadrature) {
  BesovOptions options;
  options.alpha = alpha;
  options.q = q;
  options.quadrature = quadrature;
  return embedding_ratios(crp, options).var_ratio;
}

double embedding_check_holder(const ContinuousRoughPath& crp, double alpha, double q,
                              std::size_t quadrature) {
  BesovOptions options;
  options.alpha = alpha;
  options.q = q;
  options.quadrature = quadrature;
  return embedding_ratios(crp, options).holder_ratio;
}

ContPathBounds cont_path_bounds(const ContinuousRoughPath& crp, double beta, std::size_t pairs,
                                RngStream& rng) {
  if (!(beta > 0.0 && beta <= 0.5)) throw ArgumentError("cont_path_bounds: need 0 < beta <= 1/2");
  const GridRoughPath& rp = crp.source();
  const std::size_t n = rp.n(), m = rp.dim();
  ContPathBounds out;
  out.beta = beta;
  out.pairs = pairs;
  const double dn = static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto xi = rp.X(i), mi = rp.M(i);
    for (std::size_t j = i + 1; j <= n; ++j) {
      const auto xj = rp.X(j), mj = rp.M(j);
      double s1 = 0.0, s2 = 0.0;
      for (std::size_t a = 0; a < m; ++a) {
        const double dx = xj[a] - xi[a];
        s1 += dx * dx;
        for (std::size_t b = 0; b < m; ++b) {
          const double v = mj[a * m + b] - mi[a * m + b] - xi[a] * (xj[b] - xi[b]);
          s2 += v * v;
        }
      }
      const double dt = static_cast<double>(j - i) / dn;
      out.C1 = std::max(out.C1, std::sqrt(s1) / std::pow(dt, beta));
      out.C2 = std::max(out.C2, std::sqrt(s2) / std::pow(dt, 2.0 * beta));
    }
  }
  const double k1 = std::pow(3.0, 1.0 - beta) * out.C1;
  const double k2 = std::pow(3.0, 2.0 - 2.0 * beta) * (out.C2 + out.C1 * out.C1);
  auto ratio = [](double num, double den) {
    if (den > 0.0) return num / den;
    return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  };
  for (std::size_t k = 0; k < pairs; ++k) {
    double s = rng.uniform(), t = rng.uniform();
    if (s > t) std::swap(s, t);
    if (s == t) continue;
    const Increment inc = crp.increment(s, t);
    const double dt = t - s;
    out.level1_ratio =
        std::max(out.level1_ratio, ratio(std::sqrt(norm2(inc.x)), k1 * std::pow(dt, beta)));
    out.level2_ratio = std::max(out.level2_ratio,
                                ratio(std::sqrt(norm2(inc.xx)), k2 * std::pow(dt, 2.0 * beta)));
  }
  return out;
}

}  // namespace homog
