#include "homog/coeffs.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>

#include "homog/detail/running_mean.hpp"
#include "homog/errors.hpp"
#include "homog/parallel.hpp"
#include "homog/rde.hpp"
#include "homog/rng.hpp"

namespace homog {

namespace {

std::vector<double> sample_series(const Observable& v, const Orbit& orbit) {
  std::vector<double> out(orbit.size());
  for (std::size_t k = 0; k < orbit.size(); ++k) out[k] = v(orbit[k]);
  return out;
}

// sum_{k<len} a[k] b[k] with four interleaved accumulators.
double dot(const double* a, const double* b, std::size_t len) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t k = 0;
  for (; k + 4 <= len; k += 4) {
    s0 += a[k] * b[k];
    s1 += a[k + 1] * b[k + 1];
    s2 += a[k + 2] * b[k + 2];
    s3 += a[k + 3] * b[k + 3];
  }
  for (; k < len; ++k) s0 += a[k] * b[k];
  return (s0 + s1) + (s2 + s3);
}

double mean_square(std::span<const double> v) {
  return dot(v.data(), v.data(), v.size()) / static_cast<double>(v.size());
}

void note_b2(CoefficientProvenance* prov, const B2Estimate& est) {
  if (prov == nullptr) return;
  prov->terms_used = std::max(prov->terms_used, est.terms_used);
  prov->tail = std::max(prov->tail, est.last_term);
}

StateFn zero_fn() {
  return [](std::span<const double>, std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
  };
}

void check_orbit(const Orbit& orbit, const char* what) {
  if (orbit.size() == 0) throw ArgumentError(std::string(what) + ": empty orbit");
}

void sigma_from_Sigma(std::span<const double> S, std::size_t d, std::span<double> out,
                      double rel_tol) {
  if (d == 1) {
    const double s = S[0];
    if (s < 0.0) {
      if (-s > rel_tol * std::abs(s)) throw DomainError("psd_sqrt: not PSD");
      out[0] = 0.0;
    } else {
      out[0] = std::sqrt(s);
    }
    return;
  }
  Eigen::MatrixXd M = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                                     Eigen::RowMajor>>(S.data(), d, d);
  const Eigen::MatrixXd R = psd_sqrt(M);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) out[i * d + j] = R(i, j);
  }
}

}  // namespace

double series_B1(std::span<const double> v, std::span<const double> w) {
  if (v.empty() || v.size() != w.size()) {
    throw ArgumentError("B1: series must be nonempty and of equal length");
  }
  detail::RunningMean mean;
  for (std::size_t k = 0; k < v.size(); ++k) mean.add(v[k] * w[k]);
  return mean.mean();
}

B2Estimate series_B2(std::span<const double> v, std::span<const double> w,
                     const B2Options& options) {
  if (options.L < 0) throw ArgumentError("B2: truncation L must be >= 0");
  if (v.empty() || v.size() != w.size()) {
    throw ArgumentError("B2: series must be nonempty and of equal length");
  }
  const std::size_t N = v.size();
  B2Estimate est;
  const double threshold = options.stop_rel * std::sqrt(mean_square(v) * mean_square(w));
  std::size_t run = 0;
  const auto L = static_cast<std::size_t>(options.L);
  for (std::size_t l = 1; l <= L && l < N; ++l) {
    const double term = dot(v.data(), w.data() + l, N - l) / static_cast<double>(N - l);
    est.value += term;
    est.last_term = std::abs(term);
    est.terms_used = l;
    if (options.auto_stop) {
      run = std::abs(term) < threshold ? run + 1 : 0;
      if (run >= options.stop_run) {
        est.auto_stopped = true;
        break;
      }
    }
  }
  return est;
}

double estimate_B1(const Observable& v, const Observable& w, const Orbit& orbit) {
  check_orbit(orbit, "estimate_B1");
  return series_B1(sample_series(v, orbit), sample_series(w, orbit));
}

B2Estimate estimate_B2(const Observable& v, const Observable& w, const Orbit& orbit,
                       const B2Options& options) {
  if (options.L < 0) throw ArgumentError("B2: truncation L must be >= 0");
  check_orbit(orbit, "estimate_B2");
  return series_B2(sample_series(v, orbit), sample_series(w, orbit), options);
}

B2Estimate estimate_B2(const Observable& v, const Observable& w, const Orbit& orbit,
                       std::int64_t L) {
  B2Options options;
  options.L = L;
  options.auto_stop = false;
  return estimate_B2(v, w, orbit, options);
}

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& S, double tol) {
  if (S.rows() != S.cols()) throw ArgumentError("psd_sqrt: matrix must be square");
  const Eigen::Index d = S.rows();
  if (d == 0) return S;
  const Eigen::MatrixXd sym = 0.5 * (S + S.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
  if (solver.info() != Eigen::Success) throw NumericError("psd_sqrt: eigensolver failed");
  const Eigen::VectorXd& lambda = solver.eigenvalues();
  const double norm2 = lambda.cwiseAbs().maxCoeff();
  const double eff_tol = tol < 0.0 ? 1e-8 * norm2 : tol;
  const double asym = (S - S.transpose()).cwiseAbs().maxCoeff();
  if (asym > std::max(eff_tol, 1e-14 * norm2)) {
    throw ArgumentError("psd_sqrt: matrix is not symmetric within tolerance");
  }
  Eigen::VectorXd root(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    if (lambda(i) < -eff_tol) {
      std::ostringstream msg;
      msg << "psd_sqrt: not PSD (eigenvalue " << lambda(i) << ")";
      throw DomainError(msg.str());
    }
    root(i) = lambda(i) > 0.0 ? std::sqrt(lambda(i)) : 0.0;
  }
  const Eigen::MatrixXd& Q = solver.eigenvectors();
  Eigen::MatrixXd R = Q * root.asDiagonal() * Q.transpose();
  return 0.5 * (R + R.transpose());
}

Vec CoefficientSet::abar_at(std::span<const double> x) const {
  Vec out(dim);
  abar(x, out);
  return out;
}

Vec CoefficientSet::Sigma_at(std::span<const double> x) const {
  Vec out(dim * dim);
  Sigma(x, out);
  return out;
}

Vec CoefficientSet::sigma_at(std::span<const double> x) const {
  Vec out(dim * dim);
  sigma(x, out);
  return out;
}

Vec CoefficientSet::atilde_at(std::span<const double> x) const {
  Vec out(dim);
  atilde(x, out);
  return out;
}

StateFn product_abar(const ProductField& field, const Orbit& orbit) {
  if (field.e == 0 || !field.g || !field.u.eval) return zero_fn();
  const Vec ubar = birkhoff_mean(field.u, orbit);
  const std::size_t d = field.d, e = field.e;
  const StateFn g = field.g;
  return [g, ubar, d, e](std::span<const double> x, std::span<double> out) {
    thread_local Vec gbuf;
    gbuf.resize(d * e);
    g(x, gbuf);
    for (std::size_t i = 0; i < d; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < e; ++j) s += gbuf[i * e + j] * ubar[j];
      out[i] = s;
    }
  };
}

ObservableCovariances observable_covariances(const VectorObservable& v, const Orbit& orbit,
                                             const B2Options& options,
                                             CoefficientProvenance* provenance) {
  check_orbit(orbit, "observable_covariances");
  if (options.L < 0) throw ArgumentError("B2: truncation L must be >= 0");
  const std::size_t m = v.dim, N = orbit.size();
  std::vector<std::vector<double>> series(m, std::vector<double>(N));
  Vec buf(m);
  for (std::size_t k = 0; k < N; ++k) {
    v.eval(orbit[k], buf);
    for (std::size_t a = 0; a < m; ++a) series[a][k] = buf[a];
  }
  ObservableCovariances cov{Eigen::MatrixXd::Zero(m, m), Eigen::MatrixXd::Zero(m, m)};
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = 0; b < m; ++b) {
      cov.B1(a, b) = b < a ? cov.B1(b, a) : series_B1(series[a], series[b]);
      const B2Estimate est = series_B2(series[a], series[b], options);
      cov.B2(a, b) = est.value;
      note_b2(provenance, est);
      if (provenance != nullptr && est.auto_stopped) provenance->auto_stop = true;
    }
  }
  return cov;
}

CoefficientSet assemble_product_coefficients(const ProductField& field, StateFn abar,
                                             const Orbit& orbit, const B2Options& options) {
  auto prov = std::make_shared<CoefficientProvenance>();
  prov->mode = "product";
  prov->orbit_length = orbit.size();
  prov->truncation = options.L;
  const ObservableCovariances cov = observable_covariances(field.v, orbit, options, prov.get());
  prov->auto_stop = options.auto_stop;
  return assemble_product_coefficients(field, std::move(abar), cov, prov);
}

CoefficientSet assemble_product_coefficients(const ProductField& field, StateFn abar,
                                             const ObservableCovariances& cov,
                                             std::shared_ptr<CoefficientProvenance> prov) {
  if (!prov) prov = std::make_shared<CoefficientProvenance>();
  if (prov->mode.empty()) prov->mode = "product";
  if (static_cast<std::size_t>(cov.B1.rows()) != field.m ||
      static_cast<std::size_t>(cov.B2.rows()) != field.m) {
    throw ArgumentError("assemble_product_coefficients: covariance shape mismatch");
  }
  const std::size_t d = field.d, m = field.m;
  const Eigen::MatrixXd C = cov.B1 + cov.B2 + cov.B2.transpose();
  const Eigen::MatrixXd D = cov.B2;
  const StateFn h = field.h;
  StateFn dh = field.dh;
  if (!dh) {
    dh = [h, d, m](std::span<const double> x, std::span<double> out) {
      finite_difference_DH(h, d, m, x, out);
    };
  }
  if (!abar) abar = zero_fn();

  CoefficientSet set;
  set.dim = d;
  set.provenance = prov;
  set.abar = abar;
  set.Sigma = [h, C, d, m](std::span<const double> x, std::span<double> out) {
    thread_local Vec H, HC;
    H.resize(d * m);
    HC.resize(d * m);
    h(x, H);
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t b = 0; b < m; ++b) {
        double s = 0.0;
        for (std::size_t a = 0; a < m; ++a) s += H[i * m + a] * C(a, b);
        HC[i * m + b] = s;
      }
    }
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = i; j < d; ++j) {
        double s = 0.0;
        for (std::size_t b = 0; b < m; ++b) s += HC[i * m + b] * H[j * m + b];
        out[i * d + j] = s;
        out[j * d + i] = s;
      }
    }
  };
  const StateFn Sigma = set.Sigma;
  const double rel = prov->psd_tolerance_rel;
  set.sigma = [Sigma, d, rel](std::span<const double> x, std::span<double> out) {
    thread_local Vec S;
    S.resize(d * d);
    Sigma(x, S);
    sigma_from_Sigma(S, d, out, rel);
  };
  set.atilde = [abar, h, dh, D, d, m](std::span<const double> x, std::span<double> out) {
    thread_local Vec H, DH;
    H.resize(d * m);
    DH.resize(d * d * m);
    abar(x, out);
    h(x, H);
    dh(x, DH);
    for (std::size_t i = 0; i < d; ++i) {
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        for (std::size_t a = 0; a < m; ++a) {
          const double hka = H[k * m + a];
          if (hka == 0.0) continue;
          for (std::size_t b = 0; b < m; ++b) {
            s += hka * DH[(i * d + k) * m + b] * D(a, b);
          }
        }
      }
      out[i] += s;
    }
  };
  return set;
}

namespace {

struct GeneralEntry {
  Vec Sigma;
  Vec correction;
};

struct GeneralState {
  SlowField field;
  Orbit orbit;
  B2Options options;
  std::shared_ptr<CoefficientProvenance> provenance;
  std::mutex mutex;
  std::map<Vec, GeneralEntry> cache;

  GeneralState(SlowField f, Orbit o, B2Options opt, std::shared_ptr<CoefficientProvenance> p)
      : field(std::move(f)), orbit(std::move(o)), options(opt), provenance(std::move(p)) {}

  GeneralEntry compute(const Vec& x) {
    const std::size_t d = field.dim, N = orbit.size();
    std::vector<std::vector<double>> b(d, std::vector<double>(N, 0.0));
    std::vector<std::vector<double>> db(d * d, std::vector<double>(N, 0.0));
    Vec bbuf(d), dbbuf(d * d);
    for (std::size_t k = 0; k < N; ++k) {
      std::fill(bbuf.begin(), bbuf.end(), 0.0);
      std::fill(dbbuf.begin(), dbbuf.end(), 0.0);
      if (field.b) field.b(x, orbit[k], bbuf);
      if (field.db) field.db(x, orbit[k], dbbuf);
      for (std::size_t i = 0; i < d; ++i) b[i][k] = bbuf[i];
      for (std::size_t ik = 0; ik < d * d; ++ik) db[ik][k] = dbbuf[ik];
    }
    GeneralEntry entry{Vec(d * d), Vec(d, 0.0)};
    std::vector<B2Estimate> used;
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = i; j < d; ++j) {
        const B2Estimate ij = series_B2(b[i], b[j], options);
        const B2Estimate ji = i == j ? ij : series_B2(b[j], b[i], options);
        const double s = series_B1(b[i], b[j]) + ij.value + ji.value;
        entry.Sigma[i * d + j] = s;
        entry.Sigma[j * d + i] = s;
        used.push_back(ij);
        used.push_back(ji);
      }
    }
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t k = 0; k < d; ++k) {
        const B2Estimate est = series_B2(b[k], db[i * d + k], options);
        entry.correction[i] += est.value;
        used.push_back(est);
      }
    }
    std::lock_guard lock(mutex);
    for (const auto& est : used) note_b2(provenance.get(), est);
    return entry;
  }

  GeneralEntry get(std::span<const double> x) {
    Vec key(x.begin(), x.end());
    {
      std::lock_guard lock(mutex);
      auto it = cache.find(key);
      if (it != cache.end()) return it->second;
    }
    GeneralEntry entry = compute(key);
    std::lock_guard lock(mutex);
    return cache.emplace(std::move(key), std::move(entry)).first->second;
  }
};

}  // namespace

CoefficientSet assemble_coefficients(const SlowField& field, StateFn abar, const Orbit& orbit,
                                     const B2Options& options) {
  check_orbit(orbit, "assemble_coefficients");
  if (options.L < 0) throw ArgumentError("B2: truncation L must be >= 0");
  auto prov = std::make_shared<CoefficientProvenance>();
  prov->mode = "general";
  prov->orbit_length = orbit.size();
  prov->truncation = options.L;
  prov->auto_stop = options.auto_stop;
  auto state = std::make_shared<GeneralState>(field, orbit, options, prov);
  if (!abar) abar = zero_fn();
  const std::size_t d = field.dim;

  CoefficientSet set;
  set.dim = d;
  set.provenance = prov;
  set.abar = abar;
  set.Sigma = [state](std::span<const double> x, std::span<double> out) {
    const auto entry = state->get(x);
    std::copy(entry.Sigma.begin(), entry.Sigma.end(), out.begin());
  };
  const double rel = prov->psd_tolerance_rel;
  set.sigma = [state, d, rel](std::span<const double> x, std::span<double> out) {
    const auto entry = state->get(x);
    sigma_from_Sigma(entry.Sigma, d, out, rel);
  };
  set.atilde = [state, abar, d](std::span<const double> x, std::span<double> out) {
    const auto entry = state->get(x);
    abar(x, out);
    for (std::size_t i = 0; i < d; ++i) out[i] += entry.correction[i];
  };
  return set;
}

std::size_t TensorGrid::size() const {
  std::size_t total = 1;
  for (const auto& axis : axes) total *= axis.size();
  return total;
}

Vec TensorGrid::node(std::size_t flat) const {
  Vec x(axes.size());
  for (std::size_t a = axes.size(); a-- > 0;) {
    const std::size_t len = axes[a].size();
    x[a] = axes[a][flat % len];
    flat /= len;
  }
  return x;
}

TensorGrid TensorGrid::uniform(std::size_t d, double lo, double hi, std::size_t points) {
  if (d == 0 || points == 0) throw ArgumentError("TensorGrid: need d >= 1 and points >= 1");
  if (points > 1 && !(lo < hi)) throw ArgumentError("TensorGrid: need lo < hi");
  std::vector<double> axis(points);
  for (std::size_t i = 0; i < points; ++i) {
    axis[i] = points == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / (points - 1);
  }
  return TensorGrid{std::vector<std::vector<double>>(d, axis)};
}

namespace {

// Multilinear interpolation weights: (flat node index, weight) pairs.
void grid_weights(const TensorGrid& grid, std::span<const double> x,
                  std::vector<std::pair<std::size_t, double>>& out) {
  const std::size_t d = grid.dim();
  std::vector<std::size_t> lo(d);
  std::vector<double> frac(d);
  for (std::size_t a = 0; a < d; ++a) {
    const auto& axis = grid.axes[a];
    if (axis.size() == 1 || x[a] <= axis.front()) {
      lo[a] = 0;
      frac[a] = 0.0;
    } else if (x[a] >= axis.back()) {
      lo[a] = axis.size() - 2;
      frac[a] = 1.0;
    } else {
      const auto it = std::upper_bound(axis.begin(), axis.end(), x[a]);
      lo[a] = static_cast<std::size_t>(it - axis.begin()) - 1;
      frac[a] = (x[a] - axis[lo[a]]) / (axis[lo[a] + 1] - axis[lo[a]]);
    }
  }
  out.clear();
  for (std::size_t corner = 0; corner < (std::size_t{1} << d); ++corner) {
    double w = 1.0;
    std::size_t flat = 0;
    for (std::size_t a = 0; a < d; ++a) {
      const bool up = (corner >> (d - 1 - a)) & 1U;
      const std::size_t len = grid.axes[a].size();
      if (up && len == 1) {
        w = 0.0;
        break;
      }
      w *= up ? frac[a] : 1.0 - frac[a];
      flat = flat * len + lo[a] + (up ? 1 : 0);
    }
    if (w != 0.0) out.emplace_back(flat, w);
  }
}

struct Table {
  TensorGrid grid;
  std::size_t width;
  std::vector<double> values;  // size() * width

  void interpolate(std::span<const double> x, std::span<double> out) const {
    thread_local std::vector<std::pair<std::size_t, double>> w;
    grid_weights(grid, x, w);
    std::fill(out.begin(), out.end(), 0.0);
    for (const auto& [node, weight] : w) {
      const double* row = &values[node * width];
      for (std::size_t c = 0; c < width; ++c) out[c] += weight * row[c];
    }
  }
};

}  // namespace

CoefficientSet tabulate(const CoefficientSet& source, const TensorGrid& grid,
                        std::size_t threads) {
  const std::size_t d = source.dim;
  if (grid.dim() != d) throw ArgumentError("tabulate: grid dimension mismatch");
  for (const auto& axis : grid.axes) {
    if (axis.empty() || !std::is_sorted(axis.begin(), axis.end())) {
      throw ArgumentError("tabulate: axes must be nonempty and sorted");
    }
  }
  const std::size_t count = grid.size();
  auto abar = std::make_shared<Table>(Table{grid, d, std::vector<double>(count * d)});
  auto Sigma = std::make_shared<Table>(Table{grid, d * d, std::vector<double>(count * d * d)});
  auto atilde = std::make_shared<Table>(Table{grid, d, std::vector<double>(count * d)});
  parallel_for(count, threads, [&](std::size_t node) {
    const Vec x = grid.node(node);
    source.abar(x, std::span<double>(&abar->values[node * d], d));
    source.Sigma(x, std::span<double>(&Sigma->values[node * d * d], d * d));
    source.atilde(x, std::span<double>(&atilde->values[node * d], d));
  });

  auto prov = std::make_shared<CoefficientProvenance>(
      source.provenance ? *source.provenance : CoefficientProvenance{});
  prov->mode = "tabulated";

  CoefficientSet set;
  set.dim = d;
  set.provenance = prov;
  set.abar = [abar](std::span<const double> x, std::span<double> out) {
    abar->interpolate(x, out);
  };
  set.Sigma = [Sigma](std::span<const double> x, std::span<double> out) {
    Sigma->interpolate(x, out);
  };
  const double rel = prov->psd_tolerance_rel;
  set.sigma = [Sigma, d, rel](std::span<const double> x, std::span<double> out) {
    thread_local Vec S;
    S.resize(d * d);
    Sigma->interpolate(x, S);
    sigma_from_Sigma(S, d, out, rel);
  };
  set.atilde = [atilde](std::span<const double> x, std::span<double> out) {
    atilde->interpolate(x, out);
  };
  return set;
}

void write_coefficients_csv(std::ostream& out, const CoefficientSet& coeffs,
                            const TensorGrid& grid) {
  const std::size_t d = coeffs.dim;
  const auto old_precision = out.precision(17);
  for (std::size_t i = 0; i < d; ++i) out << "x" << i << ",";
  for (std::size_t i = 0; i < d; ++i) out << "abar" << i << ",";
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) out << "Sigma" << i << j << ",";
  }
  for (std::size_t i = 0; i < d; ++i) out << "atilde" << i << (i + 1 < d ? "," : "\r\n");
  for (std::size_t node = 0; node < grid.size(); ++node) {
    const Vec x = grid.node(node);
    Vec row = x;
    for (const Vec& part : {coeffs.abar_at(x), coeffs.Sigma_at(x), coeffs.atilde_at(x)}) {
      row.insert(row.end(), part.begin(), part.end());
    }
    for (std::size_t c = 0; c < row.size(); ++c) {
      out << row[c] << (c + 1 < row.size() ? "," : "\r\n");
    }
  }
  out.precision(old_precision);
}

PathEnsemble euler_maruyama(const CoefficientSet& coeffs, std::span<const double> xi,
                            const EulerMaruyamaOptions& options) {
  const std::size_t d = coeffs.dim;
  if (options.steps == 0) throw ArgumentError("euler_maruyama: steps must be >= 1");
  if (options.samples == 0) throw ArgumentError("euler_maruyama: samples must be >= 1");
  if (xi.size() != d) throw ArgumentError("euler_maruyama: xi dimension mismatch");
  PathEnsemble ens(d, options.samples);
  if (options.keep_paths) {
    ens.path_points = options.steps + 1;
    ens.paths.resize(options.samples * ens.path_points * d);
  }
  const double dt = 1.0 / static_cast<double>(options.steps);
  const double sqrt_dt = std::sqrt(dt);
  parallel_for(options.samples, options.threads, [&](std::size_t s) {
    RngStream rng = RngStream::for_task(options.seed, StreamDomain::EulerMaruyama, s);
    Vec x(xi.begin(), xi.end()), a(d), sig(d * d), z(d), next(d);
    PathRecorder recorder(options.steps,
                          std::span<double>(&ens.marginals[s * kMarginalTimes * d],
                                            kMarginalTimes * d));
    double* path = options.keep_paths ? &ens.paths[s * ens.path_points * d] : nullptr;
    recorder.visit(0, x);
    if (path != nullptr) std::copy(x.begin(), x.end(), path);
    for (std::size_t k = 0; k < options.steps; ++k) {
      coeffs.atilde(x, a);
      coeffs.sigma(x, sig);
      for (std::size_t j = 0; j < d; ++j) z[j] = rng.normal();
      for (std::size_t i = 0; i < d; ++i) {
        double noise = 0.0;
        for (std::size_t j = 0; j < d; ++j) noise += sig[i * d + j] * z[j];
        next[i] = x[i] + a[i] * dt + noise * sqrt_dt;
      }
      if (!std::all_of(next.begin(), next.end(), [](double v) { return std::isfinite(v); })) {
        throw NumericError("euler_maruyama: non-finite state", static_cast<std::int64_t>(k), x);
      }
      x.swap(next);
      recorder.visit(k + 1, x);
      if (path != nullptr) std::copy(x.begin(), x.end(), path + (k + 1) * d);
    }
    ens.sup[s] = recorder.sup();
  });
  return ens;
}

}  // namespace homog
