#include "homog/fastslow.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <sstream>

#include "homog/detail/running_mean.hpp"
#include "homog/errors.hpp"

namespace homog {

namespace {

struct StepScratch {
  Vec a;
  Vec b;
};

// x_out = x + a/n + b/sqrt(n); x_out may alias x.
void fs_step_into(std::span<const double> x, double y, double inv_n, double inv_sqrt_n,
                  const SlowField& field, StepScratch& scratch, std::span<double> x_out) {
  const std::size_t d = field.dim;
  scratch.a.assign(d, 0.0);
  scratch.b.assign(d, 0.0);
  if (field.a) field.a(x, y, scratch.a);
  if (field.b) field.b(x, y, scratch.b);
  for (std::size_t i = 0; i < d; ++i) {
    x_out[i] = x[i] + inv_n * scratch.a[i] + inv_sqrt_n * scratch.b[i];
  }
}

bool all_finite(std::span<const double> x) {
  return std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); });
}

void check_dim(std::span<const double> x, std::size_t d, const char* what) {
  if (x.size() != d) {
    std::ostringstream msg;
    msg << what << ": expected state of dimension " << d << ", got " << x.size();
    throw ArgumentError(msg.str());
  }
}

// Interpolation weights over a probe set; returns (probe index, weight) pairs.
class ProbeInterpolator {
 public:
  explicit ProbeInterpolator(std::vector<Vec> probes) : probes_(std::move(probes)) {
    if (probes_.empty()) throw ArgumentError("center_field: at least one probe required");
    if (probes_.front().size() == 1) {
      order_.resize(probes_.size());
      std::iota(order_.begin(), order_.end(), std::size_t{0});
      std::sort(order_.begin(), order_.end(),
                [&](std::size_t i, std::size_t j) { return probes_[i][0] < probes_[j][0]; });
    }
  }

  void weights(std::span<const double> x,
               std::vector<std::pair<std::size_t, double>>& out) const {
    out.clear();
    if (probes_.size() == 1) {
      out.emplace_back(0, 1.0);
    } else if (!order_.empty()) {
      const double t = x[0];
      const auto& lo = probes_[order_.front()];
      const auto& hi = probes_[order_.back()];
      if (t <= lo[0]) {
        out.emplace_back(order_.front(), 1.0);
        return;
      }
      if (t >= hi[0]) {
        out.emplace_back(order_.back(), 1.0);
        return;
      }
      auto it = std::upper_bound(order_.begin(), order_.end(), t, [&](double v, std::size_t i) {
        return v < probes_[i][0];
      });
      const std::size_t right = *it;
      const std::size_t left = *(it - 1);
      const double x0 = probes_[left][0];
      const double x1 = probes_[right][0];
      const double w = (t - x0) / (x1 - x0);
      out.emplace_back(left, 1.0 - w);
      out.emplace_back(right, w);
    } else {
      double total = 0.0;
      for (std::size_t p = 0; p < probes_.size(); ++p) {
        double dist2 = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
          const double diff = x[i] - probes_[p][i];
          dist2 += diff * diff;
        }
        if (dist2 < 1e-28) {
          out.assign(1, {p, 1.0});
          return;
        }
        out.emplace_back(p, 1.0 / dist2);
        total += 1.0 / dist2;
      }
      for (auto& [p, w] : out) w /= total;
    }
  }

 private:
  std::vector<Vec> probes_;
  std::vector<std::size_t> order_;
};

}  // namespace

SlowField ProductField::as_slow_field() const {
  SlowField field;
  field.dim = d;
  const ProductField self = *this;
  if (e > 0 && g && u.eval) {
    field.a = [self](std::span<const double> x, double y, std::span<double> out) {
      thread_local Vec gbuf, ubuf;
      gbuf.resize(self.d * self.e);
      ubuf.resize(self.e);
      self.g(x, gbuf);
      self.u.eval(y, ubuf);
      for (std::size_t i = 0; i < self.d; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < self.e; ++j) s += gbuf[i * self.e + j] * ubuf[j];
        out[i] = s;
      }
    };
  }
  if (m > 0 && h && v.eval) {
    field.b = [self](std::span<const double> x, double y, std::span<double> out) {
      thread_local Vec hbuf, vbuf;
      hbuf.resize(self.d * self.m);
      vbuf.resize(self.m);
      self.h(x, hbuf);
      self.v.eval(y, vbuf);
      for (std::size_t i = 0; i < self.d; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < self.m; ++j) s += hbuf[i * self.m + j] * vbuf[j];
        out[i] = s;
      }
    };
    if (dh) {
      field.db = [self](std::span<const double> x, double y, std::span<double> out) {
        thread_local Vec dbuf, vbuf;
        dbuf.resize(self.d * self.d * self.m);
        vbuf.resize(self.m);
        self.dh(x, dbuf);
        self.v.eval(y, vbuf);
        for (std::size_t ik = 0; ik < self.d * self.d; ++ik) {
          double s = 0.0;
          for (std::size_t j = 0; j < self.m; ++j) s += dbuf[ik * self.m + j] * vbuf[j];
          out[ik] = s;
        }
      };
    }
  }
  return field;
}

CadlagGridPath::CadlagGridPath(std::size_t n, std::size_t dim)
    : n_(n), dim_(dim), data_((n + 1) * dim, 0.0) {}

CadlagGridPath::CadlagGridPath(std::size_t n, std::size_t dim, std::vector<double> data)
    : n_(n), dim_(dim), data_(std::move(data)) {
  if (data_.size() != (n + 1) * dim) {
    throw ArgumentError("CadlagGridPath: data size must be (n+1)*dim");
  }
}

std::span<const double> CadlagGridPath::at(double t) const {
  if (!(t >= 0.0 && t <= 1.0)) throw DomainError("CadlagGridPath::at: t must lie in [0,1]");
  const auto k = std::min(n_, static_cast<std::size_t>(std::floor(t * static_cast<double>(n_))));
  return value(k);
}

Vec fs_step(std::span<const double> x, double y, std::size_t n, const SlowField& field) {
  if (n == 0) throw ArgumentError("fs_step: n must be positive");
  check_dim(x, field.dim, "fs_step");
  StepScratch scratch;
  Vec out(field.dim);
  const double nn = static_cast<double>(n);
  fs_step_into(x, y, 1.0 / nn, 1.0 / std::sqrt(nn), field, scratch, out);
  if (!all_finite(out)) {
    throw NumericError("fs_step: non-finite state", -1, Vec(x.begin(), x.end()), y);
  }
  return out;
}

CadlagGridPath run_fast_slow(const SlowField& field, std::span<const double> xi,
                             const Orbit& orbit, std::size_t n) {
  if (n == 0) throw ArgumentError("run_fast_slow: n must be positive");
  if (orbit.size() < n) throw ArgumentError("run_fast_slow: orbit shorter than n");
  if (n > kMaxDensePathCells) {
    throw ArgumentError("run_fast_slow: n exceeds 2^24, use stream_fast_slow");
  }
  check_dim(xi, field.dim, "run_fast_slow");
  const std::size_t d = field.dim;
  CadlagGridPath path(n, d);
  std::copy(xi.begin(), xi.end(), path.value(0).begin());
  StepScratch scratch;
  const double nn = static_cast<double>(n);
  const double inv_n = 1.0 / nn;
  const double inv_sqrt_n = 1.0 / std::sqrt(nn);
  for (std::size_t k = 0; k < n; ++k) {
    auto next = path.value(k + 1);
    fs_step_into(path.value(k), orbit[k], inv_n, inv_sqrt_n, field, scratch, next);
    if (!all_finite(next)) {
      const auto prev = path.value(k);
      throw NumericError("run_fast_slow: non-finite state", static_cast<std::int64_t>(k),
                         Vec(prev.begin(), prev.end()), orbit[k]);
    }
  }
  return path;
}

Vec stream_fast_slow(const SlowField& field, std::span<const double> xi,
                     OrbitCursor& orbit, std::size_t n,
                     const std::function<void(std::size_t, std::span<const double>)>& observer) {
  if (n == 0) throw ArgumentError("stream_fast_slow: n must be positive");
  check_dim(xi, field.dim, "stream_fast_slow");
  Vec x(xi.begin(), xi.end());
  Vec next(x.size());
  StepScratch scratch;
  const double nn = static_cast<double>(n);
  const double inv_n = 1.0 / nn;
  const double inv_sqrt_n = 1.0 / std::sqrt(nn);
  if (observer) observer(0, x);
  for (std::size_t k = 0; k < n; ++k) {
    const double y = orbit.next();
    fs_step_into(x, y, inv_n, inv_sqrt_n, field, scratch, next);
    if (!all_finite(next)) {
      throw NumericError("stream_fast_slow: non-finite state", static_cast<std::int64_t>(k), x, y);
    }
    x.swap(next);
    if (observer) observer(k + 1, x);
  }
  return x;
}

SlowField center_field(const SlowField& raw, const Orbit& reference,
                       std::span<const Vec> probes, const CenterOptions& options) {
  if (reference.size() < options.min_orbit_length) {
    throw ArgumentError("center_field: reference orbit shorter than the configured minimum");
  }
  const std::size_t d = raw.dim;
  for (const auto& p : probes) check_dim(p, d, "center_field probe");
  if (!raw.b) return raw;

  std::vector<Vec> mean_b(probes.size(), Vec(d, 0.0));
  std::vector<Vec> mean_db(probes.size(), Vec(d * d, 0.0));
  Vec bbuf(d), dbbuf(d * d);
  const double inv_len = 1.0 / static_cast<double>(reference.size());
  for (std::size_t p = 0; p < probes.size(); ++p) {
    for (double y : reference.values()) {
      raw.b(probes[p], y, bbuf);
      for (std::size_t i = 0; i < d; ++i) mean_b[p][i] += bbuf[i];
      if (raw.db) {
        raw.db(probes[p], y, dbbuf);
        for (std::size_t i = 0; i < d * d; ++i) mean_db[p][i] += dbbuf[i];
      }
    }
    for (auto& v : mean_b[p]) v *= inv_len;
    for (auto& v : mean_db[p]) v *= inv_len;
  }

  auto interp = std::make_shared<ProbeInterpolator>(std::vector<Vec>(probes.begin(), probes.end()));
  SlowField out = raw;
  out.b = [b = raw.b, interp, mean_b](std::span<const double> x, double y, std::span<double> o) {
    thread_local std::vector<std::pair<std::size_t, double>> w;
    b(x, y, o);
    interp->weights(x, w);
    for (const auto& [p, wt] : w) {
      for (std::size_t i = 0; i < o.size(); ++i) o[i] -= wt * mean_b[p][i];
    }
  };
  if (raw.db) {
    out.db = [db = raw.db, interp, mean_db](std::span<const double> x, double y,
                                            std::span<double> o) {
      thread_local std::vector<std::pair<std::size_t, double>> w;
      db(x, y, o);
      interp->weights(x, w);
      for (const auto& [p, wt] : w) {
        for (std::size_t i = 0; i < o.size(); ++i) o[i] -= wt * mean_db[p][i];
      }
    };
  }
  return out;
}

Vec birkhoff_mean(const VectorObservable& v, const Orbit& orbit) {
  if (orbit.size() == 0) throw ArgumentError("birkhoff_mean: empty orbit");
  std::vector<detail::RunningMean> acc(v.dim);
  Vec buf(v.dim);
  for (double y : orbit.values()) {
    v.eval(y, buf);
    for (std::size_t i = 0; i < v.dim; ++i) acc[i].add(buf[i]);
  }
  Vec mean(v.dim);
  for (std::size_t i = 0; i < v.dim; ++i) mean[i] = acc[i].mean();
  return mean;
}

ProductField center_product(const ProductField& raw, const Orbit& reference,
                            const CenterOptions& options) {
  if (reference.size() < options.min_orbit_length) {
    throw ArgumentError("center_product: reference orbit shorter than the configured minimum");
  }
  ProductField out = raw;
  if (raw.m == 0 || !raw.v.eval) return out;
  const Vec mean = birkhoff_mean(raw.v, reference);
  out.v.eval = [v = raw.v.eval, mean](double y, std::span<double> o) {
    v(y, o);
    for (std::size_t i = 0; i < o.size(); ++i) o[i] -= mean[i];
  };
  return out;
}

double centering_residual(const SlowField& field, const Orbit& reference,
                          std::span<const Vec> probes) {
  if (!field.b) return 0.0;
  const std::size_t d = field.dim;
  Vec buf(d);
  double worst = 0.0;
  for (const auto& x : probes) {
    check_dim(x, d, "centering_residual probe");
    Vec sum(d, 0.0);
    for (double y : reference.values()) {
      field.b(x, y, buf);
      for (std::size_t i = 0; i < d; ++i) sum[i] += buf[i];
    }
    for (double s : sum) {
      worst = std::max(worst, std::abs(s) / static_cast<double>(reference.size()));
    }
  }
  return worst;
}

double drift_average_deviation(const SlowField& field, std::span<const double> x,
                               const Orbit& orbit, std::size_t n, const StateFn& abar) {
  if (n == 0) throw ArgumentError("drift_average_deviation: n must be positive");
  if (orbit.size() < n) throw ArgumentError("drift_average_deviation: orbit shorter than n");
  const std::size_t d = field.dim;
  check_dim(x, d, "drift_average_deviation");
  std::vector<detail::RunningMean> acc(d);
  Vec buf(d), target(d, 0.0);
  if (field.a) {
    for (std::size_t k = 0; k < n; ++k) {
      field.a(x, orbit[k], buf);
      for (std::size_t i = 0; i < d; ++i) acc[i].add(buf[i]);
    }
  }
  if (abar) abar(x, target);
  double dev2 = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const double diff = acc[i].mean() - target[i];
    dev2 += diff * diff;
  }
  return std::sqrt(dev2);
}

}  // namespace homog
