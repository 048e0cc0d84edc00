#include "homog/maps.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "homog/detail/running_mean.hpp"
#include "homog/errors.hpp"

namespace homog {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kUnderflowGuard = 1e-300;

double shift_value(std::uint64_t window) {
  return static_cast<double>(window >> 11) * 0x1.0p-53;
}

}  // namespace

MapParams::MapParams(double gamma) : gamma_(gamma) {
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    std::ostringstream msg;
    msg << "map parameter gamma must lie in [0,1), got " << gamma;
    throw DomainError(msg.str());
  }
}

Orbit::Orbit(std::vector<double> values, MapParams params,
             OrbitRealization realization)
    : values_(std::move(values)), params_(params), realization_(realization) {}

double lsv_step(double y, double gamma) {
  if (!(y >= 0.0 && y <= 1.0)) {
    std::ostringstream msg;
    msg << "lsv_step: y must lie in [0,1], got " << y;
    throw DomainError(msg.str());
  }
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    std::ostringstream msg;
    msg << "lsv_step: gamma must lie in [0,1), got " << gamma;
    throw DomainError(msg.str());
  }
  double out;
  if (y <= 0.5) {
    if (y < kUnderflowGuard) return 0.0;
    // 2^g y^g = exp(g (ln 2 + ln y)); exactly 1 when g = 0 or y = 1/2.
    out = y * (1.0 + std::exp(gamma * (std::numbers::ln2 + std::log(y))));
  } else {
    out = 2.0 * y - 1.0;
  }
  if (out > 1.0) {
    if (out - 1.0 >= 4.0 * kEps) {
      throw NumericError("lsv_step: result escaped [0,1]", -1, {y}, out);
    }
    out = 1.0;
  }
  return out;
}

Orbit iterate_orbit(double y0, const MapParams& params, std::size_t length) {
  if (length == 0) throw ArgumentError("iterate_orbit: length must be positive");
  std::vector<double> values(length);
  OrbitCursor cursor(y0, params);
  for (auto& v : values) v = cursor.next();
  return Orbit(std::move(values), params, OrbitRealization::FloatingPoint);
}

OrbitCursor::OrbitCursor(double y0, const MapParams& params)
    : params_(params), y_(y0) {
  if (!(y0 >= 0.0 && y0 <= 1.0)) {
    std::ostringstream msg;
    msg << "orbit start must lie in [0,1], got " << y0;
    throw DomainError(msg.str());
  }
}

OrbitCursor::OrbitCursor(const MeasureSpec& measure, const MapParams& params,
                         RngStream bits)
    : params_(params), bits_(bits) {
  if (params.gamma() == 0.0) {
    shift_ = true;
    window_ = bits_.next_u64();
    pending_ = bits_.next_u64();
    pending_left_ = 64;
    for (std::size_t k = 0; k < measure.effective_burn_in(); ++k) advance();
  } else {
    y_ = sample_initial(measure, params, bits_);
  }
}

double OrbitCursor::current() const { return shift_ ? shift_value(window_) : y_; }

void OrbitCursor::advance() {
  if (shift_) {
    window_ = (window_ << 1) | (pending_ >> 63);
    pending_ <<= 1;
    if (--pending_left_ == 0) {
      pending_ = bits_.next_u64();
      pending_left_ = 64;
    }
  } else {
    y_ = lsv_step(y_, params_.gamma());
  }
}

double sample_initial(const MeasureSpec& measure, const MapParams& params,
                      RngStream& rng) {
  const std::size_t burn = measure.effective_burn_in();
  if (params.gamma() == 0.0) {
    // The doubling map pushes Lebesgue forward to itself; burning in means
    // discarding leading binary digits.
    std::uint64_t window = rng.next_u64();
    std::size_t skip = burn;
    while (skip >= 64) {
      window = rng.next_u64();
      skip -= 64;
    }
    if (skip > 0) {
      const std::uint64_t fresh = rng.next_u64();
      window = (window << skip) | (fresh >> (64 - skip));
    }
    return shift_value(window);
  }
  double y = rng.uniform();
  for (std::size_t k = 0; k < burn; ++k) y = lsv_step(y, params.gamma());
  return y;
}

Orbit sample_orbit(const MeasureSpec& measure, const MapParams& params,
                   std::size_t length, RngStream rng) {
  if (length == 0) throw ArgumentError("sample_orbit: length must be positive");
  OrbitCursor cursor(measure, params, rng);
  std::vector<double> values(length);
  for (auto& v : values) v = cursor.next();
  return Orbit(std::move(values), params, cursor.realization());
}

double birkhoff_average(const Observable& v, const Orbit& orbit) {
  if (orbit.size() == 0) throw ArgumentError("birkhoff_average: empty orbit");
  detail::RunningMean acc;
  for (double y : orbit.values()) acc.add(v(y));
  return acc.mean();
}

}  // namespace homog
