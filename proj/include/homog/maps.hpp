#pragma once

// Fast dynamics: the Liverani-Saussol-Vaienti family of intermittent maps
//
//   T y = y (1 + 2^g y^g)   for y <= 1/2,
//   T y = 2y - 1            for y >  1/2,
//
// orbit generation, initial-condition sampling and Birkhoff averages.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "homog/observable.hpp"
#include "homog/rng.hpp"

namespace homog {

/// Intermittency exponent. 0 <= gamma < 1 is enforced on construction; an
/// SDE limit additionally needs gamma < 1/2 (see `admits_clt`).
class MapParams {
 public:
  explicit MapParams(double gamma);

  double gamma() const { return gamma_; }
  bool admits_clt() const { return gamma_ < 0.5; }

  friend bool operator==(const MapParams&, const MapParams&) = default;

 private:
  double gamma_;
};

/// How an orbit's floating-point values were produced.
enum class OrbitRealization {
  /// values[k+1] == lsv_step(values[k]) bit for bit.
  FloatingPoint,
  /// Exact binary shift of a random real, truncated to 53 bits (gamma = 0
  /// only); values[k+1] == lsv_step(values[k]) up to 2^-53.
  ExactShift,
};

class Orbit {
 public:
  Orbit(std::vector<double> values, MapParams params,
        OrbitRealization realization = OrbitRealization::FloatingPoint);

  std::span<const double> values() const { return values_; }
  double operator[](std::size_t k) const { return values_[k]; }
  std::size_t size() const { return values_.size(); }
  const MapParams& params() const { return params_; }
  OrbitRealization realization() const { return realization_; }

 private:
  std::vector<double> values_;
  MapParams params_;
  OrbitRealization realization_;
};

struct MeasureSpec {
  enum class Kind { Lebesgue, InvariantViaBurnIn };
  static constexpr std::size_t kDefaultBurnIn = 10000;

  Kind kind = Kind::Lebesgue;
  std::size_t burn_in = kDefaultBurnIn;  // ignored for Lebesgue

  static MeasureSpec lebesgue() { return {Kind::Lebesgue, 0}; }
  static MeasureSpec invariant(std::size_t burn_in = kDefaultBurnIn) {
    return {Kind::InvariantViaBurnIn, burn_in};
  }
  std::size_t effective_burn_in() const {
    return kind == Kind::Lebesgue ? 0 : burn_in;
  }
};

/// One application of the map. Points below 1e-300 are snapped to the fixed
/// point 0; y = 1/2 takes the left branch.
double lsv_step(double y, double gamma);

/// Literal floating-point orbit (y0, T y0, ..., T^{length-1} y0).
Orbit iterate_orbit(double y0, const MapParams& params, std::size_t length);

/// Streaming orbit generator. Holds O(1) state, so arbitrarily long orbits can
/// be consumed without materializing them.
class OrbitCursor {
 public:
  /// Literal floating-point recursion from y0.
  OrbitCursor(double y0, const MapParams& params);
  /// Random start drawn from `measure`. For gamma = 0 the orbit is the exact
  /// binary shift of a uniform real whose bits are drawn lazily from `bits`.
  OrbitCursor(const MeasureSpec& measure, const MapParams& params, RngStream bits);

  double current() const;
  void advance();
  /// Returns the current value, then advances.
  double next() {
    const double y = current();
    advance();
    return y;
  }
  OrbitRealization realization() const {
    return shift_ ? OrbitRealization::ExactShift : OrbitRealization::FloatingPoint;
  }

 private:
  MapParams params_;
  bool shift_ = false;
  double y_ = 0.0;
  // Exact-shift state: window holds the next 64 binary digits of the real,
  // pending the 64 after that.
  std::uint64_t window_ = 0;
  std::uint64_t pending_ = 0;
  int pending_left_ = 0;
  RngStream bits_{0, 0};
};

/// Draw an initial condition: uniform for Lebesgue, uniform pushed forward by
/// `burn_in` map applications otherwise.
double sample_initial(const MeasureSpec& measure, const MapParams& params,
                      RngStream& rng);

/// Orbit of `length` values from a random start (see OrbitCursor).
Orbit sample_orbit(const MeasureSpec& measure, const MapParams& params,
                   std::size_t length, RngStream rng);

/// N^{-1} sum_{k<N} v(orbit[k]).
double birkhoff_average(const Observable& v, const Orbit& orbit);

}  // namespace homog
