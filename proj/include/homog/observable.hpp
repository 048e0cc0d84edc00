#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace homog {

/// Real-valued function on the fast state space [0,1].
using Observable = std::function<double(double)>;

/// R^m-valued function on [0,1]; `eval` writes `dim` components into `out`.
struct VectorObservable {
  std::size_t dim = 0;
  std::function<void(double y, std::span<double> out)> eval;

  /// Stack scalar observables into one vector observable.
  static VectorObservable stack(std::vector<Observable> components);
  /// Single component as a 1-dimensional vector observable.
  static VectorObservable scalar(Observable v);
};

inline VectorObservable VectorObservable::stack(std::vector<Observable> components) {
  const std::size_t m = components.size();
  return {m, [fs = std::move(components)](double y, std::span<double> out) {
            for (std::size_t i = 0; i < fs.size(); ++i) out[i] = fs[i](y);
          }};
}

inline VectorObservable VectorObservable::scalar(Observable v) {
  return {1, [f = std::move(v)](double y, std::span<double> out) { out[0] = f(y); }};
}

}  // namespace homog
