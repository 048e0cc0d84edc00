#pragma once

#include <cstddef>

namespace homog::detail {

// Incremental mean m_{k+1} = m_k + (x - m_k)/(k+1). Exact for constant input,
// which plain sum/N is not.
class RunningMean {
 public:
  void add(double x) {
    ++count_;
    mean_ += (x - mean_) / static_cast<double>(count_);
  }
  double mean() const { return mean_; }
  std::size_t count() const { return count_; }

 private:
  double mean_ = 0.0;
  std::size_t count_ = 0;
};

}  // namespace homog::detail
