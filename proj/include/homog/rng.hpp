#pragma once

#include <array>
#include <cstdint>

namespace homog {

/// Philox4x32-10 block function (Salmon et al., "Parallel random numbers:
/// as easy as 1, 2, 3"). Maps a 128-bit counter and a 64-bit key to 128
/// pseudo-random bits.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// SplitMix64 finalizer, used to derive stream identifiers.
std::uint64_t mix64(std::uint64_t z);

/// Stream domains. Each task index gets one independent stream per domain so
/// that adding draws for one purpose never shifts the draws of another.
enum class StreamDomain : std::uint64_t {
  InitialCondition = 1,
  OrbitBits = 2,
  EulerMaruyama = 3,
  Synthetic = 4,
  Reference = 5,
};

/// Counter-based random stream. The full output sequence is a pure function
/// of (seed, stream id), so a task can be replayed on any thread.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream);

  static RngStream for_task(std::uint64_t seed, StreamDomain domain,
                            std::uint64_t task);

  std::uint64_t next_u64();
  /// Uniform on [0,1) with 53 random bits.
  double uniform();
  /// Standard normal via Box-Muller; the second variate is cached.
  double normal();

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int available_ = 0;  // 64-bit words left in buffer_
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace homog
