#pragma once

#include <array>
#include <cstdint>

namespace spoofguard {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
///
/// Output is a pure function of (key, counter), so any draw can be
/// regenerated without replaying the sequence that preceded it.
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  explicit Philox4x32(std::uint64_t seed)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

  Counter operator()(Counter ctr) const;

 private:
  Key key_;
};

/// Independent noise substreams, one per stochastic channel of the loop.
enum class NoiseStream : std::uint32_t { Process = 0, Gps = 1, Imu = 2, Rssi = 3, Test = 15 };

/// Standard-normal draws addressed by (stream, step, index).
class NoiseSource {
 public:
  explicit NoiseSource(std::uint64_t seed) : philox_(seed) {}

  /// The `index`-th N(0,1) variate of `stream` at time step `step`.
  double normal(NoiseStream stream, std::uint64_t step, std::uint32_t index) const;

  /// Uniform (0, 1) variate, two 32-bit words per double.
  double uniform(NoiseStream stream, std::uint64_t step, std::uint32_t index) const;

 private:
  Philox4x32 philox_;
};

}  // namespace spoofguard
