#include "spoofguard/rng.hpp"

#include <cmath>
#include <numbers>

namespace spoofguard {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

// 53-bit uniform in the open interval (0, 1).
inline double to_unit(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

}  // namespace

Philox4x32::Counter Philox4x32::operator()(Counter ctr) const {
  Key key = key_;
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

double NoiseSource::normal(NoiseStream stream, std::uint64_t step, std::uint32_t index) const {
  // One Philox block yields a Box-Muller pair; even/odd index picks cos/sin.
  const auto out = philox_({static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(step >> 32),
                            index / 2u, static_cast<std::uint32_t>(stream)});
  const double u1 = to_unit(out[0], out[1]);
  const double u2 = to_unit(out[2], out[3]);
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  return (index % 2u == 0u) ? r * std::cos(theta) : r * std::sin(theta);
}

double NoiseSource::uniform(NoiseStream stream, std::uint64_t step, std::uint32_t index) const {
  const auto out = philox_({static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(step >> 32),
                            index | 0x80000000u, static_cast<std::uint32_t>(stream)});
  return to_unit(out[0], out[1]);
}

}  // namespace spoofguard
