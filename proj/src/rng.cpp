#include "hessgame/rng.hpp"

#include <cmath>

namespace hg {
namespace {

inline std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::uint64_t rotl(std::uint64_t v, int k) {
  return (v << k) | (v >> (64 - k));
}

}  // namespace

RandomStream::RandomStream(std::uint64_t seed) {
  std::uint64_t x = seed;
  for (auto& w : s_) w = splitmix64(x);
}

RandomStream RandomStream::for_path(std::uint64_t seed, std::uint64_t path_index) {
  // Mix the path index into the seed before expansion; splitmix64 of the
  // combined word decorrelates neighboring indices.
  std::uint64_t x = seed;
  std::uint64_t a = splitmix64(x);
  x = a ^ (path_index + 0xD1B54A32D192ED03ULL) * 0x9FB21C651E98DF25ULL;
  RandomStream out;
  for (auto& w : out.s_) w = splitmix64(x);
  out.has_cached_ = false;
  return out;
}

std::uint64_t RandomStream::next_u64() {
  const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double RandomStream::uniform01() {
  // 53-bit mantissa, shifted to the open interval.
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double RandomStream::normal() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_;
  }
  const double u1 = uniform01();
  const double u2 = uniform01();
  const double rad = std::sqrt(-2.0 * std::log(u1));
  const double ang = 6.283185307179586476925286766559 * u2;
  cached_ = rad * std::sin(ang);
  has_cached_ = true;
  return rad * std::cos(ang);
}

void RandomStream::fill_normal(double* dst, int n) {
  for (int i = 0; i < n; ++i) dst[i] = normal();
}

}  // namespace hg
