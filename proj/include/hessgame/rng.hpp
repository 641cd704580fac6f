#pragma once
// Deterministic random streams. Every Monte Carlo path owns a stream derived
// from (seed, path_index), so results are bit-identical regardless of how
// paths are distributed over workers. The generator is xoshiro256++ seeded
// through splitmix64; normals come from Box-Muller. No standard-library
// distributions are used because their output is implementation-defined.

#include <cstdint>

namespace hg {

class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed);

  // Stream for one Monte Carlo path: decorrelated from every other
  // path index and from the bare seed stream.
  static RandomStream for_path(std::uint64_t seed, std::uint64_t path_index);

  std::uint64_t next_u64();

  // Uniform on (0, 1), never returning 0 or 1.
  double uniform01();

  // Standard normal via Box-Muller; the second variate of each pair is
  // cached, so draws come in a fixed order.
  double normal();

  void fill_normal(double* dst, int n);

 private:
  RandomStream() = default;

  std::uint64_t s_[4];
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace hg
