#pragma once

#include <array>
#include <cstdint>

namespace cqrkit {

/// SplitMix64 mixer, used for seeding and seed derivation.
struct SplitMix64 {
  std::uint64_t state;

  explicit SplitMix64(std::uint64_t seed) : state(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
};

/// xoshiro256++ generator. Kept self-contained so sample streams are
/// identical across standard libraries and platforms.
class Xoshiro256pp {
 public:
  explicit Xoshiro256pp(std::uint64_t seed) {
    SplitMix64 sm(seed);
    for (auto& w : state_) w = sm.next();
    if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[0] = 1;
  }

  explicit Xoshiro256pp(const std::array<std::uint64_t, 4>& state) : state_(state) {
    if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[0] = 1;
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform draw strictly inside (0, 1): midpoints of the 2^53 grid.
  double next_unit_open() {
    return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::array<std::uint64_t, 4> state_;
};

/// Derives an independent generator for (seed, stream). Used so replication
/// workers can draw in parallel while (seed, replication_index) fully
/// determines every sample.
inline Xoshiro256pp make_stream_rng(std::uint64_t seed, std::uint64_t stream) {
  SplitMix64 sm(seed);
  const std::uint64_t base = sm.next();
  return Xoshiro256pp(base + 0x9e3779b97f4a7c15ULL * (stream + 1));
}

}  // namespace cqrkit
