#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

namespace sketchkit {

inline uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derives an independent stream key from a parent seed and up to two labels.
inline uint64_t derive_seed(uint64_t seed, uint64_t a, uint64_t b = 0) {
  return mix64(mix64(seed ^ mix64(a + 0x632be59bd9b4e019ULL)) ^ mix64(b + 0x8cb92ba72f3d8dd7ULL));
}

// Counter-based splitmix stream. Satisfies UniformRandomBitGenerator so the
// std distributions can draw from it; cheap to create per column or per row.
class Stream {
 public:
  using result_type = uint64_t;

  explicit Stream(uint64_t key) : state_(key) {}
  Stream(uint64_t seed, uint64_t a, uint64_t b = 0) : state_(derive_seed(seed, a, b)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    state_ += 0x9e3779b97f4a7c15ULL;
    uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  // Uniform in (0, 1], safe for log().
  double uniform_pos() { return 1.0 - uniform(); }

  uint64_t below(uint64_t n) {
    return static_cast<uint64_t>((static_cast<unsigned __int128>((*this)()) * n) >> 64);
  }

  double sign() { return ((*this)() >> 63) ? 1.0 : -1.0; }

  double normal() { return dist_(*this); }

 private:
  uint64_t state_;
  std::normal_distribution<double> dist_{0.0, 1.0};
};

}  // namespace sketchkit
