#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace kga {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to decorrelate derived seeds.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Derives independent named generators from one root seed. Each consumer asks
/// for its own stream, so adding a consumer never shifts another's sequence.
class SeedStreams {
 public:
  explicit SeedStreams(std::uint64_t root) : root_(root) {}

  std::uint64_t seed_for(std::string_view name) const { return mix64(root_ ^ fnv1a(name)); }
  Rng stream(std::string_view name) const { return Rng(seed_for(name)); }
  std::uint64_t root() const { return root_; }

 private:
  std::uint64_t root_;
};

/// Uniform integer in [0, n). n must be positive.
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

inline double uniform_real(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

}  // namespace kga
