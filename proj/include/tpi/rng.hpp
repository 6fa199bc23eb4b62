#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace tpi {

// SplitMix64 (Steele, Lea, Flood 2014). The exact constants are part of the
// reproducibility contract: any reimplementation in another language must
// produce identical streams for identical seeds.
//
//   state += 0x9E3779B97F4A7C15
//   z = state
//   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//   return z ^ (z >> 31)
//
// Bounded draws use plain modulo: next_below(n) = next() % n.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t next_below(std::uint64_t n) { return n == 0 ? 0 : next() % n; }

  // Uniform in [0,1), 53-bit mantissa.
  double next_unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

// FNV-1a, used to fold strings into seed material.
inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::string_view tag) {
  return seed ^ fnv1a64(tag);
}

// Partial Fisher-Yates: deterministically shuffles the first n slots.
template <typename T>
void partial_shuffle(std::vector<T>& items, std::size_t n, SplitMix64& rng) {
  const std::size_t size = items.size();
  if (n > size) n = size;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t j = i + static_cast<std::size_t>(rng.next_below(size - i));
    std::swap(items[i], items[j]);
  }
}

}  // namespace tpi
