#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace chameleon::rng {

/// splitmix64 step; advances state and returns the next output word.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Derives a child seed from (parent, index). Children of distinct indices
/// are decorrelated, so consumers may draw in any order or in parallel.
inline std::uint64_t derive(std::uint64_t parent, std::uint64_t index) {
  std::uint64_t s = parent;
  std::uint64_t h = splitmix64(s);
  s ^= index + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  return splitmix64(s);
}

inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Deterministic 64-bit stream. Identical output on every platform; no
/// standard-library distributions involved.
class Stream {
public:
  explicit Stream(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() { return splitmix64(state_); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform01() < p; }

  /// Uniform index in [0, n). Multiply-shift bound; bias is O(n / 2^64).
  std::size_t below(std::size_t n) {
    return static_cast<std::size_t>(
        (static_cast<unsigned __int128>(next()) * static_cast<unsigned __int128>(n)) >> 64);
  }

  template <typename T>
  void shuffle(std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::swap(values[i - 1], values[below(i)]);
    }
  }

private:
  std::uint64_t state_;
};

}  // namespace chameleon::rng
