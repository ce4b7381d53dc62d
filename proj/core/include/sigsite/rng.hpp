#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>
#include <string_view>

namespace sigsite {

// SplitMix64 finalizer; a bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t hash_label(std::string_view label) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (char c : label) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Derives an independent key from a run seed, a label and a list of indices.
// Every random consumer in the library draws from its own labeled key, so
// the order in which sites or chains are processed never changes a draw.
inline std::uint64_t derive_key(std::uint64_t seed, std::string_view label,
                                std::initializer_list<std::uint64_t> idx = {}) noexcept {
  std::uint64_t k = mix64(seed ^ mix64(hash_label(label)));
  for (auto i : idx) k = mix64(k ^ mix64(i + 0x632be59bd9b4e019ULL));
  return k;
}

// Counter-based stream: output n is mix64(key + n * golden). Satisfies
// UniformRandomBitGenerator so it plugs into <random> distributions.
class Stream {
 public:
  using result_type = std::uint64_t;

  explicit Stream(std::uint64_t key) noexcept : key_(key) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept {
    return mix64(key_ + (counter_++) * 0x9e3779b97f4a7c15ULL);
  }

  // Uniform double in the open interval (0, 1).
  double uniform() noexcept {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
  }

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace sigsite
