#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string_view>

namespace sigsite {

// The 20 canonical amino acids in alphabetical one-letter order. Every
// per-residue vector in the library is indexed by this ordering.
class AminoAlphabet {
 public:
  static constexpr std::size_t kSize = 20;
  static constexpr std::string_view kLetters = "ACDEFGHIKLMNPQRSTVWY";

  // Case-insensitive lookup; nullopt for anything that is not one of the 20.
  static std::optional<std::size_t> index(char letter) noexcept;
  static char letter(std::size_t index) { return kLetters.at(index); }
};

// Number of unordered pairs {s,t}, s<t, over an alphabet of size n.
constexpr std::size_t pair_count(std::size_t n) noexcept { return n * (n - 1) / 2; }

// Row-major position of the unordered pair {s,t} (s != t) among the
// pair_count(n) pairs (0,1), (0,2), ..., (n-2,n-1).
constexpr std::size_t pair_index(std::size_t s, std::size_t t, std::size_t n) noexcept {
  if (s > t) {
    auto tmp = s;
    s = t;
    t = tmp;
  }
  return s * n - s * (s + 1) / 2 + (t - s - 1);
}

}  // namespace sigsite
