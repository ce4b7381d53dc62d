#include "sigsite/alphabet.hpp"

namespace sigsite {

namespace {

constexpr std::array<int, 256> build_index_table() {
  std::array<int, 256> table{};
  for (auto& v : table) v = -1;
  for (std::size_t i = 0; i < AminoAlphabet::kLetters.size(); ++i) {
    const char c = AminoAlphabet::kLetters[i];
    table[static_cast<unsigned char>(c)] = static_cast<int>(i);
    table[static_cast<unsigned char>(c - 'A' + 'a')] = static_cast<int>(i);
  }
  return table;
}

constexpr auto kIndexTable = build_index_table();

}  // namespace

std::optional<std::size_t> AminoAlphabet::index(char letter) noexcept {
  const int i = kIndexTable[static_cast<unsigned char>(letter)];
  if (i < 0) return std::nullopt;
  return static_cast<std::size_t>(i);
}

}  // namespace sigsite
