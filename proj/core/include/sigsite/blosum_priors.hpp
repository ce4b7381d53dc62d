#pragma once

// BLOSUM62-derived Dirichlet prior means.
//
// Target frequencies are recovered from half-bit scores by inverting
//   S[s][t] = 2 log2(p[s][t] / (f_s f_t)),   i.e.  p[s][t] = f_s f_t 2^(S[s][t]/2).
// The single-residue prior mean q_s is the (renormalized) row sum of p, and the
// pairwise prior mean is p restricted to unordered pairs s<t, normalized to
// the 190-simplex. Diagonal entries p[s][s] feed q but not q_pair.

#include <array>
#include <filesystem>
#include <string_view>
#include <vector>

#include "sigsite/alphabet.hpp"

namespace sigsite {

constexpr std::size_t kAminoCount = AminoAlphabet::kSize;
constexpr std::size_t kAminoPairCount = pair_count(kAminoCount);

template <typename T>
using AminoMatrix = std::array<std::array<T, kAminoCount>, kAminoCount>;

struct ScoreMatrix {
  AminoMatrix<int> score{};

  int operator()(std::size_t s, std::size_t t) const { return score[s][t]; }
  bool is_symmetric() const noexcept;
};

struct BackgroundFrequencies {
  std::array<double, kAminoCount> freq{};
};

struct PairFrequencies {
  AminoMatrix<double> p{};

  double operator()(std::size_t s, std::size_t t) const { return p[s][t]; }
};

struct PriorVectors {
  std::vector<double> q;       // 20 entries, sums to 1
  std::vector<double> q_pair;  // 190 entries indexed by pair_index(s,t,20)
};

// Parses a whitespace-delimited score table whose first row and first column
// carry residue letters (any order; rows/columns are mapped to the canonical
// alphabet). Throws FormatError on a malformed table, StructureError if the
// table is not symmetric.
ScoreMatrix parse_score_matrix(std::string_view text);
ScoreMatrix load_score_matrix(const std::filesystem::path& path);

// Parses "letter<ws>frequency" lines and renormalizes the frequencies to sum
// to one. Throws FormatError / DomainError.
BackgroundFrequencies parse_background(std::string_view text);
BackgroundFrequencies load_background(const std::filesystem::path& path);

// Tables compiled into the library.
const ScoreMatrix& bundled_blosum62();
const BackgroundFrequencies& bundled_background();

PairFrequencies scores_to_pair_frequencies(const ScoreMatrix& scores,
                                           const BackgroundFrequencies& background);

std::vector<double> derive_q(const PairFrequencies& pairs);
std::vector<double> derive_q_pair(const PairFrequencies& pairs);

// Full pipeline over the bundled tables.
PriorVectors derive_priors(const ScoreMatrix& scores, const BackgroundFrequencies& background);
const PriorVectors& bundled_priors();

}  // namespace sigsite
