#include "sigsite/blosum_priors.hpp"

#include <cmath>
#include <string>

#include "sigsite/error.hpp"
#include "text_util.hpp"

namespace sigsite {

namespace detail {
extern const std::string_view kBundledBlosum62;
extern const std::string_view kBundledBackground;
}  // namespace detail

namespace {

std::size_t residue_index(std::string_view token, std::string_view what) {
  if (token.size() != 1) {
    throw FormatError("expected a residue letter, got '" + std::string(token) + "' in " +
                      std::string(what));
  }
  auto idx = AminoAlphabet::index(token[0]);
  if (!idx) {
    throw FormatError("unknown residue '" + std::string(token) + "' in " + std::string(what));
  }
  return *idx;
}

std::vector<std::string_view> content_lines(std::string_view text) {
  std::vector<std::string_view> out;
  for (auto line : detail::split_lines(text)) {
    if (detail::is_blank(line) || line.front() == '#') continue;
    out.push_back(line);
  }
  return out;
}

}  // namespace

bool ScoreMatrix::is_symmetric() const noexcept {
  for (std::size_t s = 0; s < kAminoCount; ++s) {
    for (std::size_t t = s + 1; t < kAminoCount; ++t) {
      if (score[s][t] != score[t][s]) return false;
    }
  }
  return true;
}

ScoreMatrix parse_score_matrix(std::string_view text) {
  constexpr std::string_view what = "score matrix";
  const auto lines = content_lines(text);
  if (lines.size() != kAminoCount + 1) {
    throw FormatError("score matrix must have a header row and 20 data rows, found " +
                      std::to_string(lines.size()) + " lines");
  }
  const auto header = detail::split_ws(lines[0]);
  if (header.size() != kAminoCount) {
    throw FormatError("score matrix header must list 20 residues");
  }
  std::array<std::size_t, kAminoCount> col{};
  std::array<bool, kAminoCount> seen_col{};
  for (std::size_t j = 0; j < kAminoCount; ++j) {
    col[j] = residue_index(header[j], what);
    if (seen_col[col[j]]) throw FormatError("duplicate residue in score matrix header");
    seen_col[col[j]] = true;
  }

  ScoreMatrix m;
  std::array<bool, kAminoCount> seen_row{};
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto fields = detail::split_ws(lines[r]);
    if (fields.size() != kAminoCount + 1) {
      throw FormatError("score matrix row " + std::to_string(r) + " must have 21 fields");
    }
    const auto row = residue_index(fields[0], what);
    if (seen_row[row]) throw FormatError("duplicate residue row in score matrix");
    seen_row[row] = true;
    for (std::size_t j = 0; j < kAminoCount; ++j) {
      m.score[row][col[j]] = static_cast<int>(detail::parse_int(fields[j + 1], what));
    }
  }
  if (!m.is_symmetric()) throw StructureError("score matrix is not symmetric");
  return m;
}

ScoreMatrix load_score_matrix(const std::filesystem::path& path) {
  return parse_score_matrix(detail::read_file(path));
}

BackgroundFrequencies parse_background(std::string_view text) {
  constexpr std::string_view what = "background frequencies";
  const auto lines = content_lines(text);
  if (lines.size() != kAminoCount) {
    throw FormatError("background table must have 20 lines, found " +
                      std::to_string(lines.size()));
  }
  BackgroundFrequencies bg;
  std::array<bool, kAminoCount> seen{};
  for (auto line : lines) {
    const auto fields = detail::split_ws(line);
    if (fields.size() != 2) throw FormatError("background line must be 'letter frequency'");
    const auto s = residue_index(fields[0], what);
    if (seen[s]) throw FormatError("duplicate residue in background table");
    seen[s] = true;
    const double f = detail::parse_double(fields[1], what);
    if (!(f > 0.0) || !std::isfinite(f)) {
      throw DomainError("background frequency for " + std::string(fields[0]) +
                        " must be positive");
    }
    bg.freq[s] = f;
  }
  double total = 0.0;
  for (double f : bg.freq) total += f;
  for (double& f : bg.freq) f /= total;
  return bg;
}

BackgroundFrequencies load_background(const std::filesystem::path& path) {
  return parse_background(detail::read_file(path));
}

const ScoreMatrix& bundled_blosum62() {
  static const ScoreMatrix m = parse_score_matrix(detail::kBundledBlosum62);
  return m;
}

const BackgroundFrequencies& bundled_background() {
  static const BackgroundFrequencies bg = parse_background(detail::kBundledBackground);
  return bg;
}

PairFrequencies scores_to_pair_frequencies(const ScoreMatrix& scores,
                                           const BackgroundFrequencies& background) {
  if (!scores.is_symmetric()) throw StructureError("score matrix is not symmetric");
  for (double f : background.freq) {
    if (!(f > 0.0)) throw DomainError("background frequencies must be positive");
  }
  PairFrequencies out;
  for (std::size_t s = 0; s < kAminoCount; ++s) {
    for (std::size_t t = 0; t < kAminoCount; ++t) {
      out.p[s][t] = background.freq[s] * background.freq[t] *
                    std::exp2(0.5 * static_cast<double>(scores.score[s][t]));
    }
  }
  return out;
}

std::vector<double> derive_q(const PairFrequencies& pairs) {
  std::vector<double> q(kAminoCount, 0.0);
  for (std::size_t s = 0; s < kAminoCount; ++s) {
    for (std::size_t t = 0; t < kAminoCount; ++t) q[s] += pairs.p[s][t];
  }
  double total = 0.0;
  for (double v : q) total += v;
  for (double& v : q) v /= total;
  return q;
}

std::vector<double> derive_q_pair(const PairFrequencies& pairs) {
  std::vector<double> qp(kAminoPairCount, 0.0);
  double total = 0.0;
  for (std::size_t s = 0; s < kAminoCount; ++s) {
    for (std::size_t t = s + 1; t < kAminoCount; ++t) {
      qp[pair_index(s, t, kAminoCount)] = pairs.p[s][t];
      total += pairs.p[s][t];
    }
  }
  for (double& v : qp) v /= total;
  return qp;
}

PriorVectors derive_priors(const ScoreMatrix& scores, const BackgroundFrequencies& background) {
  const auto pairs = scores_to_pair_frequencies(scores, background);
  return PriorVectors{derive_q(pairs), derive_q_pair(pairs)};
}

const PriorVectors& bundled_priors() {
  static const PriorVectors priors = derive_priors(bundled_blosum62(), bundled_background());
  return priors;
}

}  // namespace sigsite
