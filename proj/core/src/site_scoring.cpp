#include "sigsite/site_scoring.hpp"

#include "sigsite/error.hpp"

namespace sigsite {

namespace {

constexpr double kTypeScale = 8.0;

std::vector<int> checked_pooled(const SiteCounts& site) {
  if (site.x.size() != kAminoCount || site.y.size() != kAminoCount) {
    throw DomainError("site scores need the full 20-letter alphabet");
  }
  auto z = site.pooled();
  int total = 0;
  for (int c : z) total += c;
  if (total <= 0) throw DomainError("site has no residues");
  return z;
}

int types_of(const std::vector<int>& z) {
  int n = 0;
  for (int c : z) n += c > 0 ? 1 : 0;
  return n;
}

}  // namespace

double independent_score(const SiteCounts& site, const ScoreMatrix& scores) {
  const auto z = checked_pooled(site);
  const int n = types_of(z);
  double num = 0.0;
  double den = 0.0;
  for (std::size_t s = 0; s < kAminoCount; ++s) {
    if (z[s] == 0) continue;
    num += scores(s, s) * static_cast<double>(z[s]);
    den += z[s];
  }
  return (1.0 - n / kTypeScale) * num / den;
}

double pairwise_score(const SiteCounts& site, const ScoreMatrix& scores) {
  const auto z = checked_pooled(site);
  const int n = types_of(z);
  if (n < 2) return 0.0;
  double num = 0.0;
  double den = 0.0;
  for (std::size_t s = 0; s < kAminoCount; ++s) {
    if (z[s] == 0) continue;
    for (std::size_t t = s + 1; t < kAminoCount; ++t) {
      if (z[t] == 0) continue;
      const double w = z[s] + z[t];
      num += scores(s, t) * w;
      den += w;
    }
  }
  return (n / kTypeScale) * num / den;
}

SiteScore score_site(const SiteCounts& site, const ScoreMatrix& scores) {
  SiteScore out;
  out.site_index = site.site_index;
  out.n_types = types_of(checked_pooled(site));
  out.independent_score = independent_score(site, scores);
  out.pairwise_score = pairwise_score(site, scores);
  return out;
}

std::vector<SiteScore> score_sites(std::span<const SiteCounts> sites, const ScoreMatrix& scores) {
  std::vector<SiteScore> out;
  out.reserve(sites.size());
  for (const auto& s : sites) out.push_back(score_site(s, scores));
  return out;
}

}  // namespace sigsite
