#pragma once

// Summary scores relating a site's observed residue types to BLOSUM62.
// With A the set of residues present in the pooled counts z and n = |A|:
//   independent = (1 - n/8) * sum_{s in A} S[s][s] z_s / sum_{s in A} z_s
//   pairwise    = (n/8) * sum_{s<t in A} S[s][t] (z_s + z_t) / sum_{s<t in A} (z_s + z_t)
// The pairwise score of a single-type site is 0.

#include <cstddef>
#include <span>
#include <vector>

#include "sigsite/blosum_priors.hpp"
#include "sigsite/site_counts.hpp"

namespace sigsite {

struct SiteScore {
  std::size_t site_index = 0;
  double independent_score = 0.0;
  double pairwise_score = 0.0;
  int n_types = 0;
};

double independent_score(const SiteCounts& site, const ScoreMatrix& scores);
double pairwise_score(const SiteCounts& site, const ScoreMatrix& scores);
SiteScore score_site(const SiteCounts& site, const ScoreMatrix& scores);
std::vector<SiteScore> score_sites(std::span<const SiteCounts> sites, const ScoreMatrix& scores);

}  // namespace sigsite
