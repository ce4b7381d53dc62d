#pragma once

// Synthetic data and brute-force reference computations. The oracles here
// deliberately avoid the numerical kernels of the modules they check (only
// std::lgamma is shared), so they can be used to audit any site by hand.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "sigsite/site_counts.hpp"

namespace sigsite {

struct SimConfig {
  double pi0 = 0.9;
  double beta0 = 0.3;
  double betaT = 0.3;
  double betaN = 0.07;
  std::vector<double> q;  // alphabet simplex; empty means the bundled BLOSUM62 q
  std::size_t sites = 2000;
  int n1 = 5;
  int n2 = 3;
  std::uint64_t seed = 1;
};

struct SyntheticDataset {
  std::vector<SiteCounts> sites;
  std::vector<bool> is_null;
  SimConfig config;
};

// Mixture of the null (shared p ~ Dirichlet(beta0 q)) and alternative
// (p_T ~ Dirichlet(betaT q), p_NT ~ Dirichlet(betaN q)) generative models.
// Site i draws only from its own substream, keyed by (seed, i).
SyntheticDataset simulate_dataset(const SimConfig& config);

// Dirichlet(alpha) draw through log-gamma variates; stable for shapes far
// below one, where plain gamma draws underflow to zero.
std::vector<double> sample_dirichlet(std::span<const double> alpha, std::uint64_t key);

// Multinomial(n, p) draw by sequential binomial conditionals.
std::vector<int> sample_multinomial(int n, std::span<const double> p, std::uint64_t key);

// Calls `visit(row1, probability)` for every 2 x S table with first-row sum
// row_sums[0] and the given column sums. Probabilities are hypergeometric,
// computed from exact 64-bit binomial coefficients. Throws ResourceError
// when more than `budget` candidate tables would be visited.
void enumerate_fixed_margin_tables(std::span<const int> row_sums, std::span<const int> col_sums,
                                   const std::function<void(std::span<const int>, double)>& visit,
                                   std::uint64_t budget = 100'000'000);

// Freeman-Halton p-value by full enumeration.
double fisher_exact_oracle(std::span<const int> row1, std::span<const int> row2,
                           double tie_tolerance = 1e-7);

// Reduced MRF model for quadrature: alphabet of two or three residues.
struct ReducedMrfModel {
  std::vector<double> q;
  std::vector<double> q_pair;
  double beta1 = 1000.0;
  double beta2 = 10000.0;
  double delta = 0.1;
  std::vector<SiteCounts> sites;
  double pi0 = 0.5;
  int grid_points = 400;  // per dimension
  int bins = 50;          // histogram of the first single-residue probability
};

struct GridPosterior {
  // Posterior mass of p_1 over `bins` equal-width bins of (0, 1), one
  // histogram per chain: null (pooled counts), T (x), NT (y).
  std::vector<double> hist_null;
  std::vector<double> hist_T;
  std::vector<double> hist_NT;
  std::vector<double> log_f0;  // log E[PL(z_i)] under the null posterior
  std::vector<double> log_f1;  // log E[PL(x_i)] + log E[PL(y_i)]
  std::vector<double> lfdr;
};

// Quadrature of pseudo-likelihood x Dirichlet prior over a midpoint grid.
// Throws ConfigError for grids coarser than 50 points per dimension or
// alphabets other than two or three residues.
GridPosterior grid_posterior_oracle(const ReducedMrfModel& model);

// 812 sites with n1 = 5, n2 = 3: the 26 reference signature-site count
// configurations at their alignment positions, plus filler drawn from the
// mixture with pi0 = 0.955 and scales (0.2596, 0.2730, 0.0648) over the
// bundled q. Positions run over 1..900 with 88 positions left out, as if
// dropped for missing residues.
std::vector<SiteCounts> make_reference_toy(std::uint64_t seed = 20170101);

// Reference signature sites: alignment position, group counts, and the
// Fisher p-value and lfdr reported for them.
struct ReferenceSite {
  std::size_t position;
  const char* transmitted;      // e.g. "D1 K1 F1 P2"
  const char* non_transmitted;  // e.g. "H3"
  double fisher_p;
  double lfdr;
};
std::span<const ReferenceSite> reference_sites();
SiteCounts reference_site_counts(const ReferenceSite& site);

}  // namespace sigsite
