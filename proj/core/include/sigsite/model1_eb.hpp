#pragma once

// Empirical-Bayes Dirichlet-multinomial mixture ("Model 1").
//
// Under the null both groups share p ~ Dirichlet(beta0 q); under the
// alternative p_T ~ Dirichlet(betaT q) and p_NT ~ Dirichlet(betaN q)
// independently. All marginals are closed-form Dirichlet-multinomial pmfs and
// are evaluated in log-gamma space. Multinomial coefficients are included by
// default so each marginal is a proper pmf; they cancel in the lfdr.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sigsite/site_counts.hpp"

namespace sigsite {

struct Model1Hyper {
  double beta0 = 1.0;
  double betaT = 1.0;
  double betaN = 1.0;
  std::vector<double> q;
};

// log of the Dirichlet-multinomial pmf of `counts` under Dirichlet(beta q).
double log_dirichlet_multinomial(std::span<const int> counts, double beta,
                                 std::span<const double> q, bool include_coefficient = true);

double log_marginal_null(const SiteCounts& site, double beta0, std::span<const double> q,
                         bool include_coefficients = true);
double log_marginal_alt(const SiteCounts& site, double betaT, double betaN,
                        std::span<const double> q, bool include_coefficients = true);

// pi0 f0 / (pi0 f0 + (1 - pi0) f1), computed from log densities.
double lfdr_from_logs(double log_f0, double log_f1, double pi0);
double lfdr_model1(const SiteCounts& site, const Model1Hyper& hyper, double pi0,
                   bool include_coefficients = true);

struct EbFitOptions {
  double beta_min = 1e-6;
  double beta_max = 1e6;
  double rel_tol = 1e-8;
  int grid_points = 121;  // coarse log-scale scan before golden-section search
};

struct ScaleFit {
  double beta = 1.0;
  double log_likelihood = 0.0;
  bool flat = false;  // flat or boundary-maximized likelihood; beta reset to 1
};

// Maximizes sum_i w_i log DM(counts_i | beta q) over beta in the bracket.
// Empty `weights` means unit weights.
ScaleFit fit_dm_scale(std::span<const std::vector<int>> counts, std::span<const double> q,
                      std::span<const double> weights = {}, const EbFitOptions& options = {});

enum class EbMode {
  kMarginal,  // each beta maximizes its own marginal likelihood over all sites
  kMixture,   // EM on the two-component mixture, started from the marginal fit
};

struct EbFit {
  Model1Hyper hyper;
  std::array<ScaleFit, 3> scale_fits{};  // beta0, betaT, betaN
  double pi0_em = 1.0;                   // mixture weight (kMixture only)
  int em_iterations = 0;
  bool flat_warning() const noexcept {
    return scale_fits[0].flat || scale_fits[1].flat || scale_fits[2].flat;
  }
};

// Marginal-likelihood EB fit of beta0 (pooled counts), betaT (x) and betaN (y).
EbFit fit_eb_hyper(std::span<const SiteCounts> sites, std::span<const double> q,
                   const EbFitOptions& options = {});

// EM refinement maximizing sum_i log(pi0 f0 + (1 - pi0) f1) jointly in
// (pi0, beta0, betaT, betaN). The marginal fit is a poor estimator of the
// alternative scales when most sites are null, since every site enters the
// group-wise likelihoods.
EbFit refine_eb_mixture(std::span<const SiteCounts> sites, const EbFit& start,
                        const EbFitOptions& options = {}, int max_iterations = 500,
                        double tolerance = 1e-7);

EbFit fit_eb(std::span<const SiteCounts> sites, std::span<const double> q, EbMode mode,
             const EbFitOptions& options = {});

struct GibbsOptions {
  int iterations = 10000;  // total sweeps, burn-in included
  int burn_in = -1;        // -1: iterations / 10
  std::uint64_t seed = 1;
  double initial_pi0 = 0.5;
  bool keep_indicators = false;  // store every post-burn-in indicator vector
};

struct Model1Fit {
  Model1Hyper hyper;
  std::vector<double> pi0_draws;    // post-burn-in
  double pi0_mean = 0.0;
  std::vector<double> e_mean;       // posterior mean of the latent alternative indicator
  std::vector<double> lfdr;         // averaged over post-burn-in sweeps
  std::vector<double> lfdr_at_mean; // evaluated once at pi0_mean
  std::vector<std::vector<unsigned char>> e_draws;  // only with keep_indicators
};

// Metropolis-within-Gibbs for the null proportion:
//   pi0 | e ~ Beta(K - sum e + 1, sum e + 1),
//   e_i | pi0 ~ Bernoulli(1 - lfdr_i(pi0)).
// Each e_i draw uses its own counter-based substream keyed by (seed, sweep,
// site), so the chain is bit-reproducible for a given seed.
Model1Fit gibbs_pi0(std::span<const SiteCounts> sites, const Model1Hyper& hyper,
                    const GibbsOptions& options);

// Same sampler on precomputed log densities.
Model1Fit gibbs_pi0_from_logs(std::span<const double> log_f0, std::span<const double> log_f1,
                              const GibbsOptions& options);

// Fixed non-informative priors available for comparison: Jeffreys (alpha_j
// = 1/2) and the reference prior (alpha_j = 1/K over the K categories).
Model1Hyper jeffreys_hyper(std::size_t alphabet_size);
Model1Hyper reference_hyper(std::size_t alphabet_size);

}  // namespace sigsite
