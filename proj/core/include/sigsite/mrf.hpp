#pragma once

// Pairwise Markov-random-field site model ("Model 2").
//
// For a count vector z over L residues the coordinate-wise conditionals are
//   P(z_s = v | z_-s) = exp(v eta_s) / sum_{u=0..n} exp(u eta_s),
//   eta_s = theta_s + delta * sum_{t != s} theta_st z_t,
// with theta_s = log p_s and theta_st = log p_st, where P_s lies on the
// L-simplex and P_st on the simplex over the L(L-1)/2 unordered pairs. The
// pseudo-likelihood is the product of the L conditionals.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sigsite/site_counts.hpp"

namespace sigsite {

struct MrfParams {
  std::vector<double> ps;   // L
  std::vector<double> pst;  // L(L-1)/2, indexed by pair_index
  double delta = 0.0;

  std::size_t alphabet_size() const noexcept { return ps.size(); }
};

struct MrfHyper {
  double beta1 = 1000.0;
  double beta2 = 10000.0;
  std::vector<double> q;       // prior mean of P_s
  std::vector<double> q_pair;  // prior mean of P_st
};

// log sum_{v=0..n} exp(v eta), stable for any sign of eta.
double log_geometric_sum(double eta, int n);

std::vector<double> conditional_distribution(std::size_t s, std::span<const int> counts,
                                             const MrfParams& params, int count_range_max);
double pseudo_log_likelihood(std::span<const int> counts, const MrfParams& params,
                             int count_range_max);

struct LaplaceInit {
  MrfParams params;        // prior means
  std::vector<double> var_s;
  std::vector<double> var_st;
  double sigma2 = 0.0;     // median of var_s
  double phi2 = 0.0;       // median of var_st
};

// Initial state at the Dirichlet prior means; proposal variances are the
// medians of the Dirichlet marginal variances q(1-q)/(beta+1) of each block.
LaplaceInit laplace_init(const MrfHyper& hyper, double delta = 0.0);

enum class MrfKernel {
  // Per-coordinate random walk whose Beta prior term takes its parameters
  // from the proposal itself (alpha* = beta p*); the block is rescaled to
  // sum to one after every coordinate. Default.
  kAdaptivePrior,
  // Fixed Dirichlet(beta q) prior; the ratio is evaluated at the rescaled
  // block with the Hastings/Jacobian correction of the rescaling move, so
  // the chain targets pseudo-likelihood x prior exactly.
  kExact,
};

struct MrfOptions {
  int iterations = 10000;  // total, burn-in included
  int burn_in = -1;        // -1: iterations / 10
  std::uint64_t seed = 1;
  MrfKernel kernel = MrfKernel::kAdaptivePrior;
  int threads = 1;
};

struct BlockDiagnostics {
  std::uint64_t attempts = 0;
  std::uint64_t accepts = 0;
  std::uint64_t out_of_domain = 0;  // proposals rejected for leaving the domain

  double rate() const noexcept {
    return attempts == 0 ? 0.0 : static_cast<double>(accepts) / static_cast<double>(attempts);
  }
};

struct MrfChain {
  std::size_t alphabet = 0;
  std::size_t samples = 0;
  std::vector<double> ps_samples;   // samples x L
  std::vector<double> pst_samples;  // samples x L(L-1)/2
  BlockDiagnostics single;
  BlockDiagnostics pairwise;

  std::span<const double> ps(std::size_t m) const;
  std::span<const double> pst(std::size_t m) const;
  MrfParams sample(std::size_t m, double delta) const;
  std::vector<double> mean_ps() const;
  std::vector<double> mean_pst() const;
};

// One count vector with its range {0..range} and multiplicity.
struct CountPattern {
  std::vector<int> counts;
  int range = 0;
  double weight = 1.0;
};

// Collapses identical (counts, range) vectors into weighted patterns.
std::vector<CountPattern> make_patterns(std::span<const std::vector<int>> counts,
                                        std::span<const int> ranges);

// Runs one chain of the sampler over the given data.
MrfChain run_chain(std::span<const CountPattern> data, const MrfHyper& hyper, double delta,
                   const LaplaceInit& init, int iterations, int burn_in, std::uint64_t key,
                   MrfKernel kernel);

struct MrfChains {
  MrfChain null_chain;    // pooled counts, range n1+n2
  MrfChain alt_T_chain;   // x, range n1
  MrfChain alt_NT_chain;  // y, range n2
  double sigma2 = 0.0;
  double phi2 = 0.0;
  double delta = 0.0;
  std::vector<std::string> warnings;
};

MrfChains run_mcmc(std::span<const SiteCounts> sites, const MrfHyper& hyper, double delta,
                   const MrfOptions& options);

// pi0 f0 / (pi0 f0 + (1-pi0) f1) with f0 = mean_m PL(z | P^m) and
// f1 = mean_m PL(x | P_T^m) PL(y | P_NT^m).
double lfdr_model2(const SiteCounts& site, const MrfChains& chains, double pi0_hat);
std::vector<double> lfdr_model2(std::span<const SiteCounts> sites, const MrfChains& chains,
                                double pi0_hat);

}  // namespace sigsite
