#include "sigsite/model1_eb.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>

#include "sigsite/error.hpp"
#include "sigsite/rng.hpp"

namespace sigsite {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log Gamma(a + c) - log Gamma(a) for integer c >= 0.
double log_rising(double a, int c) {
  if (c <= 32) {
    double acc = 0.0;
    for (int k = 0; k < c; ++k) acc += std::log(a + k);
    return acc;
  }
  return std::lgamma(a + c) - std::lgamma(a);
}

void check_q(std::span<const double> q, std::size_t n) {
  if (q.size() != n) throw DomainError("prior mean vector does not match the alphabet size");
}

}  // namespace

double log_dirichlet_multinomial(std::span<const int> counts, double beta,
                                 std::span<const double> q, bool include_coefficient) {
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    throw DomainError("Dirichlet scale beta must be positive and finite");
  }
  check_q(q, counts.size());
  int n = 0;
  double lp = 0.0;
  for (std::size_t j = 0; j < counts.size(); ++j) {
    const int c = counts[j];
    if (c == 0) continue;
    n += c;
    const double a = beta * q[j];
    if (!(a > 0.0)) return kNegInf;
    lp += log_rising(a, c);
    if (include_coefficient) lp -= std::lgamma(c + 1.0);
  }
  lp -= log_rising(beta, n);
  if (include_coefficient) lp += std::lgamma(n + 1.0);
  return lp;
}

double log_marginal_null(const SiteCounts& site, double beta0, std::span<const double> q,
                         bool include_coefficients) {
  const auto z = site.pooled();
  double lp = log_dirichlet_multinomial(z, beta0, q, false);
  if (include_coefficients) {
    // Both groups' multinomial coefficients, consistent with the alternative.
    lp += std::lgamma(site.n1() + 1.0) + std::lgamma(site.n2() + 1.0);
    for (int v : site.x) lp -= std::lgamma(v + 1.0);
    for (int v : site.y) lp -= std::lgamma(v + 1.0);
  }
  return lp;
}

double log_marginal_alt(const SiteCounts& site, double betaT, double betaN,
                        std::span<const double> q, bool include_coefficients) {
  return log_dirichlet_multinomial(site.x, betaT, q, include_coefficients) +
         log_dirichlet_multinomial(site.y, betaN, q, include_coefficients);
}

double lfdr_from_logs(double log_f0, double log_f1, double pi0) {
  if (!(pi0 >= 0.0 && pi0 <= 1.0)) throw DomainError("pi0 must lie in [0, 1]");
  if (pi0 == 1.0) return 1.0;
  if (pi0 == 0.0) return 0.0;
  if (log_f0 == kNegInf && log_f1 == kNegInf) {
    throw DomainError("both mixture densities vanish");
  }
  // lfdr = 1 / (1 + exp(t)), t = log((1-pi0) f1) - log(pi0 f0).
  const double t = std::log1p(-pi0) + log_f1 - std::log(pi0) - log_f0;
  if (t > 0) {
    const double e = std::exp(-t);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(t));
}

double lfdr_model1(const SiteCounts& site, const Model1Hyper& hyper, double pi0,
                   bool include_coefficients) {
  return lfdr_from_logs(log_marginal_null(site, hyper.beta0, hyper.q, include_coefficients),
                        log_marginal_alt(site, hyper.betaT, hyper.betaN, hyper.q,
                                         include_coefficients),
                        pi0);
}

ScaleFit fit_dm_scale(std::span<const std::vector<int>> counts, std::span<const double> q,
                      std::span<const double> weights, const EbFitOptions& options) {
  if (counts.empty()) throw ConfigError("EB fit needs at least one site");
  if (!weights.empty() && weights.size() != counts.size()) {
    throw ConfigError("weight vector does not match the number of sites");
  }
  if (!(options.beta_min > 0.0 && options.beta_max > options.beta_min) ||
      options.grid_points < 3) {
    throw ConfigError("invalid EB search bracket");
  }
  // Only non-zero counts contribute beta-dependent terms.
  auto objective = [&](double log_beta) {
    const double beta = std::exp(log_beta);
    double total = 0.0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
      const double w = weights.empty() ? 1.0 : weights[i];
      if (w == 0.0) continue;
      total += w * log_dirichlet_multinomial(counts[i], beta, q, false);
    }
    return total;
  };

  const double lo = std::log(options.beta_min);
  const double hi = std::log(options.beta_max);
  const int g = options.grid_points;
  const double step = (hi - lo) / (g - 1);
  std::vector<double> grid(static_cast<std::size_t>(g));
  int best = 0;
  for (int k = 0; k < g; ++k) {
    grid[k] = objective(lo + step * k);
    if (grid[k] > grid[best]) best = k;
  }
  const auto [mn, mx] = std::minmax_element(grid.begin(), grid.end());
  const double spread = *mx - *mn;
  ScaleFit fit;
  if (spread <= 1e-10 * std::max(1.0, std::abs(*mx)) || best == 0 || best == g - 1) {
    fit.beta = 1.0;
    fit.log_likelihood = objective(0.0);
    fit.flat = true;
    return fit;
  }

  // Golden-section search on [best-1, best+1] in log-beta, which is a
  // relative tolerance on beta itself.
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo + step * (best - 1);
  double b = lo + step * (best + 1);
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = objective(c);
  double fd = objective(d);
  while (b - a > options.rel_tol) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = objective(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = objective(d);
    }
  }
  double x = 0.5 * (a + b);
  double fx = objective(x);

  // Parabolic refinement through three points around the bracket.
  const double h = std::max(options.rel_tol, 1e-6);
  const double fl = objective(x - h);
  const double fr = objective(x + h);
  const double curvature = fl - 2.0 * fx + fr;
  if (curvature < 0.0) {
    const double shift = 0.5 * h * (fl - fr) / curvature;
    if (std::abs(shift) < h) {
      const double fs = objective(x + shift);
      if (fs > fx) {
        x += shift;
        fx = fs;
      }
    }
  }
  fit.beta = std::exp(x);
  fit.log_likelihood = fx;
  return fit;
}

EbFit fit_eb_hyper(std::span<const SiteCounts> sites, std::span<const double> q,
                   const EbFitOptions& options) {
  if (sites.empty()) throw ConfigError("EB fit needs at least one site");
  std::vector<std::vector<int>> pooled, xs, ys;
  pooled.reserve(sites.size());
  xs.reserve(sites.size());
  ys.reserve(sites.size());
  for (const auto& s : sites) {
    check_q(q, s.alphabet_size());
    pooled.push_back(s.pooled());
    xs.push_back(s.x);
    ys.push_back(s.y);
  }
  EbFit fit;
  fit.hyper.q.assign(q.begin(), q.end());
  fit.scale_fits[0] = fit_dm_scale(pooled, q, {}, options);
  fit.scale_fits[1] = fit_dm_scale(xs, q, {}, options);
  fit.scale_fits[2] = fit_dm_scale(ys, q, {}, options);
  fit.hyper.beta0 = fit.scale_fits[0].beta;
  fit.hyper.betaT = fit.scale_fits[1].beta;
  fit.hyper.betaN = fit.scale_fits[2].beta;
  return fit;
}

EbFit refine_eb_mixture(std::span<const SiteCounts> sites, const EbFit& start,
                        const EbFitOptions& options, int max_iterations, double tolerance) {
  if (sites.empty()) throw ConfigError("EB fit needs at least one site");
  const auto& q = start.hyper.q;
  std::vector<std::vector<int>> pooled, xs, ys;
  for (const auto& s : sites) {
    pooled.push_back(s.pooled());
    xs.push_back(s.x);
    ys.push_back(s.y);
  }
  const std::size_t k = sites.size();
  EbFit fit = start;
  double pi0 = 0.9;
  std::vector<double> w_null(k), w_alt(k);
  for (int it = 1; it <= max_iterations; ++it) {
    // E-step: posterior null probability of every site.
    double sum_null = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      const double l0 = log_marginal_null(sites[i], fit.hyper.beta0, q, false);
      const double l1 = log_marginal_alt(sites[i], fit.hyper.betaT, fit.hyper.betaN, q, false);
      w_null[i] = lfdr_from_logs(l0, l1, pi0);
      w_alt[i] = 1.0 - w_null[i];
      sum_null += w_null[i];
    }
    // M-step.
    const double new_pi0 = std::clamp(sum_null / static_cast<double>(k), 1e-12, 1.0 - 1e-12);
    const auto f0 = fit_dm_scale(pooled, q, w_null, options);
    const auto fT = fit_dm_scale(xs, q, w_alt, options);
    const auto fN = fit_dm_scale(ys, q, w_alt, options);
    const double change = std::max({std::abs(std::log(f0.beta / fit.hyper.beta0)),
                                    std::abs(std::log(fT.beta / fit.hyper.betaT)),
                                    std::abs(std::log(fN.beta / fit.hyper.betaN)),
                                    std::abs(new_pi0 - pi0)});
    fit.scale_fits = {f0, fT, fN};
    fit.hyper.beta0 = f0.beta;
    fit.hyper.betaT = fT.beta;
    fit.hyper.betaN = fN.beta;
    pi0 = new_pi0;
    fit.em_iterations = it;
    if (change < tolerance) break;
  }
  fit.pi0_em = pi0;
  return fit;
}

EbFit fit_eb(std::span<const SiteCounts> sites, std::span<const double> q, EbMode mode,
             const EbFitOptions& options) {
  auto fit = fit_eb_hyper(sites, q, options);
  if (mode == EbMode::kMixture) fit = refine_eb_mixture(sites, fit, options);
  return fit;
}

Model1Fit gibbs_pi0_from_logs(std::span<const double> log_f0, std::span<const double> log_f1,
                              const GibbsOptions& options) {
  if (log_f0.size() != log_f1.size()) throw ConfigError("density vectors differ in length");
  const int burn_in = options.burn_in < 0 ? options.iterations / 10 : options.burn_in;
  if (options.iterations < 1 || options.iterations <= burn_in) {
    throw ConfigError("Gibbs iterations must exceed the burn-in");
  }
  if (!(options.initial_pi0 > 0.0 && options.initial_pi0 < 1.0)) {
    throw ConfigError("initial pi0 must lie in (0, 1)");
  }
  const std::size_t k = log_f0.size();
  auto lfdr_at = [&](std::size_t i, double pi0) {
    return lfdr_from_logs(log_f0[i], log_f1[i], pi0);
  };

  Model1Fit fit;
  const std::size_t kept = static_cast<std::size_t>(options.iterations - burn_in);
  fit.pi0_draws.reserve(kept);
  fit.e_mean.assign(k, 0.0);
  fit.lfdr.assign(k, 0.0);

  std::vector<unsigned char> e(k);
  std::size_t n_alt = 0;
  for (std::size_t i = 0; i < k; ++i) {
    e[i] = lfdr_at(i, options.initial_pi0) < 0.5 ? 1 : 0;
    n_alt += e[i];
  }

  for (int m = 0; m < options.iterations; ++m) {
    Stream pi_stream(derive_key(options.seed, "model1-pi0", {static_cast<std::uint64_t>(m)}));
    const double a = static_cast<double>(k - n_alt) + 1.0;
    const double b = static_cast<double>(n_alt) + 1.0;
    const double ga = std::gamma_distribution<double>(a, 1.0)(pi_stream);
    const double gb = std::gamma_distribution<double>(b, 1.0)(pi_stream);
    double pi0 = ga / (ga + gb);
    pi0 = std::clamp(pi0, std::nextafter(0.0, 1.0), std::nextafter(1.0, 0.0));

    const bool keep = m >= burn_in;
    n_alt = 0;
    for (std::size_t i = 0; i < k; ++i) {
      const double l = lfdr_at(i, pi0);
      Stream site_stream(derive_key(options.seed, "model1-e",
                                    {static_cast<std::uint64_t>(m), static_cast<std::uint64_t>(i)}));
      e[i] = site_stream.uniform() < 1.0 - l ? 1 : 0;
      n_alt += e[i];
      if (keep) {
        fit.lfdr[i] += l;
        fit.e_mean[i] += e[i];
      }
    }
    if (keep) {
      fit.pi0_draws.push_back(pi0);
      if (options.keep_indicators) fit.e_draws.push_back(e);
    }
  }
  const double denom = static_cast<double>(kept);
  for (std::size_t i = 0; i < k; ++i) {
    fit.lfdr[i] = std::clamp(fit.lfdr[i] / denom, 0.0, 1.0);
    fit.e_mean[i] /= denom;
  }
  double sum = 0.0;
  for (double p : fit.pi0_draws) sum += p;
  fit.pi0_mean = sum / denom;
  fit.lfdr_at_mean.resize(k);
  for (std::size_t i = 0; i < k; ++i) fit.lfdr_at_mean[i] = lfdr_at(i, fit.pi0_mean);
  return fit;
}

Model1Fit gibbs_pi0(std::span<const SiteCounts> sites, const Model1Hyper& hyper,
                    const GibbsOptions& options) {
  std::vector<double> l0(sites.size()), l1(sites.size());
  for (std::size_t i = 0; i < sites.size(); ++i) {
    l0[i] = log_marginal_null(sites[i], hyper.beta0, hyper.q);
    l1[i] = log_marginal_alt(sites[i], hyper.betaT, hyper.betaN, hyper.q);
  }
  auto fit = gibbs_pi0_from_logs(l0, l1, options);
  fit.hyper = hyper;
  return fit;
}

Model1Hyper jeffreys_hyper(std::size_t alphabet_size) {
  const double n = static_cast<double>(alphabet_size);
  Model1Hyper h;
  h.q.assign(alphabet_size, 1.0 / n);
  h.beta0 = h.betaT = h.betaN = 0.5 * n;
  return h;
}

Model1Hyper reference_hyper(std::size_t alphabet_size) {
  Model1Hyper h;
  h.q.assign(alphabet_size, 1.0 / static_cast<double>(alphabet_size));
  h.beta0 = h.betaT = h.betaN = 1.0;
  return h;
}

}  // namespace sigsite
