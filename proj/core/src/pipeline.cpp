#include "sigsite/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>

#include <fmt/format.h>

#include "sigsite/blosum_priors.hpp"
#include "sigsite/error.hpp"
#include "sigsite/exact_tests.hpp"
#include "sigsite/site_scoring.hpp"

namespace sigsite {

namespace {

const char* eb_mode_name(EbMode m) { return m == EbMode::kMarginal ? "marginal" : "mixture"; }

const char* prior_name(Model1Prior p) {
  switch (p) {
    case Model1Prior::kEmpiricalBayes: return "eb";
    case Model1Prior::kJeffreys: return "jeffreys";
    case Model1Prior::kReference: return "reference";
  }
  return "eb";
}

nlohmann::json chain_json(const MrfChain& c) {
  return {{"samples", c.samples},
          {"single_acceptance", c.single.rate()},
          {"pairwise_acceptance", c.pairwise.rate()},
          {"single_out_of_domain", c.single.out_of_domain},
          {"pairwise_out_of_domain", c.pairwise.out_of_domain}};
}

template <typename T, typename F>
std::string field(const std::optional<T>& v, F&& fmt_fn) {
  return v ? fmt_fn(*v) : std::string("NA");
}

}  // namespace

std::string format_double(double v) { return fmt::format("{:.10g}", v); }

void RunConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
  if (!(delta >= 0.0 && delta <= 1.0)) throw ConfigError("delta must lie in [0, 1]");
  if (iters < 1) throw ConfigError("iters must be positive");
  if (burn_in >= iters) throw ConfigError("iters must exceed burn-in");
  if (!(beta1 > 0.0) || !(beta2 > 0.0)) throw ConfigError("beta1 and beta2 must be positive");
  if (threads < 1) throw ConfigError("threads must be at least 1");
  if (!methods.fisher && !methods.model1 && !methods.model2 && !methods.scores) {
    throw ConfigError("no method selected");
  }
}

SiteCountsResult load_sites(const RunConfig& config) {
  if (config.format == InputFormat::kCounts) {
    SiteCountsResult r;
    const auto& path = config.counts.empty() ? config.group_t : config.counts;
    if (path.empty()) throw ConfigError("count-table input needs a path");
    r.sites = load_count_table(path);
    r.total_sites = r.sites.size();
    return r;
  }
  if (config.group_t.empty() || config.group_nt.empty()) {
    throw ConfigError("FASTA input needs both --group-t and --group-nt");
  }
  const auto t = load_fasta(config.group_t, Group::kTransmitted, config.missing_chars);
  const auto nt = load_fasta(config.group_nt, Group::kNonTransmitted, config.missing_chars);
  return build_site_counts(t, nt, config.missing_chars);
}

Model1Outcome run_model1(std::span<const SiteCounts> sites, const RunConfig& config) {
  if (sites.empty()) throw ConfigError("Model 1 needs at least one site");
  Model1Outcome out;
  const auto l = sites.front().alphabet_size();
  switch (config.prior) {
    case Model1Prior::kEmpiricalBayes: {
      const auto& q = bundled_priors().q;
      if (l != q.size()) throw DomainError("empirical Bayes fit needs the 20-letter alphabet");
      out.eb = fit_eb(sites, q, config.eb_mode);
      break;
    }
    case Model1Prior::kJeffreys:
      out.eb.hyper = jeffreys_hyper(l);
      break;
    case Model1Prior::kReference:
      out.eb.hyper = reference_hyper(l);
      break;
  }
  GibbsOptions g;
  g.iterations = config.iters;
  g.burn_in = config.effective_burn_in();
  g.seed = config.seed;
  out.fit = gibbs_pi0(sites, out.eb.hyper, g);
  return out;
}

ScanResult run_scan(const SiteCountsResult& input, const RunConfig& config) {
  auto result = run_scan(std::span<const SiteCounts>(input.sites), config);
  result.report["sites"]["total"] = input.total_sites;
  result.report["sites"]["dropped"] = input.dropped_sites;
  if (input.empty_warning) result.notices.push_back("no site survived the missing-value filter");
  result.report["notices"] = result.notices;
  return result;
}

ScanResult run_scan(std::span<const SiteCounts> sites, const RunConfig& config) {
  config.validate();
  Methods m = config.methods;
  ScanResult res;
  if (m.model2 && !m.model1) {
    m.model1 = true;
    res.notices.push_back("model2 needs the Model 1 null proportion; model1 enabled");
  }
  nlohmann::json& rep = res.report;
  rep["sites"] = {{"total", sites.size()}, {"retained", sites.size()}, {"dropped", 0}};
  rep["alpha"] = config.alpha;
  rep["seed"] = config.seed;

  res.sites.resize(sites.size());
  for (std::size_t i = 0; i < sites.size(); ++i) res.sites[i].site_index = sites[i].site_index;

  if (m.fisher) {
    std::vector<double> p(sites.size());
    std::vector<std::size_t> idx(sites.size());
    for (std::size_t i = 0; i < sites.size(); ++i) {
      p[i] = fisher_exact(sites[i]);
      idx[i] = sites[i].site_index;
    }
    const auto bh = bh_adjust(p, config.alpha, idx);
    std::size_t rejected = 0;
    for (std::size_t i = 0; i < sites.size(); ++i) {
      res.sites[i].fisher_p = bh[i].p;
      res.sites[i].bh_q = bh[i].bh_q;
      res.sites[i].fisher_reject = bh[i].reject;
      rejected += bh[i].reject ? 1 : 0;
    }
    rep["fisher"] = {{"rejections", rejected}};
  }

  double pi0_hat = 1.0;
  if (m.model1 && !sites.empty()) {
    const auto outcome = run_model1(sites, config);
    const auto& fit = outcome.fit;
    pi0_hat = fit.pi0_mean;
    std::size_t rejected = 0;
    for (std::size_t i = 0; i < sites.size(); ++i) {
      res.sites[i].lfdr1 = fit.lfdr[i];
      res.sites[i].m1_reject = fit.lfdr[i] <= config.alpha;
      rejected += fit.lfdr[i] <= config.alpha ? 1 : 0;
    }
    const auto& h = outcome.eb.hyper;
    nlohmann::json j = {{"prior", prior_name(config.prior)},
                        {"beta0", h.beta0},
                        {"betaT", h.betaT},
                        {"betaN", h.betaN},
                        {"pi0_mean", fit.pi0_mean},
                        {"iterations", config.iters},
                        {"burn_in", config.effective_burn_in()},
                        {"rejections", rejected}};
    if (config.prior == Model1Prior::kEmpiricalBayes) {
      j["eb_mode"] = eb_mode_name(config.eb_mode);
      j["flat_likelihood"] = outcome.eb.flat_warning();
      if (config.eb_mode == EbMode::kMixture) {
        j["pi0_em"] = outcome.eb.pi0_em;
        j["em_iterations"] = outcome.eb.em_iterations;
      }
      if (outcome.eb.flat_warning()) {
        res.notices.push_back("flat EB likelihood; affected scales reset to 1");
      }
    }
    rep["model1"] = j;
  }

  if (m.model2 && !sites.empty()) {
    const auto& pri = bundled_priors();
    if (sites.front().alphabet_size() != pri.q.size()) {
      throw DomainError("Model 2 needs the 20-letter alphabet");
    }
    MrfHyper hyper{config.beta1, config.beta2, pri.q, pri.q_pair};
    MrfOptions opt;
    opt.iterations = config.iters;
    opt.burn_in = config.effective_burn_in();
    opt.seed = config.seed;
    opt.kernel = config.kernel;
    opt.threads = config.threads;
    const auto chains = run_mcmc(sites, hyper, config.delta, opt);
    const auto lfdr = lfdr_model2(sites, chains, pi0_hat);
    std::size_t rejected = 0;
    for (std::size_t i = 0; i < sites.size(); ++i) {
      res.sites[i].lfdr2 = lfdr[i];
      res.sites[i].m2_reject = lfdr[i] <= config.alpha;
      rejected += lfdr[i] <= config.alpha ? 1 : 0;
    }
    for (const auto& w : chains.warnings) res.notices.push_back(w);
    rep["model2"] = {{"delta", config.delta},
                     {"beta1", config.beta1},
                     {"beta2", config.beta2},
                     {"kernel", config.kernel == MrfKernel::kAdaptivePrior ? "adaptive" : "exact"},
                     {"pi0_hat", pi0_hat},
                     {"sigma2", chains.sigma2},
                     {"phi2", chains.phi2},
                     {"iterations", config.iters},
                     {"burn_in", config.effective_burn_in()},
                     {"chains",
                      {{"null", chain_json(chains.null_chain)},
                       {"alt_T", chain_json(chains.alt_T_chain)},
                       {"alt_NT", chain_json(chains.alt_NT_chain)}}},
                     {"warnings", chains.warnings},
                     {"rejections", rejected}};
  }

  if (m.scores && !sites.empty()) {
    const auto& sm = bundled_blosum62();
    for (std::size_t i = 0; i < sites.size(); ++i) {
      const auto sc = score_site(sites[i], sm);
      res.sites[i].n_types = sc.n_types;
      res.sites[i].independent_score = sc.independent_score;
      res.sites[i].pairwise_score = sc.pairwise_score;
    }
  }
  rep["notices"] = res.notices;
  return res;
}

void write_results_tsv(std::ostream& out, std::vector<SiteResult> results, SortOrder order) {
  if (order == SortOrder::kLfdr) {
    auto key = [](const SiteResult& r) {
      if (r.lfdr2) return *r.lfdr2;
      if (r.lfdr1) return *r.lfdr1;
      return r.fisher_p.value_or(1.0);
    };
    std::stable_sort(results.begin(), results.end(), [&](const auto& a, const auto& b) {
      const double ka = key(a);
      const double kb = key(b);
      return ka != kb ? ka < kb : a.site_index < b.site_index;
    });
  } else {
    std::stable_sort(results.begin(), results.end(),
                     [](const auto& a, const auto& b) { return a.site_index < b.site_index; });
  }
  auto d = [](double v) { return format_double(v); };
  auto b = [](bool v) { return std::string(v ? "1" : "0"); };
  auto n = [](int v) { return std::to_string(v); };
  out << "site\tfisher_p\tbh_q\tfisher_reject\tlfdr1\tm1_reject\tlfdr2\tm2_reject\tn_types"
         "\tindependent_score\tpairwise_score\n";
  for (const auto& r : results) {
    out << r.site_index << '\t' << field(r.fisher_p, d) << '\t' << field(r.bh_q, d) << '\t'
        << field(r.fisher_reject, b) << '\t' << field(r.lfdr1, d) << '\t'
        << field(r.m1_reject, b) << '\t' << field(r.lfdr2, d) << '\t' << field(r.m2_reject, b)
        << '\t' << field(r.n_types, n) << '\t' << field(r.independent_score, d) << '\t'
        << field(r.pairwise_score, d) << '\n';
  }
}

void write_scan_outputs(const std::filesystem::path& dir, const ScanResult& result,
                        SortOrder order) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError(fmt::format("cannot create output directory {}", dir.string()));
  std::ofstream tsv(dir / "results.tsv", std::ios::binary);
  if (!tsv) throw ConfigError(fmt::format("cannot write {}", (dir / "results.tsv").string()));
  write_results_tsv(tsv, result.sites, order);
  std::ofstream js(dir / "report.json", std::ios::binary);
  if (!js) throw ConfigError(fmt::format("cannot write {}", (dir / "report.json").string()));
  js << result.report.dump(2) << '\n';
}

}  // namespace sigsite
