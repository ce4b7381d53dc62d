// sigsite: signature-site detection between two groups of aligned proteins.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "sigsite/alphabet.hpp"
#include "sigsite/blosum_priors.hpp"
#include "sigsite/error.hpp"
#include "sigsite/exact_tests.hpp"
#include "sigsite/model1_eb.hpp"
#include "sigsite/mrf.hpp"
#include "sigsite/pipeline.hpp"
#include "sigsite/simlab.hpp"
#include "sigsite/site_scoring.hpp"

namespace {

using namespace sigsite;

constexpr int kExitInput = 2;
constexpr int kExitConfig = 3;

struct Shared {
  RunConfig run;
  std::string format = "fasta";
  std::string eb_mode = "marginal";
  std::string prior = "eb";
  std::string kernel = "adaptive";
  std::string methods = "fisher,model1,model2,scores";
  std::string sort = "site";
  std::string out_dir;
  std::string report;
};

struct SimArgs {
  SimConfig config;
  std::string preset;
  std::string out;
  std::string truth;
};

struct PriorArgs {
  std::string blosum;
  std::string background;
};

void resolve(Shared& s) {
  static const std::map<std::string, InputFormat> formats{{"fasta", InputFormat::kFasta},
                                                          {"counts", InputFormat::kCounts}};
  static const std::map<std::string, EbMode> modes{{"marginal", EbMode::kMarginal},
                                                   {"mixture", EbMode::kMixture}};
  static const std::map<std::string, Model1Prior> priors{
      {"eb", Model1Prior::kEmpiricalBayes},
      {"jeffreys", Model1Prior::kJeffreys},
      {"reference", Model1Prior::kReference}};
  static const std::map<std::string, MrfKernel> kernels{{"adaptive", MrfKernel::kAdaptivePrior},
                                                        {"exact", MrfKernel::kExact}};
  static const std::map<std::string, SortOrder> sorts{{"site", SortOrder::kSite},
                                                      {"lfdr", SortOrder::kLfdr}};
  auto pick = [](const auto& table, const std::string& key, const char* what) {
    auto it = table.find(key);
    if (it == table.end()) throw ConfigError(fmt::format("unknown {} '{}'", what, key));
    return it->second;
  };
  s.run.format = pick(formats, s.format, "format");
  if (!s.run.counts.empty()) s.run.format = InputFormat::kCounts;
  s.run.eb_mode = pick(modes, s.eb_mode, "EB mode");
  s.run.prior = pick(priors, s.prior, "prior");
  s.run.kernel = pick(kernels, s.kernel, "kernel");
  s.run.sort = pick(sorts, s.sort, "sort order");

  Methods m{false, false, false, false};
  std::stringstream ss(s.methods);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item == "fisher") m.fisher = true;
    else if (item == "model1") m.model1 = true;
    else if (item == "model2") m.model2 = true;
    else if (item == "scores") m.scores = true;
    else if (!item.empty()) throw ConfigError(fmt::format("unknown method '{}'", item));
  }
  s.run.methods = m;
}

// Output sink: stdout, or <out-dir>/<name> when --out-dir is set.
class Sink {
 public:
  Sink(const std::string& out_dir, const std::string& name) {
    if (out_dir.empty()) return;
    std::filesystem::create_directories(out_dir);
    file_.open(std::filesystem::path(out_dir) / name, std::ios::binary);
    if (!file_) throw ConfigError(fmt::format("cannot write into {}", out_dir));
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

void write_report(const Shared& s, const std::string& name, const nlohmann::json& j) {
  std::filesystem::path path;
  if (!s.report.empty()) {
    path = s.report;
  } else if (!s.out_dir.empty()) {
    path = std::filesystem::path(s.out_dir) / name;
  } else {
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError(fmt::format("cannot write {}", path.string()));
  out << j.dump(2) << '\n';
}

void print_notices(const std::vector<std::string>& notices) {
  for (const auto& n : notices) fmt::print(stderr, "note: {}\n", n);
}

SiteCountsResult load_checked(const Shared& s) {
  auto input = load_sites(s.run);
  if (input.sites.empty()) {
    if (input.empty_warning) fmt::print(stderr, "warning: no site survived the missing-value filter\n");
  }
  return input;
}

int cmd_scan(const Shared& s) {
  s.run.validate();
  const auto input = load_checked(s);
  const auto result = run_scan(input, s.run);
  print_notices(result.notices);
  write_scan_outputs(s.out_dir.empty() ? "." : s.out_dir, result, s.run.sort);
  return 0;
}

int cmd_fisher(const Shared& s) {
  s.run.validate();
  const auto input = load_checked(s);
  std::vector<double> p;
  std::vector<std::size_t> idx;
  for (const auto& site : input.sites) {
    p.push_back(fisher_exact(site));
    idx.push_back(site.site_index);
  }
  const auto bh = bh_adjust(p, s.run.alpha, idx);
  Sink sink(s.out_dir, "fisher.tsv");
  auto& out = sink.stream();
  out << "site\tp\tbh_q\treject\n";
  for (const auto& r : bh) {
    out << r.site_index << '\t' << format_double(r.p) << '\t' << format_double(r.bh_q) << '\t'
        << (r.reject ? 1 : 0) << '\n';
  }
  return 0;
}

int cmd_model(const Shared& s, bool model2) {
  Shared local = s;
  local.run.methods = Methods{false, true, model2, false};
  local.run.validate();
  const auto input = load_checked(local);
  const auto result = run_scan(input, local.run);
  print_notices(result.notices);
  const char* name = model2 ? "model2" : "model1";
  Sink sink(local.out_dir, fmt::format("{}.tsv", name));
  auto& out = sink.stream();
  out << "site\tlfdr\treject\n";
  for (const auto& r : result.sites) {
    const double l = model2 ? *r.lfdr2 : *r.lfdr1;
    out << r.site_index << '\t' << format_double(l) << '\t' << (l <= local.run.alpha ? 1 : 0)
        << '\n';
  }
  write_report(local, fmt::format("{}.json", name), result.report);
  return 0;
}

int cmd_scores(const Shared& s) {
  const auto input = load_checked(s);
  const auto scores = score_sites(input.sites, bundled_blosum62());
  Sink sink(s.out_dir, "scores.tsv");
  auto& out = sink.stream();
  out << "site\tn_types\tindependent_score\tpairwise_score\n";
  for (const auto& sc : scores) {
    out << sc.site_index << '\t' << sc.n_types << '\t' << format_double(sc.independent_score)
        << '\t' << format_double(sc.pairwise_score) << '\n';
  }
  return 0;
}

int cmd_priors(const Shared& s, const PriorArgs& a) {
  const auto scores = a.blosum.empty() ? bundled_blosum62() : load_score_matrix(a.blosum);
  const auto bg = a.background.empty() ? bundled_background() : load_background(a.background);
  const auto pri = derive_priors(scores, bg);
  Sink sink(s.out_dir, "priors.tsv");
  auto& out = sink.stream();
  out << "letter\tq\n";
  for (std::size_t i = 0; i < kAminoCount; ++i) {
    out << AminoAlphabet::letter(i) << '\t' << format_double(pri.q[i]) << '\n';
  }
  out << "\npair\tq_pair\n";
  for (std::size_t i = 0; i < kAminoCount; ++i) {
    for (std::size_t j = i + 1; j < kAminoCount; ++j) {
      out << AminoAlphabet::letter(i) << AminoAlphabet::letter(j) << '\t'
          << format_double(pri.q_pair[pair_index(i, j, kAminoCount)]) << '\n';
    }
  }
  return 0;
}

int cmd_simulate(const Shared& s, SimArgs a) {
  a.config.seed = s.run.seed;
  std::vector<SiteCounts> sites;
  std::vector<bool> truth;
  if (a.preset == "reference-toy") {
    sites = make_reference_toy(s.run.seed);
  } else if (a.preset.empty()) {
    auto ds = simulate_dataset(a.config);
    sites = std::move(ds.sites);
    truth = std::move(ds.is_null);
  } else {
    throw ConfigError(fmt::format("unknown preset '{}'", a.preset));
  }
  if (a.out.empty() && !s.out_dir.empty()) {
    a.out = (std::filesystem::path(s.out_dir) / "counts.tsv").string();
    std::filesystem::create_directories(s.out_dir);
  }
  if (a.out.empty()) {
    write_count_table(std::cout, sites);
  } else {
    std::ofstream out(a.out, std::ios::binary);
    if (!out) throw ConfigError(fmt::format("cannot write {}", a.out));
    write_count_table(out, sites);
  }
  if (!a.truth.empty()) {
    if (truth.empty()) throw ConfigError("presets carry no truth labels");
    std::ofstream out(a.truth, std::ios::binary);
    if (!out) throw ConfigError(fmt::format("cannot write {}", a.truth));
    out << "site\tnull\n";
    for (std::size_t i = 0; i < sites.size(); ++i) {
      out << sites[i].site_index << '\t' << (truth[i] ? 1 : 0) << '\n';
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Detect signature sites between two groups of aligned protein sequences"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "key=value file with option defaults");

  Shared s;
  auto& r = s.run;
  app.add_option("--group-t", r.group_t, "aligned FASTA of group T (or a count table)");
  app.add_option("--group-nt", r.group_nt, "aligned FASTA of group NT");
  app.add_option("--format", s.format, "input format: fasta | counts")->capture_default_str();
  app.add_option("--counts", r.counts, "count table (implies --format counts)");
  app.add_option("--missing-chars", r.missing_chars, "symbols that mark a missing residue")
      ->capture_default_str();
  app.add_option("--alpha", r.alpha, "FDR / lfdr level")->capture_default_str();
  app.add_option("--delta", r.delta, "MRF pairwise weight in [0,1]")->capture_default_str();
  app.add_option("--iters", r.iters, "MCMC iterations, burn-in included")->capture_default_str();
  app.add_option("--burn-in", r.burn_in, "burn-in iterations (default iters/10)");
  app.add_option("--beta1", r.beta1, "Dirichlet scale of the single-residue block")
      ->capture_default_str();
  app.add_option("--beta2", r.beta2, "Dirichlet scale of the pairwise block")
      ->capture_default_str();
  app.add_option("--seed", r.seed, "random seed")->capture_default_str();
  app.add_option("--threads", r.threads, "worker threads")->capture_default_str();
  app.add_option("--eb-mode", s.eb_mode, "Model 1 scale fit: marginal | mixture")
      ->capture_default_str();
  app.add_option("--prior", s.prior, "Model 1 prior: eb | jeffreys | reference")
      ->capture_default_str();
  app.add_option("--kernel", s.kernel, "MRF update: adaptive | exact")->capture_default_str();
  app.add_option("--out-dir", s.out_dir, "output directory");
  app.add_option("--report", s.report, "JSON report path (model1/model2)");

  auto* scan = app.add_subcommand("scan", "run the full pipeline, write results.tsv and report.json");
  scan->add_option("--methods", s.methods, "comma list of fisher,model1,model2,scores")
      ->capture_default_str();
  scan->add_option("--sort", s.sort, "row order: site | lfdr")->capture_default_str();
  auto* fisher = app.add_subcommand("fisher", "exact test with Benjamini-Hochberg adjustment");
  auto* model1 = app.add_subcommand("model1", "Dirichlet-multinomial empirical-Bayes lfdr");
  auto* model2 = app.add_subcommand("model2", "Markov-random-field lfdr");
  auto* scores = app.add_subcommand("scores", "independent and pairwise BLOSUM62 site scores");

  PriorArgs pa;
  auto* priors = app.add_subcommand("priors", "print the derived prior vectors");
  priors->add_option("--blosum", pa.blosum, "score matrix file (default: bundled BLOSUM62)");
  priors->add_option("--background", pa.background, "background frequency file");

  SimArgs sa;
  auto* simulate = app.add_subcommand("simulate", "write a synthetic count table");
  auto& c = sa.config;
  simulate->add_option("--pi0", c.pi0, "null proportion")->capture_default_str();
  simulate->add_option("--beta0", c.beta0, "null Dirichlet scale")->capture_default_str();
  simulate->add_option("--betaT", c.betaT, "group T Dirichlet scale")->capture_default_str();
  simulate->add_option("--betaN", c.betaN, "group NT Dirichlet scale")->capture_default_str();
  simulate->add_option("--sites", c.sites, "number of sites")->capture_default_str();
  simulate->add_option("--n1", c.n1, "group T size")->capture_default_str();
  simulate->add_option("--n2", c.n2, "group NT size")->capture_default_str();
  simulate->add_option("--preset", sa.preset, "named dataset (reference-toy)");
  simulate->add_option("--out", sa.out, "output count table (default stdout)");
  simulate->add_option("--truth", sa.truth, "write per-site null labels here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    resolve(s);
    if (scan->parsed()) return cmd_scan(s);
    if (fisher->parsed()) return cmd_fisher(s);
    if (model1->parsed()) return cmd_model(s, false);
    if (model2->parsed()) return cmd_model(s, true);
    if (scores->parsed()) return cmd_scores(s);
    if (priors->parsed()) return cmd_priors(s, pa);
    if (simulate->parsed()) return cmd_simulate(s, sa);
  } catch (const ConfigError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitConfig;
  } catch (const Error& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitInput;
  } catch (const std::filesystem::filesystem_error& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitInput;
  }
  return 0;
}
