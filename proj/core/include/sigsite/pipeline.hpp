#pragma once

// End-to-end orchestration behind the `scan` command.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sigsite/model1_eb.hpp"
#include "sigsite/mrf.hpp"
#include "sigsite/site_counts.hpp"

namespace sigsite {

enum class InputFormat { kFasta, kCounts };
enum class Model1Prior { kEmpiricalBayes, kJeffreys, kReference };
enum class SortOrder { kSite, kLfdr };

struct Methods {
  bool fisher = true;
  bool model1 = true;
  bool model2 = true;
  bool scores = true;
};

struct RunConfig {
  std::filesystem::path group_t;
  std::filesystem::path group_nt;
  std::filesystem::path counts;
  InputFormat format = InputFormat::kFasta;
  std::string missing_chars{kDefaultMissingChars};

  double alpha = 0.05;
  double delta = 0.1;
  int iters = 10000;
  int burn_in = -1;  // -1: iters / 10
  std::uint64_t seed = 1;
  double beta1 = 1000.0;
  double beta2 = 10000.0;
  int threads = 1;
  EbMode eb_mode = EbMode::kMarginal;
  Model1Prior prior = Model1Prior::kEmpiricalBayes;
  MrfKernel kernel = MrfKernel::kAdaptivePrior;
  Methods methods;
  SortOrder sort = SortOrder::kSite;

  // Throws ConfigError on out-of-range values.
  void validate() const;
  int effective_burn_in() const { return burn_in < 0 ? iters / 10 : burn_in; }
};

struct SiteResult {
  std::size_t site_index = 0;
  std::optional<double> fisher_p;
  std::optional<double> bh_q;
  std::optional<bool> fisher_reject;
  std::optional<double> lfdr1;
  std::optional<bool> m1_reject;
  std::optional<double> lfdr2;
  std::optional<bool> m2_reject;
  std::optional<int> n_types;
  std::optional<double> independent_score;
  std::optional<double> pairwise_score;
};

struct ScanResult {
  std::vector<SiteResult> sites;
  nlohmann::json report;
  std::vector<std::string> notices;
};

// Reads the configured inputs (FASTA pair or count table).
SiteCountsResult load_sites(const RunConfig& config);

struct Model1Outcome {
  EbFit eb;
  Model1Fit fit;
};

// Hyperparameters per the configured prior, then the pi0 Gibbs chain.
Model1Outcome run_model1(std::span<const SiteCounts> sites, const RunConfig& config);

// Runs the selected methods in dependency order; model2 turns model1 on.
ScanResult run_scan(std::span<const SiteCounts> sites, const RunConfig& config);
ScanResult run_scan(const SiteCountsResult& input, const RunConfig& config);

void write_results_tsv(std::ostream& out, std::vector<SiteResult> results, SortOrder order);

// Writes results.tsv and report.json into `dir` (created if missing).
void write_scan_outputs(const std::filesystem::path& dir, const ScanResult& result,
                        SortOrder order);

std::string format_double(double v);

}  // namespace sigsite
