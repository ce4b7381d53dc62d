#include "sigsite/mrf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <thread>

#include "sigsite/alphabet.hpp"
#include "sigsite/error.hpp"
#include "sigsite/rng.hpp"

namespace sigsite {

namespace {

void validate_params(const MrfParams& params) {
  const auto l = params.ps.size();
  if (l < 2) throw DomainError("MRF needs an alphabet of at least two residues");
  if (params.pst.size() != pair_count(l)) {
    throw DomainError("pairwise parameter vector has the wrong length");
  }
  for (double p : params.ps) {
    if (!(p > 0.0)) throw DomainError("MRF single-residue probabilities must be positive");
  }
  for (double p : params.pst) {
    if (!(p > 0.0)) throw DomainError("MRF pairwise probabilities must be positive");
  }
}

void validate_counts(std::span<const int> counts, std::size_t l, int range) {
  if (counts.size() != l) throw DomainError("count vector does not match the alphabet size");
  for (int c : counts) {
    if (c < 0 || c > range) throw DomainError("count outside the conditional range");
  }
}

double eta_of(std::size_t s, std::span<const int> counts, std::span<const double> log_ps,
              std::span<const double> log_pst, double delta) {
  const auto l = counts.size();
  double pair = 0.0;
  for (std::size_t t = 0; t < l; ++t) {
    if (t == s || counts[t] == 0) continue;
    pair += log_pst[pair_index(s, t, l)] * counts[t];
  }
  return log_ps[s] + delta * pair;
}

constexpr int kHornerMax = 64;

// sum_{v=0..n} exp(v eta) as exp(offset) * sum with the sum in [1, n+1].
struct GeoSum {
  double offset;
  double sum;
};

inline GeoSum geo_sum(double eta, int n) {
  double offset = 0.0;
  if (eta > 0.0) {
    offset = n * eta;
    eta = -eta;
  }
  const double r = std::exp(eta);
  double acc = 1.0;
  for (int v = 0; v < n; ++v) acc = acc * r + 1.0;
  return {offset, acc};
}

// log_geometric_sum(e_new, n) - log_geometric_sum(e_old, n).
inline double log_geo_diff(double e_new, double e_old, int n) {
  if (n > kHornerMax) return log_geometric_sum(e_new, n) - log_geometric_sum(e_old, n);
  const auto a = geo_sum(e_new, n);
  const auto b = geo_sum(e_old, n);
  return (a.offset - b.offset) + std::log(a.sum / b.sum);
}

inline double log_geo(double eta, int n) {
  if (n > kHornerMax) return log_geometric_sum(eta, n);
  const auto a = geo_sum(eta, n);
  return a.offset + std::log(a.sum);
}

// H(r_new) / H(r_old) with H(r) = sum_{v=0..n} r^v, r = exp(eta); zero when
// the direct sums are unsafe and the caller must fall back to logs.
inline double horner_ratio(double r_new, double r_old, int n) {
  if (n > kHornerMax || r_new > 1e8 || r_old > 1e8) return 0.0;
  double a = 1.0;
  double b = 1.0;
  for (int v = 0; v < n; ++v) {
    a = a * r_new + 1.0;
    b = b * r_old + 1.0;
  }
  return a / b;
}

// Accumulates sum_i w_i log(ratio_i) with one log per batch of factors.
class LogProduct {
 public:
  void add(double ratio, double weight) {
    if (ratio <= 0.0) return;
    const auto w = static_cast<long>(weight);
    if (static_cast<double>(w) != weight || w > 64) {
      log_ += weight * std::log(ratio);
      return;
    }
    for (long k = 0; k < w; ++k) prod_ *= ratio;
    if (prod_ > 1e150 || prod_ < 1e-150) flush();
  }
  void add_log(double value) { log_ += value; }
  double value() {
    flush();
    return log_;
  }

 private:
  void flush() {
    log_ += std::log(prod_);
    prod_ = 1.0;
  }
  double prod_ = 1.0;
  double log_ = 0.0;
};

// Adds -w log(H(r_new)/H(r_old)) to `acc`.
inline void add_log_norm_change(LogProduct& acc, double r_new, double r_old, int n, double w) {
  const double ratio = horner_ratio(r_new, r_old, n);
  if (ratio > 0.0) {
    acc.add(1.0 / ratio, w);
  } else {
    acc.add_log(-w * log_geo_diff(std::log(r_new), std::log(r_old), n));
  }
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const auto mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) {
    m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
  }
  return m;
}

double log_beta_pdf(double x, double a, double b) {
  return (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) -
         (std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));
}

// Single-chain sampler state. Block values are kept unnormalized (raw) with
// their running sums, so the rescaling step of a coordinate update is just an
// update of the sum; theta = log(raw) - log(sum).
class ChainSampler {
 public:
  ChainSampler(std::span<const CountPattern> data, const MrfHyper& hyper, double delta,
               const LaplaceInit& init, std::uint64_t key, MrfKernel kernel)
      : data_(data),
        hyper_(hyper),
        delta_(delta),
        kernel_(kernel),
        l_(init.params.ps.size()),
        np_(pair_count(init.params.ps.size())),
        sigma_(std::sqrt(init.sigma2)),
        phi_(std::sqrt(init.phi2)),
        stream_(key) {
    raw_s_ = init.params.ps;
    raw_st_ = init.params.pst;
    with_letter_.resize(l_);
    totals_.resize(data_.size());
    for (std::size_t i = 0; i < data_.size(); ++i) {
      const auto& c = data_[i].counts;
      if (c.size() != l_) throw DomainError("count vector does not match the alphabet size");
      int total = 0;
      for (std::size_t s = 0; s < l_; ++s) {
        if (c[s] > 0) with_letter_[s].push_back(i);
        total += c[s];
        max_count_ = std::max(max_count_, c[s]);
      }
      totals_[i] = total;
      max_total_ = std::max(max_total_, total);
    }
    pair_power_.assign(static_cast<std::size_t>(max_count_) + 1, 1.0);
    shrink_power_.assign(static_cast<std::size_t>(max_total_) + 1, 1.0);
    normalize_single();
    normalize_pairs();
    rebuild_pair_cache();
  }

  void sweep() {
    if (l_ >= 2) {
      for (std::size_t s = 0; s < l_; ++s) update_single(s);
      normalize_single();
    }
    if (np_ >= 2) {
      for (std::size_t s = 0; s < l_; ++s) {
        for (std::size_t t = s + 1; t < l_; ++t) update_pair(s, t);
      }
      normalize_pairs();
      rebuild_pair_cache();
    }
  }

  void store(MrfChain& chain) const {
    chain.ps_samples.insert(chain.ps_samples.end(), raw_s_.begin(), raw_s_.end());
    chain.pst_samples.insert(chain.pst_samples.end(), raw_st_.begin(), raw_st_.end());
    ++chain.samples;
  }

  const BlockDiagnostics& single() const { return single_; }
  const BlockDiagnostics& pairwise() const { return pairwise_; }

 private:
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(stream_); }

  void normalize_single() {
    double total = 0.0;
    for (double v : raw_s_) total += v;
    for (double& v : raw_s_) v /= total;
    sum_s_ = 1.0;
  }

  void normalize_pairs() {
    double total = 0.0;
    for (double v : raw_st_) total += v;
    for (double& v : raw_st_) v /= total;
    sum_st_ = 1.0;
    log_sum_st_ = 0.0;
    sum_power_.assign(static_cast<std::size_t>(max_total_) + 1, 1.0);
  }

  // sum_power_[k] = S2^(-delta k): the pairwise block's running normalizer
  // as seen by a conditional whose other residues total k.
  void refresh_sum_power() {
    for (std::size_t k = 0; k < sum_power_.size(); ++k) {
      sum_power_[k] = std::exp(-delta_ * static_cast<double>(k) * log_sum_st_);
    }
  }

  // pair_cache_[i][s] = sum_{t != s} z_it log raw_st
  void rebuild_pair_cache() {
    log_raw_st_.resize(raw_st_.size());
    for (std::size_t k = 0; k < raw_st_.size(); ++k) log_raw_st_[k] = std::log(raw_st_[k]);
    pair_cache_.assign(data_.size() * l_, 0.0);
    for (std::size_t t = 0; t < l_; ++t) {
      for (auto i : with_letter_[t]) {
        const double zt = data_[i].counts[t];
        for (std::size_t s = 0; s < l_; ++s) {
          if (s == t) continue;
          pair_cache_[i * l_ + s] += zt * log_raw_st_[pair_index(s, t, l_)];
        }
      }
    }
    pair_exp_.resize(pair_cache_.size());
    for (std::size_t k = 0; k < pair_cache_.size(); ++k) {
      pair_exp_[k] = std::exp(delta_ * pair_cache_[k]);
    }
  }

  // exp(eta_is) for the adaptive-prior kernel's fast path, given p_s.
  double rate(std::size_t i, std::size_t s, double ps) const {
    return ps * pair_exp_[i * l_ + s] * sum_power_[totals_[i] - data_[i].counts[s]];
  }

  bool accept(double log_ratio) {
    if (log_ratio >= 0.0) return true;
    return std::log(stream_.uniform()) < log_ratio;
  }

  void update_single(std::size_t s) {
    ++single_.attempts;
    const double p_cur = raw_s_[s] / sum_s_;
    const double eps = sigma_ * normal();
    const double p_new = p_cur + eps;
    if (p_new <= 0.0 || (kernel_ == MrfKernel::kAdaptivePrior && p_new >= 1.0)) {
      ++single_.out_of_domain;
      return;
    }
    const double dtheta = std::log(p_new) - std::log(p_cur);
    double log_ratio = 0.0;
    if (kernel_ == MrfKernel::kAdaptivePrior) {
      LogProduct acc;
      double linear = 0.0;
      for (std::size_t i = 0; i < data_.size(); ++i) {
        const auto& d = data_[i];
        linear += d.weight * d.counts[s];
        add_log_norm_change(acc, rate(i, s, p_new), rate(i, s, p_cur), d.range, d.weight);
      }
      log_ratio += linear * dtheta + acc.value();
      const double b1 = hyper_.beta1;
      log_ratio += log_beta_pdf(p_new, b1 * p_new, b1 * (1.0 - p_cur)) -
                   log_beta_pdf(p_cur, b1 * p_cur, b1 * (1.0 - p_cur));
    } else {
      // Rescaling divides every p_r by (1 + eps): all rates shrink by that
      // factor and rate s additionally moves by p_new / p_cur.
      const double c = std::log1p(eps);
      const double shrink = 1.0 / (1.0 + eps);
      const double move = p_new / p_cur;
      LogProduct acc;
      double linear = 0.0;
      for (std::size_t i = 0; i < data_.size(); ++i) {
        const auto& d = data_[i];
        linear += d.weight * (d.counts[s] * dtheta - c * totals_[i]);
        for (std::size_t r = 0; r < l_; ++r) {
          const double r_old = rate(i, r, raw_s_[r] / sum_s_);
          const double r_new = r_old * (r == s ? shrink * move : shrink);
          add_log_norm_change(acc, r_new, r_old, d.range, d.weight);
        }
      }
      log_ratio += linear + acc.value();
      log_ratio += dirichlet_shift(hyper_.beta1, hyper_.q, s, c, dtheta);
      log_ratio += rescale_hastings(eps, sigma_, l_);
    }
    if (accept(log_ratio)) {
      ++single_.accepts;
      const double raw_new = p_new * sum_s_;
      sum_s_ += raw_new - raw_s_[s];
      raw_s_[s] = raw_new;
    }
  }

  void update_pair(std::size_t s, std::size_t t) {
    ++pairwise_.attempts;
    const auto idx = pair_index(s, t, l_);
    const double p_cur = raw_st_[idx] / sum_st_;
    const double eps = phi_ * normal();
    const double p_new = p_cur + eps;
    if (p_new <= 0.0 || (kernel_ == MrfKernel::kAdaptivePrior && p_new >= 1.0)) {
      ++pairwise_.out_of_domain;
      return;
    }
    const double dtheta = std::log(p_new) - std::log(p_cur);
    double log_ratio = 0.0;
    if (kernel_ == MrfKernel::kAdaptivePrior) {
      if (delta_ != 0.0) {
        // theta_st enters conditional s through z_t and conditional t through z_s.
        const double step = std::exp(delta_ * dtheta);
        for (std::size_t k = 1; k < pair_power_.size(); ++k) {
          pair_power_[k] = pair_power_[k - 1] * step;
        }
        LogProduct acc;
        double linear = 0.0;
        auto accumulate = [&](std::size_t own, std::size_t other) {
          const double p_own = raw_s_[own] / sum_s_;
          for (auto i : with_letter_[other]) {
            const auto& d = data_[i];
            linear += d.weight * d.counts[own] * d.counts[other];
            const double r_old = rate(i, own, p_own);
            const double r_new = r_old * pair_power_[d.counts[other]];
            add_log_norm_change(acc, r_new, r_old, d.range, d.weight);
          }
        };
        accumulate(s, t);
        accumulate(t, s);
        log_ratio += delta_ * dtheta * linear + acc.value();
      }
      const double b2 = hyper_.beta2;
      log_ratio += log_beta_pdf(p_new, b2 * p_new, b2 * (1.0 - p_cur)) -
                   log_beta_pdf(p_cur, b2 * p_cur, b2 * (1.0 - p_cur));
    } else {
      const double c = std::log1p(eps);
      if (delta_ != 0.0) {
        // Rate r scales by (1 + eps)^(-delta k), k = the other residues'
        // total, and the two letters of the pair also by exp(delta dtheta z).
        const double step = std::exp(delta_ * dtheta);
        for (std::size_t k = 1; k < pair_power_.size(); ++k) {
          pair_power_[k] = pair_power_[k - 1] * step;
        }
        const double shrink = std::exp(-delta_ * c);
        for (std::size_t k = 1; k < shrink_power_.size(); ++k) {
          shrink_power_[k] = shrink_power_[k - 1] * shrink;
        }
        LogProduct acc;
        double linear = 0.0;
        for (std::size_t i = 0; i < data_.size(); ++i) {
          const auto& d = data_[i];
          double lin = 2.0 * dtheta * d.counts[s] * d.counts[t];
          for (std::size_t r = 0; r < l_; ++r) {
            const int rest = totals_[i] - d.counts[r];
            lin -= c * d.counts[r] * rest;
            const double r_old = rate(i, r, raw_s_[r] / sum_s_);
            double r_new = r_old * shrink_power_[rest];
            if (r == s) r_new *= pair_power_[d.counts[t]];
            if (r == t) r_new *= pair_power_[d.counts[s]];
            add_log_norm_change(acc, r_new, r_old, d.range, d.weight);
          }
          linear += d.weight * lin;
        }
        log_ratio += delta_ * linear + acc.value();
      }
      log_ratio += dirichlet_shift(hyper_.beta2, hyper_.q_pair, idx, c, dtheta);
      log_ratio += rescale_hastings(eps, phi_, np_);
    }
    if (accept(log_ratio)) {
      ++pairwise_.accepts;
      const double raw_new = p_new * sum_st_;
      for (auto i : with_letter_[t]) {
        pair_cache_[i * l_ + s] += data_[i].counts[t] * dtheta;
        pair_exp_[i * l_ + s] = std::exp(delta_ * pair_cache_[i * l_ + s]);
      }
      for (auto i : with_letter_[s]) {
        pair_cache_[i * l_ + t] += data_[i].counts[s] * dtheta;
        pair_exp_[i * l_ + t] = std::exp(delta_ * pair_cache_[i * l_ + t]);
      }
      sum_st_ += raw_new - raw_st_[idx];
      raw_st_[idx] = raw_new;
      log_sum_st_ = std::log(sum_st_);
      refresh_sum_power();
    }
  }

  // Change of the log Dirichlet(beta q) density when every coordinate is
  // divided by exp(c) and coordinate k additionally moves by dtheta in log.
  static double dirichlet_shift(double beta, const std::vector<double>& q, std::size_t k,
                                double c, double dtheta) {
    double total = 0.0;
    for (double v : q) total += beta * v - 1.0;
    return -c * total + (beta * q[k] - 1.0) * dtheta;
  }

  // Proposal correction for "move coordinate by eps, rescale block": the move
  // slides along the ray through the coordinate's vertex, with reverse step
  // eps' = -eps/(1+eps) and a (d+1)-th power Jacobian in the distance to the
  // vertex.
  static double rescale_hastings(double eps, double scale, std::size_t dim) {
    const double back = -eps / (1.0 + eps);
    const double jac = -static_cast<double>(dim + 1) * std::log1p(eps);
    return jac + (eps * eps - back * back) / (2.0 * scale * scale);
  }

  std::span<const CountPattern> data_;
  const MrfHyper& hyper_;
  double delta_;
  MrfKernel kernel_;
  std::size_t l_;
  std::size_t np_;
  double sigma_;
  double phi_;
  Stream stream_;

  std::vector<double> raw_s_;
  std::vector<double> raw_st_;
  double sum_s_ = 1.0;
  double sum_st_ = 1.0;
  double log_sum_st_ = 0.0;
  std::vector<double> log_raw_st_;
  std::vector<double> pair_cache_;
  std::vector<double> pair_exp_;
  std::vector<double> pair_power_;
  std::vector<double> shrink_power_;  // (1 + eps)^(-delta k) for the exact kernel
  std::vector<double> sum_power_;
  int max_count_ = 0;
  int max_total_ = 0;
  std::vector<std::vector<std::size_t>> with_letter_;
  std::vector<int> totals_;
  BlockDiagnostics single_;
  BlockDiagnostics pairwise_;
};

double log_mean_exp(const std::vector<double>& v) {
  if (v.empty()) return -std::numeric_limits<double>::infinity();
  const double mx = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(mx)) return mx;
  double acc = 0.0;
  for (double x : v) acc += std::exp(x - mx);
  return mx + std::log(acc / static_cast<double>(v.size()));
}

// Per-sample log parameters of a chain, computed once for lfdr evaluation.
struct LogSamples {
  std::vector<double> log_ps;
  std::vector<double> log_pst;
  std::size_t l = 0;
  std::size_t np = 0;
  std::size_t samples = 0;

  explicit LogSamples(const MrfChain& chain)
      : l(chain.alphabet), np(pair_count(chain.alphabet)), samples(chain.samples) {
    log_ps.resize(chain.ps_samples.size());
    log_pst.resize(chain.pst_samples.size());
    std::transform(chain.ps_samples.begin(), chain.ps_samples.end(), log_ps.begin(),
                   [](double p) { return std::log(p); });
    std::transform(chain.pst_samples.begin(), chain.pst_samples.end(), log_pst.begin(),
                   [](double p) { return std::log(p); });
  }

  // Pseudo-log-likelihood of one count vector under each of the first
  // `count` samples.
  std::vector<double> pll(std::span<const int> counts, int range, double delta,
                          std::size_t count) const {
    std::vector<std::size_t> present;
    for (std::size_t t = 0; t < l; ++t) {
      if (counts[t] > 0) present.push_back(t);
    }
    std::vector<double> out(count);
    for (std::size_t m = 0; m < count; ++m) {
      const double* lps = log_ps.data() + m * l;
      const double* lpst = log_pst.data() + m * np;
      double total = 0.0;
      for (std::size_t s = 0; s < l; ++s) {
        double pair = 0.0;
        for (auto t : present) {
          if (t != s) pair += counts[t] * lpst[pair_index(s, t, l)];
        }
        const double e = lps[s] + delta * pair;
        total += counts[s] * e - log_geo(e, range);
      }
      out[m] = total;
    }
    return out;
  }
};

// Memoized per-pattern pseudo-log-likelihood paths of one chain.
class PatternCache {
 public:
  PatternCache(const LogSamples& samples, double delta, std::size_t count)
      : samples_(samples), delta_(delta), count_(count) {}

  const std::vector<double>& get(const std::vector<int>& counts, int range) {
    auto key = std::make_pair(counts, range);
    auto it = cache_.find(key);
    if (it == cache_.end()) {
      it = cache_.emplace(std::move(key), samples_.pll(counts, range, delta_, count_)).first;
    }
    return it->second;
  }

 private:
  const LogSamples& samples_;
  double delta_;
  std::size_t count_;
  std::map<std::pair<std::vector<int>, int>, std::vector<double>> cache_;
};

}  // namespace

double log_geometric_sum(double eta, int n) {
  if (n <= 0) return 0.0;
  if (eta == 0.0) return std::log(static_cast<double>(n) + 1.0);
  if (eta > 0.0) return n * eta + log_geometric_sum(-eta, n);
  return std::log(-std::expm1((n + 1) * eta)) - std::log(-std::expm1(eta));
}

std::vector<double> conditional_distribution(std::size_t s, std::span<const int> counts,
                                             const MrfParams& params, int count_range_max) {
  validate_params(params);
  const auto l = params.ps.size();
  if (s >= l) throw DomainError("residue index out of range");
  validate_counts(counts, l, count_range_max);
  std::vector<double> log_ps(l), log_pst(params.pst.size());
  std::transform(params.ps.begin(), params.ps.end(), log_ps.begin(),
                 [](double p) { return std::log(p); });
  std::transform(params.pst.begin(), params.pst.end(), log_pst.begin(),
                 [](double p) { return std::log(p); });
  const double e = eta_of(s, counts, log_ps, log_pst, params.delta);
  const double log_norm = log_geometric_sum(e, count_range_max);
  std::vector<double> out(static_cast<std::size_t>(count_range_max) + 1);
  for (int v = 0; v <= count_range_max; ++v) out[v] = std::exp(v * e - log_norm);
  return out;
}

double pseudo_log_likelihood(std::span<const int> counts, const MrfParams& params,
                             int count_range_max) {
  validate_params(params);
  const auto l = params.ps.size();
  validate_counts(counts, l, count_range_max);
  std::vector<double> log_ps(l), log_pst(params.pst.size());
  std::transform(params.ps.begin(), params.ps.end(), log_ps.begin(),
                 [](double p) { return std::log(p); });
  std::transform(params.pst.begin(), params.pst.end(), log_pst.begin(),
                 [](double p) { return std::log(p); });
  double total = 0.0;
  for (std::size_t s = 0; s < l; ++s) {
    const double e = eta_of(s, counts, log_ps, log_pst, params.delta);
    total += counts[s] * e - log_geometric_sum(e, count_range_max);
  }
  return total;
}

LaplaceInit laplace_init(const MrfHyper& hyper, double delta) {
  if (!(hyper.beta1 > 0.0) || !(hyper.beta2 > 0.0)) {
    throw DomainError("MRF prior scales must be positive");
  }
  const auto l = hyper.q.size();
  if (l < 2 || hyper.q_pair.size() != pair_count(l)) {
    throw DomainError("MRF prior mean vectors have inconsistent sizes");
  }
  LaplaceInit init;
  init.params.ps = hyper.q;
  init.params.pst = hyper.q_pair;
  init.params.delta = delta;
  validate_params(init.params);
  init.var_s.resize(l);
  for (std::size_t s = 0; s < l; ++s) {
    init.var_s[s] = hyper.q[s] * (1.0 - hyper.q[s]) / (hyper.beta1 + 1.0);
  }
  init.var_st.resize(hyper.q_pair.size());
  for (std::size_t k = 0; k < hyper.q_pair.size(); ++k) {
    init.var_st[k] = hyper.q_pair[k] * (1.0 - hyper.q_pair[k]) / (hyper.beta2 + 1.0);
  }
  init.sigma2 = median(init.var_s);
  init.phi2 = median(init.var_st);
  return init;
}

std::span<const double> MrfChain::ps(std::size_t m) const {
  return {ps_samples.data() + m * alphabet, alphabet};
}

std::span<const double> MrfChain::pst(std::size_t m) const {
  const auto np = pair_count(alphabet);
  return {pst_samples.data() + m * np, np};
}

MrfParams MrfChain::sample(std::size_t m, double delta) const {
  const auto a = ps(m);
  const auto b = pst(m);
  return MrfParams{{a.begin(), a.end()}, {b.begin(), b.end()}, delta};
}

std::vector<double> MrfChain::mean_ps() const {
  std::vector<double> mean(alphabet, 0.0);
  for (std::size_t m = 0; m < samples; ++m) {
    for (std::size_t s = 0; s < alphabet; ++s) mean[s] += ps_samples[m * alphabet + s];
  }
  for (double& v : mean) v /= static_cast<double>(std::max<std::size_t>(samples, 1));
  return mean;
}

std::vector<double> MrfChain::mean_pst() const {
  const auto np = pair_count(alphabet);
  std::vector<double> mean(np, 0.0);
  for (std::size_t m = 0; m < samples; ++m) {
    for (std::size_t k = 0; k < np; ++k) mean[k] += pst_samples[m * np + k];
  }
  for (double& v : mean) v /= static_cast<double>(std::max<std::size_t>(samples, 1));
  return mean;
}

std::vector<CountPattern> make_patterns(std::span<const std::vector<int>> counts,
                                        std::span<const int> ranges) {
  if (counts.size() != ranges.size()) throw DomainError("count and range lists differ in length");
  std::map<std::pair<std::vector<int>, int>, double> tally;
  for (std::size_t i = 0; i < counts.size(); ++i) tally[{counts[i], ranges[i]}] += 1.0;
  std::vector<CountPattern> out;
  out.reserve(tally.size());
  for (const auto& [key, w] : tally) out.push_back(CountPattern{key.first, key.second, w});
  return out;
}

MrfChain run_chain(std::span<const CountPattern> data, const MrfHyper& hyper, double delta,
                   const LaplaceInit& init, int iterations, int burn_in, std::uint64_t key,
                   MrfKernel kernel) {
  if (burn_in < 0 || iterations <= burn_in) {
    throw ConfigError("MCMC iterations must exceed the burn-in");
  }
  if (!(delta >= 0.0 && delta <= 1.0)) throw ConfigError("delta must lie in [0, 1]");
  for (const auto& d : data) validate_counts(d.counts, init.params.ps.size(), d.range);
  ChainSampler sampler(data, hyper, delta, init, key, kernel);
  MrfChain chain;
  chain.alphabet = init.params.ps.size();
  const auto kept = static_cast<std::size_t>(iterations - burn_in);
  chain.ps_samples.reserve(kept * chain.alphabet);
  chain.pst_samples.reserve(kept * pair_count(chain.alphabet));
  for (int m = 0; m < iterations; ++m) {
    sampler.sweep();
    if (m >= burn_in) sampler.store(chain);
  }
  chain.single = sampler.single();
  chain.pairwise = sampler.pairwise();
  return chain;
}

MrfChains run_mcmc(std::span<const SiteCounts> sites, const MrfHyper& hyper, double delta,
                   const MrfOptions& options) {
  if (sites.empty()) throw ConfigError("MCMC needs at least one site");
  const int burn_in = options.burn_in < 0 ? options.iterations / 10 : options.burn_in;
  if (options.iterations < 1 || options.iterations <= burn_in) {
    throw ConfigError("MCMC iterations must exceed the burn-in");
  }
  if (!(delta >= 0.0 && delta <= 1.0)) throw ConfigError("delta must lie in [0, 1]");
  const auto init = laplace_init(hyper, delta);

  std::vector<std::vector<int>> pooled, xs, ys;
  std::vector<int> r0, r1, r2;
  for (const auto& s : sites) {
    pooled.push_back(s.pooled());
    xs.push_back(s.x);
    ys.push_back(s.y);
    r0.push_back(s.n1() + s.n2());
    r1.push_back(s.n1());
    r2.push_back(s.n2());
  }
  const auto null_data = make_patterns(pooled, r0);
  const auto t_data = make_patterns(xs, r1);
  const auto nt_data = make_patterns(ys, r2);

  MrfChains chains;
  chains.sigma2 = init.sigma2;
  chains.phi2 = init.phi2;
  chains.delta = delta;
  auto run = [&](const std::vector<CountPattern>& data, std::string_view label, MrfChain& out) {
    out = run_chain(data, hyper, delta, init, options.iterations, burn_in,
                    derive_key(options.seed, label), options.kernel);
  };
  if (options.threads > 1) {
    // Chains are independent; each owns its stream and output slot.
    std::thread a([&] { run(null_data, "mrf-null", chains.null_chain); });
    std::thread b([&] { run(t_data, "mrf-alt-T", chains.alt_T_chain); });
    run(nt_data, "mrf-alt-NT", chains.alt_NT_chain);
    a.join();
    b.join();
  } else {
    run(null_data, "mrf-null", chains.null_chain);
    run(t_data, "mrf-alt-T", chains.alt_T_chain);
    run(nt_data, "mrf-alt-NT", chains.alt_NT_chain);
  }

  auto check = [&](const MrfChain& c, const std::string& name) {
    if (c.single.attempts > 0 && c.single.accepts == 0) {
      chains.warnings.push_back(name + ": no accepted single-residue proposals");
    }
    if (c.pairwise.attempts > 0 && c.pairwise.accepts == 0) {
      chains.warnings.push_back(name + ": no accepted pairwise proposals");
    }
  };
  check(chains.null_chain, "null chain");
  check(chains.alt_T_chain, "alternative T chain");
  check(chains.alt_NT_chain, "alternative NT chain");
  return chains;
}

std::vector<double> lfdr_model2(std::span<const SiteCounts> sites, const MrfChains& chains,
                                double pi0_hat) {
  if (!(pi0_hat >= 0.0 && pi0_hat <= 1.0)) throw DomainError("pi0 must lie in [0, 1]");
  const auto& c0 = chains.null_chain;
  const auto& c1 = chains.alt_T_chain;
  const auto& c2 = chains.alt_NT_chain;
  if (c0.samples == 0 || c1.samples == 0 || c2.samples == 0) {
    throw ConfigError("Model 2 lfdr needs non-empty chains");
  }
  const LogSamples l0(c0), l1(c1), l2(c2);
  const std::size_t m_alt = std::min(c1.samples, c2.samples);
  PatternCache cache0(l0, chains.delta, c0.samples);
  PatternCache cache1(l1, chains.delta, m_alt);
  PatternCache cache2(l2, chains.delta, m_alt);

  std::map<std::pair<std::vector<int>, std::vector<int>>, double> done;
  std::vector<double> out(sites.size());
  std::vector<double> buf(m_alt);
  for (std::size_t i = 0; i < sites.size(); ++i) {
    const auto& site = sites[i];
    auto key = std::make_pair(site.x, site.y);
    if (auto it = done.find(key); it != done.end()) {
      out[i] = it->second;
      continue;
    }
    const int n1 = site.n1();
    const int n2 = site.n2();
    const double log_f0 = log_mean_exp(cache0.get(site.pooled(), n1 + n2));
    const auto& a = cache1.get(site.x, n1);
    const auto& b = cache2.get(site.y, n2);
    for (std::size_t m = 0; m < m_alt; ++m) buf[m] = a[m] + b[m];
    const double log_f1 = log_mean_exp(buf);

    double lfdr;
    if (pi0_hat == 1.0) {
      lfdr = 1.0;
    } else if (pi0_hat == 0.0) {
      lfdr = 0.0;
    } else {
      const double t = std::log1p(-pi0_hat) + log_f1 - std::log(pi0_hat) - log_f0;
      lfdr = t > 0 ? std::exp(-t) / (1.0 + std::exp(-t)) : 1.0 / (1.0 + std::exp(t));
    }
    done.emplace(std::move(key), lfdr);
    out[i] = lfdr;
  }
  return out;
}

double lfdr_model2(const SiteCounts& site, const MrfChains& chains, double pi0_hat) {
  return lfdr_model2(std::span<const SiteCounts>(&site, 1), chains, pi0_hat).front();
}

}  // namespace sigsite
