#include "sigsite/simlab.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>

#include "sigsite/alphabet.hpp"
#include "sigsite/blosum_priors.hpp"
#include "sigsite/error.hpp"
#include "sigsite/rng.hpp"

namespace sigsite {

namespace {

void check_simplex(std::span<const double> q) {
  if (q.size() < 2) throw DomainError("simplex needs at least two entries");
  double total = 0.0;
  for (double v : q) {
    if (!(v > 0.0) || !std::isfinite(v)) throw DomainError("simplex entries must be positive");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-9) throw DomainError("simplex entries must sum to one");
}

std::vector<double> scaled(std::span<const double> q, double beta) {
  std::vector<double> a(q.size());
  for (std::size_t j = 0; j < q.size(); ++j) a[j] = beta * q[j];
  return a;
}

std::uint64_t binomial_u64(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (int i = 1; i <= k; ++i) r = r * static_cast<std::uint64_t>(n - k + i) / i;
  return r;
}

// log of a directly summed sum_{v=0..n} exp(v eta), independent of the
// closed form used by the MRF module.
double log_direct_sum(double eta, int n) {
  const double top = eta > 0 ? n * eta : 0.0;
  double acc = 0.0;
  for (int v = 0; v <= n; ++v) acc += std::exp(v * eta - top);
  return top + std::log(acc);
}

struct PatternData {
  std::vector<int> counts;
  int range;
};

double oracle_pl(const PatternData& d, std::span<const double> ps, std::span<const double> pst,
                 double delta) {
  const auto l = ps.size();
  double total = 0.0;
  for (std::size_t s = 0; s < l; ++s) {
    double eta = std::log(ps[s]);
    for (std::size_t t = 0; t < l; ++t) {
      if (t == s) continue;
      eta += delta * std::log(pst[pair_index(s, t, l)]) * d.counts[t];
    }
    total += d.counts[s] * eta - log_direct_sum(eta, d.range);
  }
  return total;
}

double log_dirichlet_density(std::span<const double> p, double beta, std::span<const double> q) {
  double lp = std::lgamma(beta);
  for (std::size_t j = 0; j < p.size(); ++j) {
    const double a = beta * q[j];
    lp += (a - 1.0) * std::log(p[j]) - std::lgamma(a);
  }
  return lp;
}

// Midpoint grid over the open simplex of dimension 2 or 3, with the log
// Jacobian of the square-to-simplex map as weight.
struct SimplexPoint {
  std::vector<double> p;
  double log_jac;
};

std::vector<SimplexPoint> simplex_grid(std::size_t dim, int g) {
  std::vector<SimplexPoint> pts;
  if (dim == 1) {
    pts.push_back({{1.0}, 0.0});
    return pts;
  }
  for (int i = 0; i < g; ++i) {
    const double u = (i + 0.5) / g;
    if (dim == 2) {
      pts.push_back({{u, 1.0 - u}, 0.0});
      continue;
    }
    for (int j = 0; j < g; ++j) {
      const double v = (j + 0.5) / g;
      pts.push_back({{u, (1.0 - u) * v, (1.0 - u) * (1.0 - v)}, std::log1p(-u)});
    }
  }
  return pts;
}

// Streaming log-sum-exp accumulator.
struct LogSum {
  double top = -std::numeric_limits<double>::infinity();
  double acc = 0.0;

  void add(double x) {
    if (x <= top) {
      acc += std::exp(x - top);
    } else {
      acc = acc * std::exp(top - x) + 1.0;
      top = x;
    }
  }
  double value() const { return top + std::log(acc); }
};

struct ChainQuadrature {
  std::vector<double> hist;
  std::vector<double> log_expect;  // per evaluation pattern
};

// Posterior histogram of p_1 and log E[PL(site)] for every site in `data`.
ChainQuadrature integrate(const ReducedMrfModel& m, const std::vector<PatternData>& data) {
  const auto l = m.q.size();
  const auto single = simplex_grid(l, m.grid_points);
  const auto pairs = simplex_grid(pair_count(l), m.grid_points);
  LogSum total;
  std::vector<LogSum> bins(static_cast<std::size_t>(m.bins));
  std::vector<LogSum> expect(data.size());
  std::vector<double> pl(data.size());
  for (const auto& a : single) {
    const double prior_a = log_dirichlet_density(a.p, m.beta1, m.q) + a.log_jac;
    auto bin = static_cast<std::size_t>(a.p[0] * m.bins);
    bin = std::min(bin, bins.size() - 1);
    for (const auto& b : pairs) {
      double w = prior_a + b.log_jac;
      if (b.p.size() > 1) w += log_dirichlet_density(b.p, m.beta2, m.q_pair);
      for (std::size_t e = 0; e < data.size(); ++e) {
        pl[e] = oracle_pl(data[e], a.p, b.p, m.delta);
        w += pl[e];
      }
      total.add(w);
      bins[bin].add(w);
      for (std::size_t e = 0; e < data.size(); ++e) expect[e].add(w + pl[e]);
    }
  }
  ChainQuadrature out;
  const double norm = total.value();
  for (const auto& b : bins) out.hist.push_back(b.acc > 0.0 ? std::exp(b.value() - norm) : 0.0);
  for (const auto& e : expect) out.log_expect.push_back(e.value() - norm);
  return out;
}

std::vector<int> parse_residues(const char* text) {
  std::vector<int> counts(kAminoCount, 0);
  const std::string_view s(text);
  std::size_t i = 0;
  while (i < s.size()) {
    if (s[i] == ' ') {
      ++i;
      continue;
    }
    const auto idx = AminoAlphabet::index(s[i]);
    if (!idx) throw FormatError("bad residue in reference configuration");
    ++i;
    int c = 0;
    while (i < s.size() && s[i] >= '0' && s[i] <= '9') c = 10 * c + (s[i++] - '0');
    counts[*idx] += c;
  }
  return counts;
}

constexpr std::array<ReferenceSite, 26> kReferenceSites{{
    {142, "D1 K1 F1 P2", "H3", 0.0892, 0.0429},
    {759, "N1 D1 Q2 T1", "H3", 0.0892, 0.0429},
    {7, "D2 K1 P2", "Q3", 0.0535, 0.0451},
    {262, "E2 P1 V2", "I3", 0.0535, 0.0454},
    {585, "G1 P2 V2", "I3", 0.0535, 0.0455},
    {245, "K1 T4", "H3", 0.0178, 0.0472},
    {627, "K3 S2", "T3", 0.0357, 0.0473},
    {327, "K4 S1", "T3", 0.0178, 0.0473},
    {222, "H3 P2", "F3", 0.0357, 0.0473},
    {111, "G1 T4", "S3", 0.0178, 0.0473},
    {138, "N1 K4", "E3", 0.0178, 0.0474},
    {776, "N4 T1", "D3", 0.0178, 0.0474},
    {449, "A3 T2", "W3", 0.0357, 0.0474},
    {749, "A4 W1", "G3", 0.0178, 0.0476},
    {699, "G4 W1", "I3", 0.0178, 0.0477},
    {738, "H4 P1", "L3", 0.0178, 0.0478},
    {463, "I5", "M3", 0.0178, 0.0493},
    {879, "P5", "H3", 0.0178, 0.0495},
    {492, "A5", "S3", 0.0178, 0.0496},
    {894, "D5", "F3", 0.0178, 0.0496},
    {582, "K5", "S3", 0.0178, 0.0496},
    {617, "N5", "D3", 0.0178, 0.0498},
    {235, "A5", "W3", 0.0178, 0.0498},
    {389, "G5", "W3", 0.0178, 0.0499},
    {491, "I5", "G3", 0.0178, 0.0499},
    {893, "I5", "G3", 0.0178, 0.0499},
}};

}  // namespace

std::vector<double> sample_dirichlet(std::span<const double> alpha, std::uint64_t key) {
  Stream stream(key);
  std::vector<double> logg(alpha.size());
  for (std::size_t j = 0; j < alpha.size(); ++j) {
    const double a = alpha[j];
    if (!(a > 0.0)) throw DomainError("Dirichlet parameters must be positive");
    if (a < 1.0) {
      // G(a) = G(a + 1) U^(1/a)
      const double g = std::gamma_distribution<double>(a + 1.0, 1.0)(stream);
      logg[j] = std::log(g) + std::log(stream.uniform()) / a;
    } else {
      logg[j] = std::log(std::gamma_distribution<double>(a, 1.0)(stream));
    }
  }
  const double mx = *std::max_element(logg.begin(), logg.end());
  std::vector<double> p(alpha.size());
  double total = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    p[j] = std::exp(logg[j] - mx);
    total += p[j];
  }
  for (double& v : p) v /= total;
  return p;
}

std::vector<int> sample_multinomial(int n, std::span<const double> p, std::uint64_t key) {
  if (n < 0) throw DomainError("multinomial size must be nonnegative");
  Stream stream(key);
  std::vector<double> tail(p.size() + 1, 0.0);
  for (std::size_t j = p.size(); j-- > 0;) tail[j] = tail[j + 1] + p[j];
  std::vector<int> out(p.size(), 0);
  int left = n;
  for (std::size_t j = 0; j + 1 < p.size() && left > 0; ++j) {
    if (tail[j] <= 0.0) break;
    const double pj = std::clamp(p[j] / tail[j], 0.0, 1.0);
    out[j] = std::binomial_distribution<int>(left, pj)(stream);
    left -= out[j];
  }
  if (!p.empty()) out.back() += left;
  return out;
}

SyntheticDataset simulate_dataset(const SimConfig& config) {
  SyntheticDataset ds;
  ds.config = config;
  if (ds.config.q.empty()) ds.config.q = bundled_priors().q;
  const auto& q = ds.config.q;
  check_simplex(q);
  if (!(config.pi0 >= 0.0 && config.pi0 <= 1.0)) throw DomainError("pi0 must lie in [0, 1]");
  if (!(config.beta0 > 0.0 && config.betaT > 0.0 && config.betaN > 0.0)) {
    throw DomainError("Dirichlet scales must be positive");
  }
  if (config.n1 < 1 || config.n2 < 1) throw DomainError("group sizes must be positive");
  const auto a0 = scaled(q, config.beta0);
  const auto aT = scaled(q, config.betaT);
  const auto aN = scaled(q, config.betaN);
  ds.sites.resize(config.sites);
  ds.is_null.resize(config.sites);
  for (std::size_t i = 0; i < config.sites; ++i) {
    const auto seed = config.seed;
    Stream label(derive_key(seed, "sim-label", {i}));
    const bool null = label.uniform() < config.pi0;
    auto& site = ds.sites[i];
    site.site_index = i + 1;
    if (null) {
      const auto p = sample_dirichlet(a0, derive_key(seed, "sim-p0", {i}));
      site.x = sample_multinomial(config.n1, p, derive_key(seed, "sim-x", {i}));
      site.y = sample_multinomial(config.n2, p, derive_key(seed, "sim-y", {i}));
    } else {
      const auto pT = sample_dirichlet(aT, derive_key(seed, "sim-pT", {i}));
      const auto pN = sample_dirichlet(aN, derive_key(seed, "sim-pN", {i}));
      site.x = sample_multinomial(config.n1, pT, derive_key(seed, "sim-x", {i}));
      site.y = sample_multinomial(config.n2, pN, derive_key(seed, "sim-y", {i}));
    }
    ds.is_null[i] = null;
  }
  return ds;
}

void enumerate_fixed_margin_tables(std::span<const int> row_sums, std::span<const int> col_sums,
                                   const std::function<void(std::span<const int>, double)>& visit,
                                   std::uint64_t budget) {
  if (row_sums.size() != 2) throw DomainError("tables must have exactly two rows");
  for (int v : row_sums) {
    if (v < 0) throw DomainError("row sums must be nonnegative");
  }
  int total = 0;
  for (int c : col_sums) {
    if (c < 0) throw DomainError("column sums must be nonnegative");
    total += c;
  }
  if (row_sums[0] + row_sums[1] != total) throw DomainError("row and column sums disagree");
  if (total > 60) throw ResourceError("tables with more than 60 entries are not supported");

  const std::uint64_t denom = binomial_u64(total, row_sums[0]);
  const auto s = col_sums.size();
  std::vector<int> row1(s, 0);
  std::uint64_t visited = 0;
  // Odometer over the first row, each cell in 0..col_sums[j].
  while (true) {
    if (++visited > budget) throw ResourceError("table enumeration exceeds the budget");
    if (std::accumulate(row1.begin(), row1.end(), 0) == row_sums[0]) {
      std::uint64_t num = 1;
      for (std::size_t j = 0; j < s; ++j) num *= binomial_u64(col_sums[j], row1[j]);
      visit(row1, static_cast<double>(num) / static_cast<double>(denom));
    }
    std::size_t j = 0;
    while (j < s && row1[j] == col_sums[j]) row1[j++] = 0;
    if (j == s) break;
    ++row1[j];
  }
}

double fisher_exact_oracle(std::span<const int> row1, std::span<const int> row2,
                           double tie_tolerance) {
  if (row1.size() != row2.size()) throw DomainError("rows differ in length");
  std::vector<int> cols;
  std::vector<int> obs;
  int r1 = 0;
  int r2 = 0;
  for (std::size_t j = 0; j < row1.size(); ++j) {
    r1 += row1[j];
    r2 += row2[j];
    if (row1[j] + row2[j] == 0) continue;
    cols.push_back(row1[j] + row2[j]);
    obs.push_back(row1[j]);
  }
  if (r1 == 0 || r2 == 0) throw DomainError("both groups need at least one observation");
  const std::array<int, 2> rows{r1, r2};
  double p_obs = 0.0;
  enumerate_fixed_margin_tables(rows, cols, [&](std::span<const int> t, double p) {
    if (std::equal(t.begin(), t.end(), obs.begin())) p_obs = p;
  });
  double p = 0.0;
  enumerate_fixed_margin_tables(rows, cols, [&](std::span<const int>, double pt) {
    if (pt <= p_obs * (1.0 + tie_tolerance)) p += pt;
  });
  return std::min(p, 1.0);
}

GridPosterior grid_posterior_oracle(const ReducedMrfModel& m) {
  const auto l = m.q.size();
  if (l != 2 && l != 3) throw ConfigError("grid oracle supports alphabets of two or three residues");
  if (m.q_pair.size() != pair_count(l)) throw ConfigError("pair prior has the wrong length");
  if (m.grid_points < 50) throw ConfigError("grid must have at least 50 points per dimension");
  if (m.bins < 1) throw ConfigError("histogram needs at least one bin");
  check_simplex(m.q);
  if (l == 3) check_simplex(m.q_pair);

  std::vector<PatternData> null_data, t_data, nt_data;
  for (const auto& s : m.sites) {
    if (s.x.size() != l || s.y.size() != l) throw DomainError("site does not match the alphabet");
    null_data.push_back({s.pooled(), s.n1() + s.n2()});
    t_data.push_back({s.x, s.n1()});
    nt_data.push_back({s.y, s.n2()});
  }
  const auto q0 = integrate(m, null_data);
  const auto qT = integrate(m, t_data);
  const auto qN = integrate(m, nt_data);

  GridPosterior out;
  out.hist_null = q0.hist;
  out.hist_T = qT.hist;
  out.hist_NT = qN.hist;
  for (std::size_t i = 0; i < m.sites.size(); ++i) {
    const double lf0 = q0.log_expect[i];
    const double lf1 = qT.log_expect[i] + qN.log_expect[i];
    out.log_f0.push_back(lf0);
    out.log_f1.push_back(lf1);
    const double a = m.pi0 * std::exp(lf0);
    const double b = (1.0 - m.pi0) * std::exp(lf1);
    out.lfdr.push_back(a / (a + b));
  }
  return out;
}

std::span<const ReferenceSite> reference_sites() { return kReferenceSites; }

SiteCounts reference_site_counts(const ReferenceSite& site) {
  SiteCounts out;
  out.site_index = site.position;
  out.x = parse_residues(site.transmitted);
  out.y = parse_residues(site.non_transmitted);
  return out;
}

std::vector<SiteCounts> make_reference_toy(std::uint64_t seed) {
  constexpr std::size_t kLength = 900;
  // Filler follows the two-group mixture at the reference fit.
  constexpr double kPi0 = 0.955;
  constexpr double kBeta0 = 0.2596;
  constexpr double kBetaT = 0.2730;
  constexpr double kBetaN = 0.0648;
  std::set<std::size_t> skipped;
  for (std::size_t k = 0; k < 88; ++k) skipped.insert(10 * k + 4);
  std::vector<const ReferenceSite*> at(kLength + 1, nullptr);
  for (const auto& r : kReferenceSites) at[r.position] = &r;

  const auto& q = bundled_priors().q;
  const auto a0 = scaled(q, kBeta0);
  const auto aT = scaled(q, kBetaT);
  const auto aN = scaled(q, kBetaN);
  std::vector<SiteCounts> sites;
  sites.reserve(kLength - skipped.size());
  for (std::size_t pos = 1; pos <= kLength; ++pos) {
    if (skipped.count(pos)) continue;
    if (at[pos] != nullptr) {
      sites.push_back(reference_site_counts(*at[pos]));
      continue;
    }
    SiteCounts s;
    s.site_index = pos;
    Stream label(derive_key(seed, "toy-label", {pos}));
    if (label.uniform() < kPi0) {
      const auto p = sample_dirichlet(a0, derive_key(seed, "toy-p", {pos}));
      s.x = sample_multinomial(5, p, derive_key(seed, "toy-x", {pos}));
      s.y = sample_multinomial(3, p, derive_key(seed, "toy-y", {pos}));
    } else {
      const auto pT = sample_dirichlet(aT, derive_key(seed, "toy-pT", {pos}));
      const auto pN = sample_dirichlet(aN, derive_key(seed, "toy-pN", {pos}));
      s.x = sample_multinomial(5, pT, derive_key(seed, "toy-x", {pos}));
      s.y = sample_multinomial(3, pN, derive_key(seed, "toy-y", {pos}));
    }
    sites.push_back(std::move(s));
  }
  return sites;
}

}  // namespace sigsite
