#include <cmath>
#include <map>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "sigsite/blosum_priors.hpp"
#include "sigsite/error.hpp"
#include "sigsite/model1_eb.hpp"
#include "sigsite/rng.hpp"
#include "sigsite/simlab.hpp"

namespace sigsite {
namespace {

TEST(Enumeration, FiveThreeMargins) {
  const std::vector<int> rows{5, 3}, cols{5, 3};
  std::vector<double> probs;
  enumerate_fixed_margin_tables(rows, cols, [&](std::span<const int>, double p) {
    probs.push_back(p);
  });
  ASSERT_EQ(probs.size(), 4u);
  EXPECT_NEAR(*std::min_element(probs.begin(), probs.end()), 1.0 / 56.0, 1e-15);
  EXPECT_NEAR(std::accumulate(probs.begin(), probs.end(), 0.0), 1.0, 1e-12);
}

TEST(Enumeration, SingleCell) {
  const std::vector<int> rows{1, 0}, cols{1};
  int n = 0;
  enumerate_fixed_margin_tables(rows, cols, [&](std::span<const int> r, double p) {
    ++n;
    EXPECT_EQ(r[0], 1);
    EXPECT_EQ(p, 1.0);
  });
  EXPECT_EQ(n, 1);
}

TEST(Enumeration, ClosureAndMargins) {
  const std::vector<int> rows{5, 3}, cols{3, 2, 3};
  double total = 0.0;
  enumerate_fixed_margin_tables(rows, cols, [&](std::span<const int> r, double p) {
    EXPECT_EQ(std::accumulate(r.begin(), r.end(), 0), 5);
    for (std::size_t j = 0; j < r.size(); ++j) EXPECT_LE(r[j], cols[j]);
    total += p;
  });
  EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(Enumeration, Errors) {
  const std::vector<int> rows{5, 3}, bad{3, 3};
  auto noop = [](std::span<const int>, double) {};
  EXPECT_THROW(enumerate_fixed_margin_tables(rows, bad, noop), DomainError);
  const std::vector<int> big_rows{20, 20};
  const std::vector<int> big_cols(20, 2);
  EXPECT_THROW(enumerate_fixed_margin_tables(big_rows, big_cols, noop, 1000), ResourceError);
}

TEST(Simulate, AllNullWhenPiZeroIsOne) {
  SimConfig cfg;
  cfg.pi0 = 1.0;
  cfg.sites = 300;
  const auto d = simulate_dataset(cfg);
  for (bool b : d.is_null) EXPECT_TRUE(b);
  for (const auto& s : d.sites) {
    EXPECT_EQ(s.n1(), 5);
    EXPECT_EQ(s.n2(), 3);
  }
}

TEST(Simulate, DeterministicAndSiteLocal) {
  SimConfig cfg;
  cfg.sites = 100;
  cfg.seed = 77;
  const auto a = simulate_dataset(cfg);
  const auto b = simulate_dataset(cfg);
  cfg.sites = 50;
  const auto c = simulate_dataset(cfg);
  for (std::size_t i = 0; i < 100; ++i) {
    EXPECT_EQ(a.sites[i].x, b.sites[i].x);
    EXPECT_EQ(a.sites[i].y, b.sites[i].y);
  }
  for (std::size_t i = 0; i < 50; ++i) EXPECT_EQ(a.sites[i].x, c.sites[i].x);
}

TEST(Simulate, NullFractionNearPiZero) {
  SimConfig cfg;
  cfg.sites = 20000;
  cfg.pi0 = 0.8;
  const auto d = simulate_dataset(cfg);
  const double frac =
      static_cast<double>(std::count(d.is_null.begin(), d.is_null.end(), true)) / cfg.sites;
  EXPECT_NEAR(frac, 0.8, 0.015);
}

TEST(Simulate, PooledCountsFollowDirichletMultinomial) {
  SimConfig cfg;
  cfg.q = {0.5, 0.3, 0.2};
  cfg.pi0 = 1.0;
  cfg.beta0 = 1.5;
  cfg.n1 = 2;
  cfg.n2 = 1;
  cfg.sites = 50000;
  cfg.seed = 123;
  const auto d = simulate_dataset(cfg);
  std::map<std::vector<int>, double> observed;
  for (const auto& s : d.sites) observed[s.pooled()] += 1.0;
  double chi2 = 0.0;
  int cells = 0;
  for (int a = 0; a <= 3; ++a) {
    for (int b = 0; a + b <= 3; ++b) {
      const std::vector<int> z{a, b, 3 - a - b};
      const double expected = cfg.sites * std::exp(log_dirichlet_multinomial(z, 1.5, cfg.q));
      const double o = observed[z];
      chi2 += (o - expected) * (o - expected) / expected;
      ++cells;
    }
  }
  ASSERT_EQ(cells, 10);
  // Upper 0.001 quantile of chi-square with 9 degrees of freedom.
  EXPECT_LT(chi2, 27.877);
}

TEST(Simulate, LargeScaleDegeneratesToMultinomialOfQ) {
  SimConfig cfg;
  cfg.pi0 = 1.0;
  cfg.beta0 = 1e6;
  cfg.sites = 100000;
  cfg.seed = 5;
  const auto d = simulate_dataset(cfg);
  std::vector<double> freq(20, 0.0);
  double total = 0.0;
  for (const auto& s : d.sites) {
    for (std::size_t j = 0; j < 20; ++j) freq[j] += s.x[j] + s.y[j];
    total += 8.0;
  }
  const auto& q = bundled_priors().q;
  for (std::size_t j = 0; j < 20; ++j) EXPECT_NEAR(freq[j] / total, q[j], 0.01);
}

TEST(Simulate, Errors) {
  SimConfig cfg;
  cfg.q = {0.5, 0.6};
  EXPECT_THROW(simulate_dataset(cfg), DomainError);
  cfg.q = {};
  cfg.pi0 = 1.2;
  EXPECT_THROW(simulate_dataset(cfg), DomainError);
}

TEST(Samplers, DirichletWithTinyShapes) {
  const std::vector<double> alpha(20, 0.003);
  for (std::uint64_t k = 0; k < 200; ++k) {
    const auto p = sample_dirichlet(alpha, derive_key(1, "tiny", {k}));
    double s = 0.0;
    for (double v : p) {
      EXPECT_TRUE(std::isfinite(v));
      EXPECT_GE(v, 0.0);
      s += v;
    }
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(Samplers, DirichletMean) {
  const std::vector<double> alpha{1.0, 2.0, 7.0};
  std::vector<double> mean(3, 0.0);
  const int n = 20000;
  for (int k = 0; k < n; ++k) {
    const auto p = sample_dirichlet(alpha, derive_key(2, "mean", {std::uint64_t(k)}));
    for (int j = 0; j < 3; ++j) mean[j] += p[j] / n;
  }
  EXPECT_NEAR(mean[0], 0.1, 0.005);
  EXPECT_NEAR(mean[2], 0.7, 0.005);
}

TEST(Samplers, MultinomialSumsToN) {
  const std::vector<double> p{0.2, 0.0, 0.5, 0.3};
  for (std::uint64_t k = 0; k < 100; ++k) {
    const auto c = sample_multinomial(8, p, derive_key(3, "mn", {k}));
    EXPECT_EQ(std::accumulate(c.begin(), c.end(), 0), 8);
    EXPECT_EQ(c[1], 0);
  }
}

TEST(GridOracle, RejectsCoarseGridAndLargeAlphabet) {
  ReducedMrfModel m;
  m.q = {0.5, 0.5};
  m.q_pair = {1.0};
  m.grid_points = 49;
  EXPECT_THROW(grid_posterior_oracle(m), ConfigError);
  m.grid_points = 50;
  m.q = {0.25, 0.25, 0.25, 0.25};
  m.q_pair = std::vector<double>(6, 1.0 / 6.0);
  EXPECT_THROW(grid_posterior_oracle(m), ConfigError);
}

TEST(GridOracle, NoDataReturnsPrior) {
  ReducedMrfModel m;
  m.q = {0.6, 0.4};
  m.q_pair = {1.0};
  m.beta1 = 5.0;
  m.grid_points = 400;
  const auto post = grid_posterior_oracle(m);
  // Beta(3, 2) mass per bin by fine midpoint integration.
  const double log_norm = std::lgamma(5.0) - std::lgamma(3.0) - std::lgamma(2.0);
  for (int b = 0; b < 50; ++b) {
    double mass = 0.0;
    const int sub = 2000;
    for (int k = 0; k < sub; ++k) {
      const double u = (b + (k + 0.5) / sub) / 50.0;
      mass += std::exp(log_norm + 2.0 * std::log(u) + std::log1p(-u)) / (50.0 * sub);
    }
    EXPECT_NEAR(post.hist_null[b], mass, 1e-4) << b;
    EXPECT_NEAR(post.hist_T[b], mass, 1e-4) << b;
  }
}

TEST(GridOracle, RefinementChangesLfdrLittle) {
  ReducedMrfModel m;
  m.q = {0.5, 0.5};
  m.q_pair = {1.0};
  m.beta1 = 4.0;
  m.beta2 = 4.0;
  m.delta = 0.1;
  m.sites = {SiteCounts{1, {5, 0}, {0, 3}}, SiteCounts{2, {3, 2}, {2, 1}},
             SiteCounts{3, {4, 1}, {1, 2}}};
  m.grid_points = 200;
  const auto a = grid_posterior_oracle(m);
  m.grid_points = 400;
  const auto b = grid_posterior_oracle(m);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(a.lfdr[i], b.lfdr[i], 1e-3);
}

TEST(Reference, TwentySixConfigurations) {
  const auto refs = reference_sites();
  ASSERT_EQ(refs.size(), 26u);
  for (const auto& r : refs) {
    const auto s = reference_site_counts(r);
    EXPECT_EQ(s.n1(), 5) << r.position;
    EXPECT_EQ(s.n2(), 3) << r.position;
    EXPECT_EQ(s.site_index, r.position);
    EXPECT_LE(r.lfdr, 0.0501);
  }
}

TEST(Reference, ToyEmbedsReferenceSites) {
  const auto toy = make_reference_toy();
  ASSERT_EQ(toy.size(), 812u);
  std::map<std::size_t, const SiteCounts*> by_pos;
  for (const auto& s : toy) by_pos[s.site_index] = &s;
  ASSERT_EQ(by_pos.size(), 812u);
  for (const auto& r : reference_sites()) {
    ASSERT_TRUE(by_pos.count(r.position)) << r.position;
    const auto ref = reference_site_counts(r);
    EXPECT_EQ(by_pos[r.position]->x, ref.x);
    EXPECT_EQ(by_pos[r.position]->y, ref.y);
  }
  const auto again = make_reference_toy();
  for (std::size_t i = 0; i < toy.size(); ++i) EXPECT_EQ(toy[i].x, again[i].x);
}

}  // namespace
}  // namespace sigsite
