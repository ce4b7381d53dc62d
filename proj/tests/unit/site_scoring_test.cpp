#include <vector>

#include <gtest/gtest.h>

#include "sigsite/alphabet.hpp"
#include "sigsite/blosum_priors.hpp"
#include "sigsite/error.hpp"
#include "sigsite/simlab.hpp"
#include "sigsite/site_scoring.hpp"

namespace sigsite {
namespace {

SiteCounts site_of(std::initializer_list<std::pair<char, int>> x,
                   std::initializer_list<std::pair<char, int>> y) {
  SiteCounts s{1, std::vector<int>(20, 0), std::vector<int>(20, 0)};
  for (auto [c, n] : x) s.x[*AminoAlphabet::index(c)] += n;
  for (auto [c, n] : y) s.y[*AminoAlphabet::index(c)] += n;
  return s;
}

const ScoreMatrix& blosum() { return bundled_blosum62(); }

TEST(Scores, AlanineTryptophanSite) {
  const auto s = site_of({{'A', 5}}, {{'W', 3}});
  EXPECT_DOUBLE_EQ(independent_score(s, blosum()), 4.96875);
  EXPECT_DOUBLE_EQ(pairwise_score(s, blosum()), -0.75);
  EXPECT_EQ(score_site(s, blosum()).n_types, 2);
}

TEST(Scores, ThreeTypeSite) {
  const auto s = site_of({{'K', 1}, {'T', 4}}, {{'H', 3}});
  EXPECT_NEAR(pairwise_score(s, blosum()), -23.0 * 3.0 / 128.0, 1e-15);
  EXPECT_NEAR(pairwise_score(s, blosum()), -0.5391, 5e-5);
  // Diagonal K 5, T 5, H 8 weighted by (1, 4, 3).
  EXPECT_NEAR(independent_score(s, blosum()), (5.0 / 8.0) * (5 + 20 + 24) / 8.0, 1e-15);
}

TEST(Scores, SingleType) {
  const auto s = site_of({{'L', 5}}, {{'L', 3}});
  EXPECT_DOUBLE_EQ(independent_score(s, blosum()), (7.0 / 8.0) * 4.0);
  EXPECT_EQ(pairwise_score(s, blosum()), 0.0);
  EXPECT_EQ(score_site(s, blosum()).n_types, 1);
}

TEST(Scores, ScaleAndSwapInvariance) {
  for (const auto& ref : reference_sites()) {
    const auto s = reference_site_counts(ref);
    SiteCounts doubled = s;
    for (auto& v : doubled.x) v *= 2;
    for (auto& v : doubled.y) v *= 2;
    SiteCounts swapped{s.site_index, s.y, s.x};
    const auto a = score_site(s, blosum());
    EXPECT_NEAR(score_site(doubled, blosum()).independent_score, a.independent_score, 1e-14);
    EXPECT_NEAR(score_site(doubled, blosum()).pairwise_score, a.pairwise_score, 1e-14);
    EXPECT_EQ(score_site(swapped, blosum()).independent_score, a.independent_score);
    EXPECT_EQ(score_site(swapped, blosum()).pairwise_score, a.pairwise_score);
  }
}

TEST(Scores, BoundedByMatrixRange) {
  const auto sites = make_reference_toy();
  for (const auto& sc : score_sites(sites, blosum())) {
    const double n = sc.n_types;
    EXPECT_GE(sc.independent_score, (1 - n / 8) * 4 - 1e-12);
    EXPECT_LE(sc.independent_score, (1 - n / 8) * 11 + 1e-12);
    EXPECT_GE(sc.pairwise_score, (n / 8) * -4 - 1e-12);
    EXPECT_LE(sc.pairwise_score, (n / 8) * 3 + 1e-12);
  }
}

TEST(Scores, SiteIndexCarried) {
  auto s = site_of({{'A', 1}}, {{'C', 1}});
  s.site_index = 42;
  EXPECT_EQ(score_site(s, blosum()).site_index, 42u);
}

TEST(Scores, Errors) {
  SiteCounts empty{1, std::vector<int>(20, 0), std::vector<int>(20, 0)};
  EXPECT_THROW(independent_score(empty, blosum()), DomainError);
  SiteCounts small{1, {1, 0}, {0, 1}};
  EXPECT_THROW(pairwise_score(small, blosum()), DomainError);
}

}  // namespace
}  // namespace sigsite
