#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "caradj/models.hpp"
#include "caradj/randomization.hpp"

using namespace caradj;

namespace {

RandomizationScheme scheme(SchemeKind kind, double pi = 0.5) {
  RandomizationScheme s;
  s.kind = kind;
  s.pi = pi;
  return s;
}

std::vector<Unit> random_units(int n, int strata, std::uint64_t seed) {
  CounterRng rng{StreamKey(seed)};
  std::vector<Unit> u(static_cast<std::size_t>(n));
  for (auto& x : u) {
    x.stratum = static_cast<int>(rng.below(static_cast<std::uint64_t>(strata)));
    x.margins = {x.stratum % 2, x.stratum / 2};
  }
  return u;
}

}  // namespace

TEST(Randomization, SchemeCodesRoundTrip) {
  for (auto k : {SchemeKind::Simple, SchemeKind::StratifiedBlock, SchemeKind::StratifiedBiasedCoin,
                 SchemeKind::WeiAdaptive, SchemeKind::PocockSimon})
    EXPECT_EQ(parse_scheme(scheme_code(k)), k);
  EXPECT_THROW(parse_scheme("coin"), ConfigError);
}

TEST(Randomization, Validation) {
  auto s = scheme(SchemeKind::StratifiedBlock);
  s.block_size = 5;
  EXPECT_THROW(s.validate(), ConfigError);
  s = scheme(SchemeKind::StratifiedBiasedCoin);
  s.bias = 0.5;
  EXPECT_THROW(s.validate(), ConfigError);
  EXPECT_THROW(scheme(SchemeKind::PocockSimon, 1.0).validate(), ConfigError);
  EXPECT_NO_THROW(scheme(SchemeKind::Simple, 1.0).validate());
}

TEST(Randomization, CompleteBlocksAreBalanced) {
  const auto units = random_units(3000, 4, 1);
  const auto a = assign_all(scheme(SchemeKind::StratifiedBlock), units, 2);
  std::vector<std::vector<int>> per(4);
  for (std::size_t i = 0; i < a.size(); ++i) per[units[i].stratum].push_back(a[i]);
  for (const auto& seq : per)
    for (std::size_t b = 0; b + 6 <= seq.size(); b += 6)
      EXPECT_EQ(std::accumulate(seq.begin() + b, seq.begin() + b + 6, 0), 3);
}

TEST(Randomization, UnequalBlocksGiveExactCount) {
  auto s = scheme(SchemeKind::StratifiedBlock, 2.0 / 3.0);
  const std::vector<Unit> units(600, Unit{0, {}});
  const auto a = assign_all(s, units, 3);
  EXPECT_EQ(std::accumulate(a.begin(), a.end(), 0), 400);
}

TEST(Randomization, SimpleWithPiOne) {
  const auto a = assign_all(scheme(SchemeKind::Simple, 1.0), random_units(50, 2, 4), 5);
  EXPECT_EQ(std::accumulate(a.begin(), a.end(), 0), 50);
}

TEST(Randomization, BiasedCoinProbabilities) {
  AssignmentState st(scheme(SchemeKind::StratifiedBiasedCoin));
  const Unit u{0, {}};
  EXPECT_DOUBLE_EQ(st.treatment_probability(u), 0.5);
  st.set_stratum_counts(0, {3, 1});
  EXPECT_DOUBLE_EQ(st.treatment_probability(u), 0.25);
  st.set_stratum_counts(0, {1, 3});
  EXPECT_DOUBLE_EQ(st.treatment_probability(u), 0.75);
  st.set_stratum_counts(0, {2, 2});
  EXPECT_DOUBLE_EQ(st.treatment_probability(u), 0.5);
}

TEST(Randomization, WeiUrnProbability) {
  AssignmentState st(scheme(SchemeKind::WeiAdaptive));
  const Unit u{0, {}};
  EXPECT_DOUBLE_EQ(st.treatment_probability(u), 0.5);
  st.set_stratum_counts(0, {3, 1});
  // deficit (3 - 2) / 4 = 0.25, so 0.5 - 0.125.
  EXPECT_DOUBLE_EQ(st.treatment_probability(u), 0.375);
}

TEST(Randomization, MinimizationHandExample) {
  auto s = scheme(SchemeKind::PocockSimon);
  s.bias = 0.75;
  AssignmentState st(s);
  const Unit prior{0, {0, 0}};
  st.record(prior, 1);
  const Unit newcomer{0, {0, 0}};
  // Joining treatment: each margin goes to (2 treated, 0 control), imbalance
  // |2/0.5 - 0/0.5| = 4, total 8. Joining control: (1, 1) per margin, total 0.
  EXPECT_DOUBLE_EQ(st.minimization_score(newcomer, 1), 8.0);
  EXPECT_DOUBLE_EQ(st.minimization_score(newcomer, 0), 0.0);
  EXPECT_DOUBLE_EQ(st.treatment_probability(newcomer), 0.25);
  // A newcomer sharing no level with the prior unit faces a tie.
  EXPECT_DOUBLE_EQ(st.treatment_probability(Unit{0, {1, 1}}), 0.5);
}

TEST(Randomization, MinimizationOverModelThreeMargins) {
  const int n = 5000;
  const auto pop = generate(ModelSpec::model3(), n, StreamKey(6));
  auto s = scheme(SchemeKind::PocockSimon);
  const auto a = assign_all(s, pop.units(), 7);
  const double frac = std::accumulate(a.begin(), a.end(), 0) / static_cast<double>(n);
  EXPECT_NEAR(frac, 0.5, 3 * std::sqrt(0.25 / n));
}

TEST(Randomization, BlockPrefixImbalanceBounded) {
  const auto units = random_units(20000, 6, 8);
  for (double pi : {0.5, 2.0 / 3.0}) {
    const auto a = assign_all(scheme(SchemeKind::StratifiedBlock, pi), units, 9);
    // Within a block of 6 the running deviation from pi * count never
    // exceeds the worst partial prefix of the block.
    const int ones = static_cast<int>(std::lround(6 * pi));
    double bound = 0.0;
    for (int j = 0; j <= 6; ++j)
      bound = std::max({bound, std::abs(std::min(j, ones) - pi * j), std::abs(std::max(0, j - (6 - ones)) - pi * j)});
    std::vector<int> n1(6, 0), nk(6, 0);
    for (std::size_t i = 0; i < a.size(); ++i) {
      const int k = units[i].stratum;
      n1[k] += a[i];
      ++nk[k];
      ASSERT_LE(std::abs(n1[k] - pi * nk[k]), bound + 1e-12);
    }
  }
}

TEST(Randomization, DeterministicAndPrefixStable) {
  const auto units = random_units(500, 3, 10);
  for (auto kind : {SchemeKind::Simple, SchemeKind::StratifiedBlock, SchemeKind::StratifiedBiasedCoin,
                    SchemeKind::WeiAdaptive, SchemeKind::PocockSimon}) {
    const auto a = assign_all(scheme(kind), units, 11);
    EXPECT_EQ(a, assign_all(scheme(kind), units, 11));
    const std::vector<Unit> head(units.begin(), units.begin() + 200);
    const auto b = assign_all(scheme(kind), head, 11);
    EXPECT_TRUE(std::equal(b.begin(), b.end(), a.begin())) << scheme_code(kind);
  }
}

TEST(Randomization, AdaptiveSchemesBalanceStrata) {
  const auto units = random_units(4000, 4, 12);
  for (auto kind : {SchemeKind::StratifiedBiasedCoin, SchemeKind::WeiAdaptive, SchemeKind::StratifiedBlock}) {
    const auto a = assign_all(scheme(kind), units, 13);
    std::vector<int> n1(4, 0), nk(4, 0);
    for (std::size_t i = 0; i < a.size(); ++i) {
      n1[units[i].stratum] += a[i];
      ++nk[units[i].stratum];
    }
    for (int k = 0; k < 4; ++k) EXPECT_NEAR(n1[k] / static_cast<double>(nk[k]), 0.5, 0.02) << scheme_code(kind);
  }
}
