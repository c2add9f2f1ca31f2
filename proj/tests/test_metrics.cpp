#include "congruence/metrics.hpp"

#include <gtest/gtest.h>

#include <chrono>
#include <random>

#include "oracles.hpp"

using namespace congruence;

using Vec = std::vector<double>;

TEST(Cosine, HandValues) {
  EXPECT_DOUBLE_EQ(cosine(Vec{5, 5, 5}, Vec{5, 5, 5}), 1.0);
  EXPECT_NEAR(cosine(Vec{1, 2, 3}, Vec{3, 2, 1}), 10.0 / 14.0, 1e-15);
  EXPECT_NEAR(cosine(Vec{1, 1}, Vec{1, 7}), 0.8, 1e-15);
}

TEST(Cosine, Errors) {
  EXPECT_THROW(cosine(Vec{1, 2}, Vec{1}), PreconditionError);
  EXPECT_THROW(cosine(Vec{}, Vec{}), PreconditionError);
  EXPECT_THROW(cosine(Vec{0, 0}, Vec{1, 2}), DegenerateError);
}

TEST(Cosine, ScaleInvariant) {
  std::mt19937_64 g(11);
  for (int t = 0; t < 200; ++t) {
    const auto x = oracle::likert_vector(g, 1 + t % 10);
    const auto y = oracle::likert_vector(g, x.size());
    Vec ax = x, by = y;
    for (auto& v : ax) v *= 2.5;
    for (auto& v : by) v *= 0.3;
    EXPECT_NEAR(cosine(ax, by), cosine(x, y), 1e-12);
  }
}

TEST(AverageRanks, TiesShareMeanRank) {
  EXPECT_EQ(average_ranks(Vec{10, 20, 20, 30}), (Vec{1, 2.5, 2.5, 4}));
  EXPECT_EQ(average_ranks(Vec{4, 4, 4}), (Vec{2, 2, 2}));
  EXPECT_EQ(average_ranks(Vec{3, 1, 2}), (Vec{3, 1, 2}));
}

TEST(Spearman, HandValues) {
  EXPECT_DOUBLE_EQ(spearman(Vec{1, 2, 3}, Vec{1, 2, 3}), 1.0);
  EXPECT_DOUBLE_EQ(spearman(Vec{1, 2, 3}, Vec{3, 2, 1}), -1.0);
  EXPECT_NEAR(spearman(Vec{1, 2, 2, 3}, Vec{1, 3, 2, 4}), 4.5 / std::sqrt(22.5), 1e-12);
}

TEST(Spearman, Errors) {
  EXPECT_THROW(spearman(Vec{4, 4, 4}, Vec{1, 2, 3}), DegenerateError);
  EXPECT_THROW(spearman(Vec{1, 2, 3}, Vec{2, 2, 2}), DegenerateError);
  EXPECT_THROW(spearman(Vec{1}, Vec{1}), PreconditionError);
  EXPECT_THROW(spearman(Vec{1, 2}, Vec{1, 2, 3}), PreconditionError);
}

TEST(Spearman, ClosedFormIsBiasedUnderTies) {
  const Vec x{1, 1, 1, 2}, y{1, 2, 3, 4};
  EXPECT_NE(spearman_closed_form(x, y), spearman(x, y));
}

TEST(Spearman, InvariantUnderIncreasingTransform) {
  std::mt19937_64 g(3);
  for (int t = 0; t < 300; ++t) {
    const auto x = oracle::likert_vector(g, 2 + t % 9);
    const auto y = oracle::likert_vector(g, x.size());
    if (oracle::constant(x) || oracle::constant(y)) continue;
    Vec fx = x;
    for (auto& v : fx) v = std::exp(v) + 3.0 * v;
    EXPECT_NEAR(spearman(fx, y), spearman(x, y), 1e-12);
    EXPECT_NEAR(spearman(x, x), 1.0, 1e-12);
  }
}

TEST(Spearman, MatchesOracle) {
  std::mt19937_64 g(5);
  for (int t = 0; t < 2000; ++t) {
    const auto x = oracle::likert_vector(g, 2 + t % 9);
    const auto y = oracle::likert_vector(g, x.size());
    if (oracle::constant(x) || oracle::constant(y)) continue;
    EXPECT_NEAR(spearman(x, y), oracle::spearman(x, y), 1e-12);
  }
}

TEST(Vmd, HandValues) {
  EXPECT_DOUBLE_EQ(vmd(Vec{3, 4}, Vec{3, 4}), 0.0);
  EXPECT_DOUBLE_EQ(vmd(Vec{1, 7}, Vec{7, 1}), 6.0);
  EXPECT_NEAR(vmd(Vec{2, 4, 6}, Vec{3, 3, 6}), 2.0 / 3.0, 1e-15);
  EXPECT_THROW(vmd(Vec{1}, Vec{1, 2}), PreconditionError);
}

TEST(ConsistentProportion, HandValues) {
  EXPECT_DOUBLE_EQ(consistent_proportion(Vec{1, 5}, Vec{1, 5}), 1.0);
  EXPECT_DOUBLE_EQ(consistent_proportion(Vec{1, 5}, Vec{3, 7}), 0.0);
  EXPECT_NEAR(consistent_proportion(Vec{1, 1, 1}, Vec{2, 3, 1}), 2.0 / 3.0, 1e-15);
}

TEST(VmdAndProportion, SymmetricAndReflectionInvariant) {
  std::mt19937_64 g(8);
  for (int t = 0; t < 500; ++t) {
    const auto x = oracle::likert_vector(g, 1 + t % 10);
    const auto y = oracle::likert_vector(g, x.size());
    Vec rx = x, ry = y;
    for (auto& v : rx) v = 8 - v;
    for (auto& v : ry) v = 8 - v;
    EXPECT_EQ(vmd(x, y), vmd(y, x));
    EXPECT_EQ(consistent_proportion(x, y), consistent_proportion(y, x));
    EXPECT_NEAR(vmd(rx, ry), vmd(x, y), 1e-12);
    EXPECT_EQ(consistent_proportion(rx, ry), consistent_proportion(x, y));
    // For integer scores VMD is zero exactly when the vectors match.
    EXPECT_EQ(vmd(x, y) == 0.0, x == y);
    if (vmd(x, y) == 0.0) EXPECT_EQ(consistent_proportion(x, y), 1.0);
  }
}

TEST(ComputeMetrics, OneRow) {
  PairedVectors p{{"a", "b", "c"}, {1, 2, 3}, {1, 2, 3}};
  const auto row = compute_metrics(p, "r1");
  EXPECT_EQ(row.respondent_id, "r1");
  EXPECT_EQ(row.n_pairs, 3u);
  EXPECT_NEAR(row.cosine, 1.0, 1e-15);
  EXPECT_NEAR(row.spearman, 1.0, 1e-15);
  EXPECT_EQ(row.vmd, 0.0);
  EXPECT_EQ(row.consistent_proportion, 1.0);
}

TEST(GroupStats, TableTwoColumns) {
  auto g = group_stats(Vec{0.24, 0.17, 0.52, 0.08, 0.18});
  EXPECT_NEAR(g.mean, 0.238, 1e-12);
  EXPECT_NEAR(g.sd, 0.14999, 1e-5);
  g = group_stats(Vec{1.58, 1.74, 1.02, 1.57, 1.68});
  EXPECT_NEAR(g.mean, 1.518, 1e-12);
  EXPECT_NEAR(g.sd, 0.25694, 1e-5);
  EXPECT_EQ(g.min, 1.02);
  EXPECT_EQ(g.max, 1.74);
  EXPECT_EQ(g.n, 5u);
}

TEST(GroupStats, SingleValueAndEmpty) {
  const auto g = group_stats(Vec{0.5});
  EXPECT_EQ(g.mean, 0.5);
  EXPECT_EQ(g.sd, 0.0);
  EXPECT_EQ(g.min, 0.5);
  EXPECT_EQ(g.max, 0.5);
  EXPECT_THROW(group_stats(Vec{}), PreconditionError);
}

TEST(GroupStats, Bounds) {
  std::mt19937_64 g(21);
  std::uniform_real_distribution<double> d(-5, 5);
  for (int t = 0; t < 500; ++t) {
    Vec v(1 + t % 12);
    for (auto& x : v) x = d(g);
    const auto s = group_stats(v);
    EXPECT_LE(s.min, s.mean);
    EXPECT_LE(s.mean, s.max);
    EXPECT_GE(s.sd, 0.0);
  }
}

TEST(Binomial, MatchesPascal) {
  for (unsigned n = 0; n <= 40; ++n) {
    for (unsigned k = 0; k <= n; ++k) EXPECT_EQ(binomial(n, k), oracle::choose(n, k)) << n << " " << k;
  }
  EXPECT_EQ(binomial(21, 5), 20349u);
  EXPECT_EQ(binomial(3, 5), 0u);
}

TEST(Permutation, TwoSidedSmall) {
  PermutationOptions o;
  o.side = Side::TwoSided;
  const auto r = permutation_test(Vec{1, 2}, Vec{3, 4}, o);
  EXPECT_EQ(r.extreme_count, 2u);
  EXPECT_EQ(r.total, 6u);
  EXPECT_NEAR(r.p_value, 1.0 / 3.0, 1e-15);
  EXPECT_DOUBLE_EQ(r.observed, -2.0);
}

TEST(Permutation, SeparatedFiveVersusSixteen) {
  Vec llm{0.24, 0.17, 0.52, 0.08, 0.18};
  Vec human;
  for (int i = 0; i < 16; ++i) human.push_back(0.6 + 0.02 * i);
  const auto r = permutation_test(llm, human);
  EXPECT_EQ(r.total, 20349u);
  EXPECT_EQ(r.extreme_count, 1u);
  EXPECT_NEAR(r.p_value, 1.0 / 20349.0, 1e-18);
}

TEST(Permutation, IdenticalConstants) {
  const auto r = permutation_test(Vec{3, 3, 3}, Vec{3, 3});
  EXPECT_EQ(r.p_value, 1.0);
}

TEST(Permutation, CapAndEmpty) {
  PermutationOptions o;
  o.exact_cap = 10;
  EXPECT_THROW(permutation_test(Vec{1, 2, 3}, Vec{4, 5, 6}, o), PreconditionError);
  EXPECT_THROW(permutation_test(Vec{}, Vec{1}), PreconditionError);
}

TEST(Permutation, MatchesOracleEnumeration) {
  std::mt19937_64 g(99);
  for (int t = 0; t < 400; ++t) {
    const std::size_t n = 1 + t % 5;
    const std::size_t m = 1 + (t / 5) % (10 - n);
    const auto a = oracle::likert_vector(g, n);
    const auto b = oracle::likert_vector(g, m);
    for (bool two : {false, true}) {
      PermutationOptions o;
      o.side = two ? Side::TwoSided : Side::OneSidedObservedDirection;
      const auto r = permutation_test(a, b, o);
      const auto ref = oracle::permutation(a, b, two);
      EXPECT_EQ(r.total, ref.total);
      EXPECT_EQ(r.extreme_count, ref.extreme);
    }
  }
}

TEST(Permutation, LabelSwapAndShiftInvariance) {
  std::mt19937_64 g(17);
  for (int t = 0; t < 200; ++t) {
    const auto a = oracle::likert_vector(g, 1 + t % 4);
    const auto b = oracle::likert_vector(g, 1 + t % 5);
    PermutationOptions o;
    o.side = Side::TwoSided;
    const auto p = permutation_test(a, b, o).p_value;
    EXPECT_EQ(permutation_test(b, a, o).p_value, p);
    Vec sa = a, sb = b;
    for (auto& v : sa) v += 10;
    for (auto& v : sb) v += 10;
    EXPECT_EQ(permutation_test(sa, sb, o).p_value, p);
  }
}

TEST(Permutation, MonteCarloSeededAndClose) {
  const Vec a{1, 2, 3, 4, 2}, b{3, 4, 5, 6, 5, 4};
  const auto exact = permutation_test(a, b);
  PermutationOptions o;
  o.exact = false;
  o.resamples = 20000;
  o.seed = 42;
  const auto mc1 = permutation_test(a, b, o);
  const auto mc2 = permutation_test(a, b, o);
  EXPECT_EQ(mc1.p_value, mc2.p_value);
  EXPECT_FALSE(mc1.exact);
  EXPECT_EQ(mc1.total, 20000u);
  EXPECT_NEAR(mc1.p_value, exact.p_value, 0.01);
  EXPECT_GT(mc1.p_value, 0.0);
}
