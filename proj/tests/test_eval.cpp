#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "wikisvd/eval.hpp"

using namespace wikisvd;

TEST(Metrics, PerfectAndHandExamples) {
  std::vector<PredictionPair> perfect{{3, 3}, {4, 4}};
  EXPECT_EQ(rmse(perfect), 0.0);
  std::vector<PredictionPair> off{{2, 4}, {4, 4}};
  EXPECT_NEAR(rmse(off), std::sqrt(2.0), 1e-12);
  EXPECT_DOUBLE_EQ(mae(off), 1.0);
  EXPECT_THROW(rmse({}), ArgumentError);
  EXPECT_THROW(mae({}), ArgumentError);
}

TEST(Metrics, AgreeWithNaiveReimplementation) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> pred(0.5, 5.5);
  std::uniform_int_distribution<int> actual(1, 5);
  std::vector<PredictionPair> pairs;
  for (int k = 0; k < 1000; ++k) pairs.emplace_back(pred(rng), actual(rng));
  double sse = 0, sae = 0;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const double d = pairs[k].first - pairs[k].second;
    sse += d * d;
    sae += std::fabs(d);
  }
  EXPECT_EQ(rmse(pairs), std::sqrt(sse / 1000.0));
  EXPECT_EQ(mae(pairs), sae / 1000.0);
  EXPECT_GE(rmse(pairs), mae(pairs));
}

TEST(Improvement, SignConvention) {
  EXPECT_DOUBLE_EQ(improvement_pct(1.0, 0.8), 20.0);
  EXPECT_DOUBLE_EQ(improvement_pct(1.0, 1.0), 0.0);
  EXPECT_LT(improvement_pct(1.0, 1.3665), 0.0);
  EXPECT_NEAR(improvement_pct(1.0, 1.3665), -36.65, 1e-9);
  EXPECT_THROW(improvement_pct(0.0, 1.0), ArgumentError);
  EXPECT_THROW(improvement_pct(-1.0, 1.0), ArgumentError);
}

TEST(TTest, IdenticalSamples) {
  std::vector<double> a{1, 2, 3};
  auto r = paired_t_test(a, a);
  EXPECT_EQ(r.t, 0.0);
  EXPECT_EQ(r.p, 1.0);
  EXPECT_FALSE(r.significant);
  EXPECT_FALSE(r.degenerate);
}

TEST(TTest, HandExampleAgainstClosedForm) {
  std::vector<double> a{2, 3, 4}, b{1, 2.5, 2.5};
  auto r = paired_t_test(a, b);
  const double t = 1.0 / (0.5 / std::sqrt(3.0));
  EXPECT_NEAR(r.t, t, 1e-12);
  EXPECT_NEAR(r.t, 3.464, 1e-3);
  EXPECT_EQ(r.df, 2u);
  EXPECT_NEAR(r.p, oracle::t_pvalue_df2(t), 1e-10);
  EXPECT_NEAR(r.p, 0.074, 5e-4);
  EXPECT_FALSE(r.significant);
  EXPECT_TRUE(paired_t_test(a, b, 0.1).significant);
}

TEST(TTest, SymmetricInArguments) {
  std::vector<double> a{1.0, 1.4, 0.9, 1.2}, b{1.1, 1.0, 0.8, 1.0};
  auto ab = paired_t_test(a, b), ba = paired_t_test(b, a);
  EXPECT_DOUBLE_EQ(ab.t, -ba.t);
  EXPECT_DOUBLE_EQ(ab.p, ba.p);
}

TEST(TTest, ConstantDifferencesAreDegenerate) {
  std::vector<double> a{2, 3, 4}, b{1, 2, 3};
  auto r = paired_t_test(a, b);
  EXPECT_TRUE(r.degenerate);
  EXPECT_TRUE(std::isinf(r.t));
  EXPECT_GT(r.t, 0);
  EXPECT_EQ(r.p, 0.0);
  EXPECT_TRUE(r.significant);
}

TEST(TTest, Preconditions) {
  std::vector<double> one{1}, two{1, 2};
  EXPECT_THROW(paired_t_test(one, one), ArgumentError);
  EXPECT_THROW(paired_t_test(one, two), ArgumentError);
}
