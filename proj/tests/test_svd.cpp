#include <gtest/gtest.h>

#include <set>

#include "support.hpp"
#include "wikisvd/svd.hpp"

using namespace wikisvd;
using namespace testing_support;

namespace {

Hyperparams small_hyper(int k = 4, int epochs = 5) {
  Hyperparams h;
  h.factors = k;
  h.epochs = epochs;
  h.gamma = 0.01;
  h.gamma_art = 0.001;
  return h;
}

TrainedModel wrap(ModelParams p, VariantKind v, const Hyperparams& h, const RatingsDataset& train,
                  const SimilarityMatrix* sim) {
  TrainedModel m;
  m.variant = v;
  m.hyper = h;
  m.params.push_back(std::move(p));
  if (v == VariantKind::kMixture) m.params.push_back(m.params.front());
  m.train_checksum = checksum(train);
  m.sim_fingerprint = (sim && uses_similarity(v)) ? sim->fingerprint() : 0;
  return m;
}

}  // namespace

TEST(Variant, NamesAndParsing) {
  EXPECT_EQ(parse_variant("B_DUAL_PARAMS"), VariantKind::kDualParams);
  EXPECT_EQ(parse_variant("f"), VariantKind::kSimLatent);
  EXPECT_EQ(parse_variant("baseline"), VariantKind::kBaseline);
  EXPECT_THROW(parse_variant("G"), ArgumentError);
  for (auto v : kAllVariants) EXPECT_EQ(parse_variant(variant_name(v)), v);
}

TEST(Hyper, Validation) {
  Hyperparams h;
  EXPECT_NO_THROW(h.validate());
  h.gamma_art = 0.01;
  EXPECT_THROW(h.validate(), ArgumentError);
  h = {};
  h.factors = 0;
  EXPECT_THROW(h.validate(), ArgumentError);
  h = {};
  h.mixture_weight = 1.5;
  EXPECT_THROW(h.validate(), ArgumentError);
  h = {};
  h.gamma = 0.0;
  EXPECT_THROW(h.validate(), ArgumentError);
}

TEST(Init, MeanAndZeroBiases) {
  auto train = make_dataset(2, 2, {{0, 0, 5}, {1, 1, 3}});
  auto p = init_model(small_hyper(), VariantKind::kBaseline, 2, 2, train);
  EXPECT_DOUBLE_EQ(p.mu, 4.0);
  for (double b : p.b_user) EXPECT_EQ(b, 0.0);
  for (double b : p.b_item) EXPECT_EQ(b, 0.0);
  for (double x : p.P.data()) EXPECT_LE(std::abs(x), 0.005);
  for (double x : p.Q.data()) EXPECT_LE(std::abs(x), 0.005);
}

TEST(Init, DeterministicAndBlocksPerVariant) {
  auto train = make_dataset(2, 3, {{0, 0, 5}, {1, 1, 3}});
  auto h = small_hyper(2);
  EXPECT_EQ(init_model(h, VariantKind::kBaseline, 2, 3, train), init_model(h, VariantKind::kBaseline, 2, 3, train));
  auto f = init_model(h, VariantKind::kSimLatent, 2, 3, train);
  ASSERT_TRUE(f.Y);
  EXPECT_EQ(f.Y->rows(), 3u);
  EXPECT_EQ(f.Y->cols(), 2u);
  EXPECT_FALSE(f.tilde || f.y_item || f.y_user_item);
  EXPECT_TRUE(init_model(h, VariantKind::kDualParams, 2, 3, train).tilde);
  EXPECT_TRUE(init_model(h, VariantKind::kItemAssist, 2, 3, train).y_item);
  EXPECT_TRUE(init_model(h, VariantKind::kUserItemAssist, 2, 3, train).y_user_item);
  auto base = init_model(h, VariantKind::kBaseline, 2, 3, train);
  EXPECT_FALSE(base.tilde || base.y_item || base.y_user_item || base.Y);
  // Extra blocks are drawn after P and Q, so the shared blocks coincide.
  EXPECT_EQ(f.P, base.P);
  EXPECT_EQ(f.Q, base.Q);
}

TEST(Init, EmptyTrainingSetRejected) {
  EXPECT_THROW(init_model(small_hyper(), VariantKind::kBaseline, 2, 2, RatingsDataset({}, 2, 2)), ArgumentError);
}

TEST(Score, ZeroParametersGiveMu) {
  auto train = make_dataset(2, 3, {{0, 1, 4}, {0, 2, 2}, {1, 0, 3}});
  SimilarityMatrix sim(3, {{0, 1, 2}, {0, 2, 1}});
  auto h = small_hyper(3);
  h.init_scale = 0.0;
  for (auto v : kAllVariants) {
    auto p = init_model(h, v, 2, 3, 3.5, 1);
    auto m = wrap(p, v, h, train, &sim);
    Predictor pred(m, train, &sim);
    for (UserId u = 0; u < 2; ++u)
      for (ItemId i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(pred(u, i), 3.5) << variant_name(v);
  }
}

TEST(Score, BaselineArithmetic) {
  auto h = small_hyper(1);
  auto p = init_model(h, VariantKind::kBaseline, 1, 1, 3.5, 1);
  p.b_user[0] = 0.2;
  p.b_item[0] = -0.1;
  p.P.data() = {0.5};
  p.Q.data() = {0.1};
  EXPECT_NEAR(score(p, VariantKind::kBaseline, 0, 0, SimilarityContext{}, h), 3.65, 1e-12);
}

TEST(Score, ItemAssistAddsScaledSignal) {
  auto train = make_dataset(1, 3, {{0, 1, 4}, {0, 2, 2}});
  SimilarityMatrix sim(3, {{0, 1, 2}, {0, 2, 1}});
  auto h = small_hyper(1);
  auto p = init_model(h, VariantKind::kItemAssist, 1, 3, 3.5, 1);
  p.b_user[0] = 0.2;
  p.b_item[0] = -0.1;
  p.P.data() = {0.5};
  p.Q.row(0)[0] = 0.1;
  (*p.y_item)[0] = 0.1;
  SimilarityContext ctx(train, &sim);
  EXPECT_NEAR(score(p, VariantKind::kItemAssist, 0, 0, ctx, h), 3.65 + 0.1 * 10.0 / 3.0, 1e-12);
}

TEST(Score, UserItemAssistUsesPairWeight) {
  auto train = make_dataset(2, 3, {{0, 1, 4}, {0, 2, 2}, {1, 1, 1}});
  SimilarityMatrix sim(3, {{0, 1, 2}, {0, 2, 1}});
  auto h = small_hyper(1);
  h.init_scale = 0.0;
  auto p = init_model(h, VariantKind::kUserItemAssist, 2, 3, 3.0, 1);
  (*p.y_user_item)[pair_key(0, 0)] = 0.3;
  SimilarityContext ctx(train, &sim);
  EXPECT_NEAR(score(p, VariantKind::kUserItemAssist, 0, 0, ctx, h), 3.0 + 0.3 * 10.0 / 3.0, 1e-12);
  EXPECT_DOUBLE_EQ(score(p, VariantKind::kUserItemAssist, 1, 0, ctx, h), 3.0);  // pair weight defaults to 0
}

TEST(Score, SimLatentHandExample) {
  auto train = make_dataset(1, 2, {{0, 1, 4}});
  SimilarityMatrix sim(2, {{0, 1, 2}});
  auto h = small_hyper(1);
  auto p = init_model(h, VariantKind::kSimLatent, 1, 2, 3.0, 1);
  p.b_user[0] = 0.1;
  p.b_item[0] = -0.2;
  p.P.data() = {0.5};
  p.Q.row(0)[0] = 0.2;
  p.Y->row(1)[0] = 0.3;
  SimilarityContext ctx(train, &sim);
  // z = (2 * 4 * 0.3) / 2 = 1.2
  EXPECT_NEAR(score(p, VariantKind::kSimLatent, 0, 0, ctx, h), 3.0 - 0.2 + 0.1 + 0.5 * (0.2 + 1.2), 1e-12);
}

TEST(Neighbourhood, ExcludesTargetAndZeroSimilarity) {
  auto train = make_dataset(1, 4, {{0, 0, 5}, {0, 1, 4}, {0, 3, 1}});
  SimilarityMatrix sim(4, {{0, 1, 3}, {1, 2, 1}});
  SimilarityContext ctx(train, &sim);
  std::vector<NeighborTerm> terms;
  EXPECT_DOUBLE_EQ(ctx.neighborhood(0, 0, terms), 4.0);
  ASSERT_EQ(terms.size(), 1u);
  EXPECT_EQ(terms[0].item, 1u);
  EXPECT_DOUBLE_EQ(ctx.neighborhood(0, 3, terms), 0.0);
  EXPECT_TRUE(terms.empty());
}

TEST(Step, HandComputedBiasUpdate) {
  Hyperparams h = small_hyper(2);
  h.gamma = 0.1;
  h.gamma_art = 0.1;
  h.lambda = 0.0;
  h.init_scale = 0.0;
  auto p = init_model(h, VariantKind::kBaseline, 1, 1, 3.0, 1);
  Workspace ws;
  const double e = sgd_step(p, VariantKind::kBaseline, 0, 0, 5.0, false, h, SimilarityContext{}, ws);
  EXPECT_DOUBLE_EQ(e, 2.0);
  EXPECT_DOUBLE_EQ(p.b_item[0], 0.2);
  EXPECT_DOUBLE_EQ(p.b_user[0], 0.2);
  for (double x : p.P.data()) EXPECT_EQ(x, 0.0);
  for (double x : p.Q.data()) EXPECT_EQ(x, 0.0);
}

TEST(Step, ZeroErrorWithoutRegularisationIsFixedPoint) {
  auto train = make_dataset(1, 2, {{0, 1, 4}});
  SimilarityMatrix sim(2, {{0, 1, 2}});
  SimilarityContext ctx(train, &sim);
  Hyperparams h = small_hyper(3);
  h.lambda = 0.0;
  for (auto v : kAllVariants) {
    if (v == VariantKind::kMixture) continue;
    auto p = init_model(h, v, 1, 2, 3.0, 9);
    Workspace ws;
    const double r = score(p, v, 0, 0, ctx, ws, h);
    auto before = p;
    const double e = sgd_step(p, v, 0, 0, r, false, h, ctx, ws);
    EXPECT_EQ(e, 0.0);
    if (v == VariantKind::kUserItemAssist) {  // the step materialises the pair weight at 0
      EXPECT_EQ(p.y_pair(0, 0), 0.0);
      p.y_user_item->clear();
    }
    EXPECT_EQ(p, before) << variant_name(v);
  }
}

TEST(Step, DualParamsRouting) {
  auto h = small_hyper(3);
  auto p = init_model(h, VariantKind::kDualParams, 2, 2, 3.0, 4);
  auto base_before = p;
  Workspace ws;
  sgd_step(p, VariantKind::kDualParams, 0, 1, 5.0, true, h, SimilarityContext{}, ws);
  EXPECT_EQ(p.b_user, base_before.b_user);
  EXPECT_EQ(p.b_item, base_before.b_item);
  EXPECT_EQ(p.P, base_before.P);
  EXPECT_EQ(p.Q, base_before.Q);
  EXPECT_NE(p.tilde, base_before.tilde);

  auto tilde_before = *p.tilde;
  sgd_step(p, VariantKind::kDualParams, 1, 0, 1.0, false, h, SimilarityContext{}, ws);
  EXPECT_EQ(*p.tilde, tilde_before);
  EXPECT_NE(p.b_user, base_before.b_user);
}

TEST(Step, ArtificialSamplesUseSlowRate) {
  Hyperparams h = small_hyper(1);
  h.gamma = 0.1;
  h.gamma_art = 0.001;
  h.lambda = 0.0;
  h.init_scale = 0.0;
  for (auto v : {VariantKind::kStepSize, VariantKind::kDualParams}) {
    auto p = init_model(h, v, 1, 1, 3.0, 1);
    Workspace ws;
    sgd_step(p, v, 0, 0, 5.0, true, h, SimilarityContext{}, ws);
    const auto& b = v == VariantKind::kDualParams ? p.tilde->b_user : p.b_user;
    EXPECT_DOUBLE_EQ(b[0], 0.002);
  }
}

TEST(Step, NonFiniteParameterRaisesDivergence) {
  Hyperparams h = small_hyper(1);
  auto p = init_model(h, VariantKind::kBaseline, 1, 1, 3.0, 1);
  p.b_item[0] = std::numeric_limits<double>::max();
  h.gamma = 1.0;
  h.gamma_art = 1.0;
  Workspace ws;
  try {
    sgd_step(p, VariantKind::kBaseline, 0, 0, 1.0, false, h, SimilarityContext{}, ws);
    FAIL();
  } catch (const DivergenceError& e) {
    EXPECT_EQ(e.block, "b_item");
  }
}

TEST(Train, ZeroEpochsEqualsInit) {
  auto train_set = random_dataset(6, 8, 0.5, 3);
  auto h = small_hyper(3, 0);
  for (auto v : {VariantKind::kBaseline, VariantKind::kSimLatent}) {
    auto sim = random_similarity(8, 0.5, 3);
    auto m = train(v, train_set, nullptr, &sim, h);
    EXPECT_EQ(m.params.front(), init_model(h, v, 6, 8, train_set));
    EXPECT_TRUE(m.loss_trace.empty());
  }
}

TEST(Train, SingleRatingOneEpochIsOneStep) {
  auto train_set = make_dataset(1, 1, {{0, 0, 5}});
  Hyperparams h = small_hyper(2, 1);
  h.gamma = 0.1;
  h.lambda = 0.0;
  auto m = train(VariantKind::kBaseline, train_set, nullptr, nullptr, h);
  auto expected = init_model(h, VariantKind::kBaseline, 1, 1, train_set);
  Workspace ws;
  sgd_step(expected, VariantKind::kBaseline, 0, 0, 5.0, false, h, SimilarityContext{}, ws);
  EXPECT_EQ(m.params.front(), expected);
  ASSERT_EQ(m.loss_trace.size(), 1u);
}

TEST(Train, Preconditions) {
  auto train_set = random_dataset(4, 5, 0.5, 1);
  auto h = small_hyper();
  EXPECT_THROW(train(VariantKind::kStepSize, train_set, nullptr, nullptr, h), ArgumentError);
  EXPECT_THROW(train(VariantKind::kSimLatent, train_set, nullptr, nullptr, h), ArgumentError);
  AugmentedDataset empty_aug{train_set, {}};
  EXPECT_THROW(train(VariantKind::kMixture, train_set, &empty_aug, nullptr, h), ArgumentError);
  EXPECT_THROW(train(VariantKind::kBaseline, RatingsDataset({}, 4, 5), nullptr, nullptr, h), ArgumentError);
  SimilarityMatrix wrong(7);
  EXPECT_THROW(train(VariantKind::kItemAssist, train_set, nullptr, &wrong, h), ArgumentError);
}

TEST(Train, DeterministicPerSeed) {
  auto train_set = random_dataset(10, 12, 0.4, 5);
  auto sim = random_similarity(12, 0.3, 5);
  auto aug = augment_dataset(train_set, sim);
  auto h = small_hyper(3, 4);
  for (auto v : kAllVariants) {
    auto a = train(v, train_set, &aug, &sim, h);
    auto b = train(v, train_set, &aug, &sim, h);
    EXPECT_EQ(a, b) << variant_name(v);
    EXPECT_EQ(a.loss_trace.size(), 4u);
    EXPECT_EQ(a.params.size(), v == VariantKind::kMixture ? 2u : 1u);
  }
  auto h2 = h;
  h2.seed = 2;
  EXPECT_FALSE(train(VariantKind::kBaseline, train_set, nullptr, nullptr, h) ==
               train(VariantKind::kBaseline, train_set, nullptr, nullptr, h2));
}

TEST(Train, MixtureComponents) {
  auto train_set = random_dataset(10, 12, 0.4, 6);
  auto sim = random_similarity(12, 0.3, 6);
  auto aug = augment_dataset(train_set, sim);
  auto h = small_hyper(3, 3);
  auto m = train(VariantKind::kMixture, train_set, &aug, &sim, h);
  double art_mean = 0;
  for (const auto& a : aug.artificial) art_mean += a.value;
  art_mean /= static_cast<double>(aug.artificial.size());
  EXPECT_DOUBLE_EQ(m.params[0].mu, train_set.mean());
  EXPECT_DOUBLE_EQ(m.params[1].mu, art_mean);
  // Component 1 is exactly a baseline model on the true ratings.
  EXPECT_EQ(m.params[0], train(VariantKind::kBaseline, train_set, nullptr, nullptr, h).params[0]);
}

TEST(Train, MixturePredictionBetweenComponents) {
  auto train_set = random_dataset(10, 12, 0.4, 7);
  auto sim = random_similarity(12, 0.3, 7);
  auto aug = augment_dataset(train_set, sim);
  for (double w : {0.0, 0.3, 0.5, 1.0}) {
    auto h = small_hyper(3, 3);
    h.clamp = false;
    h.mixture_weight = w;
    auto m = train(VariantKind::kMixture, train_set, &aug, &sim, h);
    Predictor pred(m, train_set, &sim);
    for (UserId u = 0; u < 10; ++u)
      for (ItemId i = 0; i < 12; ++i) {
        const double a = score(m.params[0], VariantKind::kBaseline, u, i, SimilarityContext{}, h);
        const double b = score(m.params[1], VariantKind::kBaseline, u, i, SimilarityContext{}, h);
        EXPECT_GE(pred(u, i), std::min(a, b) - 1e-12);
        EXPECT_LE(pred(u, i), std::max(a, b) + 1e-12);
      }
  }
}

TEST(Predict, ClampsOnlyWhenAsked) {
  auto train_set = make_dataset(1, 1, {{0, 0, 5}});
  auto h = small_hyper(1);
  auto p = init_model(h, VariantKind::kBaseline, 1, 1, 7.0, 1);
  auto m = wrap(p, VariantKind::kBaseline, h, train_set, nullptr);
  EXPECT_DOUBLE_EQ(predict(m, 0, 0, train_set, nullptr), 5.0);
  m.hyper.clamp = false;
  EXPECT_GT(predict(m, 0, 0, train_set, nullptr), 6.9);
}

TEST(Predict, RejectsMismatchedSimilarityOrTrainingSet) {
  auto train_set = random_dataset(5, 6, 0.5, 9);
  auto sim = random_similarity(6, 0.5, 9);
  auto m = train(VariantKind::kItemAssist, train_set, nullptr, &sim, small_hyper(2, 1));
  auto other_sim = random_similarity(6, 0.5, 10);
  EXPECT_THROW(Predictor(m, train_set, &other_sim), ArgumentError);
  EXPECT_THROW(Predictor(m, train_set, nullptr), ArgumentError);
  auto other_train = random_dataset(5, 6, 0.5, 10);
  EXPECT_THROW(Predictor(m, other_train, &sim), ArgumentError);
  Predictor ok(m, train_set, &sim);
  EXPECT_THROW(ok(5, 0), ArgumentError);
}

TEST(EpochOrder, PermutationDependsOnSeedAndEpoch) {
  auto a = epoch_order(100, 1, 0);
  EXPECT_EQ(std::set<std::uint32_t>(a.begin(), a.end()).size(), 100u);
  EXPECT_EQ(a, epoch_order(100, 1, 0));
  EXPECT_NE(a, epoch_order(100, 1, 1));
  EXPECT_NE(a, epoch_order(100, 2, 0));
}
