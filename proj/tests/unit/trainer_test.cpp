#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "phrasecomp/error.hpp"
#include "phrasecomp/trainer.hpp"
#include "test_util.hpp"

using namespace phrasecomp;

namespace {

struct SynthSplit {
  SyntheticData data;
  PhraseDataset train, dev, test;
};

SynthSplit make_split(SyntheticConfig cfg, std::uint64_t seed = 3) {
  SynthSplit s{generate_synthetic(cfg), {}, {}, {}};
  const auto labeled = split_dataset(s.data.dataset, SplitRatios{4, 1, 1}, seed);
  s.train = labeled.subset(Split::kTrain);
  s.dev = labeled.subset(Split::kDev);
  s.test = labeled.subset(Split::kTest);
  return s;
}

SyntheticConfig small_config() {
  SyntheticConfig cfg;
  cfg.n = 8;
  cfg.num_classes = 3;
  cfg.words_per_class = 6;
  cfg.num_phrases = 120;
  return cfg;
}

}  // namespace

TEST(Trainer, CosineDistanceExamples) {
  EXPECT_NEAR(cosine_distance_loss(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2, 3}), 0.0, 1e-15);
  EXPECT_DOUBLE_EQ(cosine_distance_loss(std::vector<double>{1, 0}, std::vector<double>{0, 1}), 1.0);
  EXPECT_DOUBLE_EQ(cosine_distance_loss(std::vector<double>{1, 0}, std::vector<double>{-1, 0}), 2.0);
  EXPECT_THROW(cosine_distance_loss(std::vector<double>{0, 0}, std::vector<double>{1, 0}), ZeroNormError);
}

TEST(Trainer, AdagradUpdateExamples) {
  auto m = init_model(ModelKind::kSAddition, ModelShape{2, 0, 0}, 1);
  auto acc = zero_grads_like(m);
  auto g = zero_grads_like(m);
  g.array("alpha").values = {1.0};
  adagrad_update(m, g, acc, 0.1, 1e-8);
  EXPECT_NEAR(m.array("alpha").values[0], 0.9, 1e-7);
  EXPECT_EQ(acc.array("alpha").values[0], 1.0);
  // beta had zero gradient: untouched parameter and accumulator.
  EXPECT_EQ(m.array("beta").values[0], 1.0);
  EXPECT_EQ(acc.array("beta").values[0], 0.0);

  const double before = m.array("alpha").values[0];
  adagrad_update(m, g, acc, 0.1, 1e-8);
  EXPECT_NEAR(before - m.array("alpha").values[0], 0.1 / std::sqrt(2.0), 1e-7);
  EXPECT_EQ(acc.array("alpha").values[0], 2.0);
}

TEST(Trainer, AccumulatorsNeverDecrease) {
  auto s = make_split(small_config());
  auto m = init_model(ModelKind::kMatrix, ModelShape{8, 0, 0}, 2);
  const auto resolver = LexicalResolver::from_training(s.train, FallbackPolicy::kNearestNeighbor);
  const PreparedSet set(m, s.train, s.data.space, resolver);
  std::vector<TrainingExample> batch;
  for (std::size_t i = 0; i < 10; ++i) batch.push_back(set.example(i));
  auto acc = zero_grads_like(m);
  auto prev = acc;
  for (int step = 0; step < 5; ++step) {
    adagrad_update(m, gradients(m, batch).grads, acc, 0.05);
    for (std::size_t a = 0; a < acc.arrays.size(); ++a)
      for (std::size_t i = 0; i < acc.arrays[a].values.size(); ++i)
        EXPECT_GE(acc.arrays[a].values[i], prev.arrays[a].values[i]);
    prev = acc;
  }
}

TEST(Trainer, SmallStepsNeverIncreaseFrozenBatchLoss) {
  auto s = make_split(small_config());
  for (ModelKind k : {ModelKind::kMatrix, ModelKind::kTransWeight, ModelKind::kBiLinear}) {
    auto m = init_model(k, ModelShape{8, 4, 0}, 2);
    const auto resolver = LexicalResolver::from_training(s.train, FallbackPolicy::kNearestNeighbor);
    const PreparedSet set(m, s.train, s.data.space, resolver);
    std::vector<TrainingExample> batch;
    for (std::size_t i = 0; i < 20; ++i) batch.push_back(set.example(i));
    auto acc = zero_grads_like(m);
    double last = batch_loss(m, batch);
    for (int step = 0; step < 10; ++step) {
      adagrad_update(m, gradients(m, batch).grads, acc, 1e-4);
      const double now = batch_loss(m, batch);
      EXPECT_LE(now, last) << model_kind_name(k) << " step " << step;
      last = now;
    }
  }
}

TEST(Trainer, FitsNoiselessLinearDataWithMatrix) {
  SyntheticConfig cfg = small_config();
  cfg.num_classes = 1;
  cfg.words_per_class = 15;
  cfg.noise_sigma = 0.0;
  cfg.map_spread = 0.0;
  auto s = make_split(cfg);
  TrainConfig tc;
  tc.max_epochs = 400;
  tc.patience = 400;
  tc.batch_size = 20;
  tc.learning_rate = 0.1;
  const auto r = train(init_model(ModelKind::kMatrix, ModelShape{8, 0, 0}, 1), s.train, s.dev,
                       s.data.space, tc);
  EXPECT_LT(r.state.history.back().train_loss, 1e-3);
}

TEST(Trainer, PatienceZeroAndOneEpochRunsExactlyOnce) {
  auto s = make_split(small_config());
  TrainConfig tc;
  tc.patience = 0;
  tc.max_epochs = 1;
  const auto r = train(init_model(ModelKind::kMatrix, ModelShape{8, 0, 0}, 1), s.train, s.dev,
                       s.data.space, tc);
  EXPECT_EQ(r.state.history.size(), 1u);
  EXPECT_EQ(r.state.epoch, 1u);
}

TEST(Trainer, EarlyStoppingHonorsPatience) {
  auto s = make_split(small_config());
  TrainConfig tc;
  tc.max_epochs = 300;
  tc.patience = 3;
  tc.learning_rate = 0.5;
  const auto r = train(init_model(ModelKind::kTransWeight, ModelShape{8, 6, 0}, 1), s.train,
                       s.dev, s.data.space, tc);
  const auto& h = r.state.history;
  ASSERT_LT(h.size(), tc.max_epochs);
  ASSERT_GE(h.size(), tc.patience + 1);
  // The last `patience` epochs did not beat the best one.
  for (std::size_t i = h.size() - tc.patience; i < h.size(); ++i) {
    EXPECT_GE(h[i].dev_loss, r.state.best_dev_loss);
  }
  EXPECT_EQ(r.state.best_epoch, h.size() - tc.patience);
}

TEST(Trainer, ReturnedModelHasTheMinimumDevLoss) {
  auto s = make_split(small_config());
  TrainConfig tc;
  tc.max_epochs = 30;
  const auto r = train(init_model(ModelKind::kTransWeightMat, ModelShape{8, 4, 0}, 1), s.train,
                       s.dev, s.data.space, tc);
  double best = 1e9;
  for (const auto& e : r.state.history) best = std::min(best, e.dev_loss);
  const auto resolver = LexicalResolver::from_training(s.train, FallbackPolicy::kNearestNeighbor);
  const PreparedSet dev(r.model, s.dev, s.data.space, resolver);
  EXPECT_EQ(mean_loss(r.model, dev), best);
  EXPECT_EQ(r.state.best_dev_loss, best);
}

TEST(Trainer, SameSeedSameHistory) {
  auto s = make_split(small_config());
  TrainConfig tc;
  tc.max_epochs = 8;
  tc.seed = 77;
  tc.dropout_site = DropoutSite::kTransformedH;
  tc.dropout_rate = 0.3;
  const auto m = init_model(ModelKind::kTransWeight, ModelShape{8, 4, 0}, 1);
  const auto a = train(m, s.train, s.dev, s.data.space, tc);
  const auto b = train(m, s.train, s.dev, s.data.space, tc);
  EXPECT_EQ(a.state.history, b.state.history);
  EXPECT_EQ(a.model, b.model);
  tc.seed = 78;
  const auto c = train(m, s.train, s.dev, s.data.space, tc);
  EXPECT_NE(a.state.history, c.state.history);
}

TEST(Trainer, ZeroRateMakesDropoutSiteIrrelevant) {
  auto s = make_split(small_config());
  TrainConfig tc;
  tc.max_epochs = 5;
  const auto m = init_model(ModelKind::kTransWeight, ModelShape{8, 4, 0}, 1);
  const auto off = train(m, s.train, s.dev, s.data.space, tc);
  tc.dropout_site = DropoutSite::kTransformedH;
  tc.dropout_rate = 0.0;
  const auto on = train(m, s.train, s.dev, s.data.space, tc);
  EXPECT_EQ(off.state.history, on.state.history);
  EXPECT_EQ(off.model, on.model);
}

TEST(Trainer, InvertedDropoutPreservesExpectation) {
  // With t = 1 and an identity weighting, the output is exactly H * mask.
  const std::size_t n = 20;
  auto m = init_model(ModelKind::kTransWeight, ModelShape{n, 1, 0}, 4);
  auto& w = m.array("W").values;
  std::fill(w.begin(), w.end(), 0.0);
  for (std::size_t c = 0; c < n; ++c) w[c * n + c] = 1.0;
  Rng rng(5);
  const auto u = testutil::random_vector(rng, n), v = testutil::random_vector(rng, n);
  const auto h = compose(m, u, v);
  // The standard error of the mean mask is sqrt(rate / (1 - rate) / draws),
  // so the high rate gets more draws to resolve the same 2% band.
  for (auto [rate, draws] : {std::pair{0.2, 10000}, std::pair{0.5, 10000}, std::pair{0.8, 100000}}) {
    std::vector<double> mean(n, 0.0), mask(n);
    for (int d = 0; d < draws; ++d) {
      draw_dropout_mask(rate, rng, mask);
      const auto p = compose(m, u, v, {}, mask);
      for (std::size_t i = 0; i < n; ++i) mean[i] += p[i] / draws;
    }
    double err = 0, norm = 0;
    for (std::size_t i = 0; i < n; ++i) {
      err += (mean[i] - h[i]) * (mean[i] - h[i]);
      norm += h[i] * h[i];
    }
    EXPECT_LT(std::sqrt(err / norm), 0.02) << "rate " << rate;
  }
}

TEST(Trainer, DropoutOnHRequiresTransWeight) {
  auto s = make_split(small_config());
  TrainConfig tc;
  tc.dropout_site = DropoutSite::kTransformedH;
  tc.dropout_rate = 0.5;
  EXPECT_THROW(train(init_model(ModelKind::kMatrix, ModelShape{8, 0, 0}, 1), s.train, s.dev,
                     s.data.space, tc),
               InvalidArgument);
}

TEST(Trainer, DivergenceIsReported) {
  auto s = make_split(small_config());
  TrainConfig tc;
  tc.learning_rate = 1e308;
  tc.max_epochs = 5;
  EXPECT_THROW(train(init_model(ModelKind::kMatrix, ModelShape{8, 0, 0}, 1), s.train, s.dev,
                     s.data.space, tc),
               DivergenceError);
}

TEST(Trainer, LexicalizedTrainingNeedsALexicon) {
  auto s = make_split(small_config());
  EXPECT_THROW(train(init_model(ModelKind::kFullLex, ModelShape{8, 0, 4}, 1), s.train, s.dev,
                     s.data.space, TrainConfig{}),
               InvalidArgument);
}

TEST(Trainer, ConfigValidationAndParsing) {
  TrainConfig bad;
  bad.learning_rate = 0;
  EXPECT_THROW(bad.validate(), InvalidArgument);
  bad = {};
  bad.dropout_rate = 1.0;
  EXPECT_THROW(bad.validate(), InvalidArgument);

  std::istringstream in("learning_rate = 0.01\nbatch_size = 16\npatience = 0\n"
                        "dropout_site = transformed_H\ndropout_rate = 0.4\nunrelated = x\n");
  const auto tc = train_config_from(KeyValueConfig::parse(in));
  EXPECT_EQ(tc.learning_rate, 0.01);
  EXPECT_EQ(tc.batch_size, 16u);
  EXPECT_EQ(tc.patience, 0u);
  EXPECT_EQ(tc.dropout_site, DropoutSite::kTransformedH);
  EXPECT_EQ(tc.max_epochs, 200u);

  std::istringstream neg("batch_size = -3\n");
  EXPECT_THROW(train_config_from(KeyValueConfig::parse(neg)), InvalidArgument);
}

TEST(Trainer, DefaultDropoutRates) {
  EXPECT_EQ(default_dropout_rate(ModelKind::kTransWeight), 0.8);
  EXPECT_EQ(default_dropout_rate(ModelKind::kTransWeightFeat), 0.4);
  EXPECT_EQ(default_dropout_rate(ModelKind::kTransWeightTrans), 0.6);
  EXPECT_EQ(default_dropout_rate(ModelKind::kTransWeightMat), 0.6);
  EXPECT_EQ(default_dropout_rate(ModelKind::kMatrix), 0.0);
}

TEST(Trainer, TrainingLogFormat) {
  const std::vector<EpochRecord> h{{1, 0.5, 0.25}, {2, 0.1234567, 0.2}};
  std::ostringstream out;
  write_training_log(h, out);
  EXPECT_EQ(out.str(), "epoch\ttrain_loss\tdev_loss\n1\t0.500000\t0.250000\n2\t0.123457\t0.200000\n");
}
