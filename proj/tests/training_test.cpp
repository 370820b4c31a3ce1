#include "fadv/training.hpp"

#include <gtest/gtest.h>

#include "fadv/synthetic.hpp"
#include "support.hpp"

using namespace fadv;

namespace {

struct ToyFixture {
  ToySpec spec;
  Corpus corpus;
  Vocab vocab;
  SynonymLexicon lexicon;
  EmbeddingTable embed;

  ToyFixture() {
    spec.n_train = 120;
    spec.n_dev = 30;
    spec.n_test = 60;
    spec.min_len = 5;
    spec.max_len = 9;
    spec.dim = 16;
    corpus = make_toy_corpus(spec);
    vocab = build_vocab(corpus, 1);
    lexicon = make_toy_lexicon(spec);
    embed = make_toy_embeddings(spec, vocab);
  }

  TrainConfig quick_config(TrainMode mode) const {
    TrainConfig cfg;
    cfg.mode = mode;
    cfg.epochs = 3;
    cfg.batch_size = 16;
    cfg.lr = 0.2;
    cfg.seed = 11;
    cfg.hidden = 16;
    return cfg;
  }

  AugmentedDataset friendly_augmentation() const {
    ClassifierParams base = init_params(embed, 16, 2, vocab.pad_id, 3);
    for (int epoch = 0; epoch < 6; ++epoch) {
      for (const auto& ex : corpus.train) {
        const ForwardTrace t = forward(base, encode(vocab, ex.text));
        sgd_step(base, backward(base, t, ex.label), 0.25, 0.0);
      }
    }
    AttackConfig acfg;
    acfg.p_max = 0.4;
    acfg.eps_min = 0.84;
    return augment_dataset(base, vocab, corpus.train, lexicon, embed, acfg, 5);
  }
};

}  // namespace

TEST(ShuffleAndBatch, SizesAndShortTail) {
  const auto batches = shuffle_and_batch(10, 3, 1, 1);
  ASSERT_EQ(batches.size(), 4u);
  EXPECT_EQ(batches[0].size(), 3u);
  EXPECT_EQ(batches[1].size(), 3u);
  EXPECT_EQ(batches[2].size(), 3u);
  EXPECT_EQ(batches[3].size(), 1u);

  std::vector<bool> seen(10, false);
  for (const auto& b : batches) {
    for (const std::size_t i : b) seen[i] = true;
  }
  for (const bool s : seen) EXPECT_TRUE(s);
}

TEST(ShuffleAndBatch, KeyedBySeedAndEpoch) {
  EXPECT_EQ(shuffle_and_batch(10, 3, 1, 1), shuffle_and_batch(10, 3, 1, 1));
  EXPECT_NE(shuffle_and_batch(10, 3, 1, 1), shuffle_and_batch(10, 3, 1, 2));
  EXPECT_NE(shuffle_and_batch(10, 3, 1, 1), shuffle_and_batch(10, 3, 2, 1));
}

TEST(Train, NaturalModeFitsASeparableToySet) {
  ToyFixture fix;
  TrainConfig cfg = fix.quick_config(TrainMode::natural);
  cfg.epochs = 50;
  auto [params, report] = train(fix.corpus, fix.vocab, fix.embed, cfg);
  ASSERT_EQ(report.epochs.size(), 50u);
  std::size_t correct = 0;
  for (const auto& ex : fix.corpus.train) {
    correct += predict(params, encode(fix.vocab, ex.text)) == ex.label;
  }
  EXPECT_EQ(correct, fix.corpus.train.size());
  // loss should have dropped substantially from the first epoch
  EXPECT_LT(report.epochs.back().loss, report.epochs.front().loss);
}

TEST(Train, FixedSeedGivesBitIdenticalCheckpoints) {
  ToyFixture fix;
  const TrainConfig cfg = fix.quick_config(TrainMode::natural);
  auto [p1, r1] = train(fix.corpus, fix.vocab, fix.embed, cfg);
  auto [p2, r2] = train(fix.corpus, fix.vocab, fix.embed, cfg);
  EXPECT_EQ(serialize_params(p1), serialize_params(p2));
  EXPECT_EQ(r1.checkpoint_id, r2.checkpoint_id);
  for (std::size_t e = 0; e < r1.epochs.size(); ++e) {
    EXPECT_EQ(r1.epochs[e].loss, r2.epochs[e].loss);
  }
}

TEST(Train, ModesNeedingAugmentationRejectItsAbsence) {
  ToyFixture fix;
  for (const TrainMode mode : {TrainMode::ada, TrainMode::fada, TrainMode::ada_only,
                               TrainMode::fada_only, TrainMode::gat}) {
    EXPECT_THROW(train(fix.corpus, fix.vocab, fix.embed, fix.quick_config(mode)),
                 ConfigError)
        << to_string(mode);
  }
}

TEST(Train, GatWithZeroEpsilonCollapsesToCleanTerms) {
  ToyFixture fix;
  const AugmentedDataset aug = fix.friendly_augmentation();
  TrainConfig cfg = fix.quick_config(TrainMode::gat);
  cfg.inner_method = InnerMethod::fgm;
  cfg.inner.epsilon = 0.0;  // X~ = X and X~_f = X_f exactly
  cfg.epochs = 2;
  auto [params, report] = train(fix.corpus, fix.vocab, fix.embed, cfg, &aug);
  for (const EpochStats& s : report.epochs) {
    EXPECT_DOUBLE_EQ(s.loss_adv, s.loss_clean);
    EXPECT_GT(s.loss_friendly, 0.0);
    EXPECT_DOUBLE_EQ(s.loss, s.loss_clean + s.loss_adv + s.loss_friendly);
  }
}

TEST(Train, GatLossDecomposesAndKeepsTheCleanTerm) {
  ToyFixture fix;
  const AugmentedDataset aug = fix.friendly_augmentation();
  TrainConfig cfg = fix.quick_config(TrainMode::gat);
  cfg.inner_method = InnerMethod::fgm;
  cfg.inner.epsilon = 0.5;
  auto [params, report] = train(fix.corpus, fix.vocab, fix.embed, cfg, &aug);
  ASSERT_EQ(report.epochs.size(), static_cast<std::size_t>(cfg.epochs));
  for (const EpochStats& s : report.epochs) {
    EXPECT_DOUBLE_EQ(s.loss, s.loss_clean + s.loss_adv + s.loss_friendly);
    EXPECT_GT(s.loss_clean, 0.0);
    EXPECT_GT(s.loss_adv, 0.0);
    EXPECT_GT(s.loss_friendly, 0.0);
  }
  EXPECT_GT(report.batches_total, 0u);
  EXPECT_EQ(report.batches_with_clean_term, report.batches_total);
}

// One pair, one epoch, batch 1: the logged components must equal hand-computed
// cross entropies at the initial parameters (the sgd update happens after).
TEST(Train, LoggedComponentsMatchHandComputedLosses) {
  ToyFixture fix;
  AugmentedDataset aug;
  aug.kind = "fada";
  AugmentedPair pair;
  pair.source = fix.corpus.train[0];
  pair.augmented = fix.corpus.train[0].text;
  pair.augmented[0] = toy::fill_word(0);  // some different sentence
  pair.from_attack = true;
  aug.pairs.push_back(pair);

  Corpus one;
  one.train = {pair.source};
  one.num_classes = 2;
  one.max_len = fix.corpus.max_len;

  TrainConfig cfg = fix.quick_config(TrainMode::gat);
  cfg.inner_method = InnerMethod::fgm;
  cfg.inner.epsilon = 0.25;
  cfg.epochs = 1;
  cfg.batch_size = 1;

  const ClassifierParams init =
      init_params(fix.embed, cfg.hidden, 2, fix.vocab.pad_id, cfg.seed);
  const std::vector<int> x_ids = encode(fix.vocab, pair.source.text);
  const std::vector<int> f_ids = encode(fix.vocab, pair.augmented);
  const int label = pair.source.label;

  const double expect_clean = loss_ce(forward(init, x_ids), label);
  const Matrix dx =
      fgm(backward(init, forward(init, x_ids), label).input_grad, 0.25).delta;
  const double expect_adv = loss_ce(forward(init, x_ids, &dx), label);
  const Matrix df =
      fgm(backward(init, forward(init, f_ids), label).input_grad, 0.25).delta;
  const double expect_friendly = loss_ce(forward(init, f_ids, &df), label);

  auto [params, report] = train(one, fix.vocab, fix.embed, cfg, &aug);
  ASSERT_EQ(report.epochs.size(), 1u);
  EXPECT_DOUBLE_EQ(report.epochs[0].loss_clean, expect_clean);
  EXPECT_DOUBLE_EQ(report.epochs[0].loss_adv, expect_adv);
  EXPECT_DOUBLE_EQ(report.epochs[0].loss_friendly, expect_friendly);
}

TEST(Train, MixingModesGrowThePoolAndOnlyModesReplaceIt) {
  ToyFixture fix;
  const AugmentedDataset aug = fix.friendly_augmentation();

  TrainConfig cfg = fix.quick_config(TrainMode::fada);
  cfg.epochs = 1;
  auto [p_mix, r_mix] = train(fix.corpus, fix.vocab, fix.embed, cfg, &aug);
  const std::size_t pool_mix = fix.corpus.train.size() + aug.pairs.size();
  EXPECT_EQ(r_mix.batches_total,
            (pool_mix + cfg.batch_size - 1) / static_cast<std::size_t>(cfg.batch_size));

  cfg.mode = TrainMode::fada_only;
  auto [p_only, r_only] = train(fix.corpus, fix.vocab, fix.embed, cfg, &aug);
  EXPECT_EQ(r_only.batches_total,
            (aug.pairs.size() + cfg.batch_size - 1) /
                static_cast<std::size_t>(cfg.batch_size));
}

TEST(Train, AtModeRunsEveryInnerMethod) {
  ToyFixture fix;
  for (const InnerMethod method : {InnerMethod::fgsm, InnerMethod::fgm, InnerMethod::pgd,
                                   InnerMethod::ascent}) {
    TrainConfig cfg = fix.quick_config(TrainMode::at);
    cfg.inner_method = method;
    cfg.inner.epsilon = 0.3;
    cfg.inner.alpha = 0.1;
    cfg.inner.steps = 3;
    cfg.epochs = 1;
    auto [params, report] = train(fix.corpus, fix.vocab, fix.embed, cfg);
    EXPECT_GT(report.epochs[0].loss_adv, 0.0) << to_string(method);
    // adversarial term never falls below the clean term
    EXPECT_GE(report.epochs[0].loss_adv, report.epochs[0].loss_clean - 1e-12)
        << to_string(method);
  }
}

TEST(Train, DevAccuracyIsTrackedPerEpoch) {
  ToyFixture fix;
  TrainConfig cfg = fix.quick_config(TrainMode::natural);
  cfg.epochs = 4;
  auto [params, report] = train(fix.corpus, fix.vocab, fix.embed, cfg);
  ASSERT_EQ(report.epochs.size(), 4u);
  for (const auto& s : report.epochs) {
    ASSERT_TRUE(s.dev_acc.has_value());
    EXPECT_GE(*s.dev_acc, 0.0);
    EXPECT_LE(*s.dev_acc, 1.0);
  }

  Corpus no_dev = fix.corpus;
  no_dev.dev.clear();
  auto [p2, r2] = train(no_dev, fix.vocab, fix.embed, cfg);
  EXPECT_FALSE(r2.epochs[0].dev_acc.has_value());
}

TEST(Train, OnEpochObserverSeesEveryEpoch) {
  ToyFixture fix;
  TrainConfig cfg = fix.quick_config(TrainMode::natural);
  cfg.epochs = 3;
  std::vector<int> epochs_seen;
  std::vector<std::string> snapshots;
  auto [params, report] =
      train(fix.corpus, fix.vocab, fix.embed, cfg, nullptr,
            [&](int epoch, const ClassifierParams& p) {
              epochs_seen.push_back(epoch);
              snapshots.push_back(serialize_params(p));
            });
  EXPECT_EQ(epochs_seen, (std::vector<int>{1, 2, 3}));
  EXPECT_EQ(snapshots.back(), serialize_params(params));
  EXPECT_NE(snapshots[0], snapshots[1]);
}
