#include "fadv/fada.hpp"

#include <gtest/gtest.h>

#include "fadv/synthetic.hpp"
#include "support.hpp"

using namespace fadv;
using fadvtest::TempDir;
using fadvtest::ToyLinearModel;

namespace {

int hamming(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  EXPECT_EQ(a.size(), b.size());
  int d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += a[i] != b[i];
  return d;
}

AttackConfig toy_attack_config() {
  AttackConfig cfg;
  cfg.p_max = 0.4;
  cfg.eps_min = 0.84;
  cfg.k_syn = 50;
  return cfg;
}

struct TrainedToy {
  Corpus corpus;
  Vocab vocab;
  SynonymLexicon lexicon;
  EmbeddingTable embed;
  ClassifierParams params;

  explicit TrainedToy(ToySpec spec) {
    corpus = make_toy_corpus(spec);
    vocab = build_vocab(corpus, 1);
    lexicon = make_toy_lexicon(spec);
    embed = make_toy_embeddings(spec, vocab);
    params = init_params(embed, 16, 2, vocab.pad_id, 3);
    for (int epoch = 0; epoch < 8; ++epoch) {
      for (const auto& ex : corpus.train) {
        const ForwardTrace t = forward(params, encode(vocab, ex.text));
        sgd_step(params, backward(params, t, ex.label), 0.25, 0.0);
      }
    }
  }
};

ToySpec small_spec() {
  ToySpec spec;
  spec.n_train = 80;
  spec.n_dev = 10;
  spec.n_test = 60;
  spec.min_len = 5;
  spec.max_len = 9;
  spec.dim = 16;
  return spec;
}

}  // namespace

TEST(GenerateFriendly, FailedAttackReturnsOriginalUnchanged) {
  ToyLinearModel toy;
  const LabeledExample ex{{"good", "blank"}, 0};
  SynonymLexicon empty;
  empty.cap = 50;
  AttackConfig cfg;
  cfg.p_max = 1.0;
  cfg.eps_min = 0.0;
  const FriendlyExample fe = generate_friendly(toy.params, toy.vocab, ex, empty,
                                               toy.static_embed, cfg);
  EXPECT_EQ(fe.x_f, ex.text);
  EXPECT_FALSE(fe.derived_from_attack);
  EXPECT_FALSE(fe.reverted_index.has_value());
}

TEST(GenerateFriendly, MisclassifiedInputReturnsOriginalFlagged) {
  ToyLinearModel toy;
  const LabeledExample ex{{"good", "blank"}, 1};  // model predicts 0
  SynonymLexicon lex;
  lex.cap = 50;
  lex.entries["good"] = {"awful"};
  AttackConfig cfg;
  cfg.p_max = 1.0;
  cfg.eps_min = 0.0;
  const FriendlyExample fe =
      generate_friendly(toy.params, toy.vocab, ex, lex, toy.static_embed, cfg);
  EXPECT_EQ(fe.x_f, ex.text);
  EXPECT_FALSE(fe.derived_from_attack);
}

TEST(GenerateFriendly, SingleSubstitutionRevertsToOriginal) {
  ToyLinearModel toy;
  const LabeledExample ex{{"good", "blank"}, 0};
  SynonymLexicon lex;
  lex.cap = 50;
  lex.entries["good"] = {"awful"};
  AttackConfig cfg;
  cfg.p_max = 1.0;
  cfg.eps_min = 0.0;
  const FriendlyExample fe =
      generate_friendly(toy.params, toy.vocab, ex, lex, toy.static_embed, cfg);
  EXPECT_TRUE(fe.derived_from_attack);
  EXPECT_EQ(fe.x_f, ex.text);  // the only substitution was reverted
  EXPECT_EQ(*fe.reverted_index, 0);
}

TEST(GenerateFriendly, MultiSubstitutionDiffersFromBothEnds) {
  TrainedToy toy(small_spec());
  const AttackConfig cfg = toy_attack_config();
  int multi = 0;
  for (const auto& ex : toy.corpus.test) {
    const AttackOutcome out =
        greedy_aws(toy.params, toy.vocab, ex, toy.lexicon, toy.embed, cfg);
    if (!out.success || out.modifications.size() < 2) continue;
    ++multi;
    const FriendlyExample fe =
        generate_friendly(toy.params, toy.vocab, ex, toy.lexicon, toy.embed, cfg);
    ASSERT_TRUE(fe.derived_from_attack);
    // differs from x at every substituted position except the reverted one,
    // and from x_adv at exactly the reverted position
    EXPECT_EQ(hamming(ex.text, fe.x_f),
              static_cast<int>(out.modifications.size()) - 1);
    EXPECT_EQ(hamming(out.x_adv, fe.x_f), 1);
    EXPECT_EQ(fe.x_f[*fe.reverted_index], ex.text[*fe.reverted_index]);
    EXPECT_EQ(*fe.reverted_index, *out.last_index);
  }
  EXPECT_GT(multi, 3) << "toy setup produced too few multi-substitution attacks";
}

// Attack-derived friendly examples sit on the correct side of the boundary,
// adversarial ones sit on the wrong side, and the edit-distance ladder
// hamming(x, x_f) == hamming(x, x_adv) - 1 holds case by case.
TEST(Fada, BoundaryAndLadderInvariants) {
  TrainedToy toy(small_spec());
  const AttackConfig cfg = toy_attack_config();
  int successes = 0;
  for (const auto& ex : toy.corpus.train) {
    const AttackOutcome out =
        greedy_aws(toy.params, toy.vocab, ex, toy.lexicon, toy.embed, cfg);
    if (!out.success) continue;
    ++successes;
    const FriendlyExample fe =
        generate_friendly(toy.params, toy.vocab, ex, toy.lexicon, toy.embed, cfg);
    ASSERT_TRUE(fe.derived_from_attack);
    EXPECT_EQ(predict(toy.params, encode(toy.vocab, out.x_adv)), 1 - ex.label);
    EXPECT_EQ(predict(toy.params, encode(toy.vocab, fe.x_f)), ex.label);
    EXPECT_EQ(hamming(ex.text, fe.x_f), hamming(ex.text, out.x_adv) - 1);
  }
  EXPECT_GT(successes, 20);
}

TEST(AugmentDataset, OnePairPerExampleAndDeterministicBytes) {
  TrainedToy toy(small_spec());
  const AttackConfig cfg = toy_attack_config();
  const AugmentedDataset a = augment_dataset(toy.params, toy.vocab, toy.corpus.train,
                                             toy.lexicon, toy.embed, cfg, 7);
  EXPECT_EQ(a.pairs.size(), toy.corpus.train.size());
  EXPECT_EQ(a.kind, "fada");
  EXPECT_EQ(a.checkpoint_id, checkpoint_id(toy.params));

  TempDir dir;
  save_augmentation(dir.file("a.tsv"), a);
  const AugmentedDataset b = augment_dataset(toy.params, toy.vocab, toy.corpus.train,
                                             toy.lexicon, toy.embed, cfg, 7);
  save_augmentation(dir.file("b.tsv"), b);
  EXPECT_EQ(fadvtest::read_file(dir.file("a.tsv")), fadvtest::read_file(dir.file("b.tsv")));

  // parallel generation produces the same bytes as sequential
  const AugmentedDataset par = augment_dataset(toy.params, toy.vocab, toy.corpus.train,
                                               toy.lexicon, toy.embed, cfg, 7, 4);
  save_augmentation(dir.file("par.tsv"), par);
  EXPECT_EQ(fadvtest::read_file(dir.file("a.tsv")),
            fadvtest::read_file(dir.file("par.tsv")));
}

TEST(AugmentDataset, FriendlyExamplesKeepTheSourcePrediction) {
  TrainedToy toy(small_spec());
  const AugmentedDataset ds = augment_dataset(toy.params, toy.vocab, toy.corpus.train,
                                              toy.lexicon, toy.embed,
                                              toy_attack_config(), 7);
  std::size_t from_attack = 0, kept = 0;
  for (const auto& pair : ds.pairs) {
    if (!pair.from_attack) continue;
    ++from_attack;
    kept += predict(toy.params, encode(toy.vocab, pair.augmented)) == pair.source.label;
  }
  ASSERT_GT(from_attack, 20u);
  // the greedy stop argument predicts 100%; tolerance covers truncation edges
  EXPECT_GE(static_cast<double>(kept) / static_cast<double>(from_attack), 0.95);
}

TEST(GenerateAda, StoredSentencesCrossTheBoundary) {
  TrainedToy toy(small_spec());
  const AugmentedDataset ds = generate_ada(toy.params, toy.vocab, toy.corpus.train,
                                           toy.lexicon, toy.embed, toy_attack_config(), 7);
  EXPECT_EQ(ds.kind, "ada");
  EXPECT_EQ(ds.pairs.size(), toy.corpus.train.size());
  std::size_t attacked = 0;
  for (const auto& pair : ds.pairs) {
    if (pair.from_attack) {
      ++attacked;
      EXPECT_NE(predict(toy.params, encode(toy.vocab, pair.augmented)),
                pair.source.label);
    } else {
      EXPECT_EQ(pair.augmented, pair.source.text);
    }
  }
  EXPECT_GT(attacked, 20u);
}

TEST(AugmentationFile, HeaderRoundTripsMetadata) {
  ToyLinearModel toy;
  AugmentedDataset ds;
  ds.kind = "fada";
  ds.seed = 99;
  ds.config_hash = attack_config_hash(toy_attack_config());
  ds.checkpoint_id = checkpoint_id(toy.params);
  AugmentedPair pair;
  pair.source = {{"good", "blank"}, 0};
  pair.augmented = {"soso", "blank"};
  pair.from_attack = true;
  ds.pairs.push_back(pair);
  pair.source = {{"awful", "blank"}, 1};
  pair.augmented = {"awful", "blank"};
  pair.from_attack = false;
  ds.pairs.push_back(pair);

  TempDir dir;
  save_augmentation(dir.file("aug.tsv"), ds);
  const AugmentedDataset back = load_augmentation(dir.file("aug.tsv"));
  EXPECT_EQ(back.kind, ds.kind);
  EXPECT_EQ(back.seed, ds.seed);
  EXPECT_EQ(back.config_hash, ds.config_hash);
  EXPECT_EQ(back.checkpoint_id, ds.checkpoint_id);
  ASSERT_EQ(back.pairs.size(), 2u);
  EXPECT_EQ(back.pairs[0].source.text, ds.pairs[0].source.text);
  EXPECT_EQ(back.pairs[0].augmented, ds.pairs[0].augmented);
  EXPECT_EQ(back.pairs[0].source.label, 0);
  EXPECT_TRUE(back.pairs[0].from_attack);
  EXPECT_FALSE(back.pairs[1].from_attack);
}

TEST(AugmentationFile, RejectsMalformedContent) {
  TempDir dir;
  fadvtest::write_file(dir.file("missing-header.tsv"), "a\tb\t0\tattacked\n");
  EXPECT_THROW(load_augmentation(dir.file("missing-header.tsv")), ParseError);

  fadvtest::write_file(dir.file("bad-cols.tsv"),
                       std::string(kAugmentationHeaderPrefix) +
                           " kind=ada config=x checkpoint=y seed=1\na\tb\t0\n");
  EXPECT_THROW(load_augmentation(dir.file("bad-cols.tsv")), ParseError);

  fadvtest::write_file(dir.file("bad-flag.tsv"),
                       std::string(kAugmentationHeaderPrefix) +
                           " kind=ada config=x checkpoint=y seed=1\na\tb\t0\tweird\n");
  EXPECT_THROW(load_augmentation(dir.file("bad-flag.tsv")), ParseError);
}
