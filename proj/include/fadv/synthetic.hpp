#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "fadv/embedding.hpp"

namespace fadv {

/// Deterministic synthetic sentiment data for demos and experiments: filler
/// words carry no class signal, polarity words carry it, and the synonym
/// lexicon offers same-class, filler and cross-class substitutes so greedy
/// attacks have real choices to make.
struct ToySpec {
  int n_train = 2400;
  int n_dev = 300;
  int n_test = 600;
  int n_pos = 20;
  int n_neg = 20;
  int n_fill = 60;
  int min_len = 8;
  int max_len = 12;
  int pol_min = 2;   // polarity words per sentence
  int pol_max = 3;
  int dim = 50;
  double base_scale = 1.0;   // shared class-independent embedding component
  double noise_scale = 0.6;  // per-word component
  std::uint64_t seed = 1;
};

namespace toy {

inline std::string pos_word(int i) { return "pos" + std::to_string(i); }
inline std::string neg_word(int i) { return "neg" + std::to_string(i); }
inline std::string fill_word(int i) { return "fill" + std::to_string(i); }

}  // namespace toy

inline Corpus make_toy_corpus(const ToySpec& spec) {
  if (spec.pol_max > spec.min_len) {
    throw ContractViolation("make_toy_corpus: pol_max exceeds min_len");
  }
  rng::Engine eng(spec.seed, "toy-corpus");
  auto make_split = [&](int count) {
    std::vector<LabeledExample> split;
    split.reserve(count);
    for (int s = 0; s < count; ++s) {
      LabeledExample ex;
      ex.label = static_cast<int>(eng.below(2));
      const int len = eng.uniform_int(spec.min_len, spec.max_len);
      const int n_pol = eng.uniform_int(spec.pol_min, spec.pol_max);
      std::vector<int> slots(len);
      for (int i = 0; i < len; ++i) slots[i] = i;
      eng.shuffle(slots);
      std::vector<bool> is_pol(len, false);
      for (int i = 0; i < n_pol; ++i) is_pol[slots[i]] = true;
      ex.text.reserve(len);
      for (int i = 0; i < len; ++i) {
        if (is_pol[i]) {
          ex.text.push_back(ex.label == 1
                                ? toy::pos_word(static_cast<int>(eng.below(spec.n_pos)))
                                : toy::neg_word(static_cast<int>(eng.below(spec.n_neg))));
        } else {
          ex.text.push_back(toy::fill_word(static_cast<int>(eng.below(spec.n_fill))));
        }
      }
      split.push_back(std::move(ex));
    }
    return split;
  };
  Corpus c;
  c.max_len = spec.max_len;
  c.num_classes = 2;
  c.train = make_split(spec.n_train);
  c.dev = make_split(spec.n_dev);
  c.test = make_split(spec.n_test);
  return c;
}

/// Polarity words offer two same-class neighbors, two fillers and one
/// cross-class word; fillers offer two other fillers.
inline SynonymLexicon make_toy_lexicon(const ToySpec& spec) {
  SynonymLexicon lex;
  lex.cap = 50;
  for (int i = 0; i < spec.n_pos; ++i) {
    lex.entries[toy::pos_word(i)] = {
        toy::pos_word((i + 1) % spec.n_pos), toy::pos_word((i + 2) % spec.n_pos),
        toy::fill_word((2 * i) % spec.n_fill), toy::fill_word((2 * i + 1) % spec.n_fill),
        toy::neg_word(i % spec.n_neg)};
  }
  for (int i = 0; i < spec.n_neg; ++i) {
    lex.entries[toy::neg_word(i)] = {
        toy::neg_word((i + 1) % spec.n_neg), toy::neg_word((i + 2) % spec.n_neg),
        toy::fill_word((2 * i) % spec.n_fill), toy::fill_word((2 * i + 1) % spec.n_fill),
        toy::pos_word(i % spec.n_pos)};
  }
  for (int i = 0; i < spec.n_fill; ++i) {
    lex.entries[toy::fill_word(i)] = {toy::fill_word((i + 1) % spec.n_fill),
                                      toy::fill_word((i + 3) % spec.n_fill)};
  }
  return lex;
}

/// Every word vector shares one class-independent base direction plus
/// per-word noise, so mean-embedding cosine similarity stays high under a
/// within-budget word swap. PAD is zero; UNK is the bare base direction.
inline EmbeddingTable make_toy_embeddings(const ToySpec& spec, const Vocab& vocab) {
  EmbeddingTable t;
  t.dim = spec.dim;
  t.vectors = Matrix::Zero(vocab.size(), spec.dim);

  rng::Engine base_eng(spec.seed, "toy-base");
  Vector base(spec.dim);
  for (int j = 0; j < spec.dim; ++j) base(j) = base_eng.normal();
  base *= spec.base_scale / base.norm();

  rng::Engine eng(spec.seed, "toy-embed");
  for (int i = 0; i < vocab.size(); ++i) {
    if (i == vocab.pad_id) continue;
    t.vectors.row(i) = base.transpose();
    if (i == vocab.unk_id) continue;
    Vector noise(spec.dim);
    for (int j = 0; j < spec.dim; ++j) noise(j) = eng.normal();
    // ||noise|| ~ sqrt(dim), so the per-word component has norm ~ noise_scale
    t.vectors.row(i) +=
        (spec.noise_scale / std::sqrt(static_cast<double>(spec.dim))) * noise.transpose();
  }
  return t;
}

/// Writes train/dev/test.tsv, synonyms.tsv and embeddings.vec under `dir`.
inline void write_toy_dataset(const std::string& dir, const ToySpec& spec) {
  std::filesystem::create_directories(dir);
  const Corpus corpus = make_toy_corpus(spec);
  auto write_split = [&](const char* name, const std::vector<LabeledExample>& split) {
    std::ofstream out(dir + "/" + name);
    if (!out) throw IoError("cannot write " + dir + "/" + name);
    for (const auto& ex : split) out << detokenize(ex.text) << '\t' << ex.label << '\n';
  };
  write_split("train.tsv", corpus.train);
  write_split("dev.tsv", corpus.dev);
  write_split("test.tsv", corpus.test);
  save_synonyms(dir + "/synonyms.tsv", make_toy_lexicon(spec));
  const Vocab vocab = build_vocab(corpus, 1);
  save_embeddings(dir + "/embeddings.vec", vocab, make_toy_embeddings(spec, vocab));
}

}  // namespace fadv
