#pragma once

#include <numeric>
#include <string>
#include <vector>

#include "fadv/training.hpp"

namespace fadv {

/// Fraction of examples with predict == label.
inline double clean_accuracy(const ClassifierParams& params, const Vocab& vocab,
                             const std::vector<LabeledExample>& split,
                             QueryCounter* qc = nullptr) {
  if (split.empty()) throw ContractViolation("clean_accuracy: empty split");
  std::size_t correct = 0;
  for (const auto& ex : split) {
    if (predict(params, encode(vocab, ex.text), qc) == ex.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(split.size());
}

/// Robustness metrics for one attack variant over a deterministic sample.
struct AttackEvalEntry {
  std::string name;
  AttackConfig cfg;
  double ra = 0.0;             // (# correct AND attack failed) / n_eval
  double asr = 0.0;            // (# attack succeeded) / n_attacked, 0 when none attacked
  double mean_queries = 0.0;   // averaged over attacked examples
  double clean_sample_acc = 0.0;
  std::uint64_t n_eval = 0;
  std::uint64_t n_attacked = 0;
  std::uint64_t n_success = 0;
  std::uint64_t n_clean_miss = 0;
  std::uint64_t total_queries = 0;
};

struct DefenseReport {
  std::string defense;
  std::string checkpoint_id;
  double clean_acc = 0.0;      // over the full split
  std::uint64_t n_clean_eval = 0;
  std::uint64_t sample_seed = 0;
  std::vector<AttackEvalEntry> attacks;
};

/// The attacked subset: a seeded shuffle of the split indices, first
/// `sample_size` kept, reported in ascending index order.
inline std::vector<std::size_t> sample_indices(std::size_t split_size,
                                               std::size_t sample_size,
                                               std::uint64_t seed) {
  if (sample_size > split_size) {
    throw ContractViolation("sample_indices: sample_size exceeds split size");
  }
  std::vector<std::size_t> idx(split_size);
  std::iota(idx.begin(), idx.end(), 0);
  rng::Engine eng(seed, "sampling");
  eng.shuffle(idx);
  idx.resize(sample_size);
  std::sort(idx.begin(), idx.end());
  return idx;
}

/// Attacks the correctly classified examples of a deterministic sample and
/// aggregates RA / ASR / mean queries. Attack queries (and only those) flow
/// through `qc`, so the counter delta reconciles exactly with the per-example
/// totals; the clean screening call is the evaluator's, not the attacker's.
inline AttackEvalEntry robust_evaluate(const ClassifierParams& params, const Vocab& vocab,
                                       const std::vector<LabeledExample>& split,
                                       const SynonymLexicon& lexicon,
                                       const EmbeddingTable& sim_embed,
                                       const AttackConfig& cfg, std::size_t sample_size,
                                       std::uint64_t seed, const std::string& name = "greedy",
                                       QueryCounter* qc = nullptr, int workers = 1) {
  AttackEvalEntry e;
  e.name = name;
  e.cfg = cfg;
  e.n_eval = sample_size;

  struct PerExample {
    bool clean_correct = false;
    bool success = false;
    std::uint64_t queries = 0;
  };
  const std::vector<std::size_t> sample = sample_indices(split.size(), sample_size, seed);
  const std::vector<PerExample> results = parallel_map<PerExample>(
      sample.size(), workers, [&](std::size_t k) {
        const LabeledExample& ex = split[sample[k]];
        PerExample r;
        if (predict(params, encode(vocab, ex.text)) != ex.label) return r;
        r.clean_correct = true;
        QueryCounter local;
        r.success =
            greedy_aws(params, vocab, ex, lexicon, sim_embed, cfg, &local).success;
        r.queries = local.count;
        return r;
      });

  std::uint64_t survived = 0;
  for (const PerExample& r : results) {
    if (!r.clean_correct) {
      ++e.n_clean_miss;
      continue;
    }
    ++e.n_attacked;
    e.total_queries += r.queries;
    if (qc != nullptr) qc->count += r.queries;
    if (r.success) {
      ++e.n_success;
    } else {
      ++survived;
    }
  }
  e.clean_sample_acc = static_cast<double>(e.n_attacked) / static_cast<double>(e.n_eval);
  e.ra = static_cast<double>(survived) / static_cast<double>(e.n_eval);
  e.asr = e.n_attacked == 0
              ? 0.0
              : static_cast<double>(e.n_success) / static_cast<double>(e.n_attacked);
  e.mean_queries = e.n_attacked == 0 ? 0.0
                                     : static_cast<double>(e.total_queries) /
                                           static_cast<double>(e.n_attacked);
  return e;
}

inline DefenseReport evaluate_defense(
    const ClassifierParams& params, const Vocab& vocab,
    const std::vector<LabeledExample>& split, const SynonymLexicon& lexicon,
    const EmbeddingTable& sim_embed,
    const std::vector<std::pair<std::string, AttackConfig>>& variants,
    std::size_t sample_size, std::uint64_t seed, const std::string& defense_name,
    int workers = 1) {
  DefenseReport report;
  report.defense = defense_name;
  report.checkpoint_id = checkpoint_id(params);
  report.clean_acc = clean_accuracy(params, vocab, split);
  report.n_clean_eval = split.size();
  report.sample_seed = seed;
  for (const auto& [name, cfg] : variants) {
    report.attacks.push_back(robust_evaluate(params, vocab, split, lexicon, sim_embed,
                                             cfg, sample_size, seed, name, nullptr,
                                             workers));
  }
  return report;
}

/// Contrast experiment: train one model only on adversarial sentences and one
/// only on friendly sentences, from the same base model's attacks, and compare
/// clean-test accuracy against natural training.
struct Figure1Report {
  double natural_test = 0.0;
  double ada_train_own = 0.0;   // ada_only model's accuracy on its own training data
  double ada_test = 0.0;
  double fada_train_own = 0.0;
  double fada_test = 0.0;
  std::uint64_t ada_attack_successes = 0;
  std::uint64_t fada_attack_successes = 0;
};

inline double accuracy_on_pairs(const ClassifierParams& params, const Vocab& vocab,
                                const std::vector<AugmentedPair>& pairs) {
  if (pairs.empty()) throw ContractViolation("accuracy_on_pairs: empty dataset");
  std::size_t correct = 0;
  for (const auto& pair : pairs) {
    if (predict(params, encode(vocab, pair.augmented)) == pair.source.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(pairs.size());
}

inline Figure1Report figure1_experiment(const Corpus& corpus, const Vocab& vocab,
                                        const EmbeddingTable& init_embed,
                                        const SynonymLexicon& lexicon,
                                        const EmbeddingTable& sim_embed,
                                        const TrainConfig& base_cfg,
                                        const AttackConfig& attack_cfg) {
  if (corpus.test.empty()) throw ContractViolation("figure1_experiment: empty test split");

  TrainConfig natural_cfg = base_cfg;
  natural_cfg.mode = TrainMode::natural;
  auto [base_params, base_report] = train(corpus, vocab, init_embed, natural_cfg);

  Figure1Report fig;
  fig.natural_test = clean_accuracy(base_params, vocab, corpus.test);

  const AugmentedDataset ada = generate_ada(base_params, vocab, corpus.train, lexicon,
                                            sim_embed, attack_cfg, base_cfg.seed);
  const AugmentedDataset fada = augment_dataset(base_params, vocab, corpus.train, lexicon,
                                                sim_embed, attack_cfg, base_cfg.seed);
  for (const auto& pair : ada.pairs) fig.ada_attack_successes += pair.from_attack;
  for (const auto& pair : fada.pairs) fig.fada_attack_successes += pair.from_attack;

  TrainConfig only_cfg = base_cfg;
  only_cfg.mode = TrainMode::ada_only;
  auto [ada_params, ada_report] = train(corpus, vocab, init_embed, only_cfg, &ada);
  only_cfg.mode = TrainMode::fada_only;
  auto [fada_params, fada_report] = train(corpus, vocab, init_embed, only_cfg, &fada);

  fig.ada_train_own = accuracy_on_pairs(ada_params, vocab, ada.pairs);
  fig.ada_test = clean_accuracy(ada_params, vocab, corpus.test);
  fig.fada_train_own = accuracy_on_pairs(fada_params, vocab, fada.pairs);
  fig.fada_test = clean_accuracy(fada_params, vocab, corpus.test);
  return fig;
}

enum class SweepKind { steps, step_size, epochs };

inline const char* to_string(SweepKind k) {
  switch (k) {
    case SweepKind::steps: return "steps";
    case SweepKind::step_size: return "step_size";
    case SweepKind::epochs: return "epochs";
  }
  return "?";
}

struct SweepRow {
  double setting = 0.0;
  double clean = 0.0;
  double ra = 0.0;
};

struct SweepResult {
  SweepKind kind = SweepKind::steps;
  std::vector<SweepRow> rows;
};

/// Trains and evaluates across a hyperparameter grid with a shared seed.
/// steps / step_size retrain per grid point; the epochs sweep trains once and
/// evaluates the intermediate checkpoint after each listed epoch.
inline SweepResult sweep(const Corpus& corpus, const Vocab& vocab,
                         const EmbeddingTable& init_embed, const SynonymLexicon& lexicon,
                         const EmbeddingTable& sim_embed, SweepKind kind,
                         const std::vector<double>& grid, const TrainConfig& base_cfg,
                         const AttackConfig& attack_cfg, std::size_t sample_size,
                         std::uint64_t eval_seed,
                         const AugmentedDataset* augmentation = nullptr) {
  if (grid.empty()) throw ContractViolation("sweep: empty grid");
  if (corpus.test.empty()) throw ContractViolation("sweep: empty test split");
  SweepResult result;
  result.kind = kind;

  auto evaluate_point = [&](const ClassifierParams& params, double setting) {
    SweepRow row;
    row.setting = setting;
    row.clean = clean_accuracy(params, vocab, corpus.test);
    row.ra = robust_evaluate(params, vocab, corpus.test, lexicon, sim_embed, attack_cfg,
                             sample_size, eval_seed)
                 .ra;
    result.rows.push_back(row);
  };

  if (kind == SweepKind::epochs) {
    int max_epoch = 0;
    for (const double g : grid) {
      if (g < 1.0 || g != std::floor(g)) throw ContractViolation("sweep: bad epoch grid");
      max_epoch = std::max(max_epoch, static_cast<int>(g));
    }
    TrainConfig cfg = base_cfg;
    cfg.epochs = max_epoch;
    std::vector<std::pair<int, ClassifierParams>> snapshots;
    train(corpus, vocab, init_embed, cfg, augmentation,
          [&](int epoch, const ClassifierParams& p) {
            for (const double g : grid) {
              if (static_cast<int>(g) == epoch) {
                snapshots.emplace_back(epoch, p);
                break;
              }
            }
          });
    for (const auto& [epoch, params] : snapshots) {
      evaluate_point(params, static_cast<double>(epoch));
    }
    return result;
  }

  for (const double g : grid) {
    TrainConfig cfg = base_cfg;
    if (kind == SweepKind::steps) {
      if (g < 1.0 || g != std::floor(g)) throw ContractViolation("sweep: bad steps grid");
      cfg.inner.steps = static_cast<int>(g);
    } else {
      if (g <= 0.0) throw ContractViolation("sweep: step sizes must be > 0");
      cfg.inner.alpha = g;
    }
    auto [params, report] = train(corpus, vocab, init_embed, cfg, augmentation);
    evaluate_point(params, g);
  }
  return result;
}

}  // namespace fadv
