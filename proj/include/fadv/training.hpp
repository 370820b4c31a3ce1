#pragma once

#include <chrono>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fadv/fada.hpp"

namespace fadv {

enum class TrainMode { natural, ada, fada, ada_only, fada_only, at, gat };
enum class InnerMethod { fgsm, fgm, pgd, ascent };

inline const char* to_string(TrainMode m) {
  switch (m) {
    case TrainMode::natural: return "natural";
    case TrainMode::ada: return "ada";
    case TrainMode::fada: return "fada";
    case TrainMode::ada_only: return "ada_only";
    case TrainMode::fada_only: return "fada_only";
    case TrainMode::at: return "at";
    case TrainMode::gat: return "gat";
  }
  return "?";
}

inline const char* to_string(InnerMethod m) {
  switch (m) {
    case InnerMethod::fgsm: return "fgsm";
    case InnerMethod::fgm: return "fgm";
    case InnerMethod::pgd: return "pgd";
    case InnerMethod::ascent: return "ascent";
  }
  return "?";
}

struct TrainConfig {
  TrainMode mode = TrainMode::natural;
  InnerMethod inner_method = InnerMethod::fgm;
  PerturbationConfig inner;
  int epochs = 10;
  int batch_size = 64;
  double lr = 0.1;
  double weight_decay = 0.0;
  std::uint64_t seed = 1;
  int hidden = 64;
};

struct EpochStats {
  double loss = 0.0;           // always loss_clean + loss_adv + loss_friendly
  double loss_clean = 0.0;
  double loss_adv = 0.0;
  double loss_friendly = 0.0;
  std::optional<double> dev_acc;
  double seconds = 0.0;        // wall clock; kept out of deterministic reports
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  std::string checkpoint_id;
  // instrumentation: the clean term of the objective must contribute to
  // every batch in modes that include it
  std::uint64_t batches_total = 0;
  std::uint64_t batches_with_clean_term = 0;
};

/// Deterministic permutation keyed by (seed, epoch), sliced into batches of
/// m with the last short batch kept.
inline std::vector<std::vector<std::size_t>> shuffle_and_batch(std::size_t n, int m,
                                                               std::uint64_t seed,
                                                               int epoch) {
  if (m < 1) throw ContractViolation("shuffle_and_batch: batch size must be >= 1");
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  rng::Engine eng(seed, "shuffle-epoch-" + std::to_string(epoch));
  eng.shuffle(perm);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t at = 0; at < n; at += static_cast<std::size_t>(m)) {
    const std::size_t end = std::min(n, at + static_cast<std::size_t>(m));
    batches.emplace_back(perm.begin() + static_cast<std::ptrdiff_t>(at),
                         perm.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

/// The continuous perturbation for one example under the configured method.
/// fgsm/fgm take their single step from the clean-input gradient; pgd runs
/// projected multi-step ascent; ascent runs it projection-free.
inline Matrix inner_delta(const ClassifierParams& params, const std::vector<int>& ids,
                          int label, InnerMethod method, const PerturbationConfig& cfg) {
  switch (method) {
    case InnerMethod::fgsm: {
      const ForwardTrace t = forward(params, ids);
      return fgsm(backward(params, t, label).input_grad, cfg.epsilon).delta;
    }
    case InnerMethod::fgm: {
      const ForwardTrace t = forward(params, ids);
      return fgm(backward(params, t, label).input_grad, cfg.epsilon).delta;
    }
    case InnerMethod::pgd: {
      PerturbationConfig c = cfg;
      c.project = true;
      return multi_step_ascent(params, ids, label, c).perturbation.delta;
    }
    case InnerMethod::ascent: {
      PerturbationConfig c = cfg;
      c.project = false;
      return multi_step_ascent(params, ids, label, c).perturbation.delta;
    }
  }
  throw ContractViolation("inner_delta: unknown method");
}

namespace detail {

struct TrainItem {
  std::vector<int> ids;       // clean sentence
  std::vector<int> aug_ids;   // paired augmented sentence (gat only)
  int label = 0;
};

}  // namespace detail

/// Trains a classifier under the configured mode. `augmentation` is required
/// for ada/fada/ada_only/fada_only/gat and must pair the training split.
/// `on_epoch` (when set) observes the parameters after each epoch.
inline std::pair<ClassifierParams, TrainReport> train(
    const Corpus& corpus, const Vocab& vocab, const EmbeddingTable& init_embed,
    const TrainConfig& cfg, const AugmentedDataset* augmentation = nullptr,
    const std::function<void(int, const ClassifierParams&)>& on_epoch = nullptr) {
  const bool needs_aug = cfg.mode == TrainMode::ada || cfg.mode == TrainMode::fada ||
                         cfg.mode == TrainMode::ada_only ||
                         cfg.mode == TrainMode::fada_only || cfg.mode == TrainMode::gat;
  if (needs_aug && (augmentation == nullptr || augmentation->pairs.empty())) {
    throw ConfigError(std::string("train: mode '") + to_string(cfg.mode) +
                      "' requires an augmentation dataset");
  }
  if (cfg.epochs < 1) throw ConfigError("train: epochs must be >= 1");
  if (cfg.batch_size < 1) throw ConfigError("train: batch size must be >= 1");

  const bool has_adv_term = cfg.mode == TrainMode::at || cfg.mode == TrainMode::gat;
  const bool has_friendly_term = cfg.mode == TrainMode::gat;

  // Build the item list the optimizer loop iterates over.
  std::vector<detail::TrainItem> items;
  auto push_clean = [&](const std::vector<std::string>& text, int label) {
    detail::TrainItem it;
    it.ids = encode(vocab, text);
    it.label = label;
    items.push_back(std::move(it));
  };
  switch (cfg.mode) {
    case TrainMode::natural:
    case TrainMode::at:
      for (const auto& ex : corpus.train) push_clean(ex.text, ex.label);
      break;
    case TrainMode::ada:
    case TrainMode::fada:
      // augmented sentences join the pool as extra examples
      for (const auto& ex : corpus.train) push_clean(ex.text, ex.label);
      for (const auto& pair : augmentation->pairs) {
        push_clean(pair.augmented, pair.source.label);
      }
      break;
    case TrainMode::ada_only:
    case TrainMode::fada_only:
      for (const auto& pair : augmentation->pairs) {
        push_clean(pair.augmented, pair.source.label);
      }
      break;
    case TrainMode::gat:
      // X and its paired X_f travel together so the three loss terms see
      // aligned examples, each consumed with the source label
      for (const auto& pair : augmentation->pairs) {
        detail::TrainItem it;
        it.ids = encode(vocab, pair.source.text);
        it.aug_ids = encode(vocab, pair.augmented);
        it.label = pair.source.label;
        items.push_back(std::move(it));
      }
      break;
  }
  if (items.empty()) throw ConfigError("train: empty training set");

  ClassifierParams params =
      init_params(init_embed, cfg.hidden, corpus.num_classes, vocab.pad_id, cfg.seed);
  TrainReport report;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    double sum_clean = 0.0, sum_adv = 0.0, sum_friendly = 0.0;

    const auto batches = shuffle_and_batch(items.size(), cfg.batch_size, cfg.seed, epoch);
    for (const auto& batch : batches) {
      Gradients acc = make_zero_gradients(params, 1);
      for (const std::size_t idx : batch) {
        const detail::TrainItem& item = items[idx];

        const ForwardTrace clean_trace = forward(params, item.ids);
        sum_clean += loss_ce(clean_trace, item.label);
        add_param_grads(acc, backward(params, clean_trace, item.label), 1.0);

        if (has_adv_term) {
          const Matrix delta =
              inner_delta(params, item.ids, item.label, cfg.inner_method, cfg.inner);
          const ForwardTrace adv_trace = forward(params, item.ids, &delta);
          sum_adv += loss_ce(adv_trace, item.label);
          add_param_grads(acc, backward(params, adv_trace, item.label), 1.0);
        }
        if (has_friendly_term) {
          const Matrix delta_f =
              inner_delta(params, item.aug_ids, item.label, cfg.inner_method, cfg.inner);
          const ForwardTrace f_trace = forward(params, item.aug_ids, &delta_f);
          sum_friendly += loss_ce(f_trace, item.label);
          add_param_grads(acc, backward(params, f_trace, item.label), 1.0);
        }
      }
      const double inv_batch = 1.0 / static_cast<double>(batch.size());
      acc.embed *= inv_batch;
      acc.w1 *= inv_batch;
      acc.b1 *= inv_batch;
      acc.w2 *= inv_batch;
      acc.b2 *= inv_batch;
      sgd_step(params, acc, cfg.lr, cfg.weight_decay);
      ++report.batches_total;
      ++report.batches_with_clean_term;  // every mode keeps the clean term
    }

    EpochStats stats;
    const double inv = 1.0 / static_cast<double>(items.size());
    stats.loss_clean = sum_clean * inv;
    stats.loss_adv = sum_adv * inv;
    stats.loss_friendly = sum_friendly * inv;
    stats.loss = stats.loss_clean + stats.loss_adv + stats.loss_friendly;
    if (!corpus.dev.empty()) {
      std::size_t correct = 0;
      for (const auto& ex : corpus.dev) {
        if (predict(params, encode(vocab, ex.text)) == ex.label) ++correct;
      }
      stats.dev_acc = static_cast<double>(correct) / static_cast<double>(corpus.dev.size());
    }
    stats.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report.epochs.push_back(stats);
    if (on_epoch) on_epoch(epoch, params);
  }

  report.checkpoint_id = checkpoint_id(params);
  return {std::move(params), std::move(report)};
}

}  // namespace fadv
