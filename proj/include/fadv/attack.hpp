#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "fadv/innermax.hpp"

namespace fadv {

struct AttackConfig {
  double p_max = 0.15;   // max fraction of words perturbed, in (0, 1]
  double eps_min = 0.84; // min similarity to the original sentence, in [0, 1]
  int k_syn = 50;        // per-position candidate cap
  std::uint64_t max_queries = 0;  // 0 = 50 * sentence length
};

inline void validate(const AttackConfig& cfg) {
  if (!(cfg.p_max > 0.0 && cfg.p_max <= 1.0)) {
    throw ContractViolation("attack: p_max must be in (0, 1]");
  }
  if (!(cfg.eps_min >= 0.0 && cfg.eps_min <= 1.0)) {
    throw ContractViolation("attack: eps_min must be in [0, 1]");
  }
  if (cfg.k_syn < 0) throw ContractViolation("attack: k_syn must be >= 0");
}

struct Modification {
  int index = 0;
  std::string original;
  std::string replacement;
};

struct AttackOutcome {
  std::vector<std::string> x_adv;
  bool attempted = false;  // false when the input was already misclassified
  bool success = false;
  bool truncated = false;  // query budget exhausted before a flip
  std::vector<Modification> modifications;  // ordered; each position at most once
  std::optional<int> last_index;            // i*
  std::optional<std::string> last_original; // the ORIGINAL word at i*
  std::uint64_t queries = 0;                // every model forward call
};

inline int substitution_budget(double p_max, std::size_t n) {
  return static_cast<int>(std::ceil(p_max * static_cast<double>(n)));
}

/// Positions ranked by how much replacing them with UNK lowers the true-label
/// probability. Consumes one forward call per non-pad position. Ties break
/// toward the lower index.
inline std::vector<int> word_importance(const ClassifierParams& params,
                                        const Vocab& vocab, const std::vector<int>& ids,
                                        int label, double base_prob_label,
                                        QueryCounter* qc = nullptr) {
  std::vector<std::pair<double, int>> scored;
  std::vector<int> probe = ids;
  for (int i = 0; i < static_cast<int>(ids.size()); ++i) {
    if (ids[i] == params.pad_id) continue;
    const int saved = probe[i];
    probe[i] = vocab.unk_id;
    const ForwardTrace t = forward(params, probe, nullptr, qc);
    probe[i] = saved;
    scored.emplace_back(base_prob_label - t.probs(label), i);
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  std::vector<int> order;
  order.reserve(scored.size());
  for (const auto& [imp, idx] : scored) order.push_back(idx);
  return order;
}

/// Cosine similarity of mean word-embedding vectors, 1.0 for identical
/// sentences and 0.0 when either mean vector has zero norm.
inline double sentence_similarity(const std::vector<std::string>& a,
                                  const std::vector<std::string>& b,
                                  const Vocab& vocab, const EmbeddingTable& embed) {
  if (a.size() != b.size()) {
    throw ContractViolation("sentence_similarity: length mismatch");
  }
  if (a.empty()) throw ContractViolation("sentence_similarity: empty sentence");
  if (a == b) return 1.0;
  Vector ma = Vector::Zero(embed.dim);
  Vector mb = Vector::Zero(embed.dim);
  for (const auto& w : a) ma += embed.vectors.row(vocab.id_of(w)).transpose();
  for (const auto& w : b) mb += embed.vectors.row(vocab.id_of(w)).transpose();
  ma /= static_cast<double>(a.size());
  mb /= static_cast<double>(b.size());
  const double na = ma.norm();
  const double nb = mb.norm();
  if (na < kZeroGradThreshold || nb < kZeroGradThreshold) return 0.0;
  return ma.dot(mb) / (na * nb);
}

/// Greedy adversarial word substitution: rank positions by importance, try
/// synonym candidates best-first at each, commit the candidate that most
/// decreases the true-label probability, and stop at the first label flip.
/// `sim_embed` is the static reference table used for the similarity
/// constraint; it is independent of the attacked model's trained embeddings.
inline AttackOutcome greedy_aws(const ClassifierParams& params, const Vocab& vocab,
                                const LabeledExample& example,
                                const SynonymLexicon& lexicon,
                                const EmbeddingTable& sim_embed, const AttackConfig& cfg,
                                QueryCounter* qc = nullptr,
                                std::ostream* trace = nullptr) {
  validate(cfg);
  const std::vector<std::string>& x = example.text;
  const std::size_t n = x.size();
  const std::uint64_t max_queries =
      cfg.max_queries != 0 ? cfg.max_queries : 50 * static_cast<std::uint64_t>(n);

  QueryCounter local;
  AttackOutcome out;
  out.x_adv = x;

  auto finish = [&]() {
    out.queries = local.count;
    if (qc != nullptr) qc->count += local.count;
    return out;
  };

  const std::vector<int> ids = encode(vocab, x);
  const ForwardTrace base = forward(params, ids, nullptr, &local);
  if (argmax_class(base.logits) != example.label) {
    return finish();  // caller attacks correctly classified inputs only
  }
  out.attempted = true;

  int n_nonpad = 0;
  for (int id : ids) {
    if (id != params.pad_id) ++n_nonpad;
  }
  if (local.count + static_cast<std::uint64_t>(n_nonpad) > max_queries) {
    out.truncated = true;
    return finish();
  }
  const std::vector<int> order =
      word_importance(params, vocab, ids, example.label, base.probs(example.label), &local);

  const int budget = substitution_budget(cfg.p_max, n);
  std::vector<std::string> cur = x;
  std::vector<int> cur_ids = ids;
  double cur_prob = base.probs(example.label);

  for (int pos : order) {
    if (static_cast<int>(out.modifications.size()) >= budget) break;
    const auto& all_cands = lexicon.candidates(x[pos]);
    const int n_cands = std::min<int>(static_cast<int>(all_cands.size()), cfg.k_syn);

    double best_prob = std::numeric_limits<double>::infinity();
    int best_pred = -1;
    const std::string* best_word = nullptr;

    for (int c = 0; c < n_cands; ++c) {
      const std::string& cand = all_cands[c];
      if (cand == cur[pos] || !vocab.contains(cand)) continue;

      std::vector<std::string> trial = cur;
      trial[pos] = cand;
      if (sentence_similarity(x, trial, vocab, sim_embed) < cfg.eps_min) continue;

      if (local.count >= max_queries) {
        out.truncated = true;
        return finish();
      }
      std::vector<int> trial_ids = cur_ids;
      trial_ids[pos] = vocab.index.at(cand);
      const ForwardTrace t = forward(params, trial_ids, nullptr, &local);
      const double p = t.probs(example.label);
      if (p < best_prob) {
        best_prob = p;
        best_pred = argmax_class(t.logits);
        best_word = &cand;
      }
    }

    if (best_word != nullptr && best_prob < cur_prob) {
      cur[pos] = *best_word;
      cur_ids[pos] = vocab.index.at(*best_word);
      cur_prob = best_prob;
      out.modifications.push_back({pos, x[pos], *best_word});
      out.x_adv = cur;
      if (trace != nullptr) {
        *trace << pos << '\t' << x[pos] << '\t' << *best_word << '\t' << best_prob << '\n';
      }
      if (best_pred != example.label) {
        out.success = true;
        out.last_index = pos;
        out.last_original = x[pos];
        break;
      }
    }
  }
  out.x_adv = cur;
  return finish();
}

/// Exhaustive substitution search at oracle scale (n <= 6, <= 3 effective
/// candidates per word). Returns a minimal-modification successful attack if
/// one exists inside the budget and similarity constraints.
inline AttackOutcome brute_force_aws(const ClassifierParams& params, const Vocab& vocab,
                                     const LabeledExample& example,
                                     const SynonymLexicon& lexicon,
                                     const EmbeddingTable& sim_embed,
                                     const AttackConfig& cfg) {
  validate(cfg);
  const std::vector<std::string>& x = example.text;
  const int n = static_cast<int>(x.size());
  if (n > 6) throw ContractViolation("brute_force_aws: oracle scale guard (n <= 6)");

  std::vector<std::vector<std::string>> cands(n);
  for (int i = 0; i < n; ++i) {
    const auto& all = lexicon.candidates(x[i]);
    for (int c = 0; c < static_cast<int>(all.size()) && c < cfg.k_syn; ++c) {
      if (all[c] != x[i] && vocab.contains(all[c])) cands[i].push_back(all[c]);
    }
    if (cands[i].size() > 3) {
      throw ContractViolation("brute_force_aws: oracle scale guard (<= 3 candidates/word)");
    }
  }

  QueryCounter local;
  AttackOutcome out;
  out.x_adv = x;

  auto finish = [&]() {
    out.queries = local.count;
    return out;
  };

  const std::vector<int> base_ids = encode(vocab, x);
  const ForwardTrace base = forward(params, base_ids, nullptr, &local);
  if (argmax_class(base.logits) != example.label) return finish();
  out.attempted = true;

  const int budget = std::min(substitution_budget(cfg.p_max, x.size()), n);

  std::vector<int> positions;
  std::vector<int> choice;
  // enumerate position subsets of a given size, then candidate assignments
  std::function<bool(int, int)> try_assign = [&](int pi, int size) -> bool {
    if (pi == size) {
      std::vector<std::string> trial = x;
      for (int k = 0; k < size; ++k) trial[positions[k]] = cands[positions[k]][choice[k]];
      if (sentence_similarity(x, trial, vocab, sim_embed) < cfg.eps_min) return false;
      const ForwardTrace t = forward(params, encode(vocab, trial), nullptr, &local);
      if (argmax_class(t.logits) == example.label) return false;
      out.success = true;
      out.x_adv = trial;
      out.modifications.clear();
      for (int k = 0; k < size; ++k) {
        out.modifications.push_back({positions[k], x[positions[k]], trial[positions[k]]});
      }
      out.last_index = positions[size - 1];
      out.last_original = x[positions[size - 1]];
      return true;
    }
    for (int c = 0; c < static_cast<int>(cands[positions[pi]].size()); ++c) {
      choice[pi] = c;
      if (try_assign(pi + 1, size)) return true;
    }
    return false;
  };

  std::function<bool(int, int, int)> pick_positions = [&](int start, int left,
                                                          int size) -> bool {
    if (left == 0) {
      choice.assign(size, 0);
      return try_assign(0, size);
    }
    for (int i = start; i <= n - left; ++i) {
      if (cands[i].empty()) continue;
      positions.push_back(i);
      if (pick_positions(i + 1, left - 1, size)) return true;
      positions.pop_back();
    }
    return false;
  };

  for (int size = 1; size <= budget; ++size) {
    positions.clear();
    if (pick_positions(0, size, size)) return finish();
  }
  return finish();
}

}  // namespace fadv
