#pragma once

#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "fadv/attack.hpp"

namespace fadv {

/// An adversarial sentence with its final substitution reverted, so it lies
/// near the decision boundary without crossing it. When the attack failed
/// (or was never attempted) x_f is the original sentence.
struct FriendlyExample {
  std::vector<std::string> x_f;
  LabeledExample source;
  bool derived_from_attack = false;
  std::optional<int> reverted_index;
};

/// Runs the greedy attack and recovers the last modified word. The generating
/// model predicted the true label right up to the final substitution, so an
/// attack-derived x_f is predicted y_true by that model.
inline FriendlyExample generate_friendly(const ClassifierParams& params,
                                         const Vocab& vocab, const LabeledExample& example,
                                         const SynonymLexicon& lexicon,
                                         const EmbeddingTable& sim_embed,
                                         const AttackConfig& cfg,
                                         QueryCounter* qc = nullptr) {
  FriendlyExample fe;
  fe.source = example;
  const AttackOutcome outcome =
      greedy_aws(params, vocab, example, lexicon, sim_embed, cfg, qc);
  if (!outcome.success) {
    fe.x_f = example.text;
    return fe;
  }
  fe.x_f = outcome.x_adv;
  fe.x_f[*outcome.last_index] = *outcome.last_original;
  fe.derived_from_attack = true;
  fe.reverted_index = outcome.last_index;
  return fe;
}

struct AugmentedPair {
  LabeledExample source;
  std::vector<std::string> augmented;  // x_f (fada) or x_adv (ada)
  bool from_attack = false;
  std::optional<int> reverted_index;   // fada only
};

/// Static augmentation over a corpus split, one pair per source example.
/// The metadata (attack-config hash, generating checkpoint id, seed) is
/// enough to regenerate the file bit-identically.
struct AugmentedDataset {
  std::string kind;  // "ada" | "fada"
  std::vector<AugmentedPair> pairs;
  std::string config_hash;
  std::string checkpoint_id;
  std::uint64_t seed = 0;
};

inline std::string attack_config_hash(const AttackConfig& cfg) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "p_max=%.17g;eps_min=%.17g;k_syn=%d;max_queries=%llu",
                cfg.p_max, cfg.eps_min, cfg.k_syn,
                static_cast<unsigned long long>(cfg.max_queries));
  return hex64(fnv1a64(buf));
}

namespace detail {

template <typename MakePair>
AugmentedDataset augment_with(const ClassifierParams& params,
                              const std::vector<LabeledExample>& split,
                              const AttackConfig& cfg, std::uint64_t seed,
                              const char* kind, MakePair&& make_pair_fn, int workers) {
  AugmentedDataset ds;
  ds.kind = kind;
  ds.seed = seed;
  ds.config_hash = attack_config_hash(cfg);
  ds.checkpoint_id = checkpoint_id(params);
  // per-example generation is independent; results keep split order
  ds.pairs = parallel_map<AugmentedPair>(
      split.size(), workers, [&](std::size_t i) { return make_pair_fn(split[i]); });
  return ds;
}

}  // namespace detail

/// Friendly augmentation (x_f per example); a deterministic pass in split
/// order, reusable across training runs.
inline AugmentedDataset augment_dataset(const ClassifierParams& params, const Vocab& vocab,
                                        const std::vector<LabeledExample>& split,
                                        const SynonymLexicon& lexicon,
                                        const EmbeddingTable& sim_embed,
                                        const AttackConfig& cfg, std::uint64_t seed,
                                        int workers = 1) {
  return detail::augment_with(
      params, split, cfg, seed, "fada",
      [&](const LabeledExample& ex) {
        const FriendlyExample fe =
            generate_friendly(params, vocab, ex, lexicon, sim_embed, cfg);
        AugmentedPair pair;
        pair.source = ex;
        pair.augmented = fe.x_f;
        pair.from_attack = fe.derived_from_attack;
        pair.reverted_index = fe.reverted_index;
        return pair;
      },
      workers);
}

/// Conventional adversarial augmentation (x_adv per example); failed attacks
/// store the original sentence, flagged.
inline AugmentedDataset generate_ada(const ClassifierParams& params, const Vocab& vocab,
                                     const std::vector<LabeledExample>& split,
                                     const SynonymLexicon& lexicon,
                                     const EmbeddingTable& sim_embed,
                                     const AttackConfig& cfg, std::uint64_t seed,
                                     int workers = 1) {
  return detail::augment_with(
      params, split, cfg, seed, "ada",
      [&](const LabeledExample& ex) {
        const AttackOutcome outcome =
            greedy_aws(params, vocab, ex, lexicon, sim_embed, cfg);
        AugmentedPair pair;
        pair.source = ex;
        pair.augmented = outcome.success ? outcome.x_adv : ex.text;
        pair.from_attack = outcome.success;
        return pair;
      },
      workers);
}

// File format: a metadata header line, then one
// `orig_text<TAB>aug_text<TAB>label<TAB>flags` line per pair.
inline constexpr const char* kAugmentationHeaderPrefix = "# fadv-augmentation v1";

inline void save_augmentation(const std::string& path, const AugmentedDataset& ds) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write augmentation file: " + path);
  out << kAugmentationHeaderPrefix << " kind=" << ds.kind << " config=" << ds.config_hash
      << " checkpoint=" << ds.checkpoint_id << " seed=" << ds.seed << '\n';
  for (const auto& pair : ds.pairs) {
    out << detokenize(pair.source.text) << '\t' << detokenize(pair.augmented) << '\t'
        << pair.source.label << '\t' << (pair.from_attack ? "attacked" : "unchanged")
        << '\n';
  }
  if (!out) throw IoError("failed writing augmentation file: " + path);
}

inline AugmentedDataset load_augmentation(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open augmentation file: " + path);
  AugmentedDataset ds;
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty augmentation file: " + path);
  if (line.rfind(kAugmentationHeaderPrefix, 0) != 0) {
    throw ParseError(path + ": missing augmentation header");
  }
  auto field = [&](const std::string& key) -> std::string {
    const std::string tag = " " + key + "=";
    const auto at = line.find(tag);
    if (at == std::string::npos) throw ParseError(path + ": header missing " + key);
    const auto start = at + tag.size();
    const auto end = line.find(' ', start);
    return line.substr(start, end == std::string::npos ? std::string::npos : end - start);
  };
  ds.kind = field("kind");
  ds.config_hash = field("config");
  ds.checkpoint_id = field("checkpoint");
  ds.seed = std::stoull(field("seed"));

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::size_t start = 0;
    while (true) {
      const auto tab = line.find('\t', start);
      cols.push_back(line.substr(start, tab == std::string::npos ? std::string::npos
                                                                 : tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (cols.size() != 4) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": expected 4 columns");
    }
    AugmentedPair pair;
    pair.source.text = tokenize(cols[0]);
    pair.augmented = tokenize(cols[1]);
    try {
      pair.source.label = std::stoi(cols[2]);
    } catch (const std::exception&) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": bad label");
    }
    if (cols[3] == "attacked") {
      pair.from_attack = true;
    } else if (cols[3] == "unchanged") {
      pair.from_attack = false;
    } else {
      throw ParseError(path + ":" + std::to_string(line_no) + ": bad flags '" + cols[3] + "'");
    }
    ds.pairs.push_back(std::move(pair));
  }
  return ds;
}

}  // namespace fadv
