#pragma once

#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "fadv/reports.hpp"

extern "C" char** environ;

namespace fadv::cli {

namespace fs = std::filesystem;

enum class KeyType { text, integer, real, boolean, unsigned64 };

struct KeySpec {
  KeyType type;
  const char* def;
  const char* help;
};

/// Every configuration key the toolkit understands. Unknown keys are
/// rejected wherever they appear (config file, FADV_* environment, flags).
inline const std::map<std::string, KeySpec>& key_registry() {
  static const std::map<std::string, KeySpec> keys = {
      {"seed", {KeyType::unsigned64, "1", "master seed; all randomness derives from it"}},
      {"out", {KeyType::text, "runs", "output root directory"}},
      {"run_id", {KeyType::text, "", "run directory name override"}},
      {"workers", {KeyType::integer, "0", "parallel attack workers; 0 = all cores"}},
      {"corpus_dir", {KeyType::text, "", "directory with train.tsv (dev.tsv/test.tsv optional)"}},
      {"synonyms", {KeyType::text, "", "synonym lexicon file (word<TAB>syn1,syn2,...)"}},
      {"embeddings", {KeyType::text, "", "optional embedding file (word v1 ... vdim)"}},
      {"cache_dir", {KeyType::text, "", "prepare cache directory (default <out>/cache)"}},
      {"max_len", {KeyType::integer, "40", "max sentence length kept, in tokens"}},
      {"min_freq", {KeyType::integer, "1", "vocabulary frequency cutoff"}},
      {"dim", {KeyType::integer, "50", "embedding dimensionality"}},
      {"hidden", {KeyType::integer, "64", "hidden layer width"}},
      {"mode", {KeyType::text, "natural",
                "natural|ada|fada|ada_only|fada_only|at|gat"}},
      {"inner", {KeyType::text, "fgm", "inner maximization: fgsm|fgm|pgd|ascent"}},
      {"epsilon", {KeyType::real, "1.0", "perturbation size / norm bound"}},
      {"alpha", {KeyType::real, "0.1", "ascent step size"}},
      {"steps", {KeyType::integer, "10", "ascent steps K"}},
      {"norm", {KeyType::text, "l2", "projection norm: l2|linf"}},
      {"epochs", {KeyType::integer, "10", "training epochs"}},
      {"batch_size", {KeyType::integer, "64", "minibatch size"}},
      {"lr", {KeyType::real, "0.1", "learning rate"}},
      {"weight_decay", {KeyType::real, "0.0", "weight decay"}},
      {"augmentation", {KeyType::text, "", "augmentation file for ada/fada/gat modes"}},
      {"kind", {KeyType::text, "fada", "augmentation kind: ada|fada"}},
      {"checkpoint", {KeyType::text, "", "model checkpoint to load"}},
      {"split", {KeyType::text, "test", "corpus split: train|dev|test"}},
      {"p_max", {KeyType::real, "0.15", "max fraction of words perturbed"}},
      {"eps_min", {KeyType::real, "0.84", "min sentence similarity"}},
      {"k_syn", {KeyType::integer, "50", "synonym candidate cap"}},
      {"max_queries", {KeyType::unsigned64, "0", "query budget; 0 = 50 * length"}},
      {"sample_size", {KeyType::integer, "500", "attacked sample size"}},
      {"trace", {KeyType::text, "", "attack trace output file"}},
      {"variants", {KeyType::text, "",
                    "extra attack variants: name:k=v,k=v;name2:... (empty = default)"}},
      {"sweep_kind", {KeyType::text, "steps", "steps|step_size|epochs"}},
      {"grid", {KeyType::text, "1,3,10", "comma-separated sweep grid"}},
      {"defense", {KeyType::text, "model", "defense label used in reports"}},
  };
  return keys;
}

inline long long parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long long x = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': expected integer, got '" + v + "'");
  }
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const unsigned long long x = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': expected unsigned integer, got '" + v + "'");
  }
}

inline double parse_real(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': expected number, got '" + v + "'");
  }
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("key '" + key + "': expected true/false, got '" + v + "'");
}

/// Flat key=value store resolved from defaults < config file < FADV_* env
/// < command-line flags.
class RunConfig {
 public:
  static RunConfig defaults() {
    RunConfig cfg;
    for (const auto& [key, spec] : key_registry()) cfg.values_[key] = spec.def;
    return cfg;
  }

  void set(const std::string& key, const std::string& value) {
    const auto it = key_registry().find(key);
    if (it == key_registry().end()) throw ConfigError("unknown key '" + key + "'");
    switch (it->second.type) {  // validate eagerly so bad values fail before compute
      case KeyType::integer: parse_int(key, value); break;
      case KeyType::real: parse_real(key, value); break;
      case KeyType::boolean: parse_bool(key, value); break;
      case KeyType::unsigned64: parse_u64(key, value); break;
      case KeyType::text: break;
    }
    values_[key] = value;
  }

  const std::string& text(const std::string& key) const { return values_.at(key); }
  long long integer(const std::string& key) const { return parse_int(key, values_.at(key)); }
  double real(const std::string& key) const { return parse_real(key, values_.at(key)); }
  bool boolean(const std::string& key) const { return parse_bool(key, values_.at(key)); }
  std::uint64_t u64(const std::string& key) const { return parse_u64(key, values_.at(key)); }

  const std::map<std::string, std::string>& values() const { return values_; }

  std::string resolved_text() const {
    std::string out;
    for (const auto& [key, value] : values_) out += key + "=" + value + "\n";
    return out;
  }

  std::string hash8() const { return hex64(fnv1a64(resolved_text())).substr(0, 8); }

 private:
  std::map<std::string, std::string> values_;
};

inline void apply_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::string line;
  std::size_t line_no = 0;
  auto trim = [](std::string s) {
    const auto a = s.find_first_not_of(" \t\r");
    const auto b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
  };
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path + ":" + std::to_string(line_no) + ": expected key=value");
    }
    cfg.set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
}

inline void apply_env(RunConfig& cfg) {
  for (char** e = environ; *e != nullptr; ++e) {
    const std::string entry(*e);
    if (entry.rfind("FADV_", 0) != 0) continue;
    const auto eq = entry.find('=');
    if (eq == std::string::npos) continue;
    std::string key = entry.substr(5, eq - 5);
    for (char& c : key) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    cfg.set(key, entry.substr(eq + 1));
  }
}

/// Flags are `--key value` pairs; `--config <file>` loads the flat config
/// file first so explicit flags win.
inline RunConfig resolve_config(const std::vector<std::string>& flag_args) {
  RunConfig cfg = RunConfig::defaults();
  std::string config_path;
  for (std::size_t i = 0; i < flag_args.size(); i += 2) {
    if (flag_args[i] == "--config") {
      if (i + 1 >= flag_args.size()) throw ConfigError("--config needs a file argument");
      config_path = flag_args[i + 1];
    }
  }
  if (!config_path.empty()) apply_config_file(cfg, config_path);
  apply_env(cfg);
  for (std::size_t i = 0; i < flag_args.size(); i += 2) {
    const std::string& flag = flag_args[i];
    if (flag.rfind("--", 0) != 0) throw ConfigError("expected --key, got '" + flag + "'");
    if (i + 1 >= flag_args.size()) throw ConfigError("flag '" + flag + "' needs a value");
    if (flag == "--config") continue;
    cfg.set(flag.substr(2), flag_args[i + 1]);
  }
  return cfg;
}

// ---- enum parsing -----------------------------------------------------------

inline TrainMode parse_mode(const std::string& s) {
  if (s == "natural") return TrainMode::natural;
  if (s == "ada") return TrainMode::ada;
  if (s == "fada") return TrainMode::fada;
  if (s == "ada_only") return TrainMode::ada_only;
  if (s == "fada_only") return TrainMode::fada_only;
  if (s == "at") return TrainMode::at;
  if (s == "gat") return TrainMode::gat;
  throw ConfigError("unknown mode '" + s + "'");
}

inline InnerMethod parse_inner(const std::string& s) {
  if (s == "fgsm") return InnerMethod::fgsm;
  if (s == "fgm") return InnerMethod::fgm;
  if (s == "pgd") return InnerMethod::pgd;
  if (s == "ascent") return InnerMethod::ascent;
  throw ConfigError("unknown inner method '" + s + "'");
}

inline NormKind parse_norm(const std::string& s) {
  if (s == "l2") return NormKind::l2;
  if (s == "linf") return NormKind::linf;
  throw ConfigError("unknown norm '" + s + "'");
}

inline SweepKind parse_sweep_kind(const std::string& s) {
  if (s == "steps") return SweepKind::steps;
  if (s == "step_size") return SweepKind::step_size;
  if (s == "epochs") return SweepKind::epochs;
  throw ConfigError("unknown sweep_kind '" + s + "'");
}

inline TrainConfig train_config_from(const RunConfig& cfg) {
  TrainConfig t;
  t.mode = parse_mode(cfg.text("mode"));
  t.inner_method = parse_inner(cfg.text("inner"));
  t.inner.epsilon = cfg.real("epsilon");
  t.inner.alpha = cfg.real("alpha");
  t.inner.steps = static_cast<int>(cfg.integer("steps"));
  t.inner.norm = parse_norm(cfg.text("norm"));
  t.inner.project = t.inner_method != InnerMethod::ascent;
  t.epochs = static_cast<int>(cfg.integer("epochs"));
  t.batch_size = static_cast<int>(cfg.integer("batch_size"));
  t.lr = cfg.real("lr");
  t.weight_decay = cfg.real("weight_decay");
  t.seed = cfg.u64("seed");
  t.hidden = static_cast<int>(cfg.integer("hidden"));
  return t;
}

inline AttackConfig attack_config_from(const RunConfig& cfg) {
  AttackConfig a;
  a.p_max = cfg.real("p_max");
  a.eps_min = cfg.real("eps_min");
  a.k_syn = static_cast<int>(cfg.integer("k_syn"));
  a.max_queries = cfg.u64("max_queries");
  return a;
}

/// `name:p_max=0.1,k_syn=10;name2:eps_min=0.7` on top of the base config.
inline std::vector<std::pair<std::string, AttackConfig>> parse_variants(
    const RunConfig& cfg) {
  std::vector<std::pair<std::string, AttackConfig>> out;
  out.emplace_back("greedy", attack_config_from(cfg));
  const std::string& spec = cfg.text("variants");
  if (spec.empty()) return out;
  std::istringstream ss(spec);
  std::string part;
  while (std::getline(ss, part, ';')) {
    if (part.empty()) continue;
    const auto colon = part.find(':');
    if (colon == std::string::npos || colon == 0) {
      throw ConfigError("variants: expected name:key=value,... in '" + part + "'");
    }
    AttackConfig a = attack_config_from(cfg);
    std::istringstream kvs(part.substr(colon + 1));
    std::string kv;
    while (std::getline(kvs, kv, ',')) {
      if (kv.empty()) continue;
      const auto eq = kv.find('=');
      if (eq == std::string::npos) {
        throw ConfigError("variants: expected key=value in '" + kv + "'");
      }
      const std::string key = kv.substr(0, eq);
      const std::string value = kv.substr(eq + 1);
      if (key == "p_max") {
        a.p_max = parse_real(key, value);
      } else if (key == "eps_min") {
        a.eps_min = parse_real(key, value);
      } else if (key == "k_syn") {
        a.k_syn = static_cast<int>(parse_int(key, value));
      } else if (key == "max_queries") {
        a.max_queries = parse_u64(key, value);
      } else {
        throw ConfigError("variants: unknown attack key '" + key + "'");
      }
    }
    out.emplace_back(part.substr(0, colon), a);
  }
  return out;
}

// ---- filesystem helpers -------------------------------------------------------

inline void require_file(const std::string& path, const char* what) {
  if (path.empty()) throw ConfigError(std::string(what) + " is not set");
  std::error_code ec;
  if (!fs::exists(path, ec)) {
    throw ConfigError(std::string(what) + " not found: " + path);
  }
}

inline void make_dirs(const std::string& path) {
  std::error_code ec;
  fs::create_directories(path, ec);
  if (ec) throw IoError("cannot create directory " + path + ": " + ec.message());
  if (!fs::is_directory(path)) throw IoError("not a directory: " + path);
}

inline std::string timestamp_utc() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y%m%dT%H%M%SZ", &tm);
  return buf;
}

/// Run directory `<out>/<run_id>` or `<out>/<cmd>-<timestamp>-<confighash>`.
inline std::string make_run_dir(const RunConfig& cfg, const std::string& cmd) {
  const std::string name = cfg.text("run_id").empty()
                               ? cmd + "-" + timestamp_utc() + "-" + cfg.hash8()
                               : cfg.text("run_id");
  const std::string dir = cfg.text("out") + "/" + name;
  make_dirs(dir);
  return dir;
}

inline void write_resolved_config(const RunConfig& cfg, const std::string& dir) {
  std::ofstream out(dir + "/config.resolved");
  if (!out) throw IoError("cannot write " + dir + "/config.resolved");
  out << cfg.resolved_text();
}

inline std::string cache_dir_of(const RunConfig& cfg) {
  return cfg.text("cache_dir").empty() ? cfg.text("out") + "/cache" : cfg.text("cache_dir");
}

struct Prepared {
  Vocab vocab;
  EmbeddingTable embed;
  SynonymLexicon lexicon;
};

inline Prepared load_cache(const RunConfig& cfg) {
  const std::string dir = cache_dir_of(cfg);
  for (const char* name : {"vocab.txt", "embeddings.vec", "lexicon.tsv"}) {
    if (!fs::exists(dir + "/" + name)) {
      throw ConfigError("missing cache file " + dir + "/" + name + "; run prepare first");
    }
  }
  Prepared p;
  p.vocab = load_vocab(dir + "/vocab.txt");
  p.embed = load_embeddings(dir + "/embeddings.vec", p.vocab,
                            static_cast<int>(cfg.integer("dim")), cfg.u64("seed"));
  p.lexicon = load_synonyms(dir + "/lexicon.tsv", static_cast<int>(cfg.integer("k_syn")));
  return p;
}

inline const std::vector<LabeledExample>& pick_split(const Corpus& corpus,
                                                     const std::string& name) {
  if (name == "train") return corpus.train;
  if (name == "dev") return corpus.dev;
  if (name == "test") return corpus.test;
  throw ConfigError("unknown split '" + name + "'");
}

inline int effective_workers(const RunConfig& cfg) {
  const int w = static_cast<int>(cfg.integer("workers"));
  return w > 0 ? w : static_cast<int>(std::thread::hardware_concurrency());
}

// ---- commands -----------------------------------------------------------------

/// Builds the vocab/embedding/lexicon caches. Idempotent: a second run with
/// the same inputs detects the manifest and rewrites nothing.
inline Json cmd_prepare(const RunConfig& cfg) {
  require_file(cfg.text("corpus_dir"), "corpus_dir");
  require_file(cfg.text("corpus_dir") + "/train.tsv", "train split");
  require_file(cfg.text("synonyms"), "synonyms");
  if (!cfg.text("embeddings").empty()) require_file(cfg.text("embeddings"), "embeddings");

  const std::string dir = cache_dir_of(cfg);
  std::string manifest_input;
  for (const char* key : {"corpus_dir", "synonyms", "embeddings", "max_len", "min_freq",
                          "dim", "k_syn", "seed"}) {
    manifest_input += std::string(key) + "=" + cfg.text(key) + "\n";
  }
  const std::string manifest = hex64(fnv1a64(manifest_input));

  Json summary{{"command", "prepare"}, {"cache_dir", dir}};
  std::ifstream existing(dir + "/manifest");
  if (existing) {
    std::string got;
    std::getline(existing, got);
    bool files_ok = true;
    for (const char* name : {"vocab.txt", "embeddings.vec", "lexicon.tsv"}) {
      if (!fs::exists(dir + "/" + name)) files_ok = false;
    }
    if (got == manifest && files_ok) {
      summary["cache_hit"] = true;
      return summary;
    }
  }

  const Corpus corpus =
      load_corpus(cfg.text("corpus_dir"), static_cast<int>(cfg.integer("max_len")));
  const Vocab vocab = build_vocab(corpus, static_cast<int>(cfg.integer("min_freq")));
  const int dim = static_cast<int>(cfg.integer("dim"));
  const EmbeddingTable embed =
      cfg.text("embeddings").empty()
          ? init_embeddings(vocab, dim, cfg.u64("seed"))
          : load_embeddings(cfg.text("embeddings"), vocab, dim, cfg.u64("seed"));
  const SynonymLexicon lexicon =
      load_synonyms(cfg.text("synonyms"), static_cast<int>(cfg.integer("k_syn")));

  make_dirs(dir);
  save_vocab(dir + "/vocab.txt", vocab);
  save_embeddings(dir + "/embeddings.vec", vocab, embed);
  save_synonyms(dir + "/lexicon.tsv", lexicon);
  {
    std::ofstream mf(dir + "/manifest");
    if (!mf) throw IoError("cannot write " + dir + "/manifest");
    mf << manifest << '\n';
  }
  write_resolved_config(cfg, dir);

  summary["cache_hit"] = false;
  summary["vocab_size"] = vocab.size();
  summary["lexicon_entries"] = lexicon.entries.size();
  summary["train_examples"] = corpus.train.size();
  return summary;
}

inline Json cmd_train(const RunConfig& cfg) {
  require_file(cfg.text("corpus_dir"), "corpus_dir");
  const TrainConfig tc = train_config_from(cfg);
  const bool needs_aug = tc.mode == TrainMode::ada || tc.mode == TrainMode::fada ||
                         tc.mode == TrainMode::ada_only ||
                         tc.mode == TrainMode::fada_only || tc.mode == TrainMode::gat;
  AugmentedDataset aug;
  if (needs_aug) {
    require_file(cfg.text("augmentation"), "augmentation");
    aug = load_augmentation(cfg.text("augmentation"));
  }
  const Prepared prep = load_cache(cfg);
  const Corpus corpus =
      load_corpus(cfg.text("corpus_dir"), static_cast<int>(cfg.integer("max_len")));

  const std::string run_dir = make_run_dir(cfg, "train");
  auto [params, report] =
      train(corpus, prep.vocab, prep.embed, tc, needs_aug ? &aug : nullptr);

  save_checkpoint(run_dir + "/checkpoint.bin", params);
  write_train_report(run_dir + "/train_report.jsonl", report, tc);
  write_timing_sidecar(run_dir + "/timing.jsonl", report);
  write_resolved_config(cfg, run_dir);

  Json summary{{"command", "train"},
               {"run_dir", run_dir},
               {"checkpoint", run_dir + "/checkpoint.bin"},
               {"checkpoint_id", report.checkpoint_id},
               {"mode", to_string(tc.mode)},
               {"epochs", tc.epochs}};
  if (!report.epochs.empty() && report.epochs.back().dev_acc.has_value()) {
    summary["final_dev_acc"] = *report.epochs.back().dev_acc;
  }
  return summary;
}

inline Json cmd_augment(const RunConfig& cfg) {
  require_file(cfg.text("corpus_dir"), "corpus_dir");
  require_file(cfg.text("checkpoint"), "checkpoint");
  const std::string& kind = cfg.text("kind");
  if (kind != "ada" && kind != "fada") throw ConfigError("kind must be ada or fada");

  const Prepared prep = load_cache(cfg);
  const Corpus corpus =
      load_corpus(cfg.text("corpus_dir"), static_cast<int>(cfg.integer("max_len")));
  const ClassifierParams params = load_checkpoint(cfg.text("checkpoint"));
  const AttackConfig acfg = attack_config_from(cfg);
  const auto& split = pick_split(corpus, cfg.text("split"));
  if (split.empty()) throw ConfigError("split '" + cfg.text("split") + "' is empty");

  const std::string run_dir = make_run_dir(cfg, "augment");
  const AugmentedDataset ds =
      kind == "fada"
          ? augment_dataset(params, prep.vocab, split, prep.lexicon, prep.embed, acfg,
                            cfg.u64("seed"), effective_workers(cfg))
          : generate_ada(params, prep.vocab, split, prep.lexicon, prep.embed, acfg,
                         cfg.u64("seed"), effective_workers(cfg));
  save_augmentation(run_dir + "/augmentation.tsv", ds);
  write_resolved_config(cfg, run_dir);

  std::uint64_t attacked = 0;
  for (const auto& pair : ds.pairs) attacked += pair.from_attack;
  return Json{{"command", "augment"},
              {"run_dir", run_dir},
              {"augmentation", run_dir + "/augmentation.tsv"},
              {"kind", kind},
              {"pairs", ds.pairs.size()},
              {"from_attack", attacked},
              {"checkpoint_id", ds.checkpoint_id},
              {"config_hash", ds.config_hash}};
}

inline Json cmd_attack(const RunConfig& cfg) {
  require_file(cfg.text("corpus_dir"), "corpus_dir");
  require_file(cfg.text("checkpoint"), "checkpoint");
  const Prepared prep = load_cache(cfg);
  const Corpus corpus =
      load_corpus(cfg.text("corpus_dir"), static_cast<int>(cfg.integer("max_len")));
  const ClassifierParams params = load_checkpoint(cfg.text("checkpoint"));
  const AttackConfig acfg = attack_config_from(cfg);
  const auto& split = pick_split(corpus, cfg.text("split"));
  const std::size_t sample_size = static_cast<std::size_t>(cfg.integer("sample_size"));
  if (sample_size > split.size()) {
    throw ConfigError("sample_size " + std::to_string(sample_size) + " exceeds split of " +
                      std::to_string(split.size()));
  }

  const std::string run_dir = make_run_dir(cfg, "attack");
  std::ofstream trace_out;
  const bool tracing = !cfg.text("trace").empty();
  if (tracing) {
    trace_out.open(cfg.text("trace"));
    if (!trace_out) throw IoError("cannot write trace file: " + cfg.text("trace"));
  }

  std::vector<Json> records;
  records.push_back(Json{{"schema", "fadv.attacks.v1"},
                         {"checkpoint_id", checkpoint_id(params)},
                         {"split", cfg.text("split")},
                         {"sample_size", sample_size}});
  std::uint64_t n_success = 0, n_attempted = 0, total_queries = 0;
  for (const std::size_t i : sample_indices(split.size(), sample_size, cfg.u64("seed"))) {
    if (tracing) trace_out << "# example " << i << '\n';
    const AttackOutcome out =
        greedy_aws(params, prep.vocab, split[i], prep.lexicon, prep.embed, acfg, nullptr,
                   tracing ? &trace_out : nullptr);
    n_attempted += out.attempted;
    n_success += out.success;
    total_queries += out.queries;
    Json rec{{"index", i},
             {"attempted", out.attempted},
             {"success", out.success},
             {"truncated", out.truncated},
             {"queries", out.queries},
             {"n_modifications", out.modifications.size()},
             {"x_adv", detokenize(out.x_adv)}};
    rec["last_index"] =
        out.last_index.has_value() ? Json(*out.last_index) : Json(nullptr);
    records.push_back(std::move(rec));
  }
  detail::write_lines(run_dir + "/attacks.jsonl", records);
  write_resolved_config(cfg, run_dir);

  return Json{{"command", "attack"},
              {"run_dir", run_dir},
              {"attacks", run_dir + "/attacks.jsonl"},
              {"sampled", sample_size},
              {"attempted", n_attempted},
              {"successes", n_success},
              {"total_queries", total_queries}};
}

inline Json cmd_evaluate(const RunConfig& cfg) {
  require_file(cfg.text("corpus_dir"), "corpus_dir");
  require_file(cfg.text("checkpoint"), "checkpoint");
  const Prepared prep = load_cache(cfg);
  const Corpus corpus =
      load_corpus(cfg.text("corpus_dir"), static_cast<int>(cfg.integer("max_len")));
  const ClassifierParams params = load_checkpoint(cfg.text("checkpoint"));
  const auto& split = pick_split(corpus, cfg.text("split"));
  if (split.empty()) throw ConfigError("split '" + cfg.text("split") + "' is empty");
  const std::size_t sample_size = static_cast<std::size_t>(cfg.integer("sample_size"));
  if (sample_size > split.size()) {
    throw ConfigError("sample_size " + std::to_string(sample_size) + " exceeds split of " +
                      std::to_string(split.size()));
  }
  const auto variants = parse_variants(cfg);

  const std::string run_dir = make_run_dir(cfg, "evaluate");
  const DefenseReport report =
      evaluate_defense(params, prep.vocab, split, prep.lexicon, prep.embed, variants,
                       sample_size, cfg.u64("seed"), cfg.text("defense"),
                       effective_workers(cfg));
  write_defense_report(run_dir + "/report.jsonl", report);
  write_defense_csv(run_dir + "/report.csv", report);
  write_resolved_config(cfg, run_dir);

  Json summary{{"command", "evaluate"},
               {"run_dir", run_dir},
               {"report", run_dir + "/report.jsonl"},
               {"clean_acc", report.clean_acc}};
  for (const auto& e : report.attacks) {
    summary["ra_" + e.name] = e.ra;
    summary["asr_" + e.name] = e.asr;
  }
  return summary;
}

inline Json cmd_figure1(const RunConfig& cfg) {
  require_file(cfg.text("corpus_dir"), "corpus_dir");
  const Prepared prep = load_cache(cfg);
  const Corpus corpus =
      load_corpus(cfg.text("corpus_dir"), static_cast<int>(cfg.integer("max_len")));
  if (corpus.test.empty()) throw ConfigError("figure1 requires a test split");
  const TrainConfig tc = train_config_from(cfg);
  const AttackConfig acfg = attack_config_from(cfg);

  const std::string run_dir = make_run_dir(cfg, "figure1");
  const Figure1Report fig =
      figure1_experiment(corpus, prep.vocab, prep.embed, prep.lexicon, prep.embed, tc, acfg);
  write_figure1_report(run_dir + "/figure1.jsonl", run_dir + "/figure1.csv", fig);
  write_resolved_config(cfg, run_dir);

  return Json{{"command", "figure1"},
              {"run_dir", run_dir},
              {"natural_test", fig.natural_test},
              {"ada_train_own", fig.ada_train_own},
              {"ada_test", fig.ada_test},
              {"fada_train_own", fig.fada_train_own},
              {"fada_test", fig.fada_test}};
}

inline Json cmd_sweep(const RunConfig& cfg) {
  require_file(cfg.text("corpus_dir"), "corpus_dir");
  const Prepared prep = load_cache(cfg);
  const Corpus corpus =
      load_corpus(cfg.text("corpus_dir"), static_cast<int>(cfg.integer("max_len")));
  if (corpus.test.empty()) throw ConfigError("sweep requires a test split");
  const TrainConfig tc = train_config_from(cfg);
  const AttackConfig acfg = attack_config_from(cfg);
  const SweepKind kind = parse_sweep_kind(cfg.text("sweep_kind"));

  std::vector<double> grid;
  {
    std::istringstream ss(cfg.text("grid"));
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (item.empty()) continue;
      grid.push_back(parse_real("grid", item));
    }
  }
  if (grid.empty()) throw ConfigError("grid is empty");

  const bool needs_aug = tc.mode == TrainMode::ada || tc.mode == TrainMode::fada ||
                         tc.mode == TrainMode::ada_only ||
                         tc.mode == TrainMode::fada_only || tc.mode == TrainMode::gat;
  AugmentedDataset aug;
  if (needs_aug) {
    require_file(cfg.text("augmentation"), "augmentation");
    aug = load_augmentation(cfg.text("augmentation"));
  }
  const std::size_t sample_size = static_cast<std::size_t>(cfg.integer("sample_size"));
  if (sample_size > corpus.test.size()) {
    throw ConfigError("sample_size exceeds test split");
  }

  const std::string run_dir = make_run_dir(cfg, "sweep");
  const SweepResult result =
      sweep(corpus, prep.vocab, prep.embed, prep.lexicon, prep.embed, kind, grid, tc,
            acfg, sample_size, cfg.u64("seed"), needs_aug ? &aug : nullptr);
  write_sweep_report(run_dir + "/sweep.jsonl", run_dir + "/sweep.csv", result);
  write_resolved_config(cfg, run_dir);

  Json rows = Json::array();
  for (const auto& row : result.rows) {
    rows.push_back(Json{{"setting", row.setting}, {"clean", row.clean}, {"ra", row.ra}});
  }
  return Json{{"command", "sweep"},
              {"run_dir", run_dir},
              {"kind", to_string(kind)},
              {"rows", rows}};
}

inline void print_usage(std::ostream& os) {
  os << "usage: fadv <command> [--config FILE] [--key value ...]\n"
     << "commands: prepare train augment attack evaluate figure1 sweep\n"
     << "keys (FADV_<KEY> environment variables override the config file):\n";
  for (const auto& [key, spec] : key_registry()) {
    os << "  " << key << " (default: " << (spec.def[0] ? spec.def : "<empty>") << ") — "
       << spec.help << "\n";
  }
}

/// Dispatch + error-to-exit-code mapping: 0 success, 2 configuration/input
/// error, 3 runtime I/O error.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out,
                   std::ostream& err) {
  try {
    if (args.empty() || args[0] == "--help" || args[0] == "help") {
      print_usage(args.empty() ? err : out);
      return args.empty() ? 2 : 0;
    }
    const std::string cmd = args[0];
    const RunConfig cfg =
        resolve_config(std::vector<std::string>(args.begin() + 1, args.end()));
    Json summary;
    if (cmd == "prepare") {
      summary = cmd_prepare(cfg);
    } else if (cmd == "train") {
      summary = cmd_train(cfg);
    } else if (cmd == "augment") {
      summary = cmd_augment(cfg);
    } else if (cmd == "attack") {
      summary = cmd_attack(cfg);
    } else if (cmd == "evaluate") {
      summary = cmd_evaluate(cfg);
    } else if (cmd == "figure1") {
      summary = cmd_figure1(cfg);
    } else if (cmd == "sweep") {
      summary = cmd_sweep(cfg);
    } else {
      err << "unknown command '" << cmd << "'\n";
      print_usage(err);
      return 2;
    }
    out << summary.dump() << '\n';
    return 0;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  } catch (const ParseError& e) {
    err << "input error: " << e.what() << '\n';
    return 2;
  } catch (const IoError& e) {
    err << "io error: " << e.what() << '\n';
    return 3;
  } catch (const fs::filesystem_error& e) {
    err << "io error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace fadv::cli
