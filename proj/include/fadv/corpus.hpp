#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "fadv/common.hpp"

namespace fadv {

inline constexpr const char* kPadToken = "<pad>";
inline constexpr const char* kUnkToken = "<unk>";

/// Lowercase whitespace tokenization. Bytes outside ASCII are kept as-is.
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!cur.empty()) {
        out.push_back(std::move(cur));
        cur.clear();
      }
    } else {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

inline std::string detokenize(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

struct Vocab {
  std::vector<std::string> words;                 // id -> word, ids dense 0..|V|-1
  std::unordered_map<std::string, int> index;     // word -> id, exact inverse of words
  int unk_id = 0;
  int pad_id = 0;

  int size() const { return static_cast<int>(words.size()); }

  bool contains(const std::string& w) const { return index.count(w) != 0; }

  /// Word id, with out-of-vocabulary words mapped to UNK.
  int id_of(const std::string& w) const {
    auto it = index.find(w);
    return it == index.end() ? unk_id : it->second;
  }
};

/// Token ids for a word sequence; OOV words map to UNK.
inline std::vector<int> encode(const Vocab& vocab, const std::vector<std::string>& words) {
  std::vector<int> ids;
  ids.reserve(words.size());
  for (const auto& w : words) ids.push_back(vocab.id_of(w));
  return ids;
}

struct LabeledExample {
  std::vector<std::string> text;  // non-empty after tokenization
  int label = 0;                  // class id in 0..C-1
};

struct Corpus {
  std::vector<LabeledExample> train;
  std::vector<LabeledExample> dev;
  std::vector<LabeledExample> test;
  int num_classes = 0;
  int max_len = 0;
};

/// Parses one `text<TAB>label` file. Tokens are lowercased, whitespace-split
/// and truncated to max_len.
inline std::vector<LabeledExample> load_split(const std::string& path, int max_len) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open corpus file: " + path);
  std::vector<LabeledExample> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": expected text<TAB>label");
    }
    LabeledExample ex;
    ex.text = tokenize(std::string_view(line).substr(0, tab));
    if (ex.text.empty()) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": empty text");
    }
    if (static_cast<int>(ex.text.size()) > max_len) ex.text.resize(max_len);
    const std::string_view label_sv = std::string_view(line).substr(tab + 1);
    const auto* first = label_sv.data();
    const auto* last = label_sv.data() + label_sv.size();
    auto [ptr, ec] = std::from_chars(first, last, ex.label);
    if (ec != std::errc() || ptr != last || ex.label < 0) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": bad label '" +
                       std::string(label_sv) + "'");
    }
    out.push_back(std::move(ex));
  }
  if (out.empty()) throw ParseError("empty corpus file: " + path);
  return out;
}

/// Loads `<dir>/train.tsv` (required) plus `dev.tsv`/`test.tsv` when present.
inline Corpus load_corpus(const std::string& dir, int max_len) {
  if (max_len < 1) throw ContractViolation("load_corpus: max_len must be >= 1");
  Corpus c;
  c.max_len = max_len;
  c.train = load_split(dir + "/train.tsv", max_len);
  auto try_split = [&](const char* name) -> std::vector<LabeledExample> {
    std::ifstream probe(dir + "/" + name);
    if (!probe) return {};
    probe.close();
    return load_split(dir + "/" + name, max_len);
  };
  c.dev = try_split("dev.tsv");
  c.test = try_split("test.tsv");
  int max_label = 0;
  for (const auto* split : {&c.train, &c.dev, &c.test}) {
    for (const auto& ex : *split) max_label = std::max(max_label, ex.label);
  }
  c.num_classes = max_label + 1;
  return c;
}

/// Vocabulary over the train split: every word with frequency >= min_freq,
/// ordered by frequency descending then lexicographic, after PAD and UNK.
inline Vocab build_vocab(const Corpus& corpus, int min_freq) {
  if (corpus.train.empty()) throw ContractViolation("build_vocab: empty train split");
  std::map<std::string, std::int64_t> freq;
  for (const auto& ex : corpus.train) {
    for (const auto& w : ex.text) ++freq[w];
  }
  std::vector<std::pair<std::string, std::int64_t>> items(freq.begin(), freq.end());
  std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  Vocab v;
  v.words = {kPadToken, kUnkToken};
  v.pad_id = 0;
  v.unk_id = 1;
  for (const auto& [word, count] : items) {
    if (count >= min_freq) v.words.push_back(word);
  }
  for (int i = 0; i < static_cast<int>(v.words.size()); ++i) v.index[v.words[i]] = i;
  return v;
}

inline void save_vocab(const std::string& path, const Vocab& v) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write vocab file: " + path);
  for (const auto& w : v.words) out << w << '\n';
  if (!out) throw IoError("failed writing vocab file: " + path);
}

inline Vocab load_vocab(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open vocab file: " + path);
  Vocab v;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    v.words.push_back(line);
  }
  if (v.words.size() < 2 || v.words[0] != kPadToken || v.words[1] != kUnkToken) {
    throw ParseError("vocab file must start with " + std::string(kPadToken) + ", " +
                     kUnkToken + ": " + path);
  }
  v.pad_id = 0;
  v.unk_id = 1;
  for (int i = 0; i < static_cast<int>(v.words.size()); ++i) v.index[v.words[i]] = i;
  return v;
}

/// word -> capped, ordered candidate substitutes. A word never lists itself.
struct SynonymLexicon {
  std::unordered_map<std::string, std::vector<std::string>> entries;
  int cap = 0;  // K_syn

  const std::vector<std::string>& candidates(const std::string& word) const {
    static const std::vector<std::string> kEmpty;
    auto it = entries.find(word);
    return it == entries.end() ? kEmpty : it->second;
  }
};

/// Parses `word<TAB>syn1,syn2,...`. Self-references and duplicates are
/// dropped, then the list is truncated to the first `cap` entries.
inline SynonymLexicon load_synonyms(const std::string& path, int cap) {
  if (cap < 0) throw ContractViolation("load_synonyms: negative cap");
  std::ifstream in(path);
  if (!in) throw IoError("cannot open synonym file: " + path);
  SynonymLexicon lex;
  lex.cap = cap;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) {
      throw ParseError(path + ":" + std::to_string(line_no) +
                       ": expected word<TAB>comma-separated-synonyms");
    }
    std::string word = line.substr(0, tab);
    std::vector<std::string> cands;
    std::string item;
    std::istringstream rest(line.substr(tab + 1));
    while (std::getline(rest, item, ',')) {
      if (item.empty() || item == word) continue;
      if (std::find(cands.begin(), cands.end(), item) != cands.end()) continue;
      if (static_cast<int>(cands.size()) == cap) break;
      cands.push_back(item);
    }
    lex.entries[word] = std::move(cands);
  }
  return lex;
}

inline void save_synonyms(const std::string& path, const SynonymLexicon& lex) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write synonym file: " + path);
  std::vector<std::string> words;
  words.reserve(lex.entries.size());
  for (const auto& [w, _] : lex.entries) words.push_back(w);
  std::sort(words.begin(), words.end());
  for (const auto& w : words) {
    out << w << '\t';
    const auto& cands = lex.entries.at(w);
    for (std::size_t i = 0; i < cands.size(); ++i) {
      if (i) out << ',';
      out << cands[i];
    }
    out << '\n';
  }
  if (!out) throw IoError("failed writing synonym file: " + path);
}

}  // namespace fadv
