#pragma once

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "fadv/corpus.hpp"

namespace fadv {

struct EmbeddingTable {
  int dim = 0;
  Matrix vectors;  // |V| x dim

  int rows() const { return static_cast<int>(vectors.rows()); }
};

/// Seeded uniform rows in [-0.5/dim, 0.5/dim], one per vocabulary id.
inline EmbeddingTable init_embeddings(const Vocab& vocab, int dim, std::uint64_t seed) {
  if (dim < 1) throw ContractViolation("init_embeddings: dim must be >= 1");
  EmbeddingTable t;
  t.dim = dim;
  t.vectors.resize(vocab.size(), dim);
  rng::Engine eng(seed, "embed-init");
  const double r = 0.5 / static_cast<double>(dim);
  for (int i = 0; i < vocab.size(); ++i) {
    for (int j = 0; j < dim; ++j) t.vectors(i, j) = eng.uniform(-r, r);
  }
  return t;
}

/// Loads `word v1 v2 ... vdim` rows over a seeded base table, so words
/// missing from the file keep their reproducible random rows.
inline EmbeddingTable load_embeddings(const std::string& path, const Vocab& vocab,
                                      int dim, std::uint64_t seed) {
  EmbeddingTable t = init_embeddings(vocab, dim, seed);
  std::ifstream in(path);
  if (!in) throw IoError("cannot open embedding file: " + path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string word;
    ss >> word;
    std::vector<double> vals;
    double v;
    while (ss >> v) vals.push_back(v);
    if (static_cast<int>(vals.size()) != dim) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": expected " +
                       std::to_string(dim) + " values, got " + std::to_string(vals.size()));
    }
    auto it = vocab.index.find(word);
    if (it == vocab.index.end()) continue;
    for (int j = 0; j < dim; ++j) t.vectors(it->second, j) = vals[j];
  }
  for (int i = 0; i < t.vectors.rows(); ++i) {
    for (int j = 0; j < dim; ++j) {
      if (!std::isfinite(t.vectors(i, j))) {
        throw ParseError(path + ": non-finite embedding entry for word '" +
                         vocab.words[i] + "'");
      }
    }
  }
  return t;
}

/// Text dump in the same `word v1 ... vdim` format; 17 significant digits
/// so a reload reproduces every double exactly.
inline void save_embeddings(const std::string& path, const Vocab& vocab,
                            const EmbeddingTable& t) {
  if (t.rows() != vocab.size()) {
    throw ContractViolation("save_embeddings: table/vocab size mismatch");
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write embedding file: " + path);
  char buf[64];
  for (int i = 0; i < vocab.size(); ++i) {
    out << vocab.words[i];
    for (int j = 0; j < t.dim; ++j) {
      std::snprintf(buf, sizeof(buf), " %.17g", t.vectors(i, j));
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw IoError("failed writing embedding file: " + path);
}

}  // namespace fadv
