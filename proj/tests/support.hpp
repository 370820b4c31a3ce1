#pragma once

// Shared test fixtures: temp directories, a finite-difference gradient
// oracle, and small hand-built models with known decision rules.

#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "fadv/model.hpp"

namespace fadvtest {

class TempDir {
 public:
  TempDir() {
    const auto base = std::filesystem::temp_directory_path();
    for (int attempt = 0; attempt < 100; ++attempt) {
      auto candidate = base / ("fadv-test-" + std::to_string(std::random_device{}()));
      std::error_code ec;
      if (std::filesystem::create_directory(candidate, ec)) {
        path_ = candidate.string();
        return;
      }
    }
    throw std::runtime_error("TempDir: could not create a fresh directory");
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::string& path() const { return path_; }
  std::string file(const std::string& name) const { return path_ + "/" + name; }

 private:
  std::string path_;
};

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

/// Loss as a function of a single scalar parameter coordinate, used for
/// central finite differences. `delta` perturbs the input embeddings.
struct LossProbe {
  const fadv::ClassifierParams& params;
  const std::vector<int>& ids;
  int label;
  const fadv::Matrix* delta = nullptr;

  double operator()() const {
    const fadv::ForwardTrace t = fadv::forward(params, ids, delta);
    return fadv::loss_ce(t, label);
  }
};

/// Central finite difference d loss / d coordinate with step h, where the
/// coordinate is addressed through a mutable reference.
template <typename Eval>
double central_diff(double& coord, double h, Eval&& eval) {
  const double saved = coord;
  coord = saved + h;
  const double up = eval();
  coord = saved - h;
  const double down = eval();
  coord = saved;
  return (up - down) / (2.0 * h);
}

/// Random small params over a random vocab, for gradient checking.
inline fadv::ClassifierParams random_params(int vocab_size, int dim, int hidden,
                                            int classes, std::uint64_t seed) {
  fadv::Vocab vocab;
  vocab.words.push_back(fadv::kPadToken);
  vocab.words.push_back(fadv::kUnkToken);
  for (int i = 2; i < vocab_size; ++i) vocab.words.push_back("w" + std::to_string(i));
  vocab.pad_id = 0;
  vocab.unk_id = 1;
  for (int i = 0; i < vocab_size; ++i) vocab.index[vocab.words[i]] = i;
  fadv::EmbeddingTable embed;
  embed.dim = dim;
  embed.vectors.resize(vocab_size, dim);
  fadv::rng::Engine eng(seed, "test-embed");
  for (int i = 0; i < vocab_size; ++i) {
    for (int j = 0; j < dim; ++j) embed.vectors(i, j) = eng.uniform(-0.8, 0.8);
  }
  fadv::ClassifierParams p = fadv::init_params(embed, hidden, classes, vocab.pad_id, seed);
  // nonzero biases so gradients there are exercised too
  fadv::rng::Engine beng(seed, "test-bias");
  for (int i = 0; i < p.b1.size(); ++i) p.b1(i) = beng.uniform(-0.3, 0.3);
  for (int i = 0; i < p.b2.size(); ++i) p.b2(i) = beng.uniform(-0.3, 0.3);
  return p;
}

/// Two-class bag-of-words model with a hand-constructed linear decision rule:
/// class 0 scores positively with coordinate 0 of the mean embedding, while
/// coordinate 1 carries a shared component so sentence similarities stay
/// positive (as real embeddings do).
/// Words: "good" -> (+u, s), "awful" -> (-u, s), "blank" -> (0, s),
/// "soso" -> (+u/4, s), "zerovec" -> (0, 0).
struct ToyLinearModel {
  fadv::Vocab vocab;
  fadv::ClassifierParams params;
  fadv::EmbeddingTable static_embed;  // same table, for similarity

  explicit ToyLinearModel(double u = 0.1, double s = 0.5) {
    vocab.words = {fadv::kPadToken, fadv::kUnkToken, "good", "awful",
                   "blank",         "soso",          "zerovec"};
    vocab.pad_id = 0;
    vocab.unk_id = 1;
    for (int i = 0; i < static_cast<int>(vocab.words.size()); ++i) {
      vocab.index[vocab.words[i]] = i;
    }
    fadv::EmbeddingTable embed;
    embed.dim = 2;
    embed.vectors = fadv::Matrix::Zero(vocab.size(), 2);
    for (const char* w : {"good", "awful", "blank", "soso"}) {
      embed.vectors(vocab.index[w], 1) = s;
    }
    embed.vectors(vocab.index["good"], 0) = u;
    embed.vectors(vocab.index["awful"], 0) = -u;
    embed.vectors(vocab.index["soso"], 0) = u / 4.0;

    params.embed = embed;
    params.pad_id = vocab.pad_id;
    params.w1 = fadv::Matrix::Identity(2, 2);
    params.b1 = fadv::Vector::Zero(2);
    params.w2 = fadv::Matrix::Zero(2, 2);
    params.w2(0, 0) = 5.0;   // class 0 follows +coordinate0
    params.w2(1, 0) = -5.0;  // class 1 follows -coordinate0
    params.b2 = fadv::Vector::Zero(2);
    static_embed = embed;
  }
};

}  // namespace fadvtest
