#pragma once

#include <cmath>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "fadv/embedding.hpp"

namespace fadv {

inline constexpr double kProbFloor = 1e-12;

/// Mean-pool text classifier: embedding lookup -> mean over non-pad tokens
/// -> tanh hidden layer -> linear -> softmax. 64-bit throughout, with exact
/// analytic gradients for parameters and input embeddings.
struct ClassifierParams {
  EmbeddingTable embed;  // trainable
  Matrix w1;             // hidden x dim
  Vector b1;             // hidden
  Matrix w2;             // classes x hidden
  Vector b2;             // classes
  int pad_id = 0;
  std::uint64_t seed = 0;

  int dim() const { return embed.dim; }
  int hidden() const { return static_cast<int>(w1.rows()); }
  int num_classes() const { return static_cast<int>(w2.rows()); }
};

inline ClassifierParams init_params(const EmbeddingTable& embed, int hidden,
                                    int num_classes, int pad_id, std::uint64_t seed) {
  if (hidden < 1) throw ContractViolation("init_params: hidden must be >= 1");
  if (num_classes < 2) throw ContractViolation("init_params: need >= 2 classes");
  ClassifierParams p;
  p.embed = embed;
  p.pad_id = pad_id;
  p.seed = seed;
  rng::Engine eng(seed, "param-init");
  const double r1 = 1.0 / std::sqrt(static_cast<double>(embed.dim));
  const double r2 = 1.0 / std::sqrt(static_cast<double>(hidden));
  p.w1.resize(hidden, embed.dim);
  for (int i = 0; i < hidden; ++i) {
    for (int j = 0; j < embed.dim; ++j) p.w1(i, j) = eng.uniform(-r1, r1);
  }
  p.b1 = Vector::Zero(hidden);
  p.w2.resize(num_classes, hidden);
  for (int i = 0; i < num_classes; ++i) {
    for (int j = 0; j < hidden; ++j) p.w2(i, j) = eng.uniform(-r2, r2);
  }
  p.b2 = Vector::Zero(num_classes);
  return p;
}

struct ForwardTrace {
  std::vector<int> ids;
  Matrix input_embeds;  // n x dim, post-perturbation
  Vector pooled;        // dim
  Vector hidden_pre;    // hidden
  Vector hidden_post;   // hidden
  Vector logits;        // classes
  Vector probs;         // classes, sums to 1
  int n_nonpad = 0;
};

/// One inference. `delta`, when given, is added to the looked-up embeddings
/// before pooling. Increments `qc` exactly once per call.
inline ForwardTrace forward(const ClassifierParams& p, const std::vector<int>& ids,
                            const Matrix* delta = nullptr, QueryCounter* qc = nullptr) {
  if (ids.empty()) throw ContractViolation("forward: empty token sequence");
  const int n = static_cast<int>(ids.size());
  if (delta != nullptr &&
      (delta->rows() != n || delta->cols() != p.dim())) {
    throw ContractViolation("forward: delta shape mismatch");
  }
  if (qc != nullptr) ++qc->count;

  ForwardTrace t;
  t.ids = ids;
  t.input_embeds.resize(n, p.dim());
  for (int i = 0; i < n; ++i) {
    if (ids[i] < 0 || ids[i] >= p.embed.rows()) {
      throw ContractViolation("forward: token id out of range");
    }
    t.input_embeds.row(i) = p.embed.vectors.row(ids[i]);
    if (delta != nullptr) t.input_embeds.row(i) += delta->row(i);
  }

  t.pooled = Vector::Zero(p.dim());
  for (int i = 0; i < n; ++i) {
    if (ids[i] == p.pad_id) continue;
    t.pooled += t.input_embeds.row(i).transpose();
    ++t.n_nonpad;
  }
  t.pooled /= static_cast<double>(std::max(1, t.n_nonpad));

  t.hidden_pre = p.w1 * t.pooled + p.b1;
  t.hidden_post = t.hidden_pre.array().tanh();
  t.logits = p.w2 * t.hidden_post + p.b2;

  // stable softmax
  const double m = t.logits.maxCoeff();
  t.probs = (t.logits.array() - m).exp();
  t.probs /= t.probs.sum();
  return t;
}

/// Cross entropy -log p[label], with probabilities floored at 1e-12.
inline double loss_ce(const ForwardTrace& t, int label) {
  if (label < 0 || label >= static_cast<int>(t.probs.size())) {
    throw ContractViolation("loss_ce: label out of range");
  }
  return -std::log(std::max(t.probs(label), kProbFloor));
}

struct Gradients {
  Matrix embed;       // |V| x dim
  Matrix w1;          // hidden x dim
  Vector b1;          // hidden
  Matrix w2;          // classes x hidden
  Vector b2;          // classes
  Matrix input_grad;  // n x dim, pad rows zero
};

inline Gradients make_zero_gradients(const ClassifierParams& p, int n_tokens) {
  Gradients g;
  g.embed = Matrix::Zero(p.embed.rows(), p.dim());
  g.w1 = Matrix::Zero(p.hidden(), p.dim());
  g.b1 = Vector::Zero(p.hidden());
  g.w2 = Matrix::Zero(p.num_classes(), p.hidden());
  g.b2 = Vector::Zero(p.num_classes());
  g.input_grad = Matrix::Zero(n_tokens, p.dim());
  return g;
}

/// Adds the parameter-gradient part of `g` into `acc`, scaled.
inline void add_param_grads(Gradients& acc, const Gradients& g, double scale) {
  acc.embed += scale * g.embed;
  acc.w1 += scale * g.w1;
  acc.b1 += scale * g.b1;
  acc.w2 += scale * g.w2;
  acc.b2 += scale * g.b2;
}

/// Exact analytic gradients of loss_ce w.r.t. every parameter tensor and the
/// (post-perturbation) input embeddings. Pad rows of input_grad are zero.
inline Gradients backward(const ClassifierParams& p, const ForwardTrace& t, int label) {
  if (label < 0 || label >= p.num_classes()) {
    throw ContractViolation("backward: label out of range");
  }
  const int n = static_cast<int>(t.ids.size());
  Gradients g = make_zero_gradients(p, n);
  // Loss is floored: below the floor it is locally flat.
  if (t.probs(label) <= kProbFloor) return g;

  Vector dlogits = t.probs;
  dlogits(label) -= 1.0;

  g.b2 = dlogits;
  g.w2 = dlogits * t.hidden_post.transpose();

  const Vector dhidden = p.w2.transpose() * dlogits;
  const Vector dpre =
      dhidden.array() * (1.0 - t.hidden_post.array() * t.hidden_post.array());

  g.b1 = dpre;
  g.w1 = dpre * t.pooled.transpose();

  const Vector dpooled = p.w1.transpose() * dpre;
  const double inv_n = 1.0 / static_cast<double>(std::max(1, t.n_nonpad));
  for (int i = 0; i < n; ++i) {
    if (t.ids[i] == p.pad_id) continue;  // pad rows stay zero
    g.input_grad.row(i) = (dpooled * inv_n).transpose();
    g.embed.row(t.ids[i]) += g.input_grad.row(i);
  }
  return g;
}

/// Argmax of the logits; ties break toward the lowest class id.
inline int predict(const ClassifierParams& p, const std::vector<int>& ids,
                   QueryCounter* qc = nullptr) {
  const ForwardTrace t = forward(p, ids, nullptr, qc);
  int best = 0;
  for (int c = 1; c < static_cast<int>(t.logits.size()); ++c) {
    if (t.logits(c) > t.logits(best)) best = c;
  }
  return best;
}

inline int argmax_class(const Vector& logits) {
  int best = 0;
  for (int c = 1; c < static_cast<int>(logits.size()); ++c) {
    if (logits(c) > logits(best)) best = c;
  }
  return best;
}

/// p <- p - lr * (grad + weight_decay * p), for every parameter tensor.
inline void sgd_step(ClassifierParams& p, const Gradients& g, double lr,
                     double weight_decay) {
  if (lr <= 0.0) throw ContractViolation("sgd_step: lr must be > 0");
  p.embed.vectors -= lr * (g.embed + weight_decay * p.embed.vectors);
  p.w1 -= lr * (g.w1 + weight_decay * p.w1);
  p.b1 -= lr * (g.b1 + weight_decay * p.b1);
  p.w2 -= lr * (g.w2 + weight_decay * p.w2);
  p.b2 -= lr * (g.b2 + weight_decay * p.b2);
}

// ---- checkpoint format -----------------------------------------------------
// "FADVCKP1" magic, then little-endian scalars and row-major doubles with
// shape headers per tensor. load(save(p)) is bit-identical.

namespace detail {

inline void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void put_i32(std::string& out, std::int32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void put_f64(std::string& out, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, 8);
  put_u64(out, bits);
}

struct ByteReader {
  const std::string& data;
  std::size_t pos = 0;
  std::uint64_t u64() {
    if (pos + 8 > data.size()) throw ParseError("checkpoint: truncated");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data[pos + i])) << (8 * i);
    }
    pos += 8;
    return v;
  }
  std::int32_t i32() {
    if (pos + 4 > data.size()) throw ParseError("checkpoint: truncated");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data[pos + i])) << (8 * i);
    }
    pos += 4;
    return static_cast<std::int32_t>(v);
  }
  double f64() {
    const std::uint64_t bits = u64();
    double d;
    std::memcpy(&d, &bits, 8);
    return d;
  }
};

inline void put_matrix(std::string& out, const Matrix& m) {
  put_i32(out, static_cast<std::int32_t>(m.rows()));
  put_i32(out, static_cast<std::int32_t>(m.cols()));
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < m.cols(); ++j) put_f64(out, m(i, j));
  }
}

inline Matrix read_matrix(ByteReader& r) {
  const int rows = r.i32();
  const int cols = r.i32();
  if (rows < 0 || cols < 0) throw ParseError("checkpoint: bad tensor shape");
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = r.f64();
  }
  return m;
}

}  // namespace detail

inline std::string serialize_params(const ClassifierParams& p) {
  std::string out;
  out += "FADVCKP1";
  detail::put_u64(out, p.seed);
  detail::put_i32(out, p.pad_id);
  detail::put_i32(out, p.embed.dim);
  detail::put_matrix(out, p.embed.vectors);
  detail::put_matrix(out, p.w1);
  detail::put_matrix(out, Matrix(p.b1));
  detail::put_matrix(out, p.w2);
  detail::put_matrix(out, Matrix(p.b2));
  return out;
}

inline ClassifierParams deserialize_params(const std::string& bytes) {
  if (bytes.size() < 8 || bytes.compare(0, 8, "FADVCKP1") != 0) {
    throw ParseError("checkpoint: bad magic");
  }
  detail::ByteReader r{bytes, 8};
  ClassifierParams p;
  p.seed = r.u64();
  p.pad_id = r.i32();
  p.embed.dim = r.i32();
  p.embed.vectors = detail::read_matrix(r);
  p.w1 = detail::read_matrix(r);
  p.b1 = Vector(detail::read_matrix(r));
  p.w2 = detail::read_matrix(r);
  p.b2 = Vector(detail::read_matrix(r));
  if (p.embed.vectors.cols() != p.embed.dim || p.w1.cols() != p.embed.dim ||
      p.w2.cols() != p.w1.rows() || p.b1.size() != p.w1.rows() ||
      p.b2.size() != p.w2.rows()) {
    throw ParseError("checkpoint: inconsistent tensor shapes");
  }
  return p;
}

inline void save_checkpoint(const std::string& path, const ClassifierParams& p) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint: " + path);
  const std::string bytes = serialize_params(p);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing checkpoint: " + path);
}

inline ClassifierParams load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_params(bytes);
}

/// Stable content hash of the serialized parameters; names a model identity
/// in reports and augmentation metadata.
inline std::string checkpoint_id(const ClassifierParams& p) {
  return hex64(fnv1a64(serialize_params(p)));
}

}  // namespace fadv
