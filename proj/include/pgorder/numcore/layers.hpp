#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "pgorder/numcore/tensor.hpp"
#include "pgorder/rng.hpp"

namespace pgo::nc {

template <class T>
using ParamList = std::vector<std::pair<std::string, Tensor<T>>>;

template <class T>
Array<T> uniform_array(Dims dims, double bound, Rng rng) {
  Array<T> a(std::move(dims));
  for (auto& v : a.data()) v = static_cast<T>(rng.uniform(-bound, bound));
  return a;
}

template <class T>
Array<T> normal_array(Dims dims, double stddev, Rng rng) {
  Array<T> a(std::move(dims));
  for (auto& v : a.data()) v = static_cast<T>(stddev * rng.normal());
  return a;
}

/// y = x·W + b with W stored in×out.
template <class T>
class Linear {
 public:
  Linear() = default;
  Linear(std::size_t in, std::size_t out, Rng rng, bool bias = true) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    weight_ = Tensor<T>::parameter(uniform_array<T>({in, out}, bound, rng));
    if (bias) bias_ = Tensor<T>::parameter(uniform_array<T>({out}, bound, rng));
  }

  Tensor<T> operator()(const Tensor<T>& x) const {
    auto y = matmul(x, weight_);
    return bias_.defined() ? add_row(y, bias_) : y;
  }

  void collect(const std::string& prefix, ParamList<T>& out) const {
    out.emplace_back(prefix + ".weight", weight_);
    if (bias_.defined()) out.emplace_back(prefix + ".bias", bias_);
  }

  [[nodiscard]] const Tensor<T>& weight() const { return weight_; }
  [[nodiscard]] const Tensor<T>& bias() const { return bias_; }
  [[nodiscard]] std::size_t in_features() const { return weight_.rows(); }
  [[nodiscard]] std::size_t out_features() const { return weight_.cols(); }

 private:
  Tensor<T> weight_;
  Tensor<T> bias_;
};

/// Lookup table; used for learned positional signals and start tokens.
template <class T>
class Embedding {
 public:
  Embedding() = default;
  Embedding(std::size_t count, std::size_t dim, Rng rng, double stddev = 0.02)
      : table_(Tensor<T>::parameter(normal_array<T>({count, dim}, stddev, rng))) {}

  Tensor<T> operator()(std::vector<std::size_t> index) const {
    for (auto i : index) {
      if (i >= table_.rows()) {
        throw LengthError("embedding index " + std::to_string(i) + " outside table of " +
                          std::to_string(table_.rows()) + " rows");
      }
    }
    return gather_rows(table_, std::move(index));
  }

  void collect(const std::string& prefix, ParamList<T>& out) const { out.emplace_back(prefix + ".table", table_); }
  [[nodiscard]] std::size_t count() const { return table_.rows(); }
  [[nodiscard]] const Tensor<T>& table() const { return table_; }

 private:
  Tensor<T> table_;
};

template <class T>
class LayerNorm {
 public:
  LayerNorm() = default;
  explicit LayerNorm(std::size_t dim)
      : gain_(Tensor<T>::parameter(Array<T>({dim}, T{1}))), bias_(Tensor<T>::parameter(Array<T>({dim}, T{0}))) {}

  Tensor<T> operator()(const Tensor<T>& x) const { return layer_norm(x, gain_, bias_); }

  void collect(const std::string& prefix, ParamList<T>& out) const {
    out.emplace_back(prefix + ".gain", gain_);
    out.emplace_back(prefix + ".bias", bias_);
  }

 private:
  Tensor<T> gain_;
  Tensor<T> bias_;
};

/// Feedforward stack with ReLU between layers and a linear output.
template <class T>
class Mlp {
 public:
  Mlp() = default;
  Mlp(const std::vector<std::size_t>& sizes, Rng rng) {
    if (sizes.size() < 2) throw ConfigError("Mlp needs at least input and output sizes");
    for (std::size_t i = 0; i + 1 < sizes.size(); ++i) layers_.emplace_back(sizes[i], sizes[i + 1], rng.split(i));
  }

  Tensor<T> operator()(Tensor<T> x) const {
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      x = layers_[i](x);
      if (i + 1 < layers_.size()) x = relu(x);
    }
    return x;
  }

  void collect(const std::string& prefix, ParamList<T>& out) const {
    for (std::size_t i = 0; i < layers_.size(); ++i) layers_[i].collect(prefix + "." + std::to_string(i), out);
  }

  [[nodiscard]] std::size_t depth() const { return layers_.size(); }

 private:
  std::vector<Linear<T>> layers_;
};

template <class T>
struct LstmState {
  Tensor<T> h;
  Tensor<T> c;
};

/// Gated recurrent cell; gates are packed i, f, g, o along the columns.
template <class T>
class LstmCell {
 public:
  LstmCell() = default;
  LstmCell(std::size_t in, std::size_t hidden, Rng rng) : hidden_(hidden) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
    input_w_ = Tensor<T>::parameter(uniform_array<T>({in, 4 * hidden}, bound, rng.split("w")));
    hidden_w_ = Tensor<T>::parameter(uniform_array<T>({hidden, 4 * hidden}, bound, rng.split("u")));
    Array<T> b = uniform_array<T>({4 * hidden}, bound, rng.split("b"));
    for (std::size_t j = hidden; j < 2 * hidden; ++j) b[j] += T{1};  // forget gate starts open
    bias_ = Tensor<T>::parameter(std::move(b));
  }

  [[nodiscard]] std::size_t hidden_size() const { return hidden_; }

  [[nodiscard]] LstmState<T> zero_state() const {
    return {Tensor<T>::constant(Array<T>({1, hidden_})), Tensor<T>::constant(Array<T>({1, hidden_}))};
  }

  /// Input projections for every row at once (n × 4h); feed rows to `step_projected`.
  Tensor<T> project(const Tensor<T>& xs) const { return add_row(matmul(xs, input_w_), bias_); }

  LstmState<T> step(const Tensor<T>& x, const LstmState<T>& s) const { return step_projected(project(x), s); }

  LstmState<T> step_projected(const Tensor<T>& xw, const LstmState<T>& s) const {
    auto gates = add(xw, matmul(s.h, hidden_w_));
    auto i = sigmoid(slice_cols(gates, 0, hidden_));
    auto f = sigmoid(slice_cols(gates, hidden_, hidden_));
    auto g = tanh(slice_cols(gates, 2 * hidden_, hidden_));
    auto o = sigmoid(slice_cols(gates, 3 * hidden_, hidden_));
    auto c = add(mul(f, s.c), mul(i, g));
    return {mul(o, tanh(c)), c};
  }

  void collect(const std::string& prefix, ParamList<T>& out) const {
    out.emplace_back(prefix + ".input_w", input_w_);
    out.emplace_back(prefix + ".hidden_w", hidden_w_);
    out.emplace_back(prefix + ".bias", bias_);
  }

 private:
  std::size_t hidden_ = 0;
  Tensor<T> input_w_;
  Tensor<T> hidden_w_;
  Tensor<T> bias_;
};

/// Stacked bidirectional recurrent encoder. Output row t is [forward_t, backward_t].
template <class T>
class BiLstm {
 public:
  BiLstm() = default;
  BiLstm(std::size_t in, std::size_t hidden, std::size_t layers, Rng rng) : hidden_(hidden) {
    for (std::size_t l = 0; l < layers; ++l) {
      const std::size_t width = l == 0 ? in : 2 * hidden;
      forward_.emplace_back(width, hidden, rng.split("fwd" + std::to_string(l)));
      backward_.emplace_back(width, hidden, rng.split("bwd" + std::to_string(l)));
    }
  }

  [[nodiscard]] std::size_t output_size() const { return 2 * hidden_; }

  Tensor<T> operator()(Tensor<T> seq) const {
    for (std::size_t l = 0; l < forward_.size(); ++l) seq = encode_layer(forward_[l], backward_[l], seq);
    return seq;
  }

  void collect(const std::string& prefix, ParamList<T>& out) const {
    for (std::size_t l = 0; l < forward_.size(); ++l) {
      forward_[l].collect(prefix + ".fwd" + std::to_string(l), out);
      backward_[l].collect(prefix + ".bwd" + std::to_string(l), out);
    }
  }

  [[nodiscard]] std::vector<LstmCell<T>>& forward_cells() { return forward_; }
  [[nodiscard]] std::vector<LstmCell<T>>& backward_cells() { return backward_; }

 private:
  static Tensor<T> encode_layer(const LstmCell<T>& fwd, const LstmCell<T>& bwd, const Tensor<T>& seq) {
    const std::size_t n = seq.rows();
    auto fx = fwd.project(seq);
    auto bx = bwd.project(seq);
    std::vector<Tensor<T>> fs(n), bs(n);
    auto s = fwd.zero_state();
    for (std::size_t t = 0; t < n; ++t) {
      s = fwd.step_projected(row(fx, t), s);
      fs[t] = s.h;
    }
    s = bwd.zero_state();
    for (std::size_t t = n; t-- > 0;) {
      s = bwd.step_projected(row(bx, t), s);
      bs[t] = s.h;
    }
    return concat_cols<T>({concat_rows(fs), concat_rows(bs)});
  }

  std::size_t hidden_ = 0;
  std::vector<LstmCell<T>> forward_;
  std::vector<LstmCell<T>> backward_;
};

/// Projected multi-head attention.
template <class T>
class MultiHeadAttention {
 public:
  MultiHeadAttention() = default;
  MultiHeadAttention(std::size_t dim, std::size_t heads, Rng rng)
      : heads_(heads),
        wq_(dim, dim, rng.split("q")),
        wk_(dim, dim, rng.split("k")),
        wv_(dim, dim, rng.split("v")),
        wo_(dim, dim, rng.split("o")) {
    if (heads == 0 || dim % heads != 0) {
      throw ConfigError("attention width " + std::to_string(dim) + " not divisible by " + std::to_string(heads) +
                        " heads");
    }
  }

  AttentionOutput<T> operator()(const Tensor<T>& query, const Tensor<T>& memory, const Mask* mask = nullptr) const {
    auto r = multi_head_attention(wq_(query), wk_(memory), wv_(memory), heads_, mask);
    r.out = wo_(r.out);
    return r;
  }

  void collect(const std::string& prefix, ParamList<T>& out) const {
    wq_.collect(prefix + ".q", out);
    wk_.collect(prefix + ".k", out);
    wv_.collect(prefix + ".v", out);
    wo_.collect(prefix + ".o", out);
  }

 private:
  std::size_t heads_ = 1;
  Linear<T> wq_, wk_, wv_, wo_;
};

/// Pre-norm encoder block: x + attn(ln(x)), then + ffn(ln(.)).
template <class T>
class EncoderLayer {
 public:
  EncoderLayer() = default;
  EncoderLayer(std::size_t dim, std::size_t heads, std::size_t ff, Rng rng)
      : ln1_(dim), ln2_(dim), attn_(dim, heads, rng.split("attn")), ffn_({dim, ff, dim}, rng.split("ffn")) {}

  Tensor<T> operator()(const Tensor<T>& x, Array<T>* attention_out = nullptr) const {
    auto normed = ln1_(x);
    auto a = attn_(normed, normed);
    if (attention_out) *attention_out = std::move(a.weights);
    auto h = add(x, a.out);
    return add(h, ffn_(ln2_(h)));
  }

  void collect(const std::string& prefix, ParamList<T>& out) const {
    ln1_.collect(prefix + ".ln1", out);
    attn_.collect(prefix + ".attn", out);
    ln2_.collect(prefix + ".ln2", out);
    ffn_.collect(prefix + ".ffn", out);
  }

 private:
  LayerNorm<T> ln1_, ln2_;
  MultiHeadAttention<T> attn_;
  Mlp<T> ffn_;
};

/// Pre-norm decoder block with causal self-attention and cross-attention.
template <class T>
class DecoderLayer {
 public:
  DecoderLayer() = default;
  DecoderLayer(std::size_t dim, std::size_t heads, std::size_t ff, Rng rng)
      : ln1_(dim),
        ln2_(dim),
        ln3_(dim),
        self_attn_(dim, heads, rng.split("self")),
        cross_attn_(dim, heads, rng.split("cross")),
        ffn_({dim, ff, dim}, rng.split("ffn")) {}

  Tensor<T> operator()(const Tensor<T>& x, const Tensor<T>& memory) const {
    const auto causal = Mask::causal(x.rows());
    auto normed = ln1_(x);
    auto h = add(x, self_attn_(normed, normed, &causal).out);
    h = add(h, cross_attn_(ln2_(h), memory).out);
    return add(h, ffn_(ln3_(h)));
  }

  void collect(const std::string& prefix, ParamList<T>& out) const {
    ln1_.collect(prefix + ".ln1", out);
    self_attn_.collect(prefix + ".self", out);
    ln2_.collect(prefix + ".ln2", out);
    cross_attn_.collect(prefix + ".cross", out);
    ln3_.collect(prefix + ".ln3", out);
    ffn_.collect(prefix + ".ffn", out);
  }

 private:
  LayerNorm<T> ln1_, ln2_, ln3_;
  MultiHeadAttention<T> self_attn_, cross_attn_;
  Mlp<T> ffn_;
};

}  // namespace pgo::nc
