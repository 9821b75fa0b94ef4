#pragma once

#include <cmath>
#include <numeric>

#include "pgorder/models/model.hpp"
#include "pgorder/models/positional.hpp"
#include "pgorder/training/losses.hpp"

namespace pgo {

/// Encoder-decoder transformer that emits input slots through a pointer head.
///
/// The positional signal (learned table, sinusoid, or nothing) is added to
/// each page by its input slot, and to each decoder step by step index. The
/// decoder input at step t is the encoder representation of the page chosen
/// at step t−1 (a learned start vector at t = 0). Previously emitted slots are
/// masked, during training as well as inference, so output is a permutation.
template <class T>
class Seq2SeqModel : public OrderingModel<T> {
 public:
  explicit Seq2SeqModel(ModelConfig config) : OrderingModel<T>(std::move(config)) {
    const auto& c = this->config_;
    const auto d = static_cast<std::size_t>(c.hidden_dim);
    const auto max_len = static_cast<std::size_t>(c.max_len);
    Rng rng(c.seed);
    input_ = nc::Linear<T>(c.input_dim, d, rng.split("input"));
    if (c.pe_variant == PeVariant::Learned) {
      enc_pos_ = nc::Embedding<T>(max_len, d, rng.split("enc_pos"));
      dec_pos_ = nc::Embedding<T>(max_len, d, rng.split("dec_pos"));
    } else if (c.pe_variant == PeVariant::Sinusoidal) {
      sinusoid_ = sinusoidal_encoding<T>(max_len, d);
    }
    for (int l = 0; l < c.layers; ++l) encoder_.emplace_back(d, c.heads, 2 * d, rng.split("enc" + std::to_string(l)));
    for (int l = 0; l < c.decoder_layers; ++l) {
      decoder_.emplace_back(d, c.heads, 2 * d, rng.split("dec" + std::to_string(l)));
    }
    enc_norm_ = nc::LayerNorm<T>(d);
    dec_norm_ = nc::LayerNorm<T>(d);
    start_ = nc::Embedding<T>(1, d, rng.split("start"), 0.1);
    query_ = nc::Linear<T>(d, d, rng.split("query"));
    key_ = nc::Linear<T>(d, d, rng.split("key"));

    input_.collect("input", this->params_);
    if (c.pe_variant == PeVariant::Learned) {
      enc_pos_.collect("enc_pos", this->params_);
      dec_pos_.collect("dec_pos", this->params_);
    }
    for (std::size_t l = 0; l < encoder_.size(); ++l) encoder_[l].collect("enc" + std::to_string(l), this->params_);
    enc_norm_.collect("enc_norm", this->params_);
    start_.collect("start", this->params_);
    for (std::size_t l = 0; l < decoder_.size(); ++l) decoder_[l].collect("dec" + std::to_string(l), this->params_);
    dec_norm_.collect("dec_norm", this->params_);
    query_.collect("query", this->params_);
    key_.collect("key", this->params_);
  }

  /// Encoder output (n×d) and per-layer self-attention.
  std::pair<nc::Tensor<T>, std::vector<nc::Array<T>>> encode(const nc::Array<T>& pages) const {
    this->check_pages(pages);
    check_length(pages.rows());
    auto x = add_position(input_(nc::Tensor<T>::constant(pages)), enc_pos_);
    std::vector<nc::Array<T>> attention(encoder_.size());
    for (std::size_t l = 0; l < encoder_.size(); ++l) x = encoder_[l](x, &attention[l]);
    return {enc_norm_(x), std::move(attention)};
  }

  /// Pointer logits (steps × n) for decoder steps fed `prefix` (slots chosen so far).
  /// Row t scores the slot for step t; rows = prefix.size() + 1.
  nc::Tensor<T> decode_logits(const nc::Tensor<T>& memory, const std::vector<std::size_t>& prefix) const {
    std::vector<nc::Tensor<T>> inputs{start_({0})};
    if (!prefix.empty()) inputs.push_back(nc::gather_rows(memory, prefix));
    auto h = add_position(nc::concat_rows(inputs), dec_pos_);
    for (const auto& layer : decoder_) h = layer(h, memory);
    h = dec_norm_(h);
    const auto d = static_cast<T>(memory.cols());
    return nc::scale(nc::matmul_nt(query_(h), key_(memory)), T{1} / std::sqrt(d));
  }

  /// Logits over all slots for the step after `prefix`, before masking.
  nc::Array<T> step_logits(const nc::Array<T>& pages, const std::vector<std::size_t>& prefix) const {
    nc::NoGradGuard guard;
    const auto memory = encode(pages).first;
    const auto logits = decode_logits(memory, prefix);
    return nc::row(logits, prefix.size()).value();
  }

  nc::Tensor<T> loss(const nc::Array<T>& pages, const std::vector<int>& truth_rank) const override {
    const auto targets = pointer_targets(truth_rank);
    const auto memory = encode(pages).first;
    std::vector<std::size_t> prefix(targets.labels.begin(), targets.labels.end() - 1);
    return loss_pointer(decode_logits(memory, prefix), targets.mask, targets.labels);
  }

  Prediction<T> predict(const nc::Array<T>& pages) const override {
    nc::NoGradGuard guard;
    auto [memory, attention] = encode(pages);
    const std::size_t n = pages.rows();
    std::vector<char> available(n, 1);
    std::vector<std::size_t> prefix;
    for (std::size_t t = 0; t < n; ++t) {
      const auto logits = nc::row(decode_logits(memory, prefix), t).value();
      const auto pick = masked_argmax(logits.storage(), available);
      available[pick] = 0;
      prefix.push_back(pick);
    }
    std::vector<int> order(prefix.begin(), prefix.end());
    return {Ordering(std::move(order)), {}, std::move(attention)};
  }

 private:
  void check_length(std::size_t n) const {
    if (n > static_cast<std::size_t>(this->config_.max_len)) {
      throw LengthError("document of " + std::to_string(n) + " pages exceeds max_len " +
                        std::to_string(this->config_.max_len));
    }
  }

  nc::Tensor<T> add_position(const nc::Tensor<T>& x, const nc::Embedding<T>& table) const {
    const std::size_t n = x.rows();
    switch (this->config_.pe_variant) {
      case PeVariant::Learned: {
        std::vector<std::size_t> pos(n);
        std::iota(pos.begin(), pos.end(), std::size_t{0});
        return nc::add(x, table(pos));
      }
      case PeVariant::Sinusoidal: {
        std::vector<T> rows(sinusoid_.data().begin(),
                            sinusoid_.data().begin() + static_cast<std::ptrdiff_t>(n * sinusoid_.cols()));
        return nc::add(x, nc::Tensor<T>::constant(nc::Array<T>({n, sinusoid_.cols()}, std::move(rows))));
      }
      case PeVariant::None:
        break;
    }
    return x;
  }

  nc::Linear<T> input_;
  nc::Embedding<T> enc_pos_, dec_pos_;
  nc::Array<T> sinusoid_;
  std::vector<nc::EncoderLayer<T>> encoder_;
  std::vector<nc::DecoderLayer<T>> decoder_;
  nc::LayerNorm<T> enc_norm_, dec_norm_;
  nc::Embedding<T> start_;
  nc::Linear<T> query_, key_;
};

}  // namespace pgo
