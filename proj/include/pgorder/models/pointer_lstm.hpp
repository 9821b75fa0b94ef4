#pragma once

#include "pgorder/models/model.hpp"
#include "pgorder/training/losses.hpp"

namespace pgo {

/// Pointer network: bidirectional recurrent encoder, recurrent decoder fed the
/// encoding of the previously selected page, additive attention over the
/// pages not yet placed.
template <class T>
class PointerLstmModel : public OrderingModel<T> {
 public:
  explicit PointerLstmModel(ModelConfig config) : OrderingModel<T>(std::move(config)) {
    const auto& c = this->config_;
    Rng rng(c.seed);
    const auto dh = static_cast<std::size_t>(c.decoder_hidden);
    encoder_ = nc::BiLstm<T>(c.input_dim, c.hidden_dim, c.layers, rng.split("encoder"));
    const std::size_t enc = encoder_.output_size();
    start_ = nc::Embedding<T>(1, enc, rng.split("start"), 0.1);
    init_ = nc::Linear<T>(enc, dh, rng.split("init"));
    decoder_ = nc::LstmCell<T>(enc, dh, rng.split("decoder"));
    attn_keys_ = nc::Linear<T>(enc, dh, rng.split("attn_keys"), false);
    attn_query_ = nc::Linear<T>(dh, dh, rng.split("attn_query"));
    attn_v_ = nc::Linear<T>(dh, 1, rng.split("attn_v"), false);
    encoder_.collect("encoder", this->params_);
    start_.collect("start", this->params_);
    init_.collect("init", this->params_);
    decoder_.collect("decoder", this->params_);
    attn_keys_.collect("attn_keys", this->params_);
    attn_query_.collect("attn_query", this->params_);
    attn_v_.collect("attn_v", this->params_);
  }

  nc::Tensor<T> loss(const nc::Array<T>& pages, const std::vector<int>& truth_rank) const override {
    this->check_pages(pages);
    const auto targets = pointer_targets(truth_rank);
    const auto enc = encoder_(nc::Tensor<T>::constant(pages));
    const auto keys = attn_keys_(enc);
    auto state = initial_state(enc);
    std::vector<nc::Tensor<T>> rows;
    for (std::size_t t = 0; t < pages.rows(); ++t) {
      const auto input = t == 0 ? start_({0}) : nc::row(enc, targets.labels[t - 1]);
      state = decoder_.step(input, state);
      rows.push_back(score(keys, state.h));
    }
    return loss_pointer(nc::concat_rows(rows), targets.mask, targets.labels);
  }

  Prediction<T> predict(const nc::Array<T>& pages) const override {
    nc::NoGradGuard guard;
    this->check_pages(pages);
    const auto enc = encoder_(nc::Tensor<T>::constant(pages));
    const auto keys = attn_keys_(enc);
    const std::size_t n = pages.rows();
    std::vector<char> available(n, 1);
    std::vector<int> order;
    auto state = initial_state(enc);
    for (std::size_t t = 0; t < n; ++t) {
      const auto input = t == 0 ? start_({0}) : nc::row(enc, static_cast<std::size_t>(order.back()));
      state = decoder_.step(input, state);
      const auto pick = masked_argmax(score(keys, state.h).value().storage(), available);
      available[pick] = 0;
      order.push_back(static_cast<int>(pick));
    }
    return {Ordering(std::move(order)), {}, {}};
  }

 private:
  nc::LstmState<T> initial_state(const nc::Tensor<T>& enc) const {
    auto s = decoder_.zero_state();
    s.h = nc::tanh(init_(nc::mean_rows(enc)));
    return s;
  }

  // v·tanh(W1 e_j + W2 h), as a 1×n row
  nc::Tensor<T> score(const nc::Tensor<T>& keys, const nc::Tensor<T>& h) const {
    return nc::transpose(attn_v_(nc::tanh(nc::add_row(keys, attn_query_(h)))));
  }

  nc::BiLstm<T> encoder_;
  nc::Embedding<T> start_;
  nc::Linear<T> init_;
  nc::LstmCell<T> decoder_;
  nc::Linear<T> attn_keys_;
  nc::Linear<T> attn_query_;
  nc::Linear<T> attn_v_;
};

}  // namespace pgo
