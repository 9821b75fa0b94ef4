#pragma once

#include <cmath>

#include "pgorder/models/model.hpp"
#include "pgorder/training/losses.hpp"

namespace pgo {

/// Feedforward pointer decoder without recurrent memory.
///
/// Pages are encoded independently by a three-layer network. The first
/// decoder state comes from the mean encoding; every later state is a
/// feedforward function of the page selected at the previous step alone.
template <class T>
class PointerMlpModel : public OrderingModel<T> {
 public:
  explicit PointerMlpModel(ModelConfig config) : OrderingModel<T>(std::move(config)) {
    const auto& c = this->config_;
    const auto h = static_cast<std::size_t>(c.hidden_dim);
    Rng rng(c.seed);
    std::vector<std::size_t> sizes{static_cast<std::size_t>(c.input_dim)};
    for (int l = 0; l < c.layers; ++l) sizes.push_back(h);
    encoder_ = nc::Mlp<T>(sizes, rng.split("encoder"));
    init_ = nc::Linear<T>(h, h, rng.split("init"));
    transition_ = nc::Mlp<T>({h, h, h}, rng.split("transition"));
    encoder_.collect("encoder", this->params_);
    init_.collect("init", this->params_);
    transition_.collect("transition", this->params_);
  }

  nc::Tensor<T> loss(const nc::Array<T>& pages, const std::vector<int>& truth_rank) const override {
    this->check_pages(pages);
    const auto targets = pointer_targets(truth_rank);
    const auto enc = encoder_(nc::Tensor<T>::constant(pages));
    const std::size_t n = pages.rows();
    std::vector<nc::Tensor<T>> states{initial_state(enc)};
    if (n > 1) {
      std::vector<std::size_t> previous(targets.labels.begin(), targets.labels.end() - 1);
      states.push_back(nc::tanh(transition_(nc::gather_rows(enc, previous))));
    }
    return loss_pointer(step_logits(nc::concat_rows(states), enc), targets.mask, targets.labels);
  }

  Prediction<T> predict(const nc::Array<T>& pages) const override {
    nc::NoGradGuard guard;
    this->check_pages(pages);
    const auto enc = encoder_(nc::Tensor<T>::constant(pages));
    const std::size_t n = pages.rows();
    std::vector<char> available(n, 1);
    std::vector<int> order;
    auto state = initial_state(enc);
    for (std::size_t t = 0; t < n; ++t) {
      const auto logits = step_logits(state, enc);
      const auto pick = masked_argmax(logits.value().storage(), available);
      available[pick] = 0;
      order.push_back(static_cast<int>(pick));
      if (t + 1 < n) state = nc::tanh(transition_(nc::row(enc, pick)));
    }
    return {Ordering(std::move(order)), {}, {}};
  }

 private:
  nc::Tensor<T> initial_state(const nc::Tensor<T>& enc) const { return nc::tanh(init_(nc::mean_rows(enc))); }

  nc::Tensor<T> step_logits(const nc::Tensor<T>& states, const nc::Tensor<T>& enc) const {
    return nc::scale(nc::matmul_nt(states, enc), T{1} / std::sqrt(static_cast<T>(enc.cols())));
  }

  nc::Mlp<T> encoder_;
  nc::Linear<T> init_;
  nc::Mlp<T> transition_;
};

}  // namespace pgo
