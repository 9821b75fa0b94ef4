#pragma once

#include "pgorder/models/model.hpp"
#include "pgorder/training/losses.hpp"

namespace pgo {

/// Bidirectional recurrent encoder with a scalar position head. All pages are
/// scored at once and the ordering is the ascending argsort of the scores.
template <class T>
class BilstmPositionModel : public OrderingModel<T> {
 public:
  explicit BilstmPositionModel(ModelConfig config) : OrderingModel<T>(std::move(config)) {
    const auto& c = this->config_;
    Rng rng(c.seed);
    encoder_ = nc::BiLstm<T>(c.input_dim, c.hidden_dim, c.layers, rng.split("encoder"));
    head_ = nc::Linear<T>(encoder_.output_size(), 1, rng.split("head"));
    encoder_.collect("encoder", this->params_);
    head_.collect("head", this->params_);
  }

  nc::Tensor<T> scores(const nc::Array<T>& pages) const {
    this->check_pages(pages);
    return head_(encoder_(nc::Tensor<T>::constant(pages)));
  }

  nc::Tensor<T> loss(const nc::Array<T>& pages, const std::vector<int>& truth_rank) const override {
    return loss_position(scores(pages), truth_rank);
  }

  Prediction<T> predict(const nc::Array<T>& pages) const override {
    nc::NoGradGuard guard;
    const auto s = scores(pages);
    std::vector<double> v(s.value().data().begin(), s.value().data().end());
    Prediction<T> p{argsort(v), v, {}};
    return p;
  }

 private:
  nc::BiLstm<T> encoder_;
  nc::Linear<T> head_;
};

}  // namespace pgo
