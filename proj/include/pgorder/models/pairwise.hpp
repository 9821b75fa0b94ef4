#pragma once

#include <algorithm>

#include "pgorder/models/aggregate.hpp"
#include "pgorder/models/model.hpp"
#include "pgorder/training/losses.hpp"

namespace pgo {

/// Pairwise ranking transformer.
///
/// Pages are contextualised by a transformer encoder without positional
/// signal, so the encoder is equivariant to slot order. Each ordered pair
/// (i, j) is scored from encoded_j − encoded_i by the scoring network, and the
/// n×n matrix is turned into an ordering by `aggregate_scores`.
template <class T>
class PairwiseRankModel : public OrderingModel<T> {
 public:
  explicit PairwiseRankModel(ModelConfig config) : OrderingModel<T>(std::move(config)) {
    const auto& c = this->config_;
    const auto d = static_cast<std::size_t>(c.hidden_dim);
    Rng rng(c.seed);
    input_ = nc::Linear<T>(c.input_dim, d, rng.split("input"));
    for (int l = 0; l < c.layers; ++l) encoder_.emplace_back(d, c.heads, 2 * d, rng.split("enc" + std::to_string(l)));
    norm_ = nc::LayerNorm<T>(d);
    std::vector<std::size_t> sizes{d};
    std::size_t width = d;
    for (int l = 1; l < c.scorer_layers; ++l) {
      sizes.push_back(width);
      width = std::max<std::size_t>(8, width / 2);
    }
    sizes.push_back(1);
    scorer_ = nc::Mlp<T>(sizes, rng.split("scorer"));

    input_.collect("input", this->params_);
    for (std::size_t l = 0; l < encoder_.size(); ++l) encoder_[l].collect("enc" + std::to_string(l), this->params_);
    norm_.collect("norm", this->params_);
    scorer_.collect("scorer", this->params_);
  }

  /// Contextual encodings (n×d) and per-layer attention.
  std::pair<nc::Tensor<T>, std::vector<nc::Array<T>>> encode(const nc::Array<T>& pages) const {
    this->check_pages(pages);
    auto x = input_(nc::Tensor<T>::constant(pages));
    std::vector<nc::Array<T>> attention(encoder_.size());
    for (std::size_t l = 0; l < encoder_.size(); ++l) x = encoder_[l](x, &attention[l]);
    return {norm_(x), std::move(attention)};
  }

  /// Raw n×n score tensor; entry (i, j) = scorer(encoded_j − encoded_i).
  nc::Tensor<T> score_tensor(const nc::Tensor<T>& encoded) const {
    const std::size_t n = encoded.rows();
    std::vector<std::size_t> from(n * n), to(n * n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        from[i * n + j] = i;
        to[i * n + j] = j;
      }
    const auto diff = nc::sub(nc::gather_rows(encoded, std::move(to)), nc::gather_rows(encoded, std::move(from)));
    return nc::reshape(scorer_(diff), {n, n});
  }

  /// Scores the difference vectors directly (rows of `diffs`); exposed for tests.
  nc::Tensor<T> score_differences(const nc::Tensor<T>& diffs) const { return scorer_(diffs); }

  std::pair<PairwiseScores, std::vector<nc::Array<T>>> pairwise_forward(const nc::Array<T>& pages) const {
    nc::NoGradGuard guard;
    auto [encoded, attention] = encode(pages);
    const auto s = score_tensor(encoded);
    return {PairwiseScores(s.value().template cast<double>()), std::move(attention)};
  }

  nc::Tensor<T> loss(const nc::Array<T>& pages, const std::vector<int>& truth_rank) const override {
    return loss_pairwise(score_tensor(encode(pages).first), truth_rank);
  }

  Prediction<T> predict(const nc::Array<T>& pages) const override {
    auto [scores, attention] = pairwise_forward(pages);
    auto agg = aggregate_scores(scores, this->config_.descending_aggregation);
    return {std::move(agg.ordering), std::move(agg.position_scores), std::move(attention)};
  }

 private:
  nc::Linear<T> input_;
  std::vector<nc::EncoderLayer<T>> encoder_;
  nc::LayerNorm<T> norm_;
  nc::Mlp<T> scorer_;
};

}  // namespace pgo
