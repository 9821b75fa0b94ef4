#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "pgorder/metrics.hpp"
#include "pgorder/models/config.hpp"
#include "pgorder/numcore/layers.hpp"

namespace pgo {

template <class T>
struct Prediction {
  Ordering ordering;
  std::vector<double> scores;             // per-page scores when the architecture produces them
  std::vector<nc::Array<T>> attention;    // encoder self-attention, one heads×n×n array per layer
};

/// Common surface of the five learned architectures.
///
/// `loss` builds a teacher-forced graph for one shuffled document; `predict`
/// runs greedy inference without recording a graph and is safe to call from
/// several threads once training has finished.
template <class T>
class OrderingModel {
 public:
  explicit OrderingModel(ModelConfig config) : config_(std::move(config)) { config_.validate(); }
  virtual ~OrderingModel() = default;
  OrderingModel(const OrderingModel&) = delete;
  OrderingModel& operator=(const OrderingModel&) = delete;

  [[nodiscard]] const ModelConfig& config() const { return config_; }

  virtual nc::Tensor<T> loss(const nc::Array<T>& pages, const std::vector<int>& truth_rank) const = 0;
  virtual Prediction<T> predict(const nc::Array<T>& pages) const = 0;

  [[nodiscard]] const nc::ParamList<T>& parameters() const { return params_; }

  [[nodiscard]] std::vector<nc::Tensor<T>> parameter_tensors() const {
    std::vector<nc::Tensor<T>> out;
    for (const auto& [name, t] : params_) out.push_back(t);
    return out;
  }

  [[nodiscard]] std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& [name, t] : params_) n += t.size();
    return n;
  }

  [[nodiscard]] std::vector<nc::Array<T>> snapshot() const {
    std::vector<nc::Array<T>> out;
    for (const auto& [name, t] : params_) out.push_back(t.value());
    return out;
  }

  void restore(const std::vector<nc::Array<T>>& values) {
    if (values.size() != params_.size()) throw ShapeError("restore: parameter count mismatch");
    for (std::size_t i = 0; i < values.size(); ++i) {
      auto p = params_[i].second;
      if (p.value().dims() != values[i].dims()) throw ShapeError("restore: shape mismatch for " + params_[i].first);
      p.mutable_value() = values[i];
    }
  }

 protected:
  void check_pages(const nc::Array<T>& pages) const {
    if (pages.rank() != 2 || pages.cols() != static_cast<std::size_t>(config_.input_dim)) {
      throw ShapeError("pages must be n×" + std::to_string(config_.input_dim) + ", got " +
                       nc::dims_string(pages.dims()));
    }
    if (pages.rows() < 2) throw DomainError("ordering needs at least 2 pages");
  }

  ModelConfig config_;
  nc::ParamList<T> params_;
};

/// Slots sorted by score, ties by lowest slot.
inline Ordering argsort(const std::vector<double>& scores, bool descending = false) {
  std::vector<int> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
    return descending ? scores[static_cast<std::size_t>(a)] > scores[static_cast<std::size_t>(b)]
                      : scores[static_cast<std::size_t>(a)] < scores[static_cast<std::size_t>(b)];
  });
  return Ordering(std::move(idx));
}

/// Highest-scoring available slot; ties go to the lowest slot.
template <class V, class Available>
std::size_t masked_argmax(const V& logits, const Available& available) {
  std::size_t best = logits.size();
  for (std::size_t j = 0; j < logits.size(); ++j) {
    if (!available[j]) continue;
    if (best == logits.size() || logits[j] > logits[best]) best = j;
  }
  if (best == logits.size()) throw DomainError("no available slot to select");
  return best;
}

}  // namespace pgo
