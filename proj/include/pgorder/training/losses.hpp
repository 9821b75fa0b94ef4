#pragma once

#include <cstddef>
#include <vector>

#include "pgorder/corpus/types.hpp"
#include "pgorder/numcore/tensor.hpp"

namespace pgo {

/// y[i][j] is true iff the page in slot j truly comes after the page in slot i.
inline std::vector<std::vector<bool>> make_pairwise_targets(const std::vector<int>& truth_rank) {
  require_permutation(truth_rank, "truth_rank");
  const std::size_t n = truth_rank.size();
  std::vector<std::vector<bool>> y(n, std::vector<bool>(n, false));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) y[i][j] = i != j && truth_rank[j] > truth_rank[i];
  return y;
}

/// Mean binary cross-entropy of sigmoid(s_ij) against the comes-after targets, off-diagonal only.
template <class T>
nc::Tensor<T> loss_pairwise(const nc::Tensor<T>& scores, const std::vector<int>& truth_rank) {
  const std::size_t n = truth_rank.size();
  if (scores.size() != n * n) throw ShapeError("loss_pairwise: scores must be n×n");
  const auto y = make_pairwise_targets(truth_rank);
  nc::Array<T> targets({n * n}), weights({n * n});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      targets[i * n + j] = y[i][j] ? T{1} : T{0};
      weights[i * n + j] = i == j ? T{0} : T{1};
    }
  return nc::bce_with_logits(scores, targets, weights);
}

/// Teacher-forced pointer targets: step t must select the slot of rank t among slots not yet chosen.
struct PointerTargets {
  nc::Mask mask;                     // row t keeps slots still available at step t
  std::vector<std::size_t> labels;   // slot chosen at step t
};

inline PointerTargets pointer_targets(const std::vector<int>& truth_rank) {
  require_permutation(truth_rank, "truth_rank");
  const std::size_t n = truth_rank.size();
  PointerTargets t{nc::Mask(n, n, true), std::vector<std::size_t>(n)};
  for (std::size_t k = 0; k < n; ++k) t.labels[static_cast<std::size_t>(truth_rank[k])] = k;
  for (std::size_t step = 0; step < n; ++step)
    for (std::size_t prev = 0; prev < step; ++prev) t.mask.set(step, t.labels[prev], false);
  return t;
}

/// Mean cross-entropy over decoding steps; row t of `step_logits` scores every slot for step t.
template <class T>
nc::Tensor<T> loss_pointer(const nc::Tensor<T>& step_logits, const nc::Mask& available,
                           const std::vector<std::size_t>& labels) {
  return nc::masked_cross_entropy(step_logits, available, labels);
}

template <class T>
nc::Tensor<T> loss_pointer(const nc::Tensor<T>& step_logits, const std::vector<int>& truth_rank) {
  const auto t = pointer_targets(truth_rank);
  return loss_pointer(step_logits, t.mask, t.labels);
}

/// Mean squared error between per-page scores and normalised true positions rank/(n−1).
template <class T>
nc::Tensor<T> loss_position(const nc::Tensor<T>& scores, const std::vector<int>& truth_rank) {
  const std::size_t n = truth_rank.size();
  if (n < 2) throw DomainError("loss_position needs n >= 2");
  if (scores.size() != n) throw ShapeError("loss_position: one score per page required");
  nc::Array<T> target(scores.dims());
  for (std::size_t k = 0; k < n; ++k) target[k] = static_cast<T>(truth_rank[k]) / static_cast<T>(n - 1);
  return nc::mse_loss(scores, target);
}

}  // namespace pgo
