#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "pgorder/errors.hpp"
#include "pgorder/numcore/tensor.hpp"

namespace pgo::nc {

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <class T>
struct AdamState {
  std::uint64_t step_count = 0;
  std::vector<std::vector<T>> first_moment;
  std::vector<std::vector<T>> second_moment;
  AdamOptions options;
};

/// Bias-corrected Adam update applied in place to every parameter.
/// Parameters without an accumulated gradient are treated as having a zero gradient.
template <class T>
void adam_step(std::span<Tensor<T>> params, AdamState<T>& state) {
  if (state.first_moment.empty()) {
    for (const auto& p : params) {
      state.first_moment.emplace_back(p.size(), T{0});
      state.second_moment.emplace_back(p.size(), T{0});
    }
  }
  if (state.first_moment.size() != params.size()) throw ShapeError("adam_step: state does not match parameters");
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (state.first_moment[k].size() != params[k].size()) throw ShapeError("adam_step: moment shape mismatch");
    if (!params[k].has_grad()) continue;
    for (auto g : params[k].grad()) {
      if (!std::isfinite(g)) throw TrainingDiverged("adam_step: non-finite gradient", -1);
    }
  }

  ++state.step_count;
  const auto& o = state.options;
  const T b1 = static_cast<T>(o.beta1), b2 = static_cast<T>(o.beta2);
  const T correction1 = T{1} - static_cast<T>(std::pow(o.beta1, static_cast<double>(state.step_count)));
  const T correction2 = T{1} - static_cast<T>(std::pow(o.beta2, static_cast<double>(state.step_count)));
  const T lr = static_cast<T>(o.learning_rate), eps = static_cast<T>(o.epsilon);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& m = state.first_moment[k];
    auto& v = state.second_moment[k];
    auto values = params[k].mutable_value().data();
    const bool has = params[k].has_grad();
    for (std::size_t i = 0; i < m.size(); ++i) {
      const T g = has ? params[k].grad()[i] : T{0};
      m[i] = b1 * m[i] + (T{1} - b1) * g;
      v[i] = b2 * v[i] + (T{1} - b2) * g * g;
      const T mhat = m[i] / correction1;
      const T vhat = v[i] / correction2;
      values[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

/// Rescales all gradients so their joint L2 norm is at most `max_norm`; returns the norm before clipping.
template <class T>
double clip_grad_norm(std::span<Tensor<T>> params, double max_norm) {
  double total = 0.0;
  for (const auto& p : params) {
    if (!p.has_grad()) continue;
    for (auto g : p.grad()) total += static_cast<double>(g) * static_cast<double>(g);
  }
  const double norm = std::sqrt(total);
  if (max_norm > 0.0 && norm > max_norm) {
    const T s = static_cast<T>(max_norm / norm);
    for (auto& p : params) {
      if (!p.has_grad()) continue;
      for (auto& g : p.mutable_grad()) g *= s;
    }
  }
  return norm;
}

template <class T>
void zero_grads(std::span<Tensor<T>> params) {
  for (auto& p : params) p.zero_grad();
}

}  // namespace pgo::nc
