#pragma once

#include <array>
#include <memory>

#include "pgorder/corpus/types.hpp"
#include "pgorder/models/config.hpp"
#include "pgorder/models/model.hpp"

namespace pgo {

/// One model per length bucket; documents go to the model of their bucket.
template <class T = float>
struct SpecialistEnsemble {
  std::array<std::shared_ptr<OrderingModel<T>>, 5> models;

  void validate() const {
    for (auto b : kAllBuckets) {
      if (!models[bucket_index(b)]) throw ConfigError("specialist for bucket " + bucket_name(b) + " is missing");
    }
  }

  [[nodiscard]] std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& m : models) n += m ? m->parameter_count() : 0;
    return n;
  }
};

template <class T>
const OrderingModel<T>& route(const SpecialistEnsemble<T>& ensemble, int n_pages) {
  const auto b = bucket_of(n_pages);  // throws outside 2..25
  const auto& m = ensemble.models[bucket_index(b)];
  if (!m) throw ConfigError("specialist for bucket " + bucket_name(b) + " is missing");
  return *m;
}

/// Desk presets that keep the depth and width progression of the per-bucket
/// specialists (shallow and narrow for short documents, deeper and wider for long).
inline ModelConfig specialist_config(LengthBucket b, int input_dim, std::uint64_t seed) {
  constexpr std::array<int, 5> layers{2, 3, 3, 4, 4};
  constexpr std::array<int, 5> width{64, 96, 128, 128, 192};
  auto c = default_model_config(Arch::PairwiseRank, input_dim, seed);
  c.layers = layers[bucket_index(b)];
  c.hidden_dim = width[bucket_index(b)];
  return c;
}

}  // namespace pgo
