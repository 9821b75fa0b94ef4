#pragma once

#include <memory>

#include "pgorder/models/bilstm_position.hpp"
#include "pgorder/models/pairwise.hpp"
#include "pgorder/models/pointer_lstm.hpp"
#include "pgorder/models/pointer_mlp.hpp"
#include "pgorder/models/seq2seq.hpp"

namespace pgo {

template <class T = float>
std::unique_ptr<OrderingModel<T>> make_model(const ModelConfig& config) {
  switch (config.arch) {
    case Arch::BilstmPos: return std::make_unique<BilstmPositionModel<T>>(config);
    case Arch::PointerMlp: return std::make_unique<PointerMlpModel<T>>(config);
    case Arch::PointerLstm: return std::make_unique<PointerLstmModel<T>>(config);
    case Arch::Seq2Seq: return std::make_unique<Seq2SeqModel<T>>(config);
    case Arch::PairwiseRank: return std::make_unique<PairwiseRankModel<T>>(config);
  }
  throw ConfigError("unknown architecture");
}

}  // namespace pgo
