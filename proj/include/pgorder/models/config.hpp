#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "pgorder/errors.hpp"

namespace pgo {

enum class Arch { BilstmPos, PointerMlp, PointerLstm, Seq2Seq, PairwiseRank };
enum class PeVariant { Learned, Sinusoidal, None };

inline std::string to_string(Arch a) {
  switch (a) {
    case Arch::BilstmPos: return "bilstm_pos";
    case Arch::PointerMlp: return "pointer_mlp";
    case Arch::PointerLstm: return "pointer_lstm";
    case Arch::Seq2Seq: return "seq2seq";
    case Arch::PairwiseRank: return "pairwise";
  }
  return "?";
}

inline Arch parse_arch(std::string_view s) {
  for (auto a : {Arch::BilstmPos, Arch::PointerMlp, Arch::PointerLstm, Arch::Seq2Seq, Arch::PairwiseRank}) {
    if (s == to_string(a)) return a;
  }
  throw ConfigError("unknown architecture '" + std::string(s) + "'");
}

inline std::string to_string(PeVariant p) {
  switch (p) {
    case PeVariant::Learned: return "learned";
    case PeVariant::Sinusoidal: return "sinusoidal";
    case PeVariant::None: return "none";
  }
  return "?";
}

inline PeVariant parse_pe(std::string_view s) {
  for (auto p : {PeVariant::Learned, PeVariant::Sinusoidal, PeVariant::None}) {
    if (s == to_string(p)) return p;
  }
  throw ConfigError("unknown positional encoding '" + std::string(s) + "'");
}

/// Architecture hyperparameters. Fields that an architecture does not use are ignored by it.
struct ModelConfig {
  Arch arch = Arch::PairwiseRank;
  PeVariant pe_variant = PeVariant::Learned;  // seq2seq only
  int layers = 2;                             // encoder depth
  int hidden_dim = 128;
  int heads = 4;
  int input_dim = 64;
  int max_len = 25;
  std::uint64_t seed = 1;
  int decoder_layers = 2;      // seq2seq decoder depth
  int decoder_hidden = 256;    // pointer LSTM decoder width
  int scorer_layers = 4;       // pairwise scoring network depth
  bool descending_aggregation = false;  // literal "sort descending" reading of the aggregation rule

  void validate() const {
    if (layers < 1 || hidden_dim < 1 || input_dim < 1) throw ConfigError("model sizes must be positive");
    if (max_len < 25) throw ConfigError("max_len must support at least 25 positions");
    const bool attention = arch == Arch::Seq2Seq || arch == Arch::PairwiseRank;
    if (attention && (heads < 1 || hidden_dim % heads != 0)) {
      throw ConfigError("hidden_dim " + std::to_string(hidden_dim) + " not divisible by " + std::to_string(heads) +
                        " heads");
    }
    if (arch == Arch::Seq2Seq && decoder_layers < 1) throw ConfigError("seq2seq needs at least one decoder layer");
    if (arch == Arch::PointerLstm && decoder_hidden < 1) throw ConfigError("decoder_hidden must be positive");
    if (arch == Arch::PairwiseRank && scorer_layers < 1) throw ConfigError("scorer_layers must be positive");
  }

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Desk-scale defaults per architecture.
inline ModelConfig default_model_config(Arch arch, int input_dim = 64, std::uint64_t seed = 1) {
  ModelConfig c;
  c.arch = arch;
  c.input_dim = input_dim;
  c.seed = seed;
  switch (arch) {
    case Arch::BilstmPos:
      c.layers = 2;
      c.hidden_dim = 128;
      break;
    case Arch::PointerMlp:
      c.layers = 3;
      c.hidden_dim = 128;
      break;
    case Arch::PointerLstm:
      c.layers = 1;
      c.hidden_dim = 128;
      c.decoder_hidden = 256;
      break;
    case Arch::Seq2Seq:
      c.layers = 2;
      c.decoder_layers = 2;
      c.hidden_dim = 128;
      c.heads = 4;
      break;
    case Arch::PairwiseRank:
      c.layers = 2;
      c.hidden_dim = 128;
      c.heads = 4;
      c.scorer_layers = 4;
      break;
  }
  return c;
}

inline void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = nlohmann::json{{"arch", to_string(c.arch)},
                     {"pe_variant", to_string(c.pe_variant)},
                     {"layers", c.layers},
                     {"hidden_dim", c.hidden_dim},
                     {"heads", c.heads},
                     {"input_dim", c.input_dim},
                     {"max_len", c.max_len},
                     {"seed", c.seed},
                     {"decoder_layers", c.decoder_layers},
                     {"decoder_hidden", c.decoder_hidden},
                     {"scorer_layers", c.scorer_layers},
                     {"descending_aggregation", c.descending_aggregation}};
}

/// Reads a model config; missing keys keep the architecture's defaults, unknown keys are errors.
inline ModelConfig model_config_from_json(const nlohmann::json& j, ModelConfig base) {
  for (const auto& [key, value] : j.items()) {
    if (key == "arch") {
      const auto arch = parse_arch(value.get<std::string>());
      if (arch != base.arch) base = default_model_config(arch, base.input_dim, base.seed);
    } else if (key == "pe_variant") {
      base.pe_variant = parse_pe(value.get<std::string>());
    } else if (key == "layers") {
      base.layers = value.get<int>();
    } else if (key == "hidden_dim") {
      base.hidden_dim = value.get<int>();
    } else if (key == "heads") {
      base.heads = value.get<int>();
    } else if (key == "input_dim") {
      base.input_dim = value.get<int>();
    } else if (key == "max_len") {
      base.max_len = value.get<int>();
    } else if (key == "seed") {
      base.seed = value.get<std::uint64_t>();
    } else if (key == "decoder_layers") {
      base.decoder_layers = value.get<int>();
    } else if (key == "decoder_hidden") {
      base.decoder_hidden = value.get<int>();
    } else if (key == "scorer_layers") {
      base.scorer_layers = value.get<int>();
    } else if (key == "descending_aggregation") {
      base.descending_aggregation = value.get<bool>();
    } else {
      throw ConfigError("unknown model config key '" + key + "'");
    }
  }
  return base;
}

inline void from_json(const nlohmann::json& j, ModelConfig& c) {
  ModelConfig base = default_model_config(parse_arch(j.at("arch").get<std::string>()));
  c = model_config_from_json(j, base);
}

}  // namespace pgo
