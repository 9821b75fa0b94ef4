#pragma once

#include <array>
#include <optional>
#include <string_view>

namespace pgo::paper {

/// Published test-set tau per length bucket, attached to report rows as annotations.
struct TableRow {
  std::string_view id;
  std::string_view display;
  std::array<double, 5> tau;
  std::string_view params;
};

inline constexpr std::array<TableRow, 12> kTable{{
    {"random", "Random", {0.007, 0.002, -0.001, 0.003, 0.001}, "0"},
    {"greedy_nn", "Greedy NN", {0.168, 0.091, 0.062, 0.045, 0.033}, "0"},
    {"tsp_nn", "TSP NN", {0.113, 0.147, 0.111, 0.093, 0.022}, "0"},
    {"bilstm_pos", "BiLSTM Position", {0.859, 0.667, 0.503, 0.402, 0.318}, "3.7M"},
    {"pointer_mlp", "Pointer MLP", {0.847, 0.682, 0.551, 0.448, 0.371}, "3.1M"},
    {"pointer_lstm", "Pointer LSTM", {0.889, 0.703, 0.572, 0.461, 0.362}, "9.5M"},
    {"seq2seq_learned", "seq2seq (learned)", {0.918, 0.787, 0.343, 0.094, 0.014}, "45M"},
    {"seq2seq_sinusoidal", "seq2seq (sinusoidal)", {0.893, 0.763, 0.396, 0.197, 0.061}, "45M"},
    {"seq2seq_none", "seq2seq (no position)", {0.877, 0.770, 0.369, 0.051, 0.026}, "45M"},
    {"pairwise", "Pairwise Ranking", {0.922, 0.860, 0.509, 0.300, 0.175}, "531M"},
    {"specialized_direct", "Specialized PR (Direct)", {0.953, 0.899, 0.722, 0.515, 0.380}, "~2.6B"},
    {"specialized_curriculum", "Specialized PR (Curriculum)", {0.915, 0.882, 0.662, 0.379, 0.233}, "~2.6B"},
}};

inline const TableRow* find_row(std::string_view id) {
  for (const auto& r : kTable) {
    if (r.id == id) return &r;
  }
  return nullptr;
}

// Validation-tau standard deviation across epochs for the seq2seq variants.
inline constexpr double kSigmaLearned = 0.262;
inline constexpr double kSigmaSinusoidal = 0.169;
inline constexpr double kSigmaNone = 0.347;

inline std::optional<double> sigma_for(std::string_view pe_variant) {
  if (pe_variant == "learned") return kSigmaLearned;
  if (pe_variant == "sinusoidal") return kSigmaSinusoidal;
  if (pe_variant == "none") return kSigmaNone;
  return std::nullopt;
}

// Short-only training evaluated in domain and on 21-25 page documents.
inline constexpr double kTransferInDomain = 0.8817;
inline constexpr double kTransferLong = 0.1618;

// Attention locality of the short and long specialists (window ±2).
inline constexpr double kLocalShortFraction = 0.779;
inline constexpr double kLocalShortDistance = 1.53;
inline constexpr double kLocalLongFraction = 0.208;
inline constexpr double kLocalLongDistance = 7.59;
inline constexpr double kLocalDistanceRatio = 4.96;

}  // namespace pgo::paper
