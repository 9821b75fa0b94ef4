#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "pgorder/corpus/types.hpp"
#include "pgorder/errors.hpp"

namespace pgo {

struct CurriculumStage {
  int min_len = 2;
  int max_len = 5;
  int epochs = 1;
  double lr_scale = 1.0;

  friend bool operator==(const CurriculumStage&, const CurriculumStage&) = default;
};

/// Short-to-long schedule ending on the target range.
///
/// Four stages: 2–5 pages; a bridge range halfway between 2–5 and the target
/// (4–7 for 6–10); the target range at base rate; the target range again at
/// `reduced_lr_scale`. Epochs are split 15/15/50/20 with rounding slack going
/// to the main target stage. A 2–5 target has nothing to bridge and collapses
/// to the last two stages (80/20).
inline std::vector<CurriculumStage> curriculum_schedule(LengthBucket target, int total_epochs,
                                                        double reduced_lr_scale = 0.1) {
  if (total_epochs < 4) throw ConfigError("curriculum needs at least 4 epochs");
  const auto t = bucket_range(target);
  if (target == LengthBucket::B2_5) {
    const int tail = std::max(1, static_cast<int>(std::floor(0.2 * total_epochs)));
    return {{t.min_len, t.max_len, total_epochs - tail, 1.0}, {t.min_len, t.max_len, tail, reduced_lr_scale}};
  }
  const auto first = bucket_range(LengthBucket::B2_5);
  const int short_epochs = std::max(1, static_cast<int>(std::floor(0.15 * total_epochs)));
  const int tail = std::max(1, static_cast<int>(std::floor(0.2 * total_epochs)));
  const int main = total_epochs - 2 * short_epochs - tail;
  return {
      {first.min_len, first.max_len, short_epochs, 1.0},
      {(first.min_len + t.min_len) / 2, (first.max_len + t.max_len) / 2, short_epochs, 1.0},
      {t.min_len, t.max_len, main, 1.0},
      {t.min_len, t.max_len, tail, reduced_lr_scale},
  };
}

}  // namespace pgo
