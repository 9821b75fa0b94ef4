#pragma once

#include <cstddef>
#include <vector>

#include "pgorder/models/model.hpp"
#include "pgorder/numcore/array.hpp"

namespace pgo {

/// n×n comes-after scores: s(i, j) is how strongly page j should follow page i. Diagonal unused.
struct PairwiseScores {
  std::size_t n = 0;
  nc::Array<double> s;

  PairwiseScores() = default;
  explicit PairwiseScores(nc::Array<double> matrix) : n(matrix.rows()), s(std::move(matrix)) {
    if (s.rank() != 2 || s.rows() != s.cols()) throw ShapeError("pairwise scores must be square");
    if (!s.all_finite()) throw DomainError("pairwise scores must be finite");
  }
  [[nodiscard]] double operator()(std::size_t i, std::size_t j) const { return s(i, j); }
};

struct AggregateResult {
  std::vector<double> position_scores;
  Ordering ordering;
};

/// score_i = (1/N) Σ_j s_ji − (1/N) Σ_j s_ij over j ≠ i: predecessors minus
/// followers. A low score means few predecessors, so slots are sorted
/// ascending; `descending` gives the literal reverse reading.
inline AggregateResult aggregate_scores(const PairwiseScores& scores, bool descending = false) {
  const std::size_t n = scores.n;
  if (n < 2) throw DomainError("aggregate_scores needs n >= 2");
  std::vector<double> pos(n, 0.0);
  const double inv = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    double before = 0.0, after = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      before += scores(j, i);
      after += scores(i, j);
    }
    pos[i] = inv * before - inv * after;
  }
  auto ordering = argsort(pos, descending);
  return {std::move(pos), std::move(ordering)};
}

}  // namespace pgo
