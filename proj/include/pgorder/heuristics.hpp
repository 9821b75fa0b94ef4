#pragma once

#include <cmath>
#include <cstddef>
#include <iostream>
#include <limits>
#include <numeric>
#include <vector>

#include "pgorder/corpus/types.hpp"
#include "pgorder/metrics.hpp"
#include "pgorder/rng.hpp"

namespace pgo {

inline Ordering order_random(std::size_t n, Rng rng) {
  if (n < 2) throw DomainError("order_random needs n >= 2");
  std::vector<int> slots(n);
  std::iota(slots.begin(), slots.end(), 0);
  rng.shuffle(slots.begin(), slots.end());
  return Ordering(std::move(slots));
}

namespace detail {

/// Pairwise cosine similarities. A zero-norm page has similarity −1 to everything.
inline std::vector<std::vector<double>> cosine_table(const std::vector<Embedding>& pages, bool warn = true) {
  const std::size_t n = pages.size();
  std::vector<double> norms(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (double x : pages[i]) norms[i] += x * x;
    norms[i] = std::sqrt(norms[i]);
    if (norms[i] == 0.0 && warn) std::cerr << "warning: zero-norm embedding in slot " << i << "\n";
  }
  std::vector<std::vector<double>> sim(n, std::vector<double>(n, -1.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (norms[i] == 0.0 || norms[j] == 0.0) continue;
      double dot = 0.0;
      for (std::size_t k = 0; k < pages[i].size(); ++k) dot += pages[i][k] * pages[j][k];
      sim[i][j] = dot / (norms[i] * norms[j]);
    }
  return sim;
}

/// Nearest-neighbour path from `start`; ties go to the lowest slot. Returns path and its 1 − cos length.
inline std::pair<std::vector<int>, double> nn_path(const std::vector<std::vector<double>>& sim, std::size_t start) {
  const std::size_t n = sim.size();
  std::vector<char> used(n, 0);
  std::vector<int> path{static_cast<int>(start)};
  used[start] = 1;
  double cost = 0.0;
  std::size_t cur = start;
  for (std::size_t step = 1; step < n; ++step) {
    std::size_t best = n;
    for (std::size_t j = 0; j < n; ++j) {
      if (used[j]) continue;
      if (best == n || sim[cur][j] > sim[cur][best]) best = j;
    }
    cost += 1.0 - sim[cur][best];
    used[best] = 1;
    path.push_back(static_cast<int>(best));
    cur = best;
  }
  return {std::move(path), cost};
}

}  // namespace detail

/// Greedy nearest neighbour by cosine similarity from a seeded random start page.
inline Ordering order_greedy_nn(const std::vector<Embedding>& pages, Rng rng) {
  if (pages.size() < 2) throw DomainError("order_greedy_nn needs n >= 2");
  const auto start = static_cast<std::size_t>(rng.below(pages.size()));
  return Ordering(detail::nn_path(detail::cosine_table(pages), start).first);
}

inline Ordering order_greedy_nn_from(const std::vector<Embedding>& pages, std::size_t start) {
  if (pages.size() < 2) throw DomainError("order_greedy_nn needs n >= 2");
  if (start >= pages.size()) throw DomainError("start page out of range");
  return Ordering(detail::nn_path(detail::cosine_table(pages), start).first);
}

/// Nearest-neighbour tour construction from every start with distance 1 − cos;
/// keeps the shortest open path, ties to the lowest start index.
inline Ordering order_tsp_nn(const std::vector<Embedding>& pages) {
  if (pages.size() < 2) throw DomainError("order_tsp_nn needs n >= 2");
  const auto sim = detail::cosine_table(pages);
  std::vector<int> best;
  double best_cost = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < pages.size(); ++s) {
    auto [path, cost] = detail::nn_path(sim, s);
    if (cost < best_cost) {
      best_cost = cost;
      best = std::move(path);
    }
  }
  return Ordering(std::move(best));
}

}  // namespace pgo
