#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "pgorder/corpus/types.hpp"
#include "pgorder/errors.hpp"
#include "pgorder/rng.hpp"

namespace pgo {

struct CorpusSplit {
  std::vector<Document> train;
  std::vector<Document> val;
  std::vector<Document> test;
};

/// Seeded shuffle, then contiguous train | val | test slices. Validation and
/// test get floor(n·f) documents each; the remainder goes to train.
inline CorpusSplit split_corpus(const std::vector<Document>& docs, std::uint64_t seed,
                                std::array<double, 3> fractions = {0.70, 0.15, 0.15}) {
  if (docs.size() < 3) throw DomainError("split_corpus needs at least 3 documents, got " + std::to_string(docs.size()));
  const double total = fractions[0] + fractions[1] + fractions[2];
  if (std::abs(total - 1.0) > 1e-9 || fractions[0] < 0 || fractions[1] < 0 || fractions[2] < 0) {
    throw DomainError("split fractions must be non-negative and sum to 1");
  }
  std::vector<std::size_t> idx(docs.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng(seed).split("split").shuffle(idx.begin(), idx.end());

  const auto n = static_cast<double>(docs.size());
  const auto n_val = static_cast<std::size_t>(std::floor(n * fractions[1] + 1e-9));
  const auto n_test = static_cast<std::size_t>(std::floor(n * fractions[2] + 1e-9));
  const std::size_t n_train = docs.size() - n_val - n_test;

  CorpusSplit s;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    auto& dst = i < n_train ? s.train : (i < n_train + n_val ? s.val : s.test);
    dst.push_back(docs[idx[i]]);
  }
  return s;
}

}  // namespace pgo
