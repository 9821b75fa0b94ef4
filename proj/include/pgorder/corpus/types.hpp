#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

#include "pgorder/errors.hpp"
#include "pgorder/numcore/array.hpp"
#include "pgorder/rng.hpp"

namespace pgo {

inline constexpr int kMinPages = 2;
inline constexpr int kMaxPages = 25;

using Embedding = std::vector<double>;

struct Document {
  std::string doc_id;
  std::vector<Embedding> pages;  // true chronological order

  [[nodiscard]] int length() const { return static_cast<int>(pages.size()); }
  [[nodiscard]] std::size_t dim() const { return pages.empty() ? 0 : pages.front().size(); }
  friend bool operator==(const Document&, const Document&) = default;
};

/// Throws DomainError unless `v` holds each of 0..n−1 exactly once.
inline void require_permutation(const std::vector<int>& v, std::string_view what) {
  std::vector<char> seen(v.size(), 0);
  for (int x : v) {
    if (x < 0 || static_cast<std::size_t>(x) >= v.size() || seen[static_cast<std::size_t>(x)]) {
      throw DomainError(std::string(what) + " is not a permutation of 0.." + std::to_string(v.size()) + "-1");
    }
    seen[static_cast<std::size_t>(x)] = 1;
  }
}

/// Pages in presentation order. truth_rank[k] is the chronological rank of the page in slot k.
class ShuffledInstance {
 public:
  ShuffledInstance(std::string doc_id, std::vector<Embedding> pages, std::vector<int> truth_rank)
      : doc_id_(std::move(doc_id)), pages_(std::move(pages)), truth_rank_(std::move(truth_rank)) {
    if (pages_.size() != truth_rank_.size()) throw DomainError("truth_rank length does not match page count");
    require_permutation(truth_rank_, "truth_rank");
  }

  [[nodiscard]] const std::string& doc_id() const { return doc_id_; }
  [[nodiscard]] const std::vector<Embedding>& pages() const { return pages_; }
  [[nodiscard]] const std::vector<int>& truth_rank() const { return truth_rank_; }
  [[nodiscard]] int length() const { return static_cast<int>(pages_.size()); }

  /// Slot sequence in true reading order: result[t] is the slot holding rank t.
  [[nodiscard]] std::vector<int> true_order() const {
    std::vector<int> order(truth_rank_.size());
    for (std::size_t k = 0; k < truth_rank_.size(); ++k) order[static_cast<std::size_t>(truth_rank_[k])] = static_cast<int>(k);
    return order;
  }

  /// Pages as an n×dim matrix in slot order.
  template <class T>
  [[nodiscard]] nc::Array<T> matrix() const {
    const std::size_t n = pages_.size(), d = pages_.front().size();
    nc::Array<T> m({n, d});
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < d; ++j) m(i, j) = static_cast<T>(pages_[i][j]);
    return m;
  }

 private:
  std::string doc_id_;
  std::vector<Embedding> pages_;
  std::vector<int> truth_rank_;
};

/// Uniformly random presentation order drawn from `rng`.
inline ShuffledInstance shuffle_instance(const Document& doc, Rng rng) {
  std::vector<int> perm(doc.pages.size());
  std::iota(perm.begin(), perm.end(), 0);
  rng.shuffle(perm.begin(), perm.end());
  std::vector<Embedding> pages;
  pages.reserve(perm.size());
  for (int p : perm) pages.push_back(doc.pages[static_cast<std::size_t>(p)]);
  return ShuffledInstance(doc.doc_id, std::move(pages), std::move(perm));
}

/// Instance stream keyed by document id, so a document's shuffle does not
/// depend on which split or list it sits in.
inline ShuffledInstance shuffle_instance(const Document& doc, std::uint64_t seed) {
  return shuffle_instance(doc, Rng(seed).split(doc.doc_id));
}

enum class LengthBucket : int { B2_5 = 0, B6_10 = 1, B11_15 = 2, B16_20 = 3, B21_25 = 4 };

inline constexpr std::array<LengthBucket, 5> kAllBuckets{LengthBucket::B2_5, LengthBucket::B6_10, LengthBucket::B11_15,
                                                         LengthBucket::B16_20, LengthBucket::B21_25};

struct BucketRange {
  int min_len;
  int max_len;
};

inline constexpr BucketRange bucket_range(LengthBucket b) {
  constexpr std::array<BucketRange, 5> ranges{{{2, 5}, {6, 10}, {11, 15}, {16, 20}, {21, 25}}};
  return ranges[static_cast<std::size_t>(b)];
}

inline LengthBucket bucket_of(int length) {
  if (length < kMinPages || length > kMaxPages) {
    throw DomainError("document length " + std::to_string(length) + " outside 2..25");
  }
  for (auto b : kAllBuckets) {
    if (length <= bucket_range(b).max_len) return b;
  }
  return LengthBucket::B21_25;
}

inline std::string bucket_name(LengthBucket b) {
  const auto r = bucket_range(b);
  return std::to_string(r.min_len) + "-" + std::to_string(r.max_len);
}

inline LengthBucket parse_bucket(std::string_view s) {
  for (auto b : kAllBuckets) {
    if (s == bucket_name(b)) return b;
  }
  static const std::array<std::string_view, 5> aliases{"B2_5", "B6_10", "B11_15", "B16_20", "B21_25"};
  for (std::size_t i = 0; i < aliases.size(); ++i) {
    if (s == aliases[i]) return kAllBuckets[i];
  }
  throw ConfigError("unknown length bucket '" + std::string(s) + "'");
}

inline std::size_t bucket_index(LengthBucket b) { return static_cast<std::size_t>(b); }

}  // namespace pgo
