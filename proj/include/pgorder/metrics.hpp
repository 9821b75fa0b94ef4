#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "pgorder/corpus/types.hpp"
#include "pgorder/errors.hpp"
#include "pgorder/numcore/array.hpp"

namespace pgo {

/// Predicted reading order as a sequence of shuffled-slot indices.
class Ordering {
 public:
  Ordering() = default;
  explicit Ordering(std::vector<int> slots) : slots_(std::move(slots)) { require_permutation(slots_, "ordering"); }

  static Ordering identity(std::size_t n) {
    std::vector<int> s(n);
    for (std::size_t i = 0; i < n; ++i) s[i] = static_cast<int>(i);
    return Ordering(std::move(s));
  }

  [[nodiscard]] const std::vector<int>& slots() const { return slots_; }
  [[nodiscard]] std::size_t size() const { return slots_.size(); }
  [[nodiscard]] int operator[](std::size_t i) const { return slots_[i]; }

  [[nodiscard]] Ordering reversed() const { return Ordering(std::vector<int>(slots_.rbegin(), slots_.rend())); }

  friend bool operator==(const Ordering&, const Ordering&) = default;

 private:
  std::vector<int> slots_;
};

namespace detail {

// merge sort that counts inversions
inline long long sort_count(std::vector<int>& v, std::vector<int>& buf, std::size_t lo, std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = (lo + hi) / 2;
  long long inv = sort_count(v, buf, lo, mid) + sort_count(v, buf, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (v[i] <= v[j]) {
      buf[k++] = v[i++];
    } else {
      inv += static_cast<long long>(mid - i);
      buf[k++] = v[j++];
    }
  }
  while (i < mid) buf[k++] = v[i++];
  while (j < hi) buf[k++] = v[j++];
  for (k = lo; k < hi; ++k) v[k] = buf[k];
  return inv;
}

}  // namespace detail

/// Kendall's tau between a predicted ordering and the true ranks of the slots.
///
/// Reads the true ranks in predicted order; every inversion in that sequence
/// is a discordant pair, so tau = 1 − 4·inversions / (n(n−1)).
inline double kendall_tau(const Ordering& pred, const std::vector<int>& truth_rank) {
  const std::size_t n = pred.size();
  if (n < 2) throw DomainError("kendall_tau is undefined for fewer than 2 items");
  if (truth_rank.size() != n) throw DomainError("kendall_tau: prediction and truth lengths differ");
  require_permutation(truth_rank, "truth_rank");
  std::vector<int> seq(n), buf(n);
  for (std::size_t t = 0; t < n; ++t) seq[t] = truth_rank[static_cast<std::size_t>(pred[t])];
  const auto inversions = static_cast<double>(detail::sort_count(seq, buf, 0, n));
  const double pairs = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
  return (pairs - 2.0 * inversions) / pairs;
}

struct TauSummary {
  std::array<std::optional<double>, 5> bucket_mean{};  // empty bucket: nullopt
  std::array<std::size_t, 5> bucket_count{};
  double overall = 0.0;
  std::size_t count = 0;

  [[nodiscard]] std::optional<double> mean(LengthBucket b) const { return bucket_mean[bucket_index(b)]; }
};

/// Unweighted document means of tau, per length bucket and overall.
inline TauSummary summarize_taus(const std::vector<int>& lengths, const std::vector<double>& taus) {
  if (lengths.size() != taus.size()) throw DomainError("summarize_taus: misaligned lists");
  TauSummary s;
  std::array<double, 5> sums{};
  double total = 0.0;
  for (std::size_t i = 0; i < taus.size(); ++i) {
    const auto b = bucket_index(bucket_of(lengths[i]));
    sums[b] += taus[i];
    ++s.bucket_count[b];
    total += taus[i];
  }
  for (std::size_t b = 0; b < 5; ++b) {
    if (s.bucket_count[b] > 0) s.bucket_mean[b] = sums[b] / static_cast<double>(s.bucket_count[b]);
  }
  s.count = taus.size();
  s.overall = taus.empty() ? 0.0 : total / static_cast<double>(taus.size());
  return s;
}

inline TauSummary mean_tau(const std::vector<ShuffledInstance>& instances, const std::vector<Ordering>& predictions) {
  if (instances.size() != predictions.size()) throw DomainError("mean_tau: instances and predictions are misaligned");
  std::vector<int> lengths;
  std::vector<double> taus;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    lengths.push_back(instances[i].length());
    taus.push_back(kendall_tau(predictions[i], instances[i].truth_rank()));
  }
  return summarize_taus(lengths, taus);
}

struct LocalityStats {
  double local_fraction = 0.0;
  double avg_distance = 0.0;
  std::size_t rows = 0;  // attention rows averaged over
};

/// Mass within |i − j| <= window and the expected |i − j|, averaged uniformly
/// over every row of every head of every matrix in the stack. Each matrix is
/// heads×n×n (or n×n) with rows and columns indexed by position.
template <class T>
LocalityStats attention_locality(const std::vector<nc::Array<T>>& stack, int window = 2) {
  LocalityStats s;
  double local = 0.0, dist = 0.0;
  for (const auto& a : stack) {
    const std::size_t n = a.dims().back();
    if (a.rank() < 2 || a.dims()[a.rank() - 2] != n) throw DomainError("attention_locality: matrices must be square");
    const std::size_t rows = a.size() / n;
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t i = r % n;
      double row_sum = 0.0, row_local = 0.0, row_dist = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double p = static_cast<double>(a[r * n + j]);
        const auto gap = static_cast<double>(i > j ? i - j : j - i);
        row_sum += p;
        if (gap <= window) row_local += p;
        row_dist += p * gap;
      }
      if (std::abs(row_sum - 1.0) > 1e-5) throw DomainError("attention_locality: row does not sum to 1");
      local += row_local;
      dist += row_dist;
      ++s.rows;
    }
  }
  if (s.rows == 0) throw DomainError("attention_locality: empty attention stack");
  s.local_fraction = local / static_cast<double>(s.rows);
  s.avg_distance = dist / static_cast<double>(s.rows);
  return s;
}

/// Re-indexes a heads×n×n attention array from slot order into true chronological order.
template <class T>
nc::Array<T> attention_in_true_order(const nc::Array<T>& attn, const std::vector<int>& truth_rank) {
  const std::size_t n = truth_rank.size();
  nc::Array<T> out(attn.dims());
  const std::size_t heads = attn.size() / (n * n);
  for (std::size_t h = 0; h < heads; ++h)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        const auto ti = static_cast<std::size_t>(truth_rank[i]), tj = static_cast<std::size_t>(truth_rank[j]);
        out[(h * n + ti) * n + tj] = attn[(h * n + i) * n + j];
      }
  return out;
}

struct StabilityStats {
  double sigma = 0.0;
  double min_tau = 0.0;
  std::size_t negative_epochs = 0;
  [[nodiscard]] bool worse_than_random() const { return negative_epochs > 0; }
};

/// Population standard deviation of a per-epoch validation tau series.
inline double stability_sigma(std::span<const double> series) {
  if (series.size() < 2) throw DomainError("stability_sigma needs at least 2 epochs");
  double mean = 0.0;
  for (double v : series) mean += v;
  mean /= static_cast<double>(series.size());
  double var = 0.0;
  for (double v : series) var += (v - mean) * (v - mean);
  return std::sqrt(var / static_cast<double>(series.size()));
}

inline StabilityStats stability_stats(std::span<const double> series) {
  StabilityStats s;
  s.sigma = stability_sigma(series);
  s.min_tau = series[0];
  for (double v : series) {
    s.min_tau = std::min(s.min_tau, v);
    if (v < 0.0) ++s.negative_epochs;
  }
  return s;
}

}  // namespace pgo
