#include <gtest/gtest.h>

#include <chrono>
#include <vector>

#include "pgorder/heuristics.hpp"
#include "pgorder/metrics.hpp"
#include "test_util.hpp"

using namespace pgo;

namespace {

/// Direct O(n²) pair count.
double brute_tau(const std::vector<int>& pred, const std::vector<int>& truth_rank) {
  const std::size_t n = pred.size();
  long long concordant = 0, discordant = 0;
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b) {
      // pred places slot pred[a] before pred[b]
      const int ra = truth_rank[static_cast<std::size_t>(pred[a])], rb = truth_rank[static_cast<std::size_t>(pred[b])];
      (ra < rb ? concordant : discordant)++;
    }
  return static_cast<double>(concordant - discordant) / static_cast<double>(n * (n - 1) / 2);
}

}  // namespace

// ---------------------------------------------------------------------------
// Kendall's tau

TEST(KendallTau, PerfectAgreementAndReversal) {
  for (std::size_t n = 2; n <= 25; ++n) {
    Rng rng(n);
    const auto truth = pgo::testing::random_permutation(n, rng);
    std::vector<int> order(n);
    for (std::size_t k = 0; k < n; ++k) order[static_cast<std::size_t>(truth[k])] = static_cast<int>(k);
    const Ordering pred(order);
    EXPECT_EQ(kendall_tau(pred, truth), 1.0);
    EXPECT_EQ(kendall_tau(pred.reversed(), truth), -1.0);
  }
}

TEST(KendallTau, HandExampleOneThird) {
  EXPECT_DOUBLE_EQ(kendall_tau(Ordering({1, 0, 2}), {0, 1, 2}), 1.0 / 3.0);
}

TEST(KendallTau, MatchesPairCountingOracle) {
  Rng rng(2024);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t n = 2 + rng.below(24);
    const auto pred = pgo::testing::random_permutation(n, rng);
    const auto truth = pgo::testing::random_permutation(n, rng);
    EXPECT_DOUBLE_EQ(kendall_tau(Ordering(pred), truth), brute_tau(pred, truth));
  }
}

TEST(KendallTau, RejectsDegenerateInput) {
  EXPECT_THROW(kendall_tau(Ordering({0}), {0}), DomainError);
  EXPECT_THROW(kendall_tau(Ordering({0, 1}), {0, 1, 2}), DomainError);
  EXPECT_THROW(kendall_tau(Ordering({0, 1}), {1, 1}), DomainError);
  EXPECT_THROW(Ordering({0, 2}), DomainError);
}

// ---------------------------------------------------------------------------
// means

TEST(MeanTau, SingleDocumentEqualsItsTau) {
  const ShuffledInstance x("d", {{1.0}, {2.0}, {3.0}}, {0, 1, 2});
  const auto s = mean_tau({x}, {Ordering({1, 0, 2})});
  EXPECT_DOUBLE_EQ(s.overall, 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(*s.mean(LengthBucket::B2_5), 1.0 / 3.0);
  EXPECT_FALSE(s.mean(LengthBucket::B6_10).has_value());
  EXPECT_EQ(s.bucket_count[0], 1u);
}

TEST(MeanTau, AveragesWithinBucket) {
  const auto s = summarize_taus({3, 4}, {1.0, 0.0});
  EXPECT_DOUBLE_EQ(*s.mean(LengthBucket::B2_5), 0.5);
}

TEST(MeanTau, OverallIsUnweightedDocumentMean) {
  const auto s = summarize_taus({3, 3, 3, 22}, {1.0, 1.0, 1.0, -1.0});
  EXPECT_DOUBLE_EQ(s.overall, 0.5);
  EXPECT_DOUBLE_EQ(*s.mean(LengthBucket::B21_25), -1.0);
}

TEST(MeanTau, RandomOrderingsAverageNearZero) {
  Rng rng(77);
  std::vector<ShuffledInstance> xs;
  std::vector<Ordering> preds;
  for (int d = 0; d < 1000; ++d) {
    const std::size_t n = 2 + rng.below(24);
    const auto doc = pgo::testing::noise_document("d" + std::to_string(d), n, 2, rng.split(static_cast<std::uint64_t>(d)));
    xs.push_back(shuffle_instance(doc, 5));
    preds.push_back(order_random(n, rng.split("order").split(static_cast<std::uint64_t>(d))));
  }
  EXPECT_NEAR(mean_tau(xs, preds).overall, 0.0, 0.05);
}

TEST(MeanTau, MisalignedInputsThrow) {
  const ShuffledInstance x("d", {{1.0}, {2.0}}, {0, 1});
  EXPECT_THROW(mean_tau({x}, {}), DomainError);
}

// ---------------------------------------------------------------------------
// attention locality

namespace {

nc::Array<double> one_hot_rows(const std::vector<std::size_t>& target) {
  const std::size_t n = target.size();
  nc::Array<double> a({1, n, n});
  for (std::size_t i = 0; i < n; ++i) a(0, i, target[i]) = 1.0;
  return a;
}

}  // namespace

TEST(Locality, IdentityAttention) {
  const auto s = attention_locality<double>({one_hot_rows({0, 1, 2, 3, 4})});
  EXPECT_DOUBLE_EQ(s.local_fraction, 1.0);
  EXPECT_DOUBLE_EQ(s.avg_distance, 0.0);
  EXPECT_EQ(s.rows, 5u);
}

TEST(Locality, UniformThreeByThree) {
  nc::Array<double> a({3, 3}, 1.0 / 3.0);
  const auto s = attention_locality<double>({a});
  EXPECT_NEAR(s.local_fraction, 1.0, 1e-15);
  EXPECT_NEAR(s.avg_distance, 8.0 / 9.0, 1e-15);
}

TEST(Locality, FarthestOneHot) {
  auto farthest = [](std::size_t n) {
    std::vector<std::size_t> t(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = i < n / 2 ? n - 1 : 0;
    return t;
  };
  const auto s10 = attention_locality<double>({one_hot_rows(farthest(10))});
  EXPECT_DOUBLE_EQ(s10.local_fraction, 0.0);
  // distances 9,8,7,6,5,5,6,7,8,9
  EXPECT_DOUBLE_EQ(s10.avg_distance, 7.0);
  const auto s20 = attention_locality<double>({one_hot_rows(farthest(20))});
  EXPECT_GT(s20.avg_distance, s10.avg_distance);
  EXPECT_DOUBLE_EQ(s20.local_fraction, 0.0);
}

TEST(Locality, AveragesOverHeadsAndLayers) {
  nc::Array<double> two_heads({2, 3, 3});
  for (std::size_t i = 0; i < 3; ++i) {
    two_heads(0, i, i) = 1.0;          // identity head
    two_heads(1, i, 2 - i) = 1.0;      // mirror head: distances 2, 0, 2
  }
  const auto s = attention_locality<double>({two_heads, one_hot_rows({0, 1, 2})});
  EXPECT_EQ(s.rows, 9u);
  EXPECT_DOUBLE_EQ(s.avg_distance, 4.0 / 9.0);
  EXPECT_DOUBLE_EQ(s.local_fraction, 1.0);
  EXPECT_DOUBLE_EQ(attention_locality<double>({two_heads}, 1).local_fraction, 4.0 / 6.0);
}

TEST(Locality, RejectsBadInput) {
  EXPECT_THROW(attention_locality<double>({}), DomainError);
  EXPECT_THROW(attention_locality<double>({nc::Array<double>({3, 3}, 0.5)}), DomainError);
  EXPECT_THROW(attention_locality<double>({nc::Array<double>({2, 3}, 0.5)}), DomainError);
}

TEST(Locality, ReindexingToTrueOrder) {
  // slot k holds the page of rank truth[k]; attention from each slot to itself stays diagonal
  const std::vector<int> truth{2, 0, 1};
  nc::Array<double> a({1, 3, 3});
  a(0, 0, 1) = 1.0;  // slot 0 (rank 2) attends to slot 1 (rank 0)
  a(0, 1, 1) = 1.0;
  a(0, 2, 0) = 1.0;  // slot 2 (rank 1) attends to slot 0 (rank 2)
  const auto r = attention_in_true_order(a, truth);
  EXPECT_EQ(r(0, 2, 0), 1.0);
  EXPECT_EQ(r(0, 0, 0), 1.0);
  EXPECT_EQ(r(0, 1, 2), 1.0);
  double total = 0.0;
  for (double v : r.data()) total += v;
  EXPECT_EQ(total, 3.0);
}

// ---------------------------------------------------------------------------
// stability

TEST(Stability, ConstantSeriesHasZeroSigma) {
  const std::vector<double> s{0.4, 0.4, 0.4, 0.4};
  EXPECT_EQ(stability_sigma(s), 0.0);
}

TEST(Stability, PopulationStandardDeviation) {
  const std::vector<double> s{0.0, 1.0};
  EXPECT_DOUBLE_EQ(stability_sigma(s), 0.5);
  const std::vector<double> t{2, 4, 4, 4, 5, 5, 7, 9};
  EXPECT_DOUBLE_EQ(stability_sigma(t), 2.0);
}

TEST(Stability, NegativeEpochsAreFlagged) {
  const std::vector<double> s{0.3, -0.1, 0.5, -0.2};
  const auto st = stability_stats(s);
  EXPECT_TRUE(st.worse_than_random());
  EXPECT_EQ(st.negative_epochs, 2u);
  EXPECT_DOUBLE_EQ(st.min_tau, -0.2);
  const std::vector<double> ok{0.1, 0.2};
  EXPECT_FALSE(stability_stats(ok).worse_than_random());
}

TEST(Stability, NeedsTwoEpochs) {
  const std::vector<double> s{0.5};
  EXPECT_THROW(stability_sigma(s), DomainError);
}
