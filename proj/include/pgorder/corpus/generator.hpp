#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "pgorder/corpus/types.hpp"
#include "pgorder/errors.hpp"
#include "pgorder/rng.hpp"

namespace pgo {

/// Parameters of the synthetic corpus.
///
/// Each page is the sum of three parts: a page-type centroid (one of
/// `n_page_types` random unit directions, times `type_noise`), a chronology
/// signal (a fixed random cosine mixture of the page's normalised position,
/// living in a `chrono_dim`-dimensional subspace and scaled by
/// `chrono_strength`), and isotropic noise of expected norm `page_noise`.
/// Page types are drawn independently per page, so with type_noise above
/// chrono_strength neighbouring pages are usually far apart in embedding space.
/// A high `chrono_frequency` makes the curve wind quickly, so the position of a
/// page is only learnable from examples that sample the curve densely.
struct CorpusConfig {
  int n_docs = 2000;
  int dim = 64;
  std::array<double, 5> length_weights{22.8, 30.8, 22.0, 14.4, 9.9};
  int n_page_types = 12;
  int chrono_dim = 6;
  double chrono_strength = 1.0;
  double type_noise = 2.0;
  double page_noise = 0.6;
  double chrono_frequency = 24.0;  // highest cosine frequency, in half-periods over a document
  std::uint64_t seed = 7;

  void validate() const {
    if (n_docs < 0) throw ConfigError("n_docs must be non-negative");
    if (dim < 1) throw ConfigError("dim must be positive");
    double total = 0.0;
    for (double w : length_weights) {
      if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("length weights must be finite and non-negative");
      total += w;
    }
    if (total <= 0.0) throw ConfigError("length weights must have a positive sum");
    if (n_page_types < 1) throw ConfigError("n_page_types must be positive");
    if (chrono_dim < 1 || chrono_dim >= dim) throw ConfigError("chrono_dim must satisfy 1 <= chrono_dim < dim");
    if (!(chrono_frequency >= 0.5)) throw ConfigError("chrono_frequency must be at least 0.5");
    if (!(chrono_strength >= 0.0) || !(type_noise >= 0.0) || !(page_noise >= 0.0)) {
      throw ConfigError("strengths must be non-negative");
    }
  }
};

namespace detail {

inline constexpr int kChronoTerms = 3;

/// Orthonormal columns via modified Gram-Schmidt on Gaussian draws; returns k vectors of length d.
inline std::vector<std::vector<double>> random_orthonormal(int d, int k, Rng& rng) {
  std::vector<std::vector<double>> basis;
  while (static_cast<int>(basis.size()) < k) {
    std::vector<double> v(static_cast<std::size_t>(d));
    for (auto& x : v) x = rng.normal();
    for (const auto& b : basis) {
      double dot = 0.0;
      for (int i = 0; i < d; ++i) dot += v[i] * b[i];
      for (int i = 0; i < d; ++i) v[i] -= dot * b[i];
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm < 1e-8) continue;
    for (auto& x : v) x /= norm;
    basis.push_back(std::move(v));
  }
  return basis;
}

}  // namespace detail

/// The fixed chronology curve of a corpus: position t in [0, 1] → R^dim.
class ChronoCurve {
 public:
  ChronoCurve(const CorpusConfig& cfg, Rng rng) : strength_(cfg.chrono_strength), dim_(cfg.dim) {
    basis_ = detail::random_orthonormal(cfg.dim, cfg.chrono_dim, rng);
    terms_.resize(static_cast<std::size_t>(cfg.chrono_dim));
    for (auto& axis : terms_) {
      for (int m = 0; m < detail::kChronoTerms; ++m) {
        axis.push_back({rng.normal(), M_PI * rng.uniform(0.5, cfg.chrono_frequency), rng.uniform(0.0, 2.0 * M_PI)});
      }
    }
    // normalise to unit mean squared norm over t in [0, 1]
    constexpr int kGrid = 512;
    double acc = 0.0;
    for (int g = 0; g <= kGrid; ++g) {
      const auto c = raw(static_cast<double>(g) / kGrid);
      for (double x : c) acc += x * x;
    }
    const double rms = std::sqrt(acc / (kGrid + 1));
    scale_ = rms > 0.0 ? 1.0 / rms : 0.0;
  }

  /// Curve coordinates inside the chronology subspace (unit mean-square norm, before strength).
  [[nodiscard]] std::vector<double> coordinates(double t) const {
    auto c = raw(t);
    for (auto& x : c) x *= scale_;
    return c;
  }

  /// Chronology contribution to a page embedding.
  [[nodiscard]] Embedding embed(double t) const {
    Embedding out(static_cast<std::size_t>(dim_), 0.0);
    const auto c = coordinates(t);
    for (std::size_t k = 0; k < basis_.size(); ++k)
      for (int i = 0; i < dim_; ++i) out[static_cast<std::size_t>(i)] += strength_ * c[k] * basis_[k][static_cast<std::size_t>(i)];
    return out;
  }

 private:
  struct Term {
    double amplitude;
    double frequency;
    double phase;
  };

  [[nodiscard]] std::vector<double> raw(double t) const {
    std::vector<double> c(terms_.size(), 0.0);
    for (std::size_t k = 0; k < terms_.size(); ++k)
      for (const auto& term : terms_[k]) c[k] += term.amplitude * std::cos(term.frequency * t + term.phase);
    return c;
  }

  double strength_;
  int dim_;
  double scale_ = 1.0;
  std::vector<std::vector<double>> basis_;
  std::vector<std::vector<Term>> terms_;
};

/// Deterministic synthetic corpus; a pure function of `cfg` including its seed.
inline std::vector<Document> generate_corpus(const CorpusConfig& cfg) {
  cfg.validate();
  const Rng root(cfg.seed);
  Rng structure = root.split("structure");
  const ChronoCurve curve(cfg, root.split("chrono"));
  auto centroids = detail::random_orthonormal(cfg.dim, std::min(cfg.n_page_types, cfg.dim), structure);
  for (int extra = static_cast<int>(centroids.size()); extra < cfg.n_page_types; ++extra) {
    // more types than dimensions: fall back to random unit vectors
    std::vector<double> v(static_cast<std::size_t>(cfg.dim));
    double norm = 0.0;
    for (auto& x : v) {
      x = structure.normal();
      norm += x * x;
    }
    for (auto& x : v) x /= std::sqrt(norm);
    centroids.push_back(std::move(v));
  }

  double weight_total = 0.0;
  for (double w : cfg.length_weights) weight_total += w;
  const double noise_sd = cfg.page_noise / std::sqrt(static_cast<double>(cfg.dim));

  std::vector<Document> docs;
  docs.reserve(static_cast<std::size_t>(cfg.n_docs));
  Rng doc_stream = root.split("documents");
  for (int d = 0; d < cfg.n_docs; ++d) {
    Rng rng = doc_stream.split(static_cast<std::uint64_t>(d));
    double u = rng.uniform() * weight_total;
    std::size_t b = 0;
    while (b + 1 < cfg.length_weights.size() && u >= cfg.length_weights[b]) {
      u -= cfg.length_weights[b];
      ++b;
    }
    while (cfg.length_weights[b] == 0.0) --b;  // u landed on the upper edge
    const auto range = bucket_range(kAllBuckets[b]);
    const int n = range.min_len + static_cast<int>(rng.below(static_cast<std::uint64_t>(range.max_len - range.min_len + 1)));

    char id[32];
    std::snprintf(id, sizeof(id), "doc-%06d", d);
    Document doc{id, {}};
    doc.pages.reserve(static_cast<std::size_t>(n));
    for (int p = 0; p < n; ++p) {
      const double t = static_cast<double>(p) / static_cast<double>(n - 1);
      Embedding e = curve.embed(t);
      const auto& centroid = centroids[rng.below(static_cast<std::uint64_t>(cfg.n_page_types))];
      for (std::size_t i = 0; i < e.size(); ++i) e[i] += cfg.type_noise * centroid[i] + noise_sd * rng.normal();
      doc.pages.push_back(std::move(e));
    }
    docs.push_back(std::move(doc));
  }
  return docs;
}

/// Counts per length bucket.
inline std::array<std::size_t, 5> bucket_histogram(const std::vector<Document>& docs) {
  std::array<std::size_t, 5> h{};
  for (const auto& d : docs) ++h[bucket_index(bucket_of(d.length()))];
  return h;
}

}  // namespace pgo
