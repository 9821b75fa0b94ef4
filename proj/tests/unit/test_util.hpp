#pragma once

#include <atomic>
#include <filesystem>
#include <numeric>
#include <string>
#include <vector>

#include <unistd.h>

#include <nlohmann/json.hpp>

#include "pgorder/corpus/generator.hpp"
#include "pgorder/corpus/types.hpp"
#include "pgorder/rng.hpp"

namespace pgo::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("pgorder_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  [[nodiscard]] const std::filesystem::path& path() const { return path_; }
  [[nodiscard]] std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::vector<int> random_permutation(std::size_t n, Rng& rng) {
  std::vector<int> p(n);
  std::iota(p.begin(), p.end(), 0);
  rng.shuffle(p.begin(), p.end());
  return p;
}

/// Document with i.i.d. Gaussian pages; there is no order signal in it.
inline Document noise_document(const std::string& id, std::size_t n, std::size_t dim, Rng rng) {
  Document d{id, {}};
  for (std::size_t i = 0; i < n; ++i) {
    Embedding e(dim);
    for (auto& v : e) v = rng.normal();
    d.pages.push_back(std::move(e));
  }
  return d;
}

inline CorpusConfig small_corpus(int n_docs, int dim = 16, std::uint64_t seed = 7) {
  CorpusConfig c;
  c.n_docs = n_docs;
  c.dim = dim;
  c.seed = seed;
  return c;
}

/// Full-menu benchmark small enough to train every configuration in seconds.
inline nlohmann::json tiny_bench_json(int n_docs = 200, int epochs = 4) {
  const nlohmann::json small{{"hidden_dim", 8}, {"heads", 2}, {"layers", 1}, {"decoder_hidden", 8}, {"decoder_layers", 1}};
  nlohmann::json overrides = nlohmann::json::object();
  for (const char* id : {"bilstm_pos", "pointer_mlp", "pointer_lstm", "seq2seq_learned", "seq2seq_sinusoidal",
                         "seq2seq_none", "pairwise"})
    overrides[id] = small;
  return {{"corpus", {{"n_docs", n_docs}, {"dim", 8}, {"seed", 5}}},
          {"train", {{"epochs", epochs}, {"batch_size", 16}}},
          {"model_overrides", overrides},
          {"specialist_overrides", {{"hidden_dim", 8}, {"heads", 2}, {"layers", 1}}},
          {"timestamp", "fixed"}};
}

}  // namespace pgo::testing
