#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pgorder/bench/paper_reference.hpp"
#include "pgorder/corpus/generator.hpp"
#include "pgorder/errors.hpp"
#include "pgorder/models/config.hpp"
#include "pgorder/training/fit.hpp"

namespace pgo {

/// Everything that determines a benchmark run.
struct BenchConfig {
  CorpusConfig corpus;
  std::uint64_t split_seed = 11;
  std::uint64_t eval_seed = 99;   // fixes the one test shuffle per document shared by every model
  std::uint64_t seed = 1;         // model initialisation and training streams
  TrainConfig train;              // strategy and target bucket are set per configuration
  std::vector<std::string> models;  // menu ids; empty means the full menu
  std::map<std::string, nlohmann::json> model_overrides;  // id → ModelConfig keys
  nlohmann::json specialist_overrides = nlohmann::json::object();
  std::string corpus_path;          // empty: generate from `corpus`
  std::string checkpoint_dir;       // empty: keep models in memory only
  bool train_missing = true;        // train when no checkpoint exists
  int jobs = 1;
  std::string timestamp;
};

/// Menu ids in report order.
inline std::vector<std::string> all_model_ids() {
  std::vector<std::string> ids;
  for (const auto& r : paper::kTable) ids.emplace_back(r.id);
  return ids;
}

/// Parses "all" or a comma-separated id list, returned in menu order.
inline std::vector<std::string> parse_model_list(const std::string& list) {
  const auto menu = all_model_ids();
  if (list.empty() || list == "all") return menu;
  std::set<std::string> wanted;
  std::size_t start = 0;
  while (start <= list.size()) {
    const auto comma = list.find(',', start);
    const auto item = list.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    if (!item.empty()) {
      if (!paper::find_row(item)) throw ConfigError("unknown model '" + item + "'");
      wanted.insert(item);
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (wanted.empty()) throw ConfigError("empty model list");
  std::vector<std::string> out;
  for (const auto& id : menu) {
    if (wanted.count(id)) out.push_back(id);
  }
  return out;
}

namespace detail {

template <class F>
void for_each_key(const nlohmann::json& j, const char* what, F&& handle) {
  if (!j.is_object()) throw ConfigError(std::string(what) + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    try {
      if (!handle(key, value)) throw ConfigError(std::string("unknown ") + what + " key '" + key + "'");
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("bad value for ") + what + " key '" + key + "': " + e.what());
    }
  }
}

}  // namespace detail

inline nlohmann::json corpus_config_json(const CorpusConfig& c) {
  return {{"n_docs", c.n_docs},
          {"dim", c.dim},
          {"length_weights", c.length_weights},
          {"n_page_types", c.n_page_types},
          {"chrono_dim", c.chrono_dim},
          {"chrono_strength", c.chrono_strength},
          {"chrono_frequency", c.chrono_frequency},
          {"type_noise", c.type_noise},
          {"page_noise", c.page_noise},
          {"seed", c.seed}};
}

inline CorpusConfig corpus_config_from_json(const nlohmann::json& j, CorpusConfig c = {}) {
  detail::for_each_key(j, "corpus", [&](const std::string& k, const nlohmann::json& v) {
    if (k == "n_docs") c.n_docs = v.get<int>();
    else if (k == "dim") c.dim = v.get<int>();
    else if (k == "length_weights") c.length_weights = v.get<std::array<double, 5>>();
    else if (k == "n_page_types") c.n_page_types = v.get<int>();
    else if (k == "chrono_dim") c.chrono_dim = v.get<int>();
    else if (k == "chrono_strength") c.chrono_strength = v.get<double>();
    else if (k == "chrono_frequency") c.chrono_frequency = v.get<double>();
    else if (k == "type_noise") c.type_noise = v.get<double>();
    else if (k == "page_noise") c.page_noise = v.get<double>();
    else if (k == "seed") c.seed = v.get<std::uint64_t>();
    else return false;
    return true;
  });
  c.validate();
  return c;
}

inline nlohmann::json train_config_json(const TrainConfig& t) {
  nlohmann::json j{{"epochs", t.epochs},
                   {"batch_size", t.batch_size},
                   {"lr", t.lr},
                   {"lr_final_stage", t.lr_final_stage},
                   {"clip_norm", t.clip_norm},
                   {"strategy", to_string(t.strategy)},
                   {"weight_factor", t.weight_factor},
                   {"seed", t.seed},
                   {"reshuffle_each_epoch", t.reshuffle_each_epoch}};
  j["target_bucket"] = t.target_bucket ? nlohmann::json(bucket_name(*t.target_bucket)) : nlohmann::json(nullptr);
  return j;
}

/// Validation is left to the caller: a bench config carries no strategy of its own.
inline TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig t = {}) {
  detail::for_each_key(j, "train", [&](const std::string& k, const nlohmann::json& v) {
    if (k == "epochs") t.epochs = v.get<int>();
    else if (k == "batch_size") t.batch_size = v.get<int>();
    else if (k == "lr") t.lr = v.get<double>();
    else if (k == "lr_final_stage") t.lr_final_stage = v.get<double>();
    else if (k == "clip_norm") t.clip_norm = v.get<double>();
    else if (k == "strategy") t.strategy = parse_strategy(v.get<std::string>());
    else if (k == "weight_factor") t.weight_factor = v.get<double>();
    else if (k == "seed") t.seed = v.get<std::uint64_t>();
    else if (k == "reshuffle_each_epoch") t.reshuffle_each_epoch = v.get<bool>();
    else if (k == "target_bucket") {
      if (v.is_null()) t.target_bucket.reset();
      else t.target_bucket = parse_bucket(v.get<std::string>());
    } else return false;
    return true;
  });
  return t;
}

inline nlohmann::json bench_config_json(const BenchConfig& b) {
  nlohmann::json overrides = nlohmann::json::object();
  for (const auto& [id, o] : b.model_overrides) overrides[id] = o;
  return {{"corpus", corpus_config_json(b.corpus)},
          {"split_seed", b.split_seed},
          {"eval_seed", b.eval_seed},
          {"seed", b.seed},
          {"train", train_config_json(b.train)},
          {"models", b.models.empty() ? all_model_ids() : b.models},
          {"model_overrides", overrides},
          {"specialist_overrides", b.specialist_overrides},
          {"corpus_path", b.corpus_path},
          {"checkpoint_dir", b.checkpoint_dir},
          {"train_missing", b.train_missing},
          {"jobs", b.jobs},
          {"timestamp", b.timestamp}};
}

inline BenchConfig bench_config_from_json(const nlohmann::json& j, BenchConfig b = {}) {
  detail::for_each_key(j, "config", [&](const std::string& k, const nlohmann::json& v) {
    if (k == "corpus") b.corpus = corpus_config_from_json(v, b.corpus);
    else if (k == "split_seed") b.split_seed = v.get<std::uint64_t>();
    else if (k == "eval_seed") b.eval_seed = v.get<std::uint64_t>();
    else if (k == "seed") b.seed = v.get<std::uint64_t>();
    else if (k == "train") b.train = train_config_from_json(v, b.train);
    else if (k == "models") {
      std::string joined;
      for (const auto& m : v.get<std::vector<std::string>>()) joined += (joined.empty() ? "" : ",") + m;
      b.models = parse_model_list(joined);
    } else if (k == "model_overrides") {
      detail::for_each_key(v, "model_overrides", [&](const std::string& id, const nlohmann::json& o) {
        if (!paper::find_row(id)) return false;
        b.model_overrides[id] = o;
        return true;
      });
    } else if (k == "specialist_overrides") {
      if (!v.is_object()) throw ConfigError("specialist_overrides must be a JSON object");
      b.specialist_overrides = v;
    } else if (k == "corpus_path") b.corpus_path = v.get<std::string>();
    else if (k == "checkpoint_dir") b.checkpoint_dir = v.get<std::string>();
    else if (k == "train_missing") b.train_missing = v.get<bool>();
    else if (k == "jobs") b.jobs = v.get<int>();
    else if (k == "timestamp") b.timestamp = v.get<std::string>();
    else return false;
    return true;
  });
  if (b.jobs < 1) throw ConfigError("jobs must be at least 1");
  return b;
}

}  // namespace pgo
