#pragma once

#include <algorithm>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "pgorder/bench/config.hpp"
#include "pgorder/bench/figures.hpp"
#include "pgorder/bench/report.hpp"
#include "pgorder/corpus/io.hpp"
#include "pgorder/corpus/split.hpp"
#include "pgorder/digest.hpp"
#include "pgorder/fs.hpp"
#include "pgorder/heuristics.hpp"
#include "pgorder/metrics.hpp"
#include "pgorder/models/checkpoint.hpp"
#include "pgorder/models/factory.hpp"
#include "pgorder/training/ensemble.hpp"
#include "pgorder/training/fit.hpp"

namespace pgo {

using Progress = std::function<void(const std::string&)>;

/// Runs `fn(i)` for i in [0, n) over `jobs` threads; every index writes its own slot.
inline void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  const auto width = std::min<std::size_t>(static_cast<std::size_t>(std::max(1, jobs)), n);
  if (width <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(width);
  for (std::size_t w = 0; w < width; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += width) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

/// Tau of `order_fn` on every instance, in instance order.
inline std::vector<double> evaluate_taus(const std::vector<ShuffledInstance>& instances,
                                         const std::function<Ordering(const ShuffledInstance&)>& order_fn, int jobs) {
  std::vector<double> taus(instances.size());
  parallel_for(instances.size(), jobs,
               [&](std::size_t i) { taus[i] = kendall_tau(order_fn(instances[i]), instances[i].truth_rank()); });
  return taus;
}

inline std::string corpus_digest(const std::vector<Document>& docs) {
  std::ostringstream os;
  write_corpus(docs, os);
  return to_hex(sha256(os.str()));
}

// ---------------------------------------------------------------------------
// model presets

inline bool is_heuristic(std::string_view id) { return id == "random" || id == "greedy_nn" || id == "tsp_nn"; }
inline bool is_specialized(std::string_view id) { return id == "specialized_direct" || id == "specialized_curriculum"; }

inline std::uint64_t model_seed(const BenchConfig& cfg, const std::string& id, int part = -1) {
  auto r = Rng(cfg.seed).split("model").split(id);
  return part < 0 ? r.seed() : r.split(static_cast<std::uint64_t>(part)).seed();
}

inline std::uint64_t training_seed(const BenchConfig& cfg, const std::string& id, int part = -1) {
  auto r = Rng(cfg.seed).split("train").split(id);
  return part < 0 ? r.seed() : r.split(static_cast<std::uint64_t>(part)).seed();
}

/// Desk preset for a single-model menu entry, with the configured overrides applied.
inline ModelConfig bench_model_config(const BenchConfig& cfg, const std::string& id) {
  ModelConfig c;
  const int dim = cfg.corpus.dim;
  const auto seed = model_seed(cfg, id);
  if (id == "bilstm_pos") c = default_model_config(Arch::BilstmPos, dim, seed);
  else if (id == "pointer_mlp") c = default_model_config(Arch::PointerMlp, dim, seed);
  else if (id == "pointer_lstm") c = default_model_config(Arch::PointerLstm, dim, seed);
  else if (id == "pairwise") c = default_model_config(Arch::PairwiseRank, dim, seed);
  else if (id.rfind("seq2seq_", 0) == 0) {
    c = default_model_config(Arch::Seq2Seq, dim, seed);
    c.pe_variant = parse_pe(id.substr(8));
  } else {
    throw ConfigError("'" + id + "' is not a single-model configuration");
  }
  if (auto it = cfg.model_overrides.find(id); it != cfg.model_overrides.end()) c = model_config_from_json(it->second, c);
  c.validate();
  return c;
}

inline ModelConfig bench_specialist_config(const BenchConfig& cfg, const std::string& id, LengthBucket b) {
  auto c = specialist_config(b, cfg.corpus.dim, model_seed(cfg, id, static_cast<int>(bucket_index(b))));
  c = model_config_from_json(cfg.specialist_overrides, c);
  if (auto it = cfg.model_overrides.find(id); it != cfg.model_overrides.end()) c = model_config_from_json(it->second, c);
  c.validate();
  return c;
}

inline TrainConfig bench_train_config(const BenchConfig& cfg, const std::string& id, std::optional<LengthBucket> b) {
  TrainConfig t = cfg.train;
  t.target_bucket = b;
  t.strategy = id == "specialized_direct"       ? Strategy::SpecializedDirect
               : id == "specialized_curriculum" ? Strategy::SpecializedCurriculum
                                                : Strategy::Universal;
  t.seed = training_seed(cfg, id, b ? static_cast<int>(bucket_index(*b)) : -1);
  t.validate();
  return t;
}

// ---------------------------------------------------------------------------
// experiment results

struct StabilityRow {
  std::string variant;
  StabilityStats stats;
  std::optional<double> paper_sigma;
};

struct LocalityRow {
  std::string source;  // which encoder the attention came from
  LocalityStats short_docs;
  LocalityStats long_docs;
  [[nodiscard]] double ratio() const {
    return short_docs.avg_distance > 0.0 ? long_docs.avg_distance / short_docs.avg_distance : 0.0;
  }
};

struct TransferResult {
  double tau_in_domain = 0.0;
  double tau_transfer = 0.0;
  std::size_t in_domain_docs = 0;
  std::size_t long_docs = 0;
  std::vector<EpochRecord> log;
};

struct BenchResult {
  EvalReport report;
  std::map<std::string, std::vector<EpochRecord>> logs;  // id (or id.bucket for specialists) → epochs
  std::vector<StabilityRow> stability;
  std::vector<LocalityRow> locality;
};

// ---------------------------------------------------------------------------

namespace detail {

inline std::filesystem::path checkpoint_path(const BenchConfig& cfg, const std::string& key) {
  return std::filesystem::path(cfg.checkpoint_dir) / (key + ".pgor");
}

inline std::filesystem::path log_path(const BenchConfig& cfg, const std::string& key) {
  return std::filesystem::path(cfg.checkpoint_dir) / (key + ".log.csv");
}

/// Loads the checkpoint for `key` when present, otherwise trains (if allowed) and saves it.
inline std::shared_ptr<OrderingModel<float>> obtain_model(const BenchConfig& cfg, const std::string& key,
                                                          const ModelConfig& mc, const TrainConfig& tc,
                                                          const CorpusSplit& split,
                                                          std::map<std::string, std::vector<EpochRecord>>& logs,
                                                          const Progress& progress) {
  if (!cfg.checkpoint_dir.empty() && std::filesystem::exists(checkpoint_path(cfg, key))) {
    auto loaded = load_checkpoint(checkpoint_path(cfg, key), mc.arch);
    if (nlohmann::json(loaded.model->config()) != nlohmann::json(mc)) {
      throw ConfigError("checkpoint " + checkpoint_path(cfg, key).string() + " was trained with a different config");
    }
    if (std::filesystem::exists(log_path(cfg, key))) {
      std::istringstream is(read_file(log_path(cfg, key)));
      logs[key] = read_training_log(is);
    }
    if (progress) progress("loaded " + key);
    return std::shared_ptr<OrderingModel<float>>(std::move(loaded.model));
  }
  if (!cfg.train_missing) {
    throw ConfigError("no checkpoint for '" + key + "' and training is disabled" +
                      (cfg.checkpoint_dir.empty() ? std::string(" (no checkpoint_dir)") : ""));
  }
  std::shared_ptr<OrderingModel<float>> model = make_model<float>(mc);
  if (progress) progress("training " + key + " (" + std::to_string(model->parameter_count()) + " params)");
  auto fitted = fit(*model, split.train, split.val, tc, [&](const EpochRecord& r) {
    if (progress) {
      std::ostringstream os;
      os << "  " << key << " epoch " << r.epoch << " loss " << r.train_loss << " val tau " << r.val_tau;
      progress(os.str());
    }
  });
  logs[key] = fitted.log;
  if (!cfg.checkpoint_dir.empty()) {
    save_checkpoint(*model, checkpoint_path(cfg, key), tc.seed);
    std::ostringstream os;
    write_training_log(fitted.log, os);
    write_file_atomic(log_path(cfg, key), os.str());
  }
  return model;
}

inline ReportRow make_row(const std::string& id, const std::vector<ShuffledInstance>& test,
                          const std::vector<double>& taus, std::size_t params) {
  std::vector<int> lengths;
  for (const auto& inst : test) lengths.push_back(inst.length());
  const auto s = summarize_taus(lengths, taus);
  ReportRow row;
  row.id = id;
  row.tau = s.bucket_mean;
  row.overall = s.overall;
  row.params = params;
  row.docs = s.bucket_count;
  annotate_row(row);
  return row;
}

template <class Model>
LocalityStats locality_on(const Model& model, const std::vector<ShuffledInstance>& instances, int window = 2) {
  std::vector<nc::Array<float>> stack;
  for (const auto& inst : instances) {
    for (const auto& layer : model.predict(inst.matrix<float>()).attention) {
      stack.push_back(attention_in_true_order(layer, inst.truth_rank()));
    }
  }
  return attention_locality(stack, window);
}

inline std::vector<ShuffledInstance> in_bucket(const std::vector<ShuffledInstance>& xs, LengthBucket b) {
  std::vector<ShuffledInstance> out;
  for (const auto& x : xs) {
    if (bucket_of(x.length()) == b) out.push_back(x);
  }
  return out;
}

}  // namespace detail

/// Trains (or loads) and evaluates every configured model on one fixed set of
/// shuffled test instances, then derives the stability and locality analyses
/// from whatever configurations were part of the run.
inline BenchResult run_benchmark(const BenchConfig& cfg, const std::vector<Document>& docs,
                                 const Progress& progress = {}) {
  const auto ids = cfg.models.empty() ? all_model_ids() : cfg.models;
  const auto split = split_corpus(docs, cfg.split_seed);
  const auto test = make_instances(split.test, cfg.eval_seed);

  BenchResult result;
  auto& meta = result.report.meta;
  meta.corpus_digest = corpus_digest(docs);
  meta.corpus_seed = cfg.corpus.seed;
  meta.split_seed = cfg.split_seed;
  meta.eval_seed = cfg.eval_seed;
  meta.train_seed = cfg.seed;
  meta.epochs = cfg.train.epochs;
  meta.timestamp = cfg.timestamp;

  const Rng heuristic_rng = Rng(cfg.eval_seed).split("heuristics");
  std::map<std::string, std::shared_ptr<OrderingModel<float>>> singles;
  std::map<std::string, SpecialistEnsemble<float>> ensembles;

  for (const auto& id : ids) {
    std::vector<double> taus;
    std::size_t params = 0;
    if (id == "random") {
      const auto r = heuristic_rng.split("random");
      taus = evaluate_taus(test, [&](const ShuffledInstance& x) {
        return order_random(static_cast<std::size_t>(x.length()), r.split(x.doc_id()));
      }, cfg.jobs);
    } else if (id == "greedy_nn") {
      const auto r = heuristic_rng.split("greedy");
      taus = evaluate_taus(test, [&](const ShuffledInstance& x) { return order_greedy_nn(x.pages(), r.split(x.doc_id())); },
                           cfg.jobs);
    } else if (id == "tsp_nn") {
      taus = evaluate_taus(test, [](const ShuffledInstance& x) { return order_tsp_nn(x.pages()); }, cfg.jobs);
    } else if (is_specialized(id)) {
      SpecialistEnsemble<float> ens;
      for (auto b : kAllBuckets) {
        const auto key = id + "." + bucket_name(b);
        ens.models[bucket_index(b)] = detail::obtain_model(cfg, key, bench_specialist_config(cfg, id, b),
                                                           bench_train_config(cfg, id, b), split, result.logs, progress);
      }
      ens.validate();
      taus = evaluate_taus(test, [&](const ShuffledInstance& x) {
        return route(ens, x.length()).predict(x.matrix<float>()).ordering;
      }, cfg.jobs);
      params = ens.parameter_count();
      ensembles[id] = std::move(ens);
    } else {
      auto model = detail::obtain_model(cfg, id, bench_model_config(cfg, id), bench_train_config(cfg, id, std::nullopt),
                                        split, result.logs, progress);
      taus = evaluate_taus(test, [&](const ShuffledInstance& x) { return model->predict(x.matrix<float>()).ordering; },
                           cfg.jobs);
      params = model->parameter_count();
      singles[id] = model;
    }
    result.report.rows.push_back(detail::make_row(id, test, taus, params));
    if (progress) {
      std::ostringstream os;
      os << "evaluated " << id << ": overall tau " << result.report.rows.back().overall;
      progress(os.str());
    }
  }

  for (const char* v : kPeVariantNames) {
    const auto it = result.logs.find(std::string("seq2seq_") + v);
    if (it == result.logs.end() || it->second.size() < 2) continue;
    std::vector<double> series;
    for (const auto& r : it->second) series.push_back(r.val_tau);
    result.stability.push_back({v, stability_stats(series), paper::sigma_for(v)});
  }

  const auto short_test = detail::in_bucket(test, LengthBucket::B2_5);
  const auto long_test = detail::in_bucket(test, LengthBucket::B21_25);
  if (!short_test.empty() && !long_test.empty()) {
    if (auto it = ensembles.find("specialized_direct"); it != ensembles.end()) {
      const auto& m = it->second.models;
      result.locality.push_back({"specialized_direct pairwise encoder",
                                 detail::locality_on(*m[bucket_index(LengthBucket::B2_5)], short_test),
                                 detail::locality_on(*m[bucket_index(LengthBucket::B21_25)], long_test)});
    }
    if (auto it = singles.find("pairwise"); it != singles.end()) {
      result.locality.push_back({"pairwise encoder", detail::locality_on(*it->second, short_test),
                                 detail::locality_on(*it->second, long_test)});
    }
    if (auto it = singles.find("seq2seq_learned"); it != singles.end()) {
      result.locality.push_back({"seq2seq_learned encoder", detail::locality_on(*it->second, short_test),
                                 detail::locality_on(*it->second, long_test)});
    }
  }
  return result;
}

/// Trains the universal pairwise preset on 2–5 page documents only and
/// evaluates it on 2–5 and 21–25 page test documents.
inline TransferResult transfer_experiment(const BenchConfig& cfg, const std::vector<Document>& docs,
                                          const Progress& progress = {}) {
  const auto split = split_corpus(docs, cfg.split_seed);
  auto short_only = [](const std::vector<Document>& xs) {
    std::vector<Document> out;
    for (const auto& d : xs) {
      if (bucket_of(d.length()) == LengthBucket::B2_5) out.push_back(d);
    }
    return out;
  };
  const auto train = short_only(split.train);
  const auto val = short_only(split.val);
  if (train.empty()) throw ConfigError("transfer experiment: no 2-5 page training documents");
  const auto test = make_instances(split.test, cfg.eval_seed);
  const auto in_test = detail::in_bucket(test, LengthBucket::B2_5);
  const auto long_test = detail::in_bucket(test, LengthBucket::B21_25);
  if (in_test.empty() || long_test.empty()) throw ConfigError("transfer experiment needs 2-5 and 21-25 page test documents");

  auto mc = bench_model_config(cfg, "pairwise");
  mc.seed = model_seed(cfg, "transfer");
  auto tc = bench_train_config(cfg, "pairwise", std::nullopt);
  tc.seed = training_seed(cfg, "transfer");
  auto model = make_model<float>(mc);
  if (progress) progress("training short-only pairwise model on " + std::to_string(train.size()) + " documents");
  TransferResult r;
  r.log = fit(*model, train, val, tc, [&](const EpochRecord& e) {
            if (progress) {
              std::ostringstream os;
              os << "  epoch " << e.epoch << " loss " << e.train_loss << " val tau " << e.val_tau;
              progress(os.str());
            }
          }).log;
  auto mean_of = [&](const std::vector<ShuffledInstance>& xs) {
    const auto taus = evaluate_taus(xs, [&](const ShuffledInstance& x) { return model->predict(x.matrix<float>()).ordering; },
                                    cfg.jobs);
    double s = 0.0;
    for (double t : taus) s += t;
    return s / static_cast<double>(taus.size());
  };
  r.tau_in_domain = mean_of(in_test);
  r.tau_transfer = mean_of(long_test);
  r.in_domain_docs = in_test.size();
  r.long_docs = long_test.size();
  return r;
}

// ---------------------------------------------------------------------------
// output files

inline std::string stability_csv(const std::vector<StabilityRow>& rows) {
  std::ostringstream os;
  os << "variant,sigma,min_tau,negative_epochs,worse_than_random,paper_sigma\n";
  for (const auto& r : rows) {
    os << csv::join({r.variant, csv::number(r.stats.sigma), csv::number(r.stats.min_tau),
                     std::to_string(r.stats.negative_epochs), r.stats.worse_than_random() ? "1" : "0",
                     csv::optional_number(r.paper_sigma)})
       << '\n';
  }
  return os.str();
}

inline std::string locality_csv(const std::vector<LocalityRow>& rows) {
  std::ostringstream os;
  os << "source,local_fraction_short,avg_dist_short,local_fraction_long,avg_dist_long,ratio,"
        "paper_local_fraction_short,paper_avg_dist_short,paper_local_fraction_long,paper_avg_dist_long,paper_ratio\n";
  for (const auto& r : rows) {
    os << csv::join({r.source, csv::number(r.short_docs.local_fraction), csv::number(r.short_docs.avg_distance),
                     csv::number(r.long_docs.local_fraction), csv::number(r.long_docs.avg_distance),
                     csv::number(r.ratio()), csv::number(paper::kLocalShortFraction),
                     csv::number(paper::kLocalShortDistance), csv::number(paper::kLocalLongFraction),
                     csv::number(paper::kLocalLongDistance), csv::number(paper::kLocalDistanceRatio)})
       << '\n';
  }
  return os.str();
}

inline std::string transfer_csv(const TransferResult& r) {
  std::ostringstream os;
  os << "tau_in_domain,tau_transfer,ratio,in_domain_docs,long_docs,paper_tau_in_domain,paper_tau_transfer\n"
     << csv::join({csv::number(r.tau_in_domain), csv::number(r.tau_transfer),
                   csv::number(r.tau_in_domain != 0.0 ? r.tau_transfer / r.tau_in_domain : 0.0),
                   std::to_string(r.in_domain_docs), std::to_string(r.long_docs),
                   csv::number(paper::kTransferInDomain), csv::number(paper::kTransferLong)})
     << '\n';
  return os.str();
}

/// report.csv, report.txt, the four figure files, stability.csv, locality.csv and per-model logs.
inline void write_bench_outputs(const BenchResult& r, const std::filesystem::path& out_dir) {
  write_file_atomic(out_dir / "report.csv", report_csv(r.report));
  write_file_atomic(out_dir / "report.txt", render_report_text(r.report));
  emit_figures(r.report, r.logs, out_dir);
  write_file_atomic(out_dir / "stability.csv", stability_csv(r.stability));
  write_file_atomic(out_dir / "locality.csv", locality_csv(r.locality));
  for (const auto& [key, log] : r.logs) {
    std::ostringstream os;
    write_training_log(log, os);
    write_file_atomic(out_dir / "logs" / (key + ".csv"), os.str());
  }
}

}  // namespace pgo
