#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "pgorder/corpus/types.hpp"
#include "pgorder/csv.hpp"
#include "pgorder/metrics.hpp"
#include "pgorder/models/model.hpp"
#include "pgorder/numcore/adam.hpp"
#include "pgorder/training/curriculum.hpp"

namespace pgo {

enum class Strategy { Universal, SpecializedDirect, SpecializedCurriculum };

inline std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::Universal: return "universal";
    case Strategy::SpecializedDirect: return "direct";
    case Strategy::SpecializedCurriculum: return "curriculum";
  }
  return "?";
}

inline Strategy parse_strategy(std::string_view s) {
  for (auto v : {Strategy::Universal, Strategy::SpecializedDirect, Strategy::SpecializedCurriculum}) {
    if (s == to_string(v)) return v;
  }
  throw ConfigError("unknown training strategy '" + std::string(s) + "'");
}

struct TrainConfig {
  int epochs = 30;
  int batch_size = 16;
  double lr = 1e-3;
  double lr_final_stage = 1e-4;  // learning rate of the curriculum's reduced-rate stage
  double clip_norm = 1.0;
  Strategy strategy = Strategy::Universal;
  std::optional<LengthBucket> target_bucket;
  double weight_factor = 5.0;
  std::uint64_t seed = 1;
  bool reshuffle_each_epoch = false;
  int first_epoch = 1;  // numbering offset when resuming

  void validate() const {
    if (epochs < 1 || batch_size < 1) throw ConfigError("epochs and batch_size must be positive");
    if (!(lr > 0.0) || !(lr_final_stage > 0.0)) throw ConfigError("learning rates must be positive");
    if (weight_factor < 1.0) throw ConfigError("weight_factor must be >= 1");
    if (strategy != Strategy::Universal && !target_bucket) {
      throw ConfigError("strategy '" + to_string(strategy) + "' requires a target bucket");
    }
    if (strategy == Strategy::SpecializedCurriculum && epochs < 4) {
      throw ConfigError("curriculum training needs at least 4 epochs");
    }
  }
};

/// factor when the document's bucket is the target, otherwise 1.
inline double specialization_weight(int doc_len, LengthBucket target, double factor) {
  return bucket_of(doc_len) == target ? factor : 1.0;
}

struct EpochRecord {
  int epoch = 0;
  int stage = 1;
  double train_loss = 0.0;
  double val_tau = 0.0;
  std::array<std::optional<double>, 5> val_bucket_tau{};

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

/// Lengths actually trained on during one epoch.
struct EpochAudit {
  int epoch = 0;
  int stage = 1;
  int allowed_min = kMinPages;
  int allowed_max = kMaxPages;
  int seen_min = 0;  // 0 when no document was trained on
  int seen_max = 0;
  std::size_t documents = 0;
};

struct FitResult {
  std::vector<EpochRecord> log;
  std::vector<EpochAudit> audit;
  int best_epoch = 0;
  double best_tau = -2.0;

  [[nodiscard]] std::vector<double> val_taus() const {
    std::vector<double> v;
    for (const auto& r : log) v.push_back(r.val_tau);
    return v;
  }
};

/// Fixed validation/evaluation instances: one shuffle per document from `seed`.
inline std::vector<ShuffledInstance> make_instances(const std::vector<Document>& docs, std::uint64_t seed) {
  std::vector<ShuffledInstance> out;
  out.reserve(docs.size());
  for (const auto& d : docs) out.push_back(shuffle_instance(d, seed));
  return out;
}

template <class T>
TauSummary evaluate_model(const OrderingModel<T>& model, const std::vector<ShuffledInstance>& instances) {
  std::vector<int> lengths;
  std::vector<double> taus;
  for (const auto& inst : instances) {
    lengths.push_back(inst.length());
    taus.push_back(kendall_tau(model.predict(inst.matrix<T>()).ordering, inst.truth_rank()));
  }
  return summarize_taus(lengths, taus);
}

namespace detail {

inline std::vector<std::vector<std::size_t>> make_batches(const std::vector<Document>& docs,
                                                          const std::vector<std::size_t>& active, int batch_size,
                                                          Rng rng) {
  std::vector<std::size_t> order = active;
  rng.split("order").shuffle(order.begin(), order.end());
  std::map<int, std::vector<std::size_t>> by_length;
  for (auto i : order) by_length[docs[i].length()].push_back(i);
  std::vector<std::vector<std::size_t>> batches;
  for (auto& [len, ids] : by_length) {
    for (std::size_t s = 0; s < ids.size(); s += static_cast<std::size_t>(batch_size)) {
      const auto e = std::min(ids.size(), s + static_cast<std::size_t>(batch_size));
      batches.emplace_back(ids.begin() + static_cast<std::ptrdiff_t>(s), ids.begin() + static_cast<std::ptrdiff_t>(e));
    }
  }
  rng.split("batches").shuffle(batches.begin(), batches.end());
  return batches;
}

}  // namespace detail

/// Seeded, single-threaded training with per-epoch validation.
///
/// Batches hold documents of one length. The batch loss is the weighted sum of
/// per-document losses over batch size times the stage's mean weight, accumulated
/// by backpropagating each document separately. The model ends holding the parameters of the epoch with the best
/// overall validation tau.
template <class T>
FitResult fit(OrderingModel<T>& model, const std::vector<Document>& train, const std::vector<Document>& val,
              const TrainConfig& cfg, const std::function<void(const EpochRecord&)>& on_epoch = {}) {
  cfg.validate();
  if (train.empty()) throw ConfigError("training split is empty");
  const Rng root(cfg.seed);

  std::vector<CurriculumStage> stages;
  if (cfg.strategy == Strategy::SpecializedCurriculum) {
    stages = curriculum_schedule(*cfg.target_bucket, cfg.epochs, cfg.lr_final_stage / cfg.lr);
  } else {
    stages = {{kMinPages, kMaxPages, cfg.epochs, 1.0}};
  }

  const auto val_instances = make_instances(val, root.split("val").seed());
  auto params = model.parameter_tensors();
  nc::AdamState<T> adam;
  adam.options.learning_rate = cfg.lr;

  FitResult result;
  std::vector<nc::Array<T>> best;
  int epoch = cfg.first_epoch;
  for (std::size_t s = 0; s < stages.size(); ++s) {
    const auto& stage = stages[s];
    adam.options.learning_rate = cfg.lr * stage.lr_scale;
    std::vector<std::size_t> active;
    for (std::size_t i = 0; i < train.size(); ++i) {
      const int len = train[i].length();
      if (len >= stage.min_len && len <= stage.max_len) active.push_back(i);
    }

    for (int e = 0; e < stage.epochs; ++e, ++epoch) {
      const Rng epoch_rng = root.split("epoch").split(static_cast<std::uint64_t>(epoch));
      const std::uint64_t shuffle_seed =
          cfg.reshuffle_each_epoch ? epoch_rng.split("shuffle").seed() : root.split("train").seed();
      EpochAudit audit{epoch, static_cast<int>(s + 1), stage.min_len, stage.max_len, 0, 0, 0};
      double loss_sum = 0.0, weight_sum = 0.0;

      // Batches share one length, so normalising by the batch's own weight total would
      // cancel the weights. The stage-wide mean weight is used instead.
      auto weight_of = [&](std::size_t i) {
        return cfg.strategy == Strategy::SpecializedDirect
                   ? specialization_weight(train[i].length(), *cfg.target_bucket, cfg.weight_factor)
                   : 1.0;
      };
      double mean_weight = 0.0;
      for (auto i : active) mean_weight += weight_of(i);
      mean_weight = active.empty() ? 1.0 : mean_weight / static_cast<double>(active.size());

      for (const auto& batch : detail::make_batches(train, active, cfg.batch_size, epoch_rng)) {
        std::vector<double> weights;
        for (auto i : batch) weights.push_back(weight_of(i));
        const double total = static_cast<double>(batch.size()) * mean_weight;
        nc::zero_grads<T>(params);
        for (std::size_t k = 0; k < batch.size(); ++k) {
          const auto& doc = train[batch[k]];
          const auto inst = shuffle_instance(doc, shuffle_seed);
          const auto loss = model.loss(inst.matrix<T>(), inst.truth_rank());
          const double value = static_cast<double>(loss.item());
          if (!std::isfinite(value)) throw TrainingDiverged("non-finite loss at epoch " + std::to_string(epoch), epoch);
          loss.backward(static_cast<T>(weights[k] / total));
          loss_sum += weights[k] * value;
          weight_sum += weights[k];
          const int len = doc.length();
          audit.seen_min = audit.documents == 0 ? len : std::min(audit.seen_min, len);
          audit.seen_max = std::max(audit.seen_max, len);
          ++audit.documents;
        }
        nc::clip_grad_norm<T>(params, cfg.clip_norm);
        try {
          nc::adam_step<T>(params, adam);
        } catch (const TrainingDiverged&) {
          throw TrainingDiverged("non-finite gradient at epoch " + std::to_string(epoch), epoch);
        }
      }

      EpochRecord rec;
      rec.epoch = epoch;
      rec.stage = static_cast<int>(s + 1);
      rec.train_loss = weight_sum > 0.0 ? loss_sum / weight_sum : 0.0;
      if (!val_instances.empty()) {
        const auto summary = evaluate_model(model, val_instances);
        rec.val_tau = summary.overall;
        rec.val_bucket_tau = summary.bucket_mean;
      }
      if (best.empty() || rec.val_tau > result.best_tau) {
        result.best_tau = rec.val_tau;
        result.best_epoch = epoch;
        best = model.snapshot();
      }
      result.log.push_back(rec);
      result.audit.push_back(audit);
      if (on_epoch) on_epoch(rec);
    }
  }
  model.restore(best);
  return result;
}

// ---------------------------------------------------------------------------
// training log: epoch,stage,train_loss,val_tau,val_tau_2_5,...,val_tau_21_25

inline std::string training_log_header() {
  std::string h = "epoch,stage,train_loss,val_tau";
  for (auto b : kAllBuckets) {
    const auto r = bucket_range(b);
    h += ",val_tau_" + std::to_string(r.min_len) + "_" + std::to_string(r.max_len);
  }
  return h;
}

inline void write_training_log(const std::vector<EpochRecord>& log, std::ostream& os, bool header = true) {
  if (header) os << training_log_header() << '\n';
  for (const auto& r : log) {
    std::vector<std::string> f{std::to_string(r.epoch), std::to_string(r.stage), csv::number(r.train_loss),
                               csv::number(r.val_tau)};
    for (const auto& b : r.val_bucket_tau) f.push_back(csv::optional_number(b));
    os << csv::join(f) << '\n';
  }
}

inline std::vector<EpochRecord> read_training_log(std::istream& is) {
  std::vector<EpochRecord> log;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line_no == 1) {
      if (line != training_log_header()) throw ParseError("unexpected training log header", line_no);
      continue;
    }
    const auto f = csv::split(line);
    if (f.size() != 9) throw ParseError("expected 9 fields", line_no);
    try {
      EpochRecord r;
      r.epoch = std::stoi(f[0]);
      r.stage = std::stoi(f[1]);
      r.train_loss = csv::parse_number(f[2]);
      r.val_tau = csv::parse_number(f[3]);
      for (std::size_t b = 0; b < 5; ++b) r.val_bucket_tau[b] = csv::parse_optional(f[4 + b]);
      log.push_back(r);
    } catch (const std::exception& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return log;
}

}  // namespace pgo
