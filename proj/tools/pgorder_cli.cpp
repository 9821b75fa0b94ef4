// pgorder: corpus generation, training, benchmarking and diagnostics for page ordering models.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "pgorder/bench.hpp"
#include "pgorder/corpus/embed_client.hpp"
#include "pgorder/corpus/io.hpp"
#include "pgorder/fs.hpp"
#include "pgorder/gradcheck_suite.hpp"
#include "pgorder/models/checkpoint.hpp"
#include "pgorder/training.hpp"

namespace fs = std::filesystem;
using namespace pgo;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string models;
  std::optional<int> jobs;
  std::string corpus;
};

void log_line(const std::string& s) { std::cerr << s << '\n'; }

BenchConfig load_config(const CommonOptions& o) {
  BenchConfig cfg;
  if (!o.config_path.empty()) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(read_file(o.config_path));
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("cannot parse " + o.config_path + ": " + e.what());
    }
    cfg = bench_config_from_json(j);
  }
  if (o.seed) cfg.seed = *o.seed;
  if (!o.models.empty()) cfg.models = parse_model_list(o.models);
  if (o.jobs) {
    if (*o.jobs < 1) throw ConfigError("--jobs must be at least 1");
    cfg.jobs = *o.jobs;
  }
  if (!o.corpus.empty()) cfg.corpus_path = o.corpus;
  return cfg;
}

void echo_config(const BenchConfig& cfg, const fs::path& out) {
  write_file_atomic(out / "config.json", bench_config_json(cfg).dump(2) + "\n");
}

std::vector<Document> obtain_corpus(const BenchConfig& cfg) {
  if (!cfg.corpus_path.empty()) {
    auto docs = load_corpus(cfg.corpus_path);
    if (!docs.empty() && static_cast<int>(docs.front().dim()) != cfg.corpus.dim) {
      throw ConfigError("corpus dimension " + std::to_string(docs.front().dim()) + " does not match corpus.dim " +
                        std::to_string(cfg.corpus.dim));
    }
    return docs;
  }
  return generate_corpus(cfg.corpus);
}

std::string histogram_text(const std::vector<Document>& docs) {
  const auto hist = bucket_histogram(docs);
  std::ostringstream os;
  char buf[96];
  for (auto b : kAllBuckets) {
    const auto count = hist[bucket_index(b)];
    const double pct = docs.empty() ? 0.0 : 100.0 * static_cast<double>(count) / static_cast<double>(docs.size());
    std::snprintf(buf, sizeof(buf), "%-6s %6zu  %5.1f%%\n", bucket_name(b).c_str(), count, pct);
    os << buf;
  }
  std::snprintf(buf, sizeof(buf), "total  %6zu\n", docs.size());
  os << buf;
  return os.str();
}

// ---------------------------------------------------------------------------

int cmd_gen(const CommonOptions& o) {
  auto cfg = load_config(o);
  if (o.seed) cfg.corpus.seed = *o.seed;
  const fs::path out(o.out);
  const auto docs = generate_corpus(cfg.corpus);
  fs::create_directories(out);
  save_corpus(docs, out / "corpus.jsonl");
  echo_config(cfg, out);
  std::cout << histogram_text(docs) << "digest " << corpus_digest(docs) << '\n';
  return 0;
}

struct TrainOptions {
  std::string strategy;
  std::string bucket;
  std::optional<int> epochs;
  std::string resume;
};

int cmd_train(const CommonOptions& o, const TrainOptions& t) {
  auto cfg = load_config(o);
  if (cfg.models.size() != 1) throw ConfigError("train needs exactly one model id in --models");
  const auto id = cfg.models.front();
  if (is_heuristic(id)) throw ConfigError("'" + id + "' is a heuristic and has nothing to train");
  if (t.epochs) cfg.train.epochs = *t.epochs;

  TrainConfig tc = cfg.train;
  if (!t.strategy.empty()) tc.strategy = parse_strategy(t.strategy);
  else if (id == "specialized_direct") tc.strategy = Strategy::SpecializedDirect;
  else if (id == "specialized_curriculum") tc.strategy = Strategy::SpecializedCurriculum;
  if (!t.bucket.empty()) tc.target_bucket = parse_bucket(t.bucket);
  if (is_specialized(id) && tc.strategy == Strategy::Universal) {
    throw ConfigError("'" + id + "' needs a specialized strategy");
  }
  tc.seed = training_seed(cfg, id, tc.target_bucket ? static_cast<int>(bucket_index(*tc.target_bucket)) : -1);
  tc.validate();
  cfg.train = tc;

  const auto mc = is_specialized(id) ? bench_specialist_config(cfg, id, *tc.target_bucket) : bench_model_config(cfg, id);
  const auto split = split_corpus(obtain_corpus(cfg), cfg.split_seed);

  std::unique_ptr<OrderingModel<float>> model;
  std::vector<EpochRecord> previous;
  if (!t.resume.empty()) {
    if (tc.strategy == Strategy::SpecializedCurriculum) throw ConfigError("curriculum runs cannot be resumed");
    const fs::path dir(t.resume);
    auto loaded = load_checkpoint(dir / "model.pgor", mc.arch);
    if (nlohmann::json(loaded.model->config()) != nlohmann::json(mc)) {
      throw ConfigError("checkpoint in " + dir.string() + " was trained with a different model config");
    }
    std::istringstream is(read_file(dir / "train_log.csv"));
    previous = read_training_log(is);
    const int done = previous.empty() ? 0 : previous.back().epoch;
    if (done >= tc.epochs) throw ConfigError("run already has " + std::to_string(done) + " of " +
                                             std::to_string(tc.epochs) + " epochs");
    tc.first_epoch = done + 1;
    tc.epochs -= done;
    model = std::move(loaded.model);
    log_line("resuming " + id + " at epoch " + std::to_string(tc.first_epoch));
  } else {
    model = make_model<float>(mc);
  }

  log_line("training " + id + " (" + std::to_string(model->parameter_count()) + " params, strategy " +
           to_string(tc.strategy) + ")");
  const auto result = fit(*model, split.train, split.val, tc, [](const EpochRecord& r) {
    std::ostringstream os;
    os << "  epoch " << r.epoch << " stage " << r.stage << " loss " << r.train_loss << " val tau " << r.val_tau;
    log_line(os.str());
  });

  auto log = previous;
  log.insert(log.end(), result.log.begin(), result.log.end());
  const fs::path out(o.out);
  fs::create_directories(out);
  save_checkpoint(*model, out / "model.pgor", tc.seed);
  std::ostringstream os;
  write_training_log(log, os);
  write_file_atomic(out / "train_log.csv", os.str());
  echo_config(cfg, out);

  const auto test = make_instances(split.test, cfg.eval_seed);
  const auto summary = evaluate_model(*model, test);
  std::cout << "best epoch " << result.best_epoch << " val tau " << result.best_tau << "\ntest tau " << summary.overall
            << '\n';
  return 0;
}

struct BenchOptions {
  std::string checkpoints;
  bool no_train = false;
  std::string timestamp;
};

int cmd_bench(const CommonOptions& o, const BenchOptions& b) {
  auto cfg = load_config(o);
  if (!b.checkpoints.empty()) cfg.checkpoint_dir = b.checkpoints;
  if (b.no_train) cfg.train_missing = false;
  if (!b.timestamp.empty()) cfg.timestamp = b.timestamp;
  else if (const char* sde = std::getenv("SOURCE_DATE_EPOCH"); sde && *sde && cfg.timestamp.empty()) cfg.timestamp = sde;
  if (!cfg.checkpoint_dir.empty()) fs::create_directories(cfg.checkpoint_dir);

  const auto docs = obtain_corpus(cfg);
  const auto result = run_benchmark(cfg, docs, log_line);
  const fs::path out(o.out);
  write_bench_outputs(result, out);
  echo_config(cfg, out);
  std::cout << render_report_text(result.report);
  return 0;
}

int cmd_figures(const CommonOptions& o, const std::string& from) {
  const fs::path src(from);
  std::istringstream is(read_file(src / "report.csv"));
  const auto report = read_report_csv(is);
  std::map<std::string, std::vector<EpochRecord>> logs;
  if (fs::is_directory(src / "logs")) {
    for (const auto& entry : fs::directory_iterator(src / "logs")) {
      if (entry.path().extension() != ".csv") continue;
      std::istringstream ls(read_file(entry.path()));
      logs[entry.path().stem().string()] = read_training_log(ls);
    }
  }
  const auto paths = emit_figures(report, logs, o.out);
  for (const auto& p : {paths.fig1, paths.fig2, paths.fig3, paths.fig4}) std::cout << p.string() << '\n';
  return 0;
}

int cmd_gradcheck(const CommonOptions& o) {
  const auto cases = run_gradcheck_suite(o.seed.value_or(2024));
  bool ok = true;
  std::ostringstream csv_out;
  csv_out << "case,checked,max_rel_error,failures\n";
  for (const auto& c : cases) {
    const bool pass = c.report.passed();
    ok = ok && pass;
    std::printf("%-4s %-26s checked %5zu  max rel error %.2e\n", pass ? "ok" : "FAIL", c.name.c_str(), c.report.checked,
                c.report.max_rel_error);
    for (const auto& f : c.report.failures) {
      std::printf("       %s[%zu] analytic %.6e numeric %.6e\n", f.param.c_str(), f.index, f.analytic, f.numeric);
    }
    csv_out << csv::join({c.name, std::to_string(c.report.checked), csv::number(c.report.max_rel_error),
                          std::to_string(c.report.failures.size())})
            << '\n';
  }
  if (!o.out.empty()) write_file_atomic(fs::path(o.out) / "gradcheck.csv", csv_out.str());
  std::printf("%s\n", ok ? "all gradient checks passed" : "gradient check FAILED");
  return ok ? 0 : kExitRuntime;
}

int cmd_transfer(const CommonOptions& o) {
  const auto cfg = load_config(o);
  const auto docs = obtain_corpus(cfg);
  const auto r = transfer_experiment(cfg, docs, log_line);
  const fs::path out(o.out);
  write_file_atomic(out / "transfer.csv", transfer_csv(r));
  std::ostringstream os;
  write_training_log(r.log, os);
  write_file_atomic(out / "transfer_log.csv", os.str());
  echo_config(cfg, out);
  std::cout << "tau on 2-5 page documents   " << r.tau_in_domain << " (" << r.in_domain_docs << " docs)\n"
            << "tau on 21-25 page documents " << r.tau_transfer << " (" << r.long_docs << " docs)\n";
  return 0;
}

struct EmbedCliOptions {
  std::string input;
  std::string endpoint;
  std::size_t batch_size = 64;
};

/// Input lines look like {"doc_id": "...", "pages": ["text of page 1", ...]} in true page order.
int cmd_embed(const CommonOptions& o, const EmbedCliOptions& e) {
  const auto key = credentials_from_env();
  if (e.endpoint.empty()) throw ConfigError("--endpoint is required");
  std::vector<std::string> ids;
  std::vector<std::vector<std::string>> texts;
  std::istringstream is(read_file(e.input));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      ids.push_back(j.at("doc_id").get<std::string>());
      texts.push_back(j.at("pages").get<std::vector<std::string>>());
    } catch (const nlohmann::json::exception& ex) {
      throw ParseError(ex.what(), line_no);
    }
  }
  EmbedOptions opts;
  opts.batch_size = e.batch_size;
  const EmbeddingClient client(e.endpoint, key, opts);
  std::vector<Document> docs;
  for (std::size_t d = 0; d < ids.size(); ++d) {
    docs.push_back({ids[d], client.fetch(texts[d])});
    if (!docs.back().pages.empty() && docs.back().dim() != docs.front().dim()) {
      throw DimensionMismatch("document " + ids[d] + " has a different embedding dimension");
    }
  }
  const fs::path out(o.out);
  fs::create_directories(out);
  save_corpus(docs, out / "corpus.jsonl");
  std::cout << histogram_text(docs);
  return 0;
}

void add_common(CLI::App* sub, CommonOptions& o, bool out_required = true) {
  sub->add_option("--config", o.config_path, "JSON run configuration")->check(CLI::ExistingFile);
  sub->add_option("--seed", o.seed, "seed override");
  auto* out = sub->add_option("--out", o.out, "output directory");
  if (out_required) out->required();
  sub->add_option("--models", o.models, "'all' or comma-separated model ids");
  sub->add_option("--jobs", o.jobs, "parallel evaluation width");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Page ordering models: corpus generation, training and benchmarking"};
  app.require_subcommand(1);

  CommonOptions common;
  TrainOptions train_opts;
  BenchOptions bench_opts;
  EmbedCliOptions embed_opts;
  std::string figures_from;

  auto* gen = app.add_subcommand("gen", "generate a synthetic corpus");
  add_common(gen, common);

  auto* train = app.add_subcommand("train", "train one model configuration");
  add_common(train, common);
  train->add_option("--corpus", common.corpus, "corpus JSONL (default: generate from config)");
  train->add_option("--strategy", train_opts.strategy, "universal, direct or curriculum");
  train->add_option("--bucket", train_opts.bucket, "target length bucket, e.g. 2-5");
  train->add_option("--epochs", train_opts.epochs, "total epochs");
  train->add_option("--resume", train_opts.resume, "directory of an earlier train run to continue");

  auto* bench = app.add_subcommand("bench", "train or load every configuration and write the report");
  add_common(bench, common);
  bench->add_option("--corpus", common.corpus, "corpus JSONL (default: generate from config)");
  bench->add_option("--checkpoints", bench_opts.checkpoints, "checkpoint directory");
  bench->add_flag("--no-train", bench_opts.no_train, "fail instead of training missing models");
  bench->add_option("--timestamp", bench_opts.timestamp, "timestamp recorded in the report");

  auto* figures = app.add_subcommand("figures", "re-emit figure data from a bench output directory");
  add_common(figures, common);
  figures->add_option("--from", figures_from, "bench output directory")->required()->check(CLI::ExistingDirectory);

  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient checks");
  add_common(gradcheck, common, false);

  auto* transfer = app.add_subcommand("transfer", "train on short documents, evaluate on long ones");
  add_common(transfer, common);
  transfer->add_option("--corpus", common.corpus, "corpus JSONL (default: generate from config)");

  auto* embed = app.add_subcommand("embed", "embed page texts through the embedding service");
  add_common(embed, common);
  embed->add_option("--input", embed_opts.input, "JSONL of documents with page texts")->required()->check(CLI::ExistingFile);
  embed->add_option("--endpoint", embed_opts.endpoint, "embedding service base URL");
  embed->add_option("--batch-size", embed_opts.batch_size, "texts per request");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*gen) return cmd_gen(common);
    if (*train) return cmd_train(common, train_opts);
    if (*bench) return cmd_bench(common, bench_opts);
    if (*figures) return cmd_figures(common, figures_from);
    if (*gradcheck) return cmd_gradcheck(common);
    if (*transfer) return cmd_transfer(common);
    if (*embed) return cmd_embed(common, embed_opts);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const CredentialError& e) {
    std::cerr << "credential error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
