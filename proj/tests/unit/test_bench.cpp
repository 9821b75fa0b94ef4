#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "pgorder/bench.hpp"
#include "pgorder/corpus/generator.hpp"
#include "test_util.hpp"

using namespace pgo;
using pgo::testing::TempDir;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

EvalReport sample_report() {
  EvalReport r;
  r.meta = {"abc123", 7, 11, 99, 1, 30, "2026-01-01T00:00:00Z"};
  ReportRow a;
  a.id = "pairwise";
  a.tau = {0.9, 0.5, std::nullopt, -0.125, 0.0};
  a.overall = 0.55;
  a.params = 1234;
  a.docs = {10, 8, 0, 3, 2};
  annotate_row(a);
  ReportRow b;
  b.id = "seq2seq_learned";
  b.tau = {0.8, 0.6, 0.3, 0.1, 0.05};
  b.overall = 0.5;
  b.docs = {10, 8, 6, 3, 2};
  annotate_row(b);
  ReportRow c = b;
  c.id = "seq2seq_none";
  c.tau = {0.4, 0.9, 0.3, 0.2, 0.01};
  annotate_row(c);
  r.rows = {a, b, c};
  return r;
}

struct TinyBench {
  BenchConfig cfg;
  std::vector<Document> docs;
  BenchResult result;
};

const TinyBench& tiny_bench() {
  static const TinyBench tb = [] {
    TinyBench t;
    t.cfg = bench_config_from_json(pgo::testing::tiny_bench_json());
    t.docs = generate_corpus(t.cfg.corpus);
    t.result = run_benchmark(t.cfg, t.docs);
    return t;
  }();
  return tb;
}

}  // namespace

// ---------------------------------------------------------------------------
// configuration

TEST(BenchConfig, JsonRoundTrip) {
  auto cfg = bench_config_from_json(pgo::testing::tiny_bench_json());
  cfg.models = {"random", "pairwise"};
  cfg.jobs = 3;
  const auto j = bench_config_json(cfg);
  EXPECT_EQ(bench_config_json(bench_config_from_json(j)), j);
}

TEST(BenchConfig, UnknownKeysAreRejected) {
  EXPECT_THROW(bench_config_from_json({{"epochz", 3}}), ConfigError);
  EXPECT_THROW(bench_config_from_json({{"train", {{"learning_rate", 1}}}}), ConfigError);
  EXPECT_THROW(bench_config_from_json({{"model_overrides", {{"transformer", {}}}}}), ConfigError);
  EXPECT_THROW(bench_config_from_json({{"jobs", 0}}), ConfigError);
}

TEST(BenchConfig, ModelListParsing) {
  EXPECT_EQ(parse_model_list("all").size(), 12u);
  EXPECT_EQ(parse_model_list("pairwise,random"), (std::vector<std::string>{"random", "pairwise"}));
  EXPECT_THROW(parse_model_list("pairwise,gpt"), ConfigError);
}

TEST(BenchConfig, SeedsDifferPerConfiguration) {
  BenchConfig cfg;
  EXPECT_NE(model_seed(cfg, "pairwise"), model_seed(cfg, "pointer_mlp"));
  EXPECT_NE(training_seed(cfg, "specialized_direct", 0), training_seed(cfg, "specialized_direct", 1));
  EXPECT_EQ(training_seed(cfg, "pairwise"), training_seed(cfg, "pairwise"));
}

TEST(BenchConfig, StrategyFollowsMenuId) {
  const BenchConfig cfg;
  EXPECT_EQ(bench_train_config(cfg, "pairwise", std::nullopt).strategy, Strategy::Universal);
  const auto d = bench_train_config(cfg, "specialized_direct", LengthBucket::B6_10);
  EXPECT_EQ(d.strategy, Strategy::SpecializedDirect);
  EXPECT_EQ(d.target_bucket, LengthBucket::B6_10);
  EXPECT_EQ(bench_model_config(cfg, "seq2seq_none").pe_variant, PeVariant::None);
  EXPECT_THROW(bench_model_config(cfg, "random"), ConfigError);
}

// ---------------------------------------------------------------------------
// report and figure files

TEST(Report, CsvRoundTrip) {
  const auto r = sample_report();
  std::stringstream ss(report_csv(r));
  EXPECT_EQ(read_report_csv(ss), r);
}

TEST(Report, AnnotationCarriesPublishedNumbers) {
  const auto r = sample_report();
  EXPECT_EQ(r.rows[0].model, "Pairwise Ranking");
  EXPECT_EQ(r.rows[0].paper_tau[0], 0.922);
  EXPECT_EQ(r.rows[0].paper_params, "531M");
}

TEST(Report, TextRenderingShowsEmptyBuckets) {
  const auto text = render_report_text(sample_report());
  EXPECT_NE(text.find("Pairwise Ranking"), std::string::npos);
  EXPECT_NE(text.find(" - "), std::string::npos);
}

TEST(Report, MalformedCsvFails) {
  std::stringstream ss("id,model\nx\n");
  EXPECT_THROW(read_report_csv(ss), std::exception);
}

TEST(Figures, ShortVersusLongFlagsBelowDiagonal) {
  const auto pts = short_long_points(sample_report());
  ASSERT_EQ(pts.size(), 3u);
  EXPECT_EQ(pts[0].below_diagonal, true);   // 0.0 < 0.9
  EXPECT_EQ(pts[2].below_diagonal, true);   // 0.01 < 0.4
  std::stringstream ss(fig2_csv(sample_report()));
  EXPECT_EQ(read_fig2(ss), pts);
}

TEST(Figures, AblationIsRelativeToLearned) {
  const auto rows = ablation_rows(sample_report());
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].variant, "learned");
  for (const auto& v : rows[0].relative) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(rows[0].relative_overall, 0.0);
  EXPECT_DOUBLE_EQ(*rows[1].relative[0], -0.5);
  EXPECT_DOUBLE_EQ(*rows[1].relative[1], 0.5);
  std::stringstream ss(fig3_csv(sample_report()));
  EXPECT_EQ(read_fig3(ss), rows);
}

TEST(Figures, GroupedBarsRoundTrip) {
  std::stringstream ss(fig1_csv(sample_report()));
  const auto rows = read_fig1(ss);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].id, "pairwise");
  EXPECT_EQ(rows[0].tau, sample_report().rows[0].tau);
  EXPECT_EQ(rows[0].paper_tau, sample_report().rows[0].paper_tau);
}

TEST(Figures, TrainingDynamicsAlignsEpochs) {
  std::map<std::string, std::vector<EpochRecord>> logs;
  logs["seq2seq_learned"] = {{1, 1, 0.5, 0.1, {}}, {2, 1, 0.4, 0.2, {}}};
  logs["seq2seq_none"] = {{2, 1, 0.5, -0.3, {}}};
  logs["pairwise"] = {{1, 1, 0.5, 0.9, {}}};
  const auto d = training_dynamics(logs);
  EXPECT_EQ(d.epochs, (std::vector<int>{1, 2}));
  EXPECT_EQ(d.series.size(), 2u);
  EXPECT_EQ(d.series.at("none")[0], std::nullopt);
  EXPECT_EQ(d.series.at("none")[1], -0.3);
  std::stringstream ss(fig4_csv(d));
  EXPECT_EQ(read_fig4(ss), d);
}

TEST(Figures, WrongHeaderIsParseError) {
  std::stringstream ss("epoch,a,b\n1,2,3\n");
  EXPECT_THROW(read_fig4(ss), ParseError);
}

// ---------------------------------------------------------------------------
// end to end

TEST(Bench, FullMenuProducesTwelveRows) {
  const auto& r = tiny_bench().result.report;
  ASSERT_EQ(r.rows.size(), 12u);
  EXPECT_EQ(r.rows.front().id, "random");
  EXPECT_EQ(r.rows.back().id, "specialized_curriculum");
  for (const auto& row : r.rows) {
    EXPECT_GE(row.overall, -1.0);
    EXPECT_LE(row.overall, 1.0);
    if (is_heuristic(row.id)) EXPECT_EQ(row.params, 0u);
    else EXPECT_GT(row.params, 0u);
  }
  EXPECT_EQ(r.meta.corpus_digest, corpus_digest(tiny_bench().docs));
  EXPECT_EQ(r.meta.timestamp, "fixed");
}

TEST(Bench, SpecialistsLogPerBucket) {
  const auto& logs = tiny_bench().result.logs;
  for (auto b : kAllBuckets) {
    EXPECT_TRUE(logs.count("specialized_direct." + bucket_name(b)));
    EXPECT_EQ(logs.at("specialized_curriculum." + bucket_name(b)).size(), 4u);
  }
  EXPECT_EQ(logs.at("pairwise").size(), 4u);
}

TEST(Bench, AnalysesArePresent) {
  const auto& res = tiny_bench().result;
  EXPECT_EQ(res.stability.size(), 3u);
  EXPECT_EQ(res.locality.size(), 3u);
  for (const auto& l : res.locality) {
    EXPECT_GE(l.short_docs.local_fraction, 0.0);
    EXPECT_LE(l.short_docs.local_fraction, 1.0);
  }
}

TEST(Bench, RerunIsByteIdentical) {
  const auto& tb = tiny_bench();
  TempDir a, b;
  write_bench_outputs(tb.result, a.path());
  write_bench_outputs(run_benchmark(tb.cfg, tb.docs), b.path());
  for (const char* f : {"report.csv", "report.txt", kFig1File, kFig2File, kFig3File, kFig4File, "stability.csv",
                        "locality.csv", "logs/pairwise.csv"}) {
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
    EXPECT_FALSE(slurp(a / f).empty()) << f;
  }
}

TEST(Bench, ParallelEvaluationMatchesSerial) {
  auto cfg = tiny_bench().cfg;
  cfg.models = {"random", "greedy_nn", "tsp_nn", "pairwise"};
  const auto serial = run_benchmark(cfg, tiny_bench().docs).report;
  cfg.jobs = 4;
  EXPECT_EQ(run_benchmark(cfg, tiny_bench().docs).report, serial);
}

TEST(Bench, WrittenFilesParseBack) {
  TempDir dir;
  write_bench_outputs(tiny_bench().result, dir.path());
  std::ifstream report(dir / "report.csv");
  EXPECT_EQ(read_report_csv(report), tiny_bench().result.report);
  std::ifstream f4(dir / kFig4File);
  EXPECT_EQ(read_fig4(f4), training_dynamics(tiny_bench().result.logs));
}

TEST(Bench, CheckpointsAreReused) {
  TempDir dir;
  auto cfg = tiny_bench().cfg;
  cfg.models = {"pointer_mlp"};
  cfg.checkpoint_dir = dir.path().string();
  const auto first = run_benchmark(cfg, tiny_bench().docs);
  EXPECT_TRUE(std::filesystem::exists(dir / "pointer_mlp.pgor"));
  cfg.train_missing = false;
  const auto second = run_benchmark(cfg, tiny_bench().docs);
  EXPECT_EQ(second.report.rows, first.report.rows);
  cfg.models = {"pointer_lstm"};
  EXPECT_THROW(run_benchmark(cfg, tiny_bench().docs), std::exception);
}

TEST(Transfer, ShortOnlyTrainingReportsBothSides) {
  auto cfg = bench_config_from_json(pgo::testing::tiny_bench_json(300, 2));
  const auto docs = generate_corpus(cfg.corpus);
  const auto r = transfer_experiment(cfg, docs);
  EXPECT_GT(r.in_domain_docs, 0u);
  EXPECT_GT(r.long_docs, 0u);
  EXPECT_EQ(r.log.size(), 2u);
  const auto text = transfer_csv(r);
  EXPECT_EQ(text.rfind("tau_in_domain,tau_transfer,ratio", 0), 0u);
}
