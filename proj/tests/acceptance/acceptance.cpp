// Acceptance checks 1-12. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>

#include "pgorder/bench.hpp"
#include "pgorder/corpus/generator.hpp"
#include "pgorder/gradcheck_suite.hpp"
#include "pgorder/heuristics.hpp"
#include "pgorder/metrics.hpp"
#include "pgorder/models.hpp"
#include "pgorder/training.hpp"
#include "test_util.hpp"

#ifndef PGORDER_CLI_PATH
#error "PGORDER_CLI_PATH must name the pgorder executable"
#endif

using namespace pgo;

namespace {

struct Outcome {
  bool ok = false;
  std::string detail;
};

int failures = 0;

void criterion(int id, const char* title, double limit_seconds, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome out;
  try {
    out = body();
  } catch (const std::exception& e) {
    out = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  bool ok = out.ok;
  if (limit_seconds > 0 && secs >= limit_seconds) {
    ok = false;
    out.detail += " [over time limit]";
  }
  if (!ok) ++failures;
  std::printf("%s %2d %s (%.1fs", ok ? "PASS" : "FAIL", id, title, secs);
  if (limit_seconds > 0) std::printf(" / limit %.0fs", limit_seconds);
  std::printf("): %s\n", out.detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), f, a, b, c);
  return buf;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool valid_permutation(const Ordering& o, std::size_t n) {
  if (o.size() != n) return false;
  std::vector<int> s = o.slots();
  std::sort(s.begin(), s.end());
  for (std::size_t i = 0; i < n; ++i)
    if (s[i] != static_cast<int>(i)) return false;
  return true;
}

/// Pairs (a, b) with a before b in the prediction, compared in the truth.
double brute_tau(const std::vector<int>& pred, const std::vector<int>& truth_rank) {
  long long c = 0, d = 0;
  for (std::size_t a = 0; a < pred.size(); ++a)
    for (std::size_t b = a + 1; b < pred.size(); ++b)
      (truth_rank[static_cast<std::size_t>(pred[a])] < truth_rank[static_cast<std::size_t>(pred[b])] ? c : d)++;
  const auto n = static_cast<long long>(pred.size());
  return static_cast<double>(c - d) / static_cast<double>(n * (n - 1) / 2);
}

ModelConfig tiny_config(Arch arch, std::uint64_t seed) {
  auto c = default_model_config(arch, 8, seed);
  c.hidden_dim = 8;
  c.heads = 2;
  c.layers = 1;
  c.decoder_hidden = 8;
  c.decoder_layers = 1;
  return c;
}

const std::vector<Document>& default_corpus() {
  static const auto docs = generate_corpus(BenchConfig{}.corpus);
  return docs;
}

// ---------------------------------------------------------------------------

Outcome tau_oracle() {
  Rng rng(1);
  int mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + rng.below(9);
    const auto pred = pgo::testing::random_permutation(n, rng);
    const auto truth = pgo::testing::random_permutation(n, rng);
    mismatches += kendall_tau(Ordering(pred), truth) != brute_tau(pred, truth);
  }
  bool ends = true;
  for (std::size_t n = 2; n <= 10; ++n) {
    const auto id = Ordering::identity(n);
    std::vector<int> truth(n);
    std::iota(truth.begin(), truth.end(), 0);
    ends = ends && kendall_tau(id, truth) == 1.0 && kendall_tau(id.reversed(), truth) == -1.0;
  }
  return {mismatches == 0 && ends,
          std::to_string(mismatches) + " mismatches in 1000 pairs; identity/reversal " + (ends ? "exact" : "wrong")};
}

Outcome gradient_gate() {
  const auto cases = run_gradcheck_suite();
  double worst = 0.0;
  std::string failed;
  for (const auto& c : cases) {
    worst = std::max(worst, c.report.max_rel_error);
    if (!c.report.passed() || c.report.max_rel_error >= 1e-3) failed += " " + c.name;
  }
  return {failed.empty(), std::to_string(cases.size()) + " cases, worst relative error " + fmt("%.2e", worst) +
                              (failed.empty() ? "" : "; failing:" + failed)};
}

Outcome permutation_validity() {
  const auto docs = generate_corpus(pgo::testing::small_corpus(80, 8, 3));
  const auto split = split_corpus(docs, 3);
  int bad = 0, total = 0;
  for (auto arch : {Arch::BilstmPos, Arch::PointerMlp, Arch::PointerLstm, Arch::Seq2Seq, Arch::PairwiseRank}) {
    auto model = make_model<float>(tiny_config(arch, 5));
    for (int phase = 0; phase < 2; ++phase) {
      if (phase == 1) {
        TrainConfig tc;
        tc.epochs = 2;
        fit(*model, split.train, split.val, tc);
      }
      Rng rng(static_cast<std::uint64_t>(arch) * 10 + static_cast<std::uint64_t>(phase));
      for (int i = 0; i < 500; ++i) {
        const std::size_t n = 2 + rng.below(24);
        const auto pages = nc::normal_array<float>({n, 8}, 1.0, rng.split(static_cast<std::uint64_t>(i)));
        bad += !valid_permutation(model->predict(pages).ordering, n);
        ++total;
      }
    }
  }
  return {bad == 0, std::to_string(total) + " decodes (5 architectures, untrained and trained), " +
                        std::to_string(bad) + " invalid"};
}

Outcome aggregation_oracle() {
  int wrong = 0, total = 0;
  for (std::size_t n = 2; n <= 25; ++n) {
    Rng rng(n);
    for (int t = 0; t < 100; ++t) {
      const auto truth = pgo::testing::random_permutation(n, rng);
      nc::Array<double> s({n, n});
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          if (i != j) s(i, j) = truth[j] > truth[i] ? 1.0 : -1.0;
      const auto order = aggregate_scores(PairwiseScores(s)).ordering;
      for (std::size_t k = 0; k < n; ++k) wrong += truth[static_cast<std::size_t>(order[k])] != static_cast<int>(k) ? 1 : 0;
      ++total;
    }
  }
  return {wrong == 0, std::to_string(total) + " matrices, " + std::to_string(wrong) + " misplaced pages"};
}

Outcome equivariance() {
  auto cfg = default_model_config(Arch::PairwiseRank, 8, 42);
  cfg.hidden_dim = 16;
  const PairwiseRankModel<double> model(cfg);
  double worst = 0.0;
  int perms = 0;
  for (std::size_t n : {3u, 4u}) {
    const auto pages = nc::normal_array<double>({n, 8}, 1.0, Rng(n));
    const auto base = model.pairwise_forward(pages).first;
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    do {
      nc::Array<double> moved({n, 8});
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < 8; ++k) moved(i, k) = pages(static_cast<std::size_t>(perm[i]), k);
      const auto s = model.pairwise_forward(moved).first;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          worst = std::max(worst, std::abs(s(i, j) - base(static_cast<std::size_t>(perm[i]), static_cast<std::size_t>(perm[j]))));
      ++perms;
    } while (std::next_permutation(perm.begin(), perm.end()));
  }
  return {worst < 1e-9, std::to_string(perms) + " permutations, max deviation " + fmt("%.1e", worst)};
}

Outcome heuristic_failure() {
  const auto& docs = default_corpus();
  const auto instances = make_instances(docs, BenchConfig{}.eval_seed);
  std::vector<int> lengths;
  std::vector<double> greedy, tsp;
  const Rng rng(5);
  for (const auto& x : instances) {
    lengths.push_back(x.length());
    greedy.push_back(kendall_tau(order_greedy_nn(x.pages(), rng.split(x.doc_id())), x.truth_rank()));
    tsp.push_back(kendall_tau(order_tsp_nn(x.pages()), x.truth_rank()));
  }
  bool ok = true;
  std::string detail;
  for (const auto& [name, taus] : {std::pair{"greedy", &greedy}, std::pair{"tsp", &tsp}}) {
    const auto s = summarize_taus(lengths, *taus);
    detail += std::string(detail.empty() ? "" : "; ") + name;
    for (auto b : kAllBuckets) {
      const double v = s.mean(b).value_or(1.0);
      ok = ok && v < 0.3;
      detail += fmt(" %.3f", v);
    }
  }
  return {ok, std::to_string(docs.size()) + " docs; " + detail};
}

Outcome learnability() {
  BenchConfig cfg;
  cfg.models = {"greedy_nn", "tsp_nn", "pairwise"};
  const auto report = run_benchmark(cfg, default_corpus()).report;
  const auto* pw = report.find("pairwise");
  const auto* g = report.find("greedy_nn");
  const auto* t = report.find("tsp_nn");
  bool ok = pw->tau[0].value_or(-1.0) >= 0.85;
  std::string detail = "pairwise";
  for (std::size_t b = 0; b < 5; ++b) {
    const double best_h = std::max(g->tau[b].value_or(1.0), t->tau[b].value_or(1.0));
    ok = ok && pw->tau[b].value_or(-1.0) > best_h;
    detail += fmt(" %.3f(>%.3f)", pw->tau[b].value_or(-9.0), best_h);
  }
  return {ok, std::to_string(cfg.train.epochs) + " epochs; " + detail};
}

Outcome strategy_reduction() {
  BenchConfig cfg;
  const auto split = split_corpus(default_corpus(), cfg.split_seed);
  auto mc = bench_model_config(cfg, "pairwise");
  TrainConfig uni = cfg.train;
  uni.epochs = 3;
  TrainConfig direct = uni;
  direct.strategy = Strategy::SpecializedDirect;
  direct.target_bucket = LengthBucket::B16_20;
  direct.weight_factor = 1.0;
  auto a = make_model<float>(mc);
  auto b = make_model<float>(mc);
  const auto ra = fit(*a, split.train, split.val, uni);
  const auto rb = fit(*b, split.train, split.val, direct);
  bool same = ra.log.size() == rb.log.size();
  for (std::size_t i = 0; same && i < ra.log.size(); ++i)
    same = ra.log[i].val_tau == rb.log[i].val_tau && ra.log[i].train_loss == rb.log[i].train_loss &&
           ra.log[i].val_bucket_tau == rb.log[i].val_bucket_tau;
  same = same && a->snapshot() == b->snapshot();
  std::string series;
  for (const auto& r : ra.log) series += fmt(" %.6f", r.val_tau);
  return {same, "val tau series" + series + (same ? " reproduced bit-exactly" : " diverged")};
}

Outcome transfer() {
  const auto r = transfer_experiment(BenchConfig{}, default_corpus());
  const bool ok = r.tau_transfer <= 0.5 * r.tau_in_domain;
  return {ok, fmt("tau_in %.3f, tau_transfer %.3f", r.tau_in_domain, r.tau_transfer) +
                  fmt(" (published 2-5 %.4f -> 21-25 %.4f)", paper::kTransferInDomain, paper::kTransferLong)};
}

Outcome locality_cases() {
  auto one_hot = [](const std::vector<std::size_t>& target) {
    nc::Array<double> a({1, target.size(), target.size()});
    for (std::size_t i = 0; i < target.size(); ++i) a(0, i, target[i]) = 1.0;
    return a;
  };
  const auto id = attention_locality<double>({one_hot({0, 1, 2, 3, 4})});
  const auto uni = attention_locality<double>({nc::Array<double>({3, 3}, 1.0 / 3.0)});
  const auto far = attention_locality<double>({one_hot({9, 9, 9, 9, 9, 0, 0, 0, 0, 0})});
  const bool ok = id.local_fraction == 1.0 && id.avg_distance == 0.0 && std::abs(uni.avg_distance - 8.0 / 9.0) < 1e-12 &&
                  std::abs(uni.local_fraction - 1.0) < 1e-12 && far.local_fraction == 0.0 && far.avg_distance == 7.0;
  return {ok, fmt("identity (%.3f, %.3f)", id.local_fraction, id.avg_distance) +
                  fmt(", uniform (%.3f, %.6f)", uni.local_fraction, uni.avg_distance) +
                  fmt(", farthest n=10 (%.3f, %.3f)", far.local_fraction, far.avg_distance)};
}

// Criteria 11 and 12 share two CLI bench runs.
struct BenchRuns {
  pgo::testing::TempDir dir;
  int code_a = -1, code_b = -1;
};

BenchRuns& bench_runs() {
  static BenchRuns r;
  static const bool ran = [] {
    std::ofstream(r.dir / "cfg.json") << pgo::testing::tiny_bench_json().dump(2);
    auto run = [&](const char* out) {
      const std::string cmd = "'" + std::string(PGORDER_CLI_PATH) + "' bench --config '" + (r.dir / "cfg.json").string() +
                              "' --models all --out '" + (r.dir / out).string() + "' > /dev/null 2>&1";
      const int status = std::system(cmd.c_str());
      return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    };
    r.code_a = run("a");
    r.code_b = run("b");
    return true;
  }();
  (void)ran;
  return r;
}

const std::vector<std::string> kCompared{"report.csv", "report.txt", kFig1File, kFig2File, kFig3File, kFig4File};

Outcome determinism() {
  auto& r = bench_runs();
  if (r.code_a != 0 || r.code_b != 0) return {false, "bench exited with " + std::to_string(r.code_a) + "/" + std::to_string(r.code_b)};
  std::string differing;
  for (const auto& f : kCompared)
    if (slurp(r.dir / "a" / f) != slurp(r.dir / "b" / f) || slurp(r.dir / "a" / f).empty()) differing += " " + f;
  return {differing.empty(), differing.empty() ? std::to_string(kCompared.size()) + " files byte-identical"
                                               : "differing:" + differing};
}

Outcome schema() {
  auto& r = bench_runs();
  if (r.code_a != 0) return {false, "bench failed"};
  const auto out = r.dir / "a";
  std::ifstream rs(out / "report.csv");
  const auto report = read_report_csv(rs);
  const auto menu = all_model_ids();
  bool ok = report.rows.size() == 12;
  for (std::size_t i = 0; ok && i < menu.size(); ++i) ok = report.rows[i].id == menu[i];
  ok = ok && slurp(out / "report.csv").find(detail::bucket_columns("tau_")) != std::string::npos;
  std::string broken;
  {
    std::ifstream in(out / kFig1File);
    EvalReport back;
    back.meta = report.meta;
    back.rows = read_fig1(in);
    if (fig1_csv(back) != slurp(out / kFig1File)) broken += " fig1";
  }
  {
    std::ifstream in(out / kFig2File);
    if (read_fig2(in) != short_long_points(report) || fig2_csv(report) != slurp(out / kFig2File)) broken += " fig2";
  }
  {
    std::ifstream in(out / kFig3File);
    if (read_fig3(in) != ablation_rows(report) || fig3_csv(report) != slurp(out / kFig3File)) broken += " fig3";
  }
  {
    std::ifstream in(out / kFig4File);
    if (fig4_csv(read_fig4(in)) != slurp(out / kFig4File)) broken += " fig4";
  }
  ok = ok && broken.empty() && report_csv(report) == slurp(out / "report.csv");
  return {ok, std::to_string(report.rows.size()) + " report rows in menu order; figures" +
                  (broken.empty() ? " parse and round-trip" : " broken:" + broken)};
}

}  // namespace

int main() {
  criterion(1, "Kendall tau matches pair-counting oracle", 5, tau_oracle);
  criterion(2, "gradient checks for every layer and loss", 60, gradient_gate);
  criterion(3, "decoders emit valid permutations", 60, permutation_validity);
  criterion(4, "aggregation recovers consistent truths", 5, aggregation_oracle);
  criterion(5, "pairwise scores are permutation equivariant", 30, equivariance);
  criterion(6, "similarity heuristics stay below tau 0.3", 120, heuristic_failure);
  criterion(7, "pairwise model learns the default corpus", 900, learnability);
  criterion(8, "direct specialization at factor 1 equals universal", 300, strategy_reduction);
  criterion(9, "short-only training transfers weakly", 900, transfer);
  criterion(10, "locality statistics on hand cases", 1, locality_cases);
  criterion(11, "bench reruns are byte-identical", 0, determinism);
  criterion(12, "report and figure schemas round-trip", 0, schema);
  std::printf("%d of 12 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
