#include <gtest/gtest.h>

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "pgorder/bench/run.hpp"
#include "pgorder/corpus.hpp"
#include "pgorder/fs.hpp"
#include "pgorder/heuristics.hpp"
#include "test_util.hpp"

using namespace pgo;
using pgo::testing::TempDir;

// ---------------------------------------------------------------------------
// generator

TEST(Generator, SameConfigGivesIdenticalBytes) {
  const auto cfg = pgo::testing::small_corpus(60);
  std::ostringstream a, b;
  write_corpus(generate_corpus(cfg), a);
  write_corpus(generate_corpus(cfg), b);
  EXPECT_EQ(a.str(), b.str());
}

TEST(Generator, DifferentSeedGivesDifferentCorpus) {
  auto cfg = pgo::testing::small_corpus(20);
  const auto a = generate_corpus(cfg);
  cfg.seed += 1;
  EXPECT_NE(a, generate_corpus(cfg));
}

TEST(Generator, DocumentsRespectLengthAndDimension) {
  const auto cfg = pgo::testing::small_corpus(300, 24);
  std::set<std::string> ids;
  for (const auto& d : generate_corpus(cfg)) {
    EXPECT_GE(d.length(), kMinPages);
    EXPECT_LE(d.length(), kMaxPages);
    EXPECT_EQ(d.dim(), 24u);
    for (const auto& p : d.pages)
      for (double v : p) EXPECT_TRUE(std::isfinite(v));
    EXPECT_TRUE(ids.insert(d.doc_id).second);
  }
}

TEST(Generator, DefaultWeightsMatchPublishedLengthDistribution) {
  // Published shares: 22.8 / 30.8 / 22.0 / 14.4 / 9.9 percent.
  const std::array<double, 5> published{22.8, 30.8, 22.0, 14.4, 9.9};
  auto cfg = CorpusConfig{};
  cfg.n_docs = 10000;
  cfg.dim = 8;
  cfg.chrono_dim = 4;
  const auto docs = generate_corpus(cfg);
  const auto hist = bucket_histogram(docs);
  for (std::size_t b = 0; b < 5; ++b) {
    const double pct = 100.0 * static_cast<double>(hist[b]) / static_cast<double>(docs.size());
    EXPECT_NEAR(pct, published[b], 3.0) << bucket_name(kAllBuckets[b]);
  }
}

TEST(Generator, ZeroChronoStrengthCarriesNoOrderSignal) {
  auto cfg = pgo::testing::small_corpus(600);
  cfg.chrono_strength = 0.0;
  const auto docs = generate_corpus(cfg);
  std::vector<ShuffledInstance> xs;
  std::vector<Ordering> tsp, greedy;
  for (const auto& d : docs) {
    xs.push_back(shuffle_instance(d, 3));
    tsp.push_back(order_tsp_nn(xs.back().pages()));
    greedy.push_back(order_greedy_nn(xs.back().pages(), Rng(4).split(d.doc_id)));
  }
  EXPECT_NEAR(mean_tau(xs, tsp).overall, 0.0, 0.05);
  EXPECT_NEAR(mean_tau(xs, greedy).overall, 0.0, 0.05);
}

TEST(Generator, RejectsInvalidConfigs) {
  auto cfg = pgo::testing::small_corpus(10);
  cfg.chrono_dim = cfg.dim;
  EXPECT_THROW(generate_corpus(cfg), ConfigError);
  cfg = pgo::testing::small_corpus(10);
  cfg.length_weights = {0, 0, 0, 0, 0};
  EXPECT_THROW(generate_corpus(cfg), ConfigError);
  cfg = pgo::testing::small_corpus(10);
  cfg.chrono_frequency = 0.1;
  EXPECT_THROW(generate_corpus(cfg), ConfigError);
}

TEST(Generator, ZeroWeightBucketIsNeverDrawn) {
  auto cfg = pgo::testing::small_corpus(400);
  cfg.length_weights = {1, 0, 0, 0, 1};
  const auto hist = bucket_histogram(generate_corpus(cfg));
  EXPECT_EQ(hist[1] + hist[2] + hist[3], 0u);
  EXPECT_GT(hist[0], 0u);
  EXPECT_GT(hist[4], 0u);
}

// ---------------------------------------------------------------------------
// shuffled instances

TEST(Shuffle, TwoPagesHaveExactlyTwoArrangements) {
  const auto doc = pgo::testing::noise_document("d", 2, 4, Rng(1));
  std::set<std::vector<int>> seen;
  for (std::uint64_t s = 0; s < 200; ++s) seen.insert(shuffle_instance(doc, s).truth_rank());
  EXPECT_EQ(seen, (std::set<std::vector<int>>{{0, 1}, {1, 0}}));
}

TEST(Shuffle, TruthRankRestoresOriginal) {
  for (std::size_t n : {2u, 5u, 25u}) {
    const auto doc = pgo::testing::noise_document("d" + std::to_string(n), n, 3, Rng(n));
    const auto inst = shuffle_instance(doc, 42);
    std::vector<Embedding> restored(n);
    for (std::size_t k = 0; k < n; ++k) restored[static_cast<std::size_t>(inst.truth_rank()[k])] = inst.pages()[k];
    EXPECT_EQ(restored, doc.pages);
    const auto order = inst.true_order();
    for (std::size_t t = 0; t < n; ++t) EXPECT_EQ(inst.pages()[static_cast<std::size_t>(order[t])], doc.pages[t]);
  }
}

TEST(Shuffle, FixedSeedIsReproducible) {
  const auto doc = pgo::testing::noise_document("d", 12, 3, Rng(9));
  EXPECT_EQ(shuffle_instance(doc, 5).truth_rank(), shuffle_instance(doc, 5).truth_rank());
  EXPECT_NE(shuffle_instance(doc, 5).truth_rank(), shuffle_instance(doc, 6).truth_rank());
}

TEST(Shuffle, InstanceRejectsInvalidTruthRank) {
  EXPECT_THROW(ShuffledInstance("x", {{1.0}, {2.0}}, {0, 0}), DomainError);
  EXPECT_THROW(ShuffledInstance("x", {{1.0}, {2.0}}, {0, 1, 2}), DomainError);
}

// ---------------------------------------------------------------------------
// splits

namespace {

std::vector<Document> numbered_docs(std::size_t n) {
  std::vector<Document> docs;
  for (std::size_t i = 0; i < n; ++i) docs.push_back(pgo::testing::noise_document("doc" + std::to_string(i), 2, 2, Rng(i)));
  return docs;
}

}  // namespace

TEST(Split, HundredDocsSplitExactly) {
  const auto s = split_corpus(numbered_docs(100), 1);
  EXPECT_EQ(s.train.size(), 70u);
  EXPECT_EQ(s.val.size(), 15u);
  EXPECT_EQ(s.test.size(), 15u);
}

TEST(Split, RemainderGoesToTrain) {
  const auto s = split_corpus(numbered_docs(101), 1);
  EXPECT_EQ(s.train.size(), 71u);
  EXPECT_EQ(s.val.size(), 15u);
  EXPECT_EQ(s.test.size(), 15u);
}

TEST(Split, PartitionsTheInput) {
  const auto docs = numbered_docs(57);
  const auto s = split_corpus(docs, 3);
  std::multiset<std::string> ids;
  for (const auto* part : {&s.train, &s.val, &s.test})
    for (const auto& d : *part) ids.insert(d.doc_id);
  std::multiset<std::string> expected;
  for (const auto& d : docs) expected.insert(d.doc_id);
  EXPECT_EQ(ids, expected);
}

TEST(Split, SeedChangesAssignment) {
  const auto docs = numbered_docs(40);
  EXPECT_NE(split_corpus(docs, 1).test, split_corpus(docs, 2).test);
  EXPECT_EQ(split_corpus(docs, 1).test, split_corpus(docs, 1).test);
}

TEST(Split, TooFewDocumentsOrBadFractions) {
  EXPECT_THROW(split_corpus(numbered_docs(2), 1), DomainError);
  EXPECT_THROW(split_corpus(numbered_docs(10), 1, {0.5, 0.5, 0.5}), DomainError);
}

// ---------------------------------------------------------------------------
// persistence

TEST(CorpusIo, SaveLoadRoundTrip) {
  TempDir dir;
  const auto docs = generate_corpus(pgo::testing::small_corpus(25));
  save_corpus(docs, dir / "c.jsonl");
  EXPECT_EQ(load_corpus(dir / "c.jsonl"), docs);
}

TEST(CorpusIo, TruncatedLineNamesTheLine) {
  TempDir dir;
  const auto docs = generate_corpus(pgo::testing::small_corpus(3));
  std::ostringstream os;
  write_corpus(docs, os);
  auto text = os.str();
  const auto second_end = text.find('\n', text.find('\n') + 1);
  text = text.substr(0, second_end - 10) + "\n";
  write_file_atomic(dir / "bad.jsonl", text);
  try {
    load_corpus(dir / "bad.jsonl");
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(CorpusIo, EmptyFileIsEmptyCorpus) {
  TempDir dir;
  write_file_atomic(dir / "empty.jsonl", "");
  EXPECT_TRUE(load_corpus(dir / "empty.jsonl").empty());
}

TEST(CorpusIo, RejectsInconsistentRecords) {
  std::istringstream wrong_dim(R"({"doc_id":"a","dim":2,"pages":[[1,2],[3]]})");
  EXPECT_THROW(read_corpus(wrong_dim), FormatError);
  std::istringstream one_page(R"({"doc_id":"a","dim":1,"pages":[[1]]})");
  EXPECT_THROW(read_corpus(one_page), FormatError);
  std::istringstream mixed("{\"doc_id\":\"a\",\"dim\":1,\"pages\":[[1],[2]]}\n{\"doc_id\":\"b\",\"dim\":2,\"pages\":[[1,2],[3,4]]}\n");
  EXPECT_THROW(read_corpus(mixed), FormatError);
  std::istringstream missing(R"({"doc_id":"a","pages":[[1],[2]]})");
  EXPECT_THROW(read_corpus(missing), ParseError);
}

TEST(CorpusIo, MissingFileIsIoError) { EXPECT_THROW(load_corpus("/nonexistent/corpus.jsonl"), IoError); }

// ---------------------------------------------------------------------------
// buckets

TEST(Buckets, LengthToBucket) {
  EXPECT_EQ(bucket_of(7), LengthBucket::B6_10);
  EXPECT_EQ(bucket_of(15), LengthBucket::B11_15);
  EXPECT_EQ(bucket_of(16), LengthBucket::B16_20);
  EXPECT_EQ(bucket_of(2), LengthBucket::B2_5);
  EXPECT_EQ(bucket_of(25), LengthBucket::B21_25);
  EXPECT_THROW(bucket_of(1), DomainError);
  EXPECT_THROW(bucket_of(26), DomainError);
}

TEST(Buckets, NamesRoundTrip) {
  for (auto b : kAllBuckets) EXPECT_EQ(parse_bucket(bucket_name(b)), b);
  EXPECT_THROW(parse_bucket("3-9"), ConfigError);
}

// ---------------------------------------------------------------------------
// embedding service client

namespace {

/// Local stand-in for the embedding service.
class FakeEmbedServer {
 public:
  explicit FakeEmbedServer(std::function<void(const httplib::Request&, httplib::Response&)> handler) {
    server_.Post("/v1/embed", [this, handler](const httplib::Request& req, httplib::Response& res) {
      ++requests_;
      handler(req, res);
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeEmbedServer() {
    server_.stop();
    thread_.join();
  }

  [[nodiscard]] std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }
  [[nodiscard]] int requests() const { return requests_; }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  std::atomic<int> requests_{0};
};

void reply_embeddings(const httplib::Request& req, httplib::Response& res, std::size_t dim) {
  const auto texts = nlohmann::json::parse(req.body).at("texts").get<std::vector<std::string>>();
  nlohmann::json out = nlohmann::json::array();
  for (const auto& t : texts) {
    std::vector<double> e(dim, 0.0);
    e[0] = static_cast<double>(t.size());
    out.push_back(e);
  }
  res.set_content(nlohmann::json{{"embeddings", out}}.dump(), "application/json");
}

EmbedOptions fast_options() {
  EmbedOptions o;
  o.backoff = std::chrono::milliseconds(1);
  o.timeout = std::chrono::seconds(5);
  return o;
}

}  // namespace

TEST(EmbedClient, EmptyInputMakesNoRequest) {
  FakeEmbedServer server([](const httplib::Request& req, httplib::Response& res) { reply_embeddings(req, res, 4); });
  EXPECT_TRUE(fetch_embeddings({}, server.endpoint(), "key", fast_options()).empty());
  EXPECT_EQ(server.requests(), 0);
}

TEST(EmbedClient, ReturnsOneEmbeddingPerTextInOrder) {
  FakeEmbedServer server([](const httplib::Request& req, httplib::Response& res) { reply_embeddings(req, res, 4); });
  auto opts = fast_options();
  opts.batch_size = 2;
  const auto e = fetch_embeddings({"a", "bbb", "cc", "dddd", "eeeee"}, server.endpoint(), "key", opts);
  ASSERT_EQ(e.size(), 5u);
  EXPECT_EQ(e[1][0], 3.0);
  EXPECT_EQ(e[4][0], 5.0);
  EXPECT_EQ(server.requests(), 3);
}

TEST(EmbedClient, SendsBearerCredentials) {
  std::string auth;
  FakeEmbedServer server([&](const httplib::Request& req, httplib::Response& res) {
    auth = req.get_header_value("Authorization");
    reply_embeddings(req, res, 2);
  });
  fetch_embeddings({"x"}, server.endpoint(), "secret-token", fast_options());
  EXPECT_EQ(auth, "Bearer secret-token");
}

TEST(EmbedClient, WrongDimensionIsRejected) {
  std::atomic<int> calls{0};
  FakeEmbedServer server([&](const httplib::Request& req, httplib::Response& res) {
    reply_embeddings(req, res, calls++ == 0 ? 4 : 5);
  });
  auto opts = fast_options();
  opts.batch_size = 1;
  EXPECT_THROW(fetch_embeddings({"a", "b"}, server.endpoint(), "key", opts), DimensionMismatch);
  opts.expected_dim = 3;
  EXPECT_THROW(fetch_embeddings({"a"}, server.endpoint(), "key", opts), DimensionMismatch);
}

TEST(EmbedClient, RetriesOnceAfterTransientServerError) {
  std::atomic<int> calls{0};
  FakeEmbedServer server([&](const httplib::Request& req, httplib::Response& res) {
    if (calls++ == 0) {
      res.status = 503;
      return;
    }
    reply_embeddings(req, res, 3);
  });
  EmbeddingClient client(server.endpoint(), "key", fast_options());
  const auto e = client.fetch({"abc", "de"});
  ASSERT_EQ(e.size(), 2u);
  EXPECT_EQ(e[0][0], 3.0);
  EXPECT_EQ(client.attempts(), 2);
}

TEST(EmbedClient, PersistentServerErrorsGiveUp) {
  FakeEmbedServer server([](const httplib::Request&, httplib::Response& res) { res.status = 500; });
  auto opts = fast_options();
  opts.max_retries = 2;
  EXPECT_THROW(fetch_embeddings({"a"}, server.endpoint(), "key", opts), TransportError);
  EXPECT_EQ(server.requests(), 3);
}

TEST(EmbedClient, RejectedCredentialsAreNotRetried) {
  FakeEmbedServer server([](const httplib::Request&, httplib::Response& res) { res.status = 401; });
  EXPECT_THROW(fetch_embeddings({"a"}, server.endpoint(), "bad", fast_options()), AuthError);
  EXPECT_EQ(server.requests(), 1);
}

TEST(EmbedClient, MalformedResponseIsAnError) {
  FakeEmbedServer server([](const httplib::Request&, httplib::Response& res) {
    res.set_content("{\"vectors\": []}", "application/json");
  });
  EXPECT_THROW(fetch_embeddings({"a"}, server.endpoint(), "key", fast_options()), EmbedError);
}

TEST(EmbedClient, CredentialsComeFromEnvironment) {
  const char* saved = std::getenv(kEmbedKeyVariable);
  const std::string keep = saved ? saved : "";
  ::unsetenv(kEmbedKeyVariable);
  EXPECT_THROW(credentials_from_env(), CredentialError);
  ::setenv(kEmbedKeyVariable, "abc", 1);
  EXPECT_EQ(credentials_from_env(), "abc");
  if (saved) ::setenv(kEmbedKeyVariable, keep.c_str(), 1);
  else ::unsetenv(kEmbedKeyVariable);
}

TEST(EmbedClient, EndpointNeedsScheme) { EXPECT_THROW(EmbeddingClient("localhost:80", "k"), ConfigError); }

TEST(CorpusDigest, StableAndSensitive) {
  const auto docs = generate_corpus(pgo::testing::small_corpus(10));
  EXPECT_EQ(corpus_digest(docs), corpus_digest(docs));
  EXPECT_EQ(corpus_digest(docs).size(), 64u);
  auto changed = docs;
  changed[3].pages[0][0] += 1e-9;
  EXPECT_NE(corpus_digest(docs), corpus_digest(changed));
}
