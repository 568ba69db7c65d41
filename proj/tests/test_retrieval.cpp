#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <atomic>
#include <random>
#include <thread>

#include "spanbench/embedding.hpp"
#include "spanbench/errors.hpp"
#include "spanbench/vector_index.hpp"

// httplib must come after Eigen: its transitive <resolv.h> defines a `res`
// macro that mangles Eigen's internals
#include <httplib.h>
#include <nlohmann/json.hpp>

using namespace spanbench;
using nlohmann::json;

namespace {

std::vector<Chunk> chunks_with_ids(std::initializer_list<std::size_t> ids) {
  std::vector<Chunk> chunks;
  for (auto id : ids) {
    Chunk c;
    c.chunk_id = id;
    c.doc_id = "d";
    chunks.push_back(c);
  }
  return chunks;
}

Eigen::VectorXd vec(std::initializer_list<double> values) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

// deterministic per-test server on an ephemeral port
class TestServer {
public:
  explicit TestServer(std::function<void(httplib::Server&)> setup) {
    setup(server_);
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~TestServer() {
    server_.stop();
    thread_.join();
  }
  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_); }

private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

}  // namespace

TEST_CASE("mock embeddings are deterministic unit vectors") {
  MockEmbeddingProvider mock(256);
  const std::vector<std::string> same = {"a", "a"};
  const auto pair = mock.embed_batch(same);
  CHECK(pair[0] == pair[1]);
  CHECK(std::abs(pair[0].norm() - 1.0) <= 1e-12);

  const std::vector<std::string> diff = {"a", "b"};
  const auto two = mock.embed_batch(diff);
  CHECK(std::abs(two[0].norm() - 1.0) <= 1e-12);
  CHECK(std::abs(two[1].norm() - 1.0) <= 1e-12);
  CHECK(cosine_similarity(two[0], two[1]) < 1.0);
}

TEST_CASE("mock scheme is the documented hashed bag of tokens") {
  // fnv1a64("kiln") % 8 and friends, frozen from an independent script
  MockEmbeddingProvider mock(8);
  const auto v = mock.embed_one("kiln kiln draft");
  // kiln -> bucket 3 (count 2), draft -> bucket 4 (count 1); norm = sqrt(5)
  CHECK(std::abs(v[3] - 2.0 / std::sqrt(5.0)) <= 1e-15);
  CHECK(std::abs(v[4] - 1.0 / std::sqrt(5.0)) <= 1e-15);
  CHECK(std::abs(v.norm() - 1.0) <= 1e-12);

  CHECK(mock.embed_one("   ").norm() == 0.0);  // no tokens -> zero vector
}

TEST_CASE("golden query cosines match the reference oracle script") {
  // frozen from tests/oracle/golden_oracle.py over the first three golden
  // dataset questions; the pinned sequential arithmetic makes these exact
  MockEmbeddingProvider mock(256);
  const std::vector<std::string> questions = {
      "How many degrees Celsius does the rotary kiln reach during clinker production?",
      "The feedback loop trims the kiln temperature by adjusting which fuel control?",
      "By what percent did the measured serum ferritin of adult volunteers rise?",
  };
  const auto v = mock.embed_batch(questions);
  CHECK(cosine_similarity(v[0], v[1]) == 0.25000000000000006);
  CHECK(cosine_similarity(v[0], v[2]) == 0.08333333333333336);
  CHECK(cosine_similarity(v[1], v[2]) == 0.08333333333333336);
}

TEST_CASE("fnv1a64 matches the published test vectors") {
  CHECK(fnv1a64("") == 14695981039346656037ull);
  CHECK(fnv1a64("a") == 12638187200555641996ull);
  CHECK(fnv1a64("foobar") == 9625390261332436968ull);
}

TEST_CASE("embed_batch validates input") {
  MockEmbeddingProvider mock(16);
  CHECK_THROWS_AS(mock.embed_batch(std::vector<std::string>{}), std::invalid_argument);
  CHECK_THROWS_AS(mock.embed_batch(std::vector<std::string>{"ok", ""}),
                  std::invalid_argument);
}

TEST_CASE("build_index checks lengths, dims and duplicate ids") {
  const auto chunks = chunks_with_ids({0, 1});
  CHECK_THROWS_AS(build_index(chunks, {vec({1, 0})}), LengthMismatch);
  CHECK_THROWS_AS(build_index(chunks, {vec({1, 0}), vec({1, 0, 0})}), DimensionMismatch);
  CHECK_THROWS_AS(build_index(chunks_with_ids({3, 3}), {vec({1, 0}), vec({0, 1})}),
                  DataError);

  const auto index = build_index(chunks, {vec({1, 0}), vec({0, 1})});
  CHECK(index.size() == 2);
  CHECK(index.dim() == 2);

  const auto empty = build_index({}, {});
  CHECK(empty.size() == 0);
  CHECK(search(empty, vec({1, 0}), 3).empty());
}

TEST_CASE("search returns exact cosine top-k with deterministic ties") {
  const auto index = build_index(chunks_with_ids({0, 1}), {vec({1, 0}), vec({0, 1})});

  auto top = search(index, vec({1, 0}), 1);
  REQUIRE(top.size() == 1);
  CHECK(top[0].chunk_id == 0);
  CHECK(top[0].score == 1.0);

  top = search(index, vec({1, 0}), 5);  // k larger than the index
  REQUIRE(top.size() == 2);
  CHECK(top[0].chunk_id == 0);
  CHECK(top[0].score == 1.0);
  CHECK(top[1].chunk_id == 1);
  CHECK(top[1].score == 0.0);

  const double inv = 1.0 / std::sqrt(2.0);
  top = search(index, vec({inv, inv}), 2);
  REQUIRE(top.size() == 2);
  CHECK(top[0].chunk_id == 0);  // tie broken by ascending chunk_id
  CHECK(top[1].chunk_id == 1);
  CHECK(top[0].score == top[1].score);
  CHECK(std::abs(top[0].score - inv) <= 1e-12);
}

TEST_CASE("zero-norm vectors score 0 against everything") {
  const auto index = build_index(chunks_with_ids({0, 1}), {vec({0, 0}), vec({1, 0})});
  auto top = search(index, vec({1, 0}), 2);
  CHECK(top[0].chunk_id == 1);
  CHECK(top[1].score == 0.0);
  top = search(index, vec({0, 0}), 2);
  CHECK(top[0].score == 0.0);
  CHECK(top[0].chunk_id == 0);  // all-zero scores fall back to id order
}

TEST_CASE("search dimension and argument checks") {
  const auto index = build_index(chunks_with_ids({0}), {vec({1, 0, 0})});
  CHECK_THROWS_AS(search(index, vec({1, 0}), 1), DimensionMismatch);
  CHECK_THROWS_AS(search(index, vec({1, 0, 0}), 0), ConfigError);
}

TEST_CASE("self-similarity of nonzero vectors is 1") {
  std::mt19937 rng(5);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::VectorXd v(17);
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = normal(rng);
    if (v.norm() == 0.0) continue;
    CHECK(std::abs(cosine_similarity(v, v) - 1.0) <= 1e-9);
    CHECK(cosine_similarity(v, v) <= 1.0 + 1e-9);
    CHECK(cosine_similarity(v, -v) >= -1.0 - 1e-9);
  }
}

TEST_CASE("search equals a full-sort baseline on random indexes") {
  std::mt19937 rng(11);
  std::normal_distribution<double> normal;
  std::uniform_int_distribution<int> size_dist(1, 60);
  std::uniform_int_distribution<int> dim_dist(1, 16);
  std::uniform_int_distribution<int> k_dist(1, 12);

  for (int trial = 0; trial < 40; ++trial) {
    const int n = size_dist(rng);
    const int dim = dim_dist(rng);
    std::vector<Eigen::VectorXd> vectors;
    std::vector<Chunk> chunks;
    for (int i = 0; i < n; ++i) {
      Eigen::VectorXd v(dim);
      // duplicate some vectors on purpose so ties actually occur
      if (i > 0 && i % 4 == 0) {
        v = vectors[static_cast<std::size_t>(i - 1)];
      } else {
        for (Eigen::Index d = 0; d < dim; ++d) v[d] = normal(rng);
      }
      vectors.push_back(v);
      Chunk c;
      c.chunk_id = static_cast<std::size_t>(i);
      c.doc_id = "d";
      chunks.push_back(c);
    }
    Eigen::VectorXd query(dim);
    for (Eigen::Index d = 0; d < dim; ++d) query[d] = normal(rng);

    const auto index = build_index(chunks, vectors);
    const std::size_t k = static_cast<std::size_t>(k_dist(rng));
    const auto got = search(index, query, k);

    std::vector<ScoredChunk> baseline;
    for (int i = 0; i < n; ++i) {
      baseline.push_back({static_cast<std::size_t>(i),
                          cosine_similarity(vectors[static_cast<std::size_t>(i)], query)});
    }
    std::stable_sort(baseline.begin(), baseline.end(),
                     [](const ScoredChunk& a, const ScoredChunk& b) {
                       if (a.score != b.score) return a.score > b.score;
                       return a.chunk_id < b.chunk_id;
                     });
    baseline.resize(std::min(k, baseline.size()));

    REQUIRE(got.size() == baseline.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(got[i].chunk_id == baseline[i].chunk_id);
      CHECK(got[i].score == baseline[i].score);
      CHECK(got[i].score <= 1.0 + 1e-9);
      CHECK(got[i].score >= -1.0 - 1e-9);
    }
  }
}

TEST_CASE("openai-compatible endpoint: batching, reorder by index, bearer auth") {
  std::atomic<int> requests{0};
  std::string seen_auth;
  TestServer server([&](httplib::Server& s) {
    s.Post("/v1/embeddings", [&](const httplib::Request& req, httplib::Response& res) {
      ++requests;
      if (req.has_header("Authorization")) seen_auth = req.get_header_value("Authorization");
      const auto body = json::parse(req.body);
      json data = json::array();
      const auto& input = body.at("input");
      // deliberately answer in reverse order; the client must reorder
      for (std::size_t i = input.size(); i-- > 0;) {
        const auto text = input[i].get<std::string>();
        data.push_back({{"index", i},
                        {"embedding", {static_cast<double>(text.size()), 1.0, 0.0}}});
      }
      res.set_content(json{{"data", data}}.dump(), "application/json");
    });
  });

  EmbeddingProviderConfig config;
  config.kind = EmbeddingProviderConfig::Kind::http_openai_compatible;
  config.endpoint = server.endpoint();
  config.model_name = "test-model";
  config.batch_size = 2;
  config.api_key = "sk-test";
  auto provider = make_embedding_provider(config);

  const std::vector<std::string> texts = {"a", "bb", "ccc", "dddd", "eeeee"};
  const auto vectors = provider->embed_batch(texts);
  REQUIRE(vectors.size() == 5);
  for (std::size_t i = 0; i < texts.size(); ++i) {
    CHECK(vectors[i][0] == static_cast<double>(texts[i].size()));
  }
  CHECK(requests.load() == 3);  // ceil(5 / 2)
  CHECK(seen_auth == "Bearer sk-test");
}

TEST_CASE("ollama endpoint shape") {
  TestServer server([&](httplib::Server& s) {
    s.Post("/api/embed", [&](const httplib::Request& req, httplib::Response& res) {
      const auto body = json::parse(req.body);
      json rows = json::array();
      for (const auto& t : body.at("input")) {
        rows.push_back({static_cast<double>(t.get<std::string>().size()), 2.0});
      }
      res.set_content(json{{"embeddings", rows}}.dump(), "application/json");
    });
  });

  EmbeddingProviderConfig config;
  config.kind = EmbeddingProviderConfig::Kind::http_ollama;
  config.endpoint = server.endpoint();
  config.model_name = "nomic-embed-text";
  auto provider = make_embedding_provider(config);
  const std::vector<std::string> texts = {"xyz", "q"};
  const auto vectors = provider->embed_batch(texts);
  REQUIRE(vectors.size() == 2);
  CHECK(vectors[0][0] == 3.0);
  CHECK(vectors[1][0] == 1.0);
}

TEST_CASE("transient 500s are retried, inconsistent dims rejected") {
  std::atomic<int> requests{0};
  TestServer server([&](httplib::Server& s) {
    s.Post("/v1/embeddings", [&](const httplib::Request& req, httplib::Response& res) {
      const int n = ++requests;
      if (n == 1) {
        res.status = 500;
        res.set_content("boom", "text/plain");
        return;
      }
      const auto body = json::parse(req.body);
      json data = json::array();
      for (std::size_t i = 0; i < body.at("input").size(); ++i) {
        // second text gets a different dimension
        json emb = i == 1 ? json{1.0, 2.0} : json{1.0, 2.0, 3.0};
        data.push_back({{"index", i}, {"embedding", emb}});
      }
      res.set_content(json{{"data", data}}.dump(), "application/json");
    });
  });

  EmbeddingProviderConfig config;
  config.kind = EmbeddingProviderConfig::Kind::http_openai_compatible;
  config.endpoint = server.endpoint();
  config.retry_backoff_ms = 5;
  auto provider = make_embedding_provider(config);

  const std::vector<std::string> one = {"solo"};
  const auto vectors = provider->embed_batch(one);  // 500 then success
  REQUIRE(vectors.size() == 1);
  CHECK(requests.load() == 2);

  const std::vector<std::string> two = {"a", "b"};
  CHECK_THROWS_AS(provider->embed_batch(two), DimensionMismatch);
}

TEST_CASE("non-transient HTTP errors surface status and body") {
  TestServer server([&](httplib::Server& s) {
    s.Post("/v1/embeddings", [&](const httplib::Request&, httplib::Response& res) {
      res.status = 401;
      res.set_content("{\"error\":\"bad key\"}", "application/json");
    });
  });
  EmbeddingProviderConfig config;
  config.kind = EmbeddingProviderConfig::Kind::http_openai_compatible;
  config.endpoint = server.endpoint();
  auto provider = make_embedding_provider(config);
  const std::vector<std::string> texts = {"x"};
  try {
    provider->embed_batch(texts);
    FAIL("expected ProviderError");
  } catch (const ProviderError& e) {
    CHECK(e.status == 401);
    CHECK(std::string(e.what()).find("bad key") != std::string::npos);
  }
}

TEST_CASE("unreachable endpoints raise ProviderUnreachable") {
  EmbeddingProviderConfig config;
  config.kind = EmbeddingProviderConfig::Kind::http_openai_compatible;
  config.endpoint = "http://127.0.0.1:9";  // discard port, nothing listens
  config.max_retries = 1;
  config.retry_backoff_ms = 1;
  config.timeout_ms = 200;
  auto provider = make_embedding_provider(config);
  const std::vector<std::string> texts = {"x"};
  CHECK_THROWS_AS(provider->embed_batch(texts), ProviderUnreachable);
}
