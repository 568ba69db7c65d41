#include "spanbench/embedding.hpp"

#include <chrono>
#include <cmath>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "spanbench/errors.hpp"
#include "spanbench/utf8.hpp"

namespace spanbench {

std::string to_string(EmbeddingProviderConfig::Kind kind) {
  switch (kind) {
    case EmbeddingProviderConfig::Kind::http_openai_compatible:
      return "http_openai_compatible";
    case EmbeddingProviderConfig::Kind::http_ollama:
      return "http_ollama";
    case EmbeddingProviderConfig::Kind::deterministic_mock:
      return "deterministic_mock";
  }
  return "unknown";
}

EmbeddingProviderConfig::Kind embedding_kind_from_string(const std::string& s) {
  if (s == "http_openai_compatible") {
    return EmbeddingProviderConfig::Kind::http_openai_compatible;
  }
  if (s == "http_ollama") return EmbeddingProviderConfig::Kind::http_ollama;
  if (s == "deterministic_mock") return EmbeddingProviderConfig::Kind::deterministic_mock;
  throw ConfigError("unknown embedding provider kind \"" + s + "\"");
}

std::vector<Eigen::VectorXd> EmbeddingProvider::embed_batch(
    std::span<const std::string> texts) {
  if (texts.empty()) throw std::invalid_argument("embed_batch: no texts");
  for (const auto& t : texts) {
    if (t.empty()) throw std::invalid_argument("embed_batch: empty text");
  }
  auto vectors = do_embed_batch(texts);
  if (vectors.size() != texts.size()) {
    throw LengthMismatch("provider returned " + std::to_string(vectors.size()) +
                         " vectors for " + std::to_string(texts.size()) + " texts");
  }
  const Eigen::Index dim = vectors.front().size();
  for (const auto& v : vectors) {
    if (v.size() != dim) {
      throw DimensionMismatch("provider returned inconsistent dimensions " +
                              std::to_string(dim) + " vs " + std::to_string(v.size()));
    }
    if (!v.allFinite()) throw DataError("provider returned non-finite values");
  }
  return vectors;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 1099511628211ull;
  }
  return h;
}

MockEmbeddingProvider::MockEmbeddingProvider(int dim, std::string model_name)
    : dim_(dim), model_name_(std::move(model_name)) {
  if (dim <= 0) throw ConfigError("mock embedding dim must be >= 1");
}

Eigen::VectorXd MockEmbeddingProvider::embed_one(std::string_view text) const {
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(dim_);
  const auto scalars = utf8::scalars(text);
  std::size_t i = 0;
  while (i < scalars.size()) {
    if (utf8::is_whitespace(scalars[i].cp)) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < scalars.size() && !utf8::is_whitespace(scalars[j].cp)) ++j;
    const std::size_t byte_begin = scalars[i].byte_offset;
    const std::size_t byte_end = j < scalars.size() ? scalars[j].byte_offset : text.size();
    const std::uint64_t h = fnv1a64(text.substr(byte_begin, byte_end - byte_begin));
    acc[static_cast<Eigen::Index>(h % static_cast<std::uint64_t>(dim_))] += 1.0;
    i = j;
  }
  // sequential norm, index order 0..dim-1, so any language reproduces the
  // exact same doubles from the documented scheme
  double sumsq = 0.0;
  for (Eigen::Index d = 0; d < acc.size(); ++d) sumsq += acc[d] * acc[d];
  const double norm = std::sqrt(sumsq);
  if (norm > 0.0) {
    for (Eigen::Index d = 0; d < acc.size(); ++d) acc[d] /= norm;
  }
  return acc;
}

std::string MockEmbeddingProvider::cache_key() const {
  return "deterministic_mock|" + model_name_ + "|" + std::to_string(dim_);
}

std::vector<Eigen::VectorXd> MockEmbeddingProvider::do_embed_batch(
    std::span<const std::string> texts) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(embed_one(t));
  return out;
}

namespace {

class HttpEmbeddingProvider : public EmbeddingProvider {
public:
  explicit HttpEmbeddingProvider(EmbeddingProviderConfig config)
      : config_(std::move(config)) {
    if (config_.endpoint.empty()) {
      throw ConfigError("http embedding provider requires an endpoint");
    }
    if (config_.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  }

  std::string label() const override { return config_.model_name; }

  std::string cache_key() const override {
    return to_string(config_.kind) + "|" + config_.endpoint + "|" + config_.model_name;
  }

protected:
  std::vector<Eigen::VectorXd> do_embed_batch(
      std::span<const std::string> texts) override {
    std::vector<Eigen::VectorXd> out;
    out.reserve(texts.size());
    for (std::size_t begin = 0; begin < texts.size();
         begin += static_cast<std::size_t>(config_.batch_size)) {
      const std::size_t end =
          std::min(begin + static_cast<std::size_t>(config_.batch_size), texts.size());
      auto vectors = request_batch(texts.subspan(begin, end - begin));
      out.insert(out.end(), std::make_move_iterator(vectors.begin()),
                 std::make_move_iterator(vectors.end()));
    }
    return out;
  }

private:
  std::vector<Eigen::VectorXd> request_batch(std::span<const std::string> texts) {
    const bool openai = config_.kind == EmbeddingProviderConfig::Kind::http_openai_compatible;
    const std::string path = openai ? "/v1/embeddings" : "/api/embed";

    nlohmann::json body;
    body["model"] = config_.model_name;
    body["input"] = nlohmann::json::array();
    for (const auto& t : texts) body["input"].push_back(t);

    const std::string response =
        post_with_retry(path, body.dump(), config_.max_retries);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(response);
    } catch (const nlohmann::json::exception& e) {
      throw ProviderError(200, std::string("unparseable embedding response: ") + e.what());
    }

    std::vector<Eigen::VectorXd> vectors(texts.size());
    std::vector<bool> filled(texts.size(), false);
    try {
      if (openai) {
        for (const auto& item : j.at("data")) {
          const auto idx = item.at("index").get<std::size_t>();
          if (idx >= texts.size()) throw ProviderError(200, "embedding index out of range");
          vectors[idx] = to_vector(item.at("embedding"));
          filled[idx] = true;
        }
      } else {
        const auto& rows = j.at("embeddings");
        if (rows.size() != texts.size()) {
          throw LengthMismatch("ollama returned " + std::to_string(rows.size()) +
                               " embeddings for " + std::to_string(texts.size()) +
                               " inputs");
        }
        for (std::size_t i = 0; i < texts.size(); ++i) {
          vectors[i] = to_vector(rows[i]);
          filled[i] = true;
        }
      }
    } catch (const nlohmann::json::exception& e) {
      throw ProviderError(200, std::string("bad embedding response shape: ") + e.what());
    }
    for (bool f : filled) {
      if (!f) throw ProviderError(200, "embedding response missing entries");
    }
    return vectors;
  }

  static Eigen::VectorXd to_vector(const nlohmann::json& arr) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(arr.size()));
    Eigen::Index i = 0;
    for (const auto& x : arr) v[i++] = x.get<double>();
    return v;
  }

  std::string post_with_retry(const std::string& path, const std::string& body,
                              int max_retries) {
    std::string last_error = "no attempt made";
    int last_status = 0;
    for (int attempt = 0; attempt <= max_retries; ++attempt) {
      if (attempt > 0) {
        std::this_thread::sleep_for(std::chrono::milliseconds(
            static_cast<long>(config_.retry_backoff_ms) << (attempt - 1)));
      }
      httplib::Client client(config_.endpoint);
      client.set_connection_timeout(0, config_.timeout_ms * 1000L);
      client.set_read_timeout(config_.timeout_ms / 1000, (config_.timeout_ms % 1000) * 1000);
      httplib::Headers headers;
      if (!config_.api_key.empty()) {
        headers.emplace("Authorization", "Bearer " + config_.api_key);
      }
      auto res = client.Post(path, headers, body, "application/json");
      if (!res) {
        last_error = "connection to " + config_.endpoint + " failed: " +
                     httplib::to_string(res.error());
        last_status = -1;
        continue;
      }
      if (res->status == 200) return res->body;
      last_status = res->status;
      last_error = res->body.substr(0, 200);
      if (res->status != 429 && res->status < 500) break;  // non-transient
    }
    if (last_status == -1) throw ProviderUnreachable(last_error);
    throw ProviderError(last_status, "embedding endpoint returned " +
                                         std::to_string(last_status) + ": " + last_error);
  }

  EmbeddingProviderConfig config_;
};

}  // namespace

std::unique_ptr<EmbeddingProvider> make_embedding_provider(
    const EmbeddingProviderConfig& config) {
  if (config.kind == EmbeddingProviderConfig::Kind::deterministic_mock) {
    return std::make_unique<MockEmbeddingProvider>(config.dim, config.model_name);
  }
  return std::make_unique<HttpEmbeddingProvider>(config);
}

}  // namespace spanbench
