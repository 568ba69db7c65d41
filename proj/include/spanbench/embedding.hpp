#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace spanbench {

struct EmbeddingProviderConfig {
  enum class Kind { http_openai_compatible, http_ollama, deterministic_mock };
  Kind kind = Kind::deterministic_mock;
  std::string endpoint;    // scheme://host[:port], http kinds only
  std::string model_name = "mock";
  int dim = 256;           // deterministic_mock only
  int batch_size = 16;
  int timeout_ms = 30000;
  int max_retries = 3;
  int retry_backoff_ms = 250;
  std::string api_key;            // sent as a bearer token when nonempty
  std::string query_prefix;       // prepended to question texts by the caller
  std::string passage_prefix;     // prepended to chunk texts by the caller
};

std::string to_string(EmbeddingProviderConfig::Kind kind);
EmbeddingProviderConfig::Kind embedding_kind_from_string(const std::string& s);

// Maps texts to fixed-dimension vectors. embed_batch() is order-preserving,
// returns one vector per text, and throws ProviderUnreachable / ProviderError
// / DimensionMismatch. Implementations must be usable from multiple threads
// only through distinct instances; see make_embedding_provider.
class EmbeddingProvider {
public:
  virtual ~EmbeddingProvider() = default;

  std::vector<Eigen::VectorXd> embed_batch(std::span<const std::string> texts);

  // Embedding-model label for result tables.
  virtual std::string label() const = 0;
  // Identity prefix for the embedding cache: kind, endpoint and model.
  virtual std::string cache_key() const = 0;

protected:
  virtual std::vector<Eigen::VectorXd> do_embed_batch(
      std::span<const std::string> texts) = 0;
};

// Pure deterministic hashed bag-of-tokens scheme (documented bit-exactly in
// the README so any language reproduces identical vectors):
//   tokens   maximal runs of non-whitespace (Unicode White_Space delimits)
//   accum    acc[fnv1a64(token bytes) mod dim] += 1.0 per occurrence
//   output   acc / ||acc||_2, or the zero vector when there are no tokens
class MockEmbeddingProvider : public EmbeddingProvider {
public:
  explicit MockEmbeddingProvider(int dim = 256, std::string model_name = "mock");

  Eigen::VectorXd embed_one(std::string_view text) const;

  std::string label() const override { return model_name_; }
  std::string cache_key() const override;

protected:
  std::vector<Eigen::VectorXd> do_embed_batch(
      std::span<const std::string> texts) override;

private:
  int dim_;
  std::string model_name_;
};

std::uint64_t fnv1a64(std::string_view bytes);

std::unique_ptr<EmbeddingProvider> make_embedding_provider(
    const EmbeddingProviderConfig& config);

}  // namespace spanbench
