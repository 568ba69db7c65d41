#pragma once

#include <cstddef>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spanbench/corpus.hpp"
#include "spanbench/embedding.hpp"
#include "spanbench/metrics.hpp"
#include "spanbench/vector_index.hpp"

namespace spanbench {

struct EvalConfig {
  std::size_t chunk_size = 5;
  std::size_t chunk_overlap = 0;
  std::size_t k = 5;
  EmbeddingProviderConfig embedding;
  std::string dataset_label = "dataset";
  std::string model_label;  // derived from dataset provenance when empty
  bool pomega_literal = false;      // compatibility switch, see metrics.hpp
  bool per_document_index = false;  // top-k per document instead of corpus-wide
};

struct EvalRecord {
  std::string dataset;
  std::string embedder;
  std::string model;
  std::size_t chunk_size = 0;
  std::size_t k = 0;
  std::string query_id;
  Retrieved retrieved;
  MetricQuadruple metrics;
};

struct SweepRow {
  std::string dataset;
  std::string embedder;
  std::string model;
  std::size_t chunk_size = 0;
  AggregateStats iou;
  AggregateStats recall;
  AggregateStats precision;
  AggregateStats pomega;
};

struct SweepError {
  std::string dataset;
  std::string embedder;
  std::string model;
  std::size_t chunk_size = 0;
  std::string message;
};

struct SweepTable {
  std::vector<SweepRow> rows;
  std::vector<SweepError> errors;
};

// Process-wide embedding cache keyed by (provider identity, text); safe for
// concurrent lookup/insert so parallel sweep cells can share it.
class EmbeddingCache {
public:
  std::optional<Eigen::VectorXd> get(const std::string& key) const;
  void put(const std::string& key, Eigen::VectorXd value);
  std::size_t size() const;

private:
  mutable std::mutex mutex_;
  std::map<std::string, Eigen::VectorXd> entries_;
};

// Embeds through the cache when one is given; results are identical to a
// cache-less call. Duplicate texts are embedded once.
std::vector<Eigen::VectorXd> embed_with_cache(EmbeddingProvider& provider,
                                              std::span<const std::string> texts,
                                              EmbeddingCache* cache);

// "human" when every pair is human, the model name when every synthetic pair
// agrees, "mixed" otherwise.
std::string derive_model_label(std::span<const QAPair> pairs);

struct EvalOutput {
  std::vector<EvalRecord> records;
  SweepRow row;
};

// Runs the full procedure for one configuration: chunk every document, embed
// chunks and questions, retrieve top-k per query, score the four metrics, and
// aggregate mean/std across queries. Precision omega is computed from the
// chunking alone, once per distinct highlight token set.
EvalOutput evaluate(const Corpus& corpus, const std::vector<QAPair>& pairs,
                    const EvalConfig& config, EmbeddingProvider& provider,
                    EmbeddingCache* cache = nullptr);

// Cartesian product of chunk sizes and embedding providers over one dataset.
// Cells run independently (optionally in parallel); a failed cell becomes an
// error marker and the remaining cells proceed. Row order is deterministic:
// (dataset, embedder, chunk_size).
SweepTable sweep(const Corpus& corpus, const std::vector<QAPair>& pairs,
                 const EvalConfig& base, const std::vector<std::size_t>& chunk_sizes,
                 const std::vector<EmbeddingProviderConfig>& providers,
                 int parallelism = 1, EmbeddingCache* cache = nullptr,
                 std::vector<EvalRecord>* all_records = nullptr);

// Results-file schemas (schema_version 1).
std::string records_to_jsonl(std::span<const EvalRecord> records);
std::string summary_to_json(const SweepTable& table);
SweepTable summary_from_json(std::string_view json_text);

}  // namespace spanbench
