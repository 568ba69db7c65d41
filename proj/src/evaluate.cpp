#include "spanbench/evaluate.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

#include <nlohmann/json.hpp>

#include "spanbench/errors.hpp"

namespace spanbench {

using ordered_json = nlohmann::ordered_json;

std::optional<Eigen::VectorXd> EmbeddingCache::get(const std::string& key) const {
  std::lock_guard lock(mutex_);
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void EmbeddingCache::put(const std::string& key, Eigen::VectorXd value) {
  std::lock_guard lock(mutex_);
  entries_.emplace(key, std::move(value));
}

std::size_t EmbeddingCache::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

std::vector<Eigen::VectorXd> embed_with_cache(EmbeddingProvider& provider,
                                              std::span<const std::string> texts,
                                              EmbeddingCache* cache) {
  if (texts.empty()) return {};
  if (!cache) return provider.embed_batch(texts);

  const std::string prefix = provider.cache_key() + '\0';
  std::vector<Eigen::VectorXd> out(texts.size());
  std::vector<std::string> missing;
  std::map<std::string, std::vector<std::size_t>> missing_slots;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    const std::string key = prefix + texts[i];
    if (auto hit = cache->get(key)) {
      out[i] = std::move(*hit);
    } else {
      auto [it, inserted] = missing_slots.try_emplace(texts[i]);
      if (inserted) missing.push_back(texts[i]);
      it->second.push_back(i);
    }
  }
  if (!missing.empty()) {
    auto vectors = provider.embed_batch(missing);
    for (std::size_t m = 0; m < missing.size(); ++m) {
      cache->put(prefix + missing[m], vectors[m]);
      for (std::size_t slot : missing_slots.at(missing[m])) out[slot] = vectors[m];
    }
  }
  return out;
}

std::string derive_model_label(std::span<const QAPair> pairs) {
  bool any_human = false;
  std::string synthetic_model;
  bool mixed_synthetic = false;
  for (const auto& p : pairs) {
    if (p.provenance.kind == Provenance::Kind::human) {
      any_human = true;
    } else {
      if (synthetic_model.empty()) {
        synthetic_model = p.provenance.model.empty() ? "synthetic" : p.provenance.model;
      } else if (synthetic_model !=
                 (p.provenance.model.empty() ? "synthetic" : p.provenance.model)) {
        mixed_synthetic = true;
      }
    }
  }
  if (synthetic_model.empty()) return "human";
  if (any_human || mixed_synthetic) return "mixed";
  return synthetic_model;
}

namespace {

void validate_dataset(const Corpus& corpus, const std::vector<QAPair>& pairs) {
  if (pairs.empty()) throw DatasetEmpty("dataset contains no queries");
  for (const auto& pair : pairs) {
    if (pair.spans.empty()) {
      throw DatasetEmpty("query \"" + pair.query_id + "\" has no spans");
    }
    for (const auto& span : pair.spans) {
      const Document& doc = corpus.document(span.doc_id);
      try {
        validate_span(doc, span);
      } catch (const SpanMismatch& e) {
        throw SpanMismatch(pair.query_id, e.what());
      }
    }
  }
}

Retrieved search_per_document(const std::vector<Chunk>& chunks,
                              const std::vector<Eigen::VectorXd>& vectors,
                              const Eigen::VectorXd& query, std::size_t k) {
  // group chunk positions by document, search each group, merge
  std::map<std::string, std::vector<std::size_t>> by_doc;
  for (std::size_t i = 0; i < chunks.size(); ++i) by_doc[chunks[i].doc_id].push_back(i);
  Retrieved merged;
  for (const auto& [doc_id, positions] : by_doc) {
    std::vector<Chunk> doc_chunks;
    std::vector<Eigen::VectorXd> doc_vectors;
    doc_chunks.reserve(positions.size());
    for (std::size_t pos : positions) {
      doc_chunks.push_back(chunks[pos]);
      doc_vectors.push_back(vectors[pos]);
    }
    auto hits = search(build_index(doc_chunks, doc_vectors), query, k);
    merged.insert(merged.end(), hits.begin(), hits.end());
  }
  std::sort(merged.begin(), merged.end(), [](const ScoredChunk& a, const ScoredChunk& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.chunk_id < b.chunk_id;
  });
  return merged;
}

}  // namespace

EvalOutput evaluate(const Corpus& corpus, const std::vector<QAPair>& pairs,
                    const EvalConfig& config, EmbeddingProvider& provider,
                    EmbeddingCache* cache) {
  if (config.chunk_size < 1) throw InvalidChunkSize("chunk_size must be >= 1");
  if (config.k < 1) throw ConfigError("k must be >= 1");
  validate_dataset(corpus, pairs);

  const CorpusChunking chunking = chunk_corpus(corpus, config.chunk_size,
                                               config.chunk_overlap);
  std::map<std::size_t, const Chunk*> chunk_by_id;
  for (const auto& c : chunking.chunks) chunk_by_id.emplace(c.chunk_id, &c);

  std::vector<std::string> chunk_texts;
  chunk_texts.reserve(chunking.chunks.size());
  for (const auto& c : chunking.chunks) {
    chunk_texts.push_back(config.embedding.passage_prefix + c.text);
  }
  std::vector<std::string> query_texts;
  query_texts.reserve(pairs.size());
  for (const auto& p : pairs) {
    query_texts.push_back(config.embedding.query_prefix + p.question);
  }

  const auto chunk_vectors = embed_with_cache(provider, chunk_texts, cache);
  const auto query_vectors = embed_with_cache(provider, query_texts, cache);

  VectorIndex index;
  if (!config.per_document_index) index = build_index(chunking.chunks, chunk_vectors);

  const std::string model_label =
      config.model_label.empty() ? derive_model_label(pairs) : config.model_label;

  std::map<std::string, double> pomega_by_t_e;
  EvalOutput out;
  std::vector<double> recalls, precisions, ious, pomegas;

  for (std::size_t qi = 0; qi < pairs.size(); ++qi) {
    const QAPair& pair = pairs[qi];
    Retrieved retrieved;
    if (chunking.chunks.empty()) {
      retrieved = {};
    } else if (config.per_document_index) {
      retrieved = search_per_document(chunking.chunks, chunk_vectors,
                                      query_vectors[qi], config.k);
    } else {
      retrieved = search(index, query_vectors[qi], config.k);
    }

    std::vector<Chunk> retrieved_chunks;
    retrieved_chunks.reserve(retrieved.size());
    for (const auto& hit : retrieved) retrieved_chunks.push_back(*chunk_by_id.at(hit.chunk_id));

    const TokenSet t_e = span_to_token_set(chunking.tokens, pair.spans);
    const TokenSet t_r = chunks_to_token_set(retrieved_chunks);

    EvalRecord record;
    record.dataset = config.dataset_label;
    record.embedder = provider.label();
    record.model = model_label;
    record.chunk_size = config.chunk_size;
    record.k = config.k;
    record.query_id = pair.query_id;
    record.retrieved = std::move(retrieved);
    record.metrics.recall = recall(t_e, t_r);
    record.metrics.precision = precision(t_e, t_r);
    record.metrics.iou = iou(t_e, t_r);
    if (config.pomega_literal) {
      record.metrics.precision_omega = precision_omega_literal(t_e, t_r);
    } else {
      const std::string key = t_e.canonical_key();
      auto it = pomega_by_t_e.find(key);
      if (it == pomega_by_t_e.end()) {
        it = pomega_by_t_e.emplace(key, precision_omega(chunking.chunks, t_e)).first;
      }
      record.metrics.precision_omega = it->second;
    }

    recalls.push_back(record.metrics.recall);
    precisions.push_back(record.metrics.precision);
    ious.push_back(record.metrics.iou);
    pomegas.push_back(record.metrics.precision_omega);
    out.records.push_back(std::move(record));
  }

  out.row.dataset = config.dataset_label;
  out.row.embedder = provider.label();
  out.row.model = model_label;
  out.row.chunk_size = config.chunk_size;
  out.row.iou = aggregate(ious);
  out.row.recall = aggregate(recalls);
  out.row.precision = aggregate(precisions);
  out.row.pomega = aggregate(pomegas);
  return out;
}

SweepTable sweep(const Corpus& corpus, const std::vector<QAPair>& pairs,
                 const EvalConfig& base, const std::vector<std::size_t>& chunk_sizes,
                 const std::vector<EmbeddingProviderConfig>& providers,
                 int parallelism, EmbeddingCache* cache,
                 std::vector<EvalRecord>* all_records) {
  if (chunk_sizes.empty()) throw ConfigError("sweep requires at least one chunk size");
  if (providers.empty()) throw ConfigError("sweep requires at least one provider");
  for (std::size_t size : chunk_sizes) {
    if (size < 1) throw InvalidChunkSize("chunk_size must be >= 1");
  }

  struct Cell {
    EmbeddingProviderConfig provider;
    std::size_t chunk_size;
  };
  std::vector<Cell> cells;
  std::vector<EmbeddingProviderConfig> sorted_providers = providers;
  std::stable_sort(sorted_providers.begin(), sorted_providers.end(),
                   [](const auto& a, const auto& b) { return a.model_name < b.model_name; });
  std::vector<std::size_t> sorted_sizes = chunk_sizes;
  std::sort(sorted_sizes.begin(), sorted_sizes.end());
  for (const auto& provider : sorted_providers) {
    for (std::size_t size : sorted_sizes) cells.push_back({provider, size});
  }

  struct CellResult {
    std::optional<EvalOutput> output;
    std::string error;
  };
  std::vector<CellResult> results(cells.size());

  auto run_cell = [&](std::size_t i) {
    EvalConfig config = base;
    config.embedding = cells[i].provider;
    config.chunk_size = cells[i].chunk_size;
    try {
      auto provider = make_embedding_provider(config.embedding);
      results[i].output = evaluate(corpus, pairs, config, *provider, cache);
    } catch (const std::exception& e) {
      results[i].error = e.what();
    }
  };

  const int workers = std::max(1, std::min<int>(parallelism,
                                                static_cast<int>(cells.size())));
  if (workers == 1) {
    for (std::size_t i = 0; i < cells.size(); ++i) run_cell(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < cells.size(); i = next.fetch_add(1)) {
          run_cell(i);
        }
      });
    }
    for (auto& t : pool) t.join();
  }

  SweepTable table;
  const std::string model_label =
      base.model_label.empty() ? derive_model_label(pairs) : base.model_label;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (results[i].output) {
      table.rows.push_back(results[i].output->row);
      if (all_records) {
        auto& records = results[i].output->records;
        all_records->insert(all_records->end(),
                            std::make_move_iterator(records.begin()),
                            std::make_move_iterator(records.end()));
      }
    } else {
      table.errors.push_back({base.dataset_label, cells[i].provider.model_name,
                              model_label, cells[i].chunk_size, results[i].error});
    }
  }
  return table;
}

std::string records_to_jsonl(std::span<const EvalRecord> records) {
  std::string out;
  for (const auto& r : records) {
    ordered_json j;
    j["schema_version"] = 1;
    j["dataset"] = r.dataset;
    j["embedder"] = r.embedder;
    j["model"] = r.model;
    j["chunk_size"] = r.chunk_size;
    j["k"] = r.k;
    j["query_id"] = r.query_id;
    j["retrieved"] = ordered_json::array();
    for (const auto& hit : r.retrieved) {
      j["retrieved"].push_back({{"chunk_id", hit.chunk_id}, {"score", hit.score}});
    }
    j["metrics"] = {{"recall", r.metrics.recall},
                    {"precision", r.metrics.precision},
                    {"iou", r.metrics.iou},
                    {"precision_omega", r.metrics.precision_omega}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

namespace {

ordered_json stats_to_json(const AggregateStats& s) {
  return {{"mean", s.mean}, {"std", s.std}};
}

AggregateStats stats_from_json(const nlohmann::json& j, std::size_t n) {
  AggregateStats s;
  s.mean = j.at("mean").get<double>();
  s.std = j.at("std").get<double>();
  s.n = n;
  return s;
}

}  // namespace

std::string summary_to_json(const SweepTable& table) {
  ordered_json j;
  j["schema_version"] = 1;
  j["rows"] = ordered_json::array();
  for (const auto& r : table.rows) {
    ordered_json jr;
    jr["dataset"] = r.dataset;
    jr["embedder"] = r.embedder;
    jr["model"] = r.model;
    jr["chunk_size"] = r.chunk_size;
    jr["n"] = r.iou.n;
    jr["iou"] = stats_to_json(r.iou);
    jr["recall"] = stats_to_json(r.recall);
    jr["p"] = stats_to_json(r.precision);
    jr["pomega"] = stats_to_json(r.pomega);
    j["rows"].push_back(std::move(jr));
  }
  j["errors"] = ordered_json::array();
  for (const auto& e : table.errors) {
    ordered_json je;
    je["dataset"] = e.dataset;
    je["embedder"] = e.embedder;
    je["model"] = e.model;
    je["chunk_size"] = e.chunk_size;
    je["error"] = e.message;
    j["errors"].push_back(std::move(je));
  }
  return j.dump(2) + "\n";
}

SweepTable summary_from_json(std::string_view json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(0, std::string("invalid summary JSON: ") + e.what());
  }
  SweepTable table;
  try {
    for (const auto& jr : j.at("rows")) {
      SweepRow r;
      r.dataset = jr.at("dataset").get<std::string>();
      r.embedder = jr.at("embedder").get<std::string>();
      r.model = jr.at("model").get<std::string>();
      r.chunk_size = jr.at("chunk_size").get<std::size_t>();
      const auto n = jr.at("n").get<std::size_t>();
      r.iou = stats_from_json(jr.at("iou"), n);
      r.recall = stats_from_json(jr.at("recall"), n);
      r.precision = stats_from_json(jr.at("p"), n);
      r.pomega = stats_from_json(jr.at("pomega"), n);
      table.rows.push_back(std::move(r));
    }
    if (j.contains("errors")) {
      for (const auto& je : j.at("errors")) {
        table.errors.push_back({je.at("dataset").get<std::string>(),
                                je.at("embedder").get<std::string>(),
                                je.at("model").get<std::string>(),
                                je.at("chunk_size").get<std::size_t>(),
                                je.at("error").get<std::string>()});
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(0, std::string("bad summary shape: ") + e.what());
  }
  return table;
}

}  // namespace spanbench
