// spanbench: token-level benchmark harness for chunking + retrieval pipelines.
//
// Subcommands: ingest, generate, evaluate, sweep, report. Exit codes:
//   0 success, 1 usage/config, 2 data/validation, 3 zero yield, 4 provider.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "spanbench/chat.hpp"
#include "spanbench/chunking.hpp"
#include "spanbench/corpus.hpp"
#include "spanbench/errors.hpp"
#include "spanbench/evaluate.hpp"
#include "spanbench/io.hpp"
#include "spanbench/report.hpp"
#include "spanbench/synthgen.hpp"

namespace {

using nlohmann::json;
using namespace spanbench;

int exit_code_for(const Error& e) {
  switch (e.kind()) {
    case Error::Kind::config: return 1;
    case Error::Kind::data: return 2;
    case Error::Kind::yield: return 3;
    case Error::Kind::provider: return 4;
  }
  return 2;
}

// ${VAR} anywhere in a string value expands from the environment; secrets
// never appear on the command line this way.
std::string expand_env(const std::string& value) {
  std::string out;
  std::size_t pos = 0;
  while (pos < value.size()) {
    const std::size_t begin = value.find("${", pos);
    if (begin == std::string::npos) {
      out.append(value, pos, std::string::npos);
      break;
    }
    const std::size_t end = value.find('}', begin + 2);
    if (end == std::string::npos) {
      throw ConfigError("unterminated ${ in config value: " + value);
    }
    out.append(value, pos, begin - pos);
    const std::string name = value.substr(begin + 2, end - begin - 2);
    const char* env = std::getenv(name.c_str());
    if (!env) throw ConfigError("environment variable " + name + " is not set");
    out += env;
    pos = end + 1;
  }
  return out;
}

void reject_unknown(const json& obj, std::initializer_list<std::string_view> allowed,
                    const std::string& where) {
  for (const auto& [key, _] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError("unknown config key \"" + key + "\" in " + where);
    }
  }
}

std::string get_string(const json& j, const char* key, const std::string& fallback) {
  if (!j.contains(key)) return fallback;
  return expand_env(j.at(key).get<std::string>());
}

EmbeddingProviderConfig parse_embedding(const json& j, const std::string& where) {
  reject_unknown(j,
                 {"kind", "endpoint", "model", "dim", "batch_size", "timeout_ms",
                  "max_retries", "retry_backoff_ms", "api_key", "query_prefix",
                  "passage_prefix"},
                 where);
  EmbeddingProviderConfig c;
  c.kind = embedding_kind_from_string(get_string(j, "kind", "deterministic_mock"));
  c.endpoint = get_string(j, "endpoint", "");
  c.model_name = get_string(j, "model", c.kind == EmbeddingProviderConfig::Kind::deterministic_mock
                                            ? "mock"
                                            : "");
  if (j.contains("dim")) c.dim = j.at("dim").get<int>();
  if (j.contains("batch_size")) c.batch_size = j.at("batch_size").get<int>();
  if (j.contains("timeout_ms")) c.timeout_ms = j.at("timeout_ms").get<int>();
  if (j.contains("max_retries")) c.max_retries = j.at("max_retries").get<int>();
  if (j.contains("retry_backoff_ms")) c.retry_backoff_ms = j.at("retry_backoff_ms").get<int>();
  c.api_key = get_string(j, "api_key", "");
  c.query_prefix = get_string(j, "query_prefix", "");
  c.passage_prefix = get_string(j, "passage_prefix", "");
  return c;
}

ChatProviderConfig parse_chat(const json& j) {
  reject_unknown(j,
                 {"kind", "endpoint", "model", "temperature", "max_output_tokens",
                  "timeout_ms", "max_retries", "retry_backoff_ms", "api_key", "script"},
                 "chat");
  ChatProviderConfig c;
  c.kind = chat_kind_from_string(get_string(j, "kind", "http_openai_compatible"));
  c.endpoint = get_string(j, "endpoint", "");
  c.model_name = get_string(j, "model", "");
  if (j.contains("temperature")) c.temperature = j.at("temperature").get<double>();
  if (j.contains("max_output_tokens")) c.max_output_tokens = j.at("max_output_tokens").get<int>();
  if (j.contains("timeout_ms")) c.timeout_ms = j.at("timeout_ms").get<int>();
  if (j.contains("max_retries")) c.max_retries = j.at("max_retries").get<int>();
  if (j.contains("retry_backoff_ms")) c.retry_backoff_ms = j.at("retry_backoff_ms").get<int>();
  c.api_key = get_string(j, "api_key", "");
  if (j.contains("script")) {
    const std::string path = expand_env(j.at("script").get<std::string>());
    json script;
    try {
      script = json::parse(read_file(path));
    } catch (const json::exception& e) {
      throw ConfigError("chat.script " + path + ": " + e.what());
    }
    if (!script.is_array()) throw ConfigError("chat.script must hold a JSON array");
    for (const auto& r : script) c.script.push_back(r.get<std::string>());
  }
  return c;
}

struct CliConfig {
  std::string corpus_path;
  std::string dataset_path;
  std::string dataset_label;
  std::string model_label;
  EvalConfig eval;
  std::vector<std::size_t> sweep_chunk_sizes = {5, 10, 15, 20};
  std::vector<EmbeddingProviderConfig> sweep_embeddings;
  ChatProviderConfig chat;
  int num_questions = 3;
  int max_spans_per_question = 2;
  std::string prompt_template = "qa-v1";
  std::string timestamp;
  std::int64_t seed = 0;
  int parallelism = 1;
  std::string out_dir = "out";
  bool lossy = false;
};

CliConfig load_config(const std::string& path) {
  CliConfig c;
  if (path.empty()) return c;
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw ConfigError("config " + path + ": " + e.what());
  }
  reject_unknown(j,
                 {"corpus", "dataset", "dataset_label", "model_label", "chunk_size",
                  "chunk_overlap", "k", "pomega_literal", "per_document_index",
                  "embedding", "sweep", "chat", "generate", "parallelism", "seed",
                  "out", "lossy"},
                 "config");
  c.corpus_path = get_string(j, "corpus", "");
  c.dataset_path = get_string(j, "dataset", "");
  c.dataset_label = get_string(j, "dataset_label", "");
  c.model_label = get_string(j, "model_label", "");
  if (j.contains("chunk_size")) c.eval.chunk_size = j.at("chunk_size").get<std::size_t>();
  if (j.contains("chunk_overlap")) c.eval.chunk_overlap = j.at("chunk_overlap").get<std::size_t>();
  if (j.contains("k")) c.eval.k = j.at("k").get<std::size_t>();
  if (j.contains("pomega_literal")) c.eval.pomega_literal = j.at("pomega_literal").get<bool>();
  if (j.contains("per_document_index")) {
    c.eval.per_document_index = j.at("per_document_index").get<bool>();
  }
  if (j.contains("embedding")) c.eval.embedding = parse_embedding(j.at("embedding"), "embedding");
  if (j.contains("sweep")) {
    const auto& s = j.at("sweep");
    reject_unknown(s, {"chunk_sizes", "embeddings"}, "sweep");
    if (s.contains("chunk_sizes")) {
      c.sweep_chunk_sizes.clear();
      for (const auto& v : s.at("chunk_sizes")) {
        c.sweep_chunk_sizes.push_back(v.get<std::size_t>());
      }
    }
    if (s.contains("embeddings")) {
      for (const auto& e : s.at("embeddings")) {
        c.sweep_embeddings.push_back(parse_embedding(e, "sweep.embeddings"));
      }
    }
  }
  if (j.contains("chat")) c.chat = parse_chat(j.at("chat"));
  if (j.contains("generate")) {
    const auto& g = j.at("generate");
    reject_unknown(g, {"num_questions", "max_spans_per_question", "prompt_template",
                       "timestamp"},
                   "generate");
    if (g.contains("num_questions")) c.num_questions = g.at("num_questions").get<int>();
    if (g.contains("max_spans_per_question")) {
      c.max_spans_per_question = g.at("max_spans_per_question").get<int>();
    }
    c.prompt_template = get_string(g, "prompt_template", c.prompt_template);
    c.timestamp = get_string(g, "timestamp", "");
  }
  if (j.contains("parallelism")) c.parallelism = j.at("parallelism").get<int>();
  if (j.contains("seed")) c.seed = j.at("seed").get<std::int64_t>();
  c.out_dir = get_string(j, "out", c.out_dir);
  if (j.contains("lossy")) c.lossy = j.at("lossy").get<bool>();
  return c;
}

std::string default_timestamp(const std::string& configured) {
  if (!configured.empty()) return configured;
  std::time_t t;
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH")) {
    t = static_cast<std::time_t>(std::strtoll(epoch, nullptr, 10));
  } else {
    t = std::time(nullptr);
  }
  char buf[32];
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string dataset_label_for(const CliConfig& c) {
  if (!c.dataset_label.empty()) return c.dataset_label;
  if (!c.dataset_path.empty()) {
    return std::filesystem::path(c.dataset_path).stem().string();
  }
  return "dataset";
}

int cmd_ingest(const CliConfig& config, const std::string& manifest,
               const std::string& out_path) {
  Corpus corpus = load_manifest(manifest, config.lossy);
  write_file_atomic(out_path, save_corpus_archive(corpus));
  std::cout << "ingested " << corpus.documents.size() << " document(s) -> " << out_path
            << "\n";
  return 0;
}

int cmd_generate(const CliConfig& config) {
  if (config.num_questions < 1) {
    throw ConfigError("generate requires num_questions >= 1");
  }
  if (config.corpus_path.empty()) throw ConfigError("generate requires a corpus");
  Corpus corpus = load_corpus_any(config.corpus_path, config.lossy);
  auto provider = make_chat_provider(config.chat);

  std::vector<QAPair> all_pairs;
  nlohmann::ordered_json report;
  report["documents"] = nlohmann::ordered_json::array();
  std::size_t total_parsed = 0, total_rejected = 0;
  const std::string timestamp = default_timestamp(config.timestamp);

  for (const auto& [doc_id, doc] : corpus.documents) {
    GenerationRequest request;
    request.doc = doc;
    request.num_questions = config.num_questions;
    request.max_spans_per_question = config.max_spans_per_question;
    request.prompt_template_id = config.prompt_template;
    request.seed = config.seed;
    request.timestamp = timestamp;

    nlohmann::ordered_json doc_report;
    doc_report["doc_id"] = doc_id;
    try {
      GenerationResult result = generate_qa(*provider, request, config.chat.max_retries);
      total_parsed += result.report.parsed_answers;
      total_rejected += result.report.rejections.size();
      doc_report["emitted"] = result.pairs.size();
      doc_report["parsed_answers"] = result.report.parsed_answers;
      doc_report["malformed_items"] = result.report.malformed_items;
      doc_report["rejections"] = nlohmann::ordered_json::array();
      for (const auto& r : result.report.rejections) {
        doc_report["rejections"].push_back({{"question", r.question},
                                            {"reason", r.reason},
                                            {"detail", r.detail}});
      }
      doc_report["warnings"] = result.report.warnings;
      all_pairs.insert(all_pairs.end(), std::make_move_iterator(result.pairs.begin()),
                       std::make_move_iterator(result.pairs.end()));
    } catch (const ZeroYield& e) {
      doc_report["emitted"] = 0;
      doc_report["error"] = e.what();
    } catch (const MalformedModelOutput& e) {
      doc_report["emitted"] = 0;
      doc_report["error"] = e.what();
    }
    report["documents"].push_back(std::move(doc_report));
  }

  report["total_emitted"] = all_pairs.size();
  report["total_parsed"] = total_parsed;
  report["total_rejected"] = total_rejected;

  std::filesystem::create_directories(config.out_dir);
  const auto dataset_path = std::filesystem::path(config.out_dir) / "dataset.jsonl";
  const auto report_path = std::filesystem::path(config.out_dir) / "rejections.json";
  write_file_atomic(dataset_path.string(), save_qa_dataset(all_pairs));
  write_file_atomic(report_path.string(), report.dump(2) + "\n");
  std::cout << "generated " << all_pairs.size() << " QA pair(s) -> " << dataset_path.string()
            << "\n";
  if (all_pairs.empty()) throw ZeroYield("no document yielded any QA pair");
  return 0;
}

int run_eval_or_sweep(const CliConfig& config, bool is_sweep,
                      const std::string& dump_chunks_path) {
  if (config.corpus_path.empty()) throw ConfigError("missing corpus path");
  if (config.dataset_path.empty()) throw ConfigError("missing dataset path");
  if (config.eval.k < 1) throw ConfigError("k must be >= 1");
  if (!is_sweep && config.eval.chunk_size < 1) throw ConfigError("chunk_size must be >= 1");
  if (is_sweep) {
    if (config.sweep_chunk_sizes.empty()) {
      throw ConfigError("sweep requires at least one chunk size");
    }
    for (auto s : config.sweep_chunk_sizes) {
      if (s < 1) throw ConfigError("chunk_size must be >= 1");
    }
  }

  Corpus corpus = load_corpus_any(config.corpus_path, config.lossy);
  std::ifstream dataset_stream(config.dataset_path);
  if (!dataset_stream) throw DataError("cannot read dataset: " + config.dataset_path);
  const std::vector<QAPair> pairs = load_qa_dataset(dataset_stream, corpus);

  EvalConfig eval_config = config.eval;
  eval_config.dataset_label = dataset_label_for(config);
  eval_config.model_label = config.model_label;

  if (!dump_chunks_path.empty()) {
    const auto chunking = chunk_corpus(corpus, eval_config.chunk_size,
                                       eval_config.chunk_overlap);
    write_file_atomic(dump_chunks_path, chunk_dump_jsonl(chunking.chunks));
  }

  EmbeddingCache cache;
  std::vector<EvalRecord> records;
  SweepTable table;
  if (is_sweep) {
    std::vector<EmbeddingProviderConfig> providers = config.sweep_embeddings;
    if (providers.empty()) providers.push_back(config.eval.embedding);
    table = sweep(corpus, pairs, eval_config, config.sweep_chunk_sizes, providers,
                  config.parallelism, &cache, &records);
  } else {
    auto provider = make_embedding_provider(eval_config.embedding);
    EvalOutput output = evaluate(corpus, pairs, eval_config, *provider, &cache);
    records = std::move(output.records);
    table.rows.push_back(output.row);
  }

  std::filesystem::create_directories(config.out_dir);
  const auto records_path = std::filesystem::path(config.out_dir) / "records.jsonl";
  const auto summary_path = std::filesystem::path(config.out_dir) / "summary.json";
  write_file_atomic(records_path.string(), records_to_jsonl(records));
  write_file_atomic(summary_path.string(), summary_to_json(table));

  ReportSpec spec;
  spec.format = ReportSpec::Format::markdown;
  spec.bold_best = true;
  std::cout << emit(table, spec);

  if (is_sweep && table.rows.empty()) {
    throw DataError("every sweep cell failed; see " + summary_path.string());
  }
  return 0;
}

int cmd_report(const std::string& summary_path, const std::string& format,
               bool bold_best, bool bold_best_std, int precision,
               const std::string& out_path) {
  ReportSpec spec;
  spec.format = report_format_from_string(format);
  spec.bold_best = bold_best;
  spec.bold_best_std = bold_best_std;
  spec.float_precision = precision;
  const SweepTable table = summary_from_json(read_file(summary_path));
  const std::string rendered = emit(table, spec);
  if (out_path.empty()) {
    std::cout << rendered;
  } else {
    write_file_atomic(out_path, rendered);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"token-level benchmark harness for chunking and retrieval pipelines"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags remain valid after the subcommand name

  std::string config_path, out_dir_flag;
  int parallelism_flag = 0;
  std::int64_t seed_flag = 0;
  bool seed_set = false;
  app.add_option("--config", config_path, "JSON config file");
  app.add_option("--out", out_dir_flag, "output directory");
  app.add_option("--parallelism", parallelism_flag, "worker budget for sweeps");
  app.add_option("--seed", seed_flag, "generation seed")->each([&](const std::string&) {
    seed_set = true;
  });

  auto* ingest = app.add_subcommand("ingest", "validate a manifest and write a corpus archive");
  std::string manifest_path, ingest_out;
  bool lossy_flag = false;
  ingest->add_option("--manifest", manifest_path, "corpus manifest JSON")->required();
  ingest->add_option("--archive", ingest_out, "output archive path");
  ingest->add_flag("--lossy", lossy_flag, "replace invalid UTF-8 instead of failing");

  auto* generate = app.add_subcommand("generate", "synthesize QA pairs with a chat model");
  int num_questions_flag = -1;
  std::string timestamp_flag;
  generate->add_option("-n,--num-questions", num_questions_flag, "questions per document");
  generate->add_option("--timestamp", timestamp_flag, "provenance timestamp override");

  auto* evaluate_cmd = app.add_subcommand("evaluate", "run one configuration");
  auto* sweep_cmd = app.add_subcommand("sweep", "run a chunk-size x embedder sweep");
  std::string corpus_flag, dataset_flag, dump_chunks_path;
  std::int64_t chunk_size_flag = -1, k_flag = -1;
  for (auto* cmd : {evaluate_cmd, sweep_cmd}) {
    cmd->add_option("--corpus", corpus_flag, "corpus archive or manifest");
    cmd->add_option("--dataset", dataset_flag, "QA dataset JSONL");
    cmd->add_option("--k", k_flag, "top-k retrieval parameter");
  }
  evaluate_cmd->add_option("--chunk-size", chunk_size_flag, "tokens per chunk");
  evaluate_cmd->add_option("--dump-chunks", dump_chunks_path, "write chunk dump JSONL");
  generate->add_option("--corpus", corpus_flag, "corpus archive or manifest");

  auto* report_cmd = app.add_subcommand("report", "render a summary JSON");
  std::string summary_path, format_flag = "markdown", report_out;
  bool bold_best = false, bold_best_std = false;
  int precision_flag = 4;
  report_cmd->add_option("--summary", summary_path, "summary JSON path")->required();
  report_cmd->add_option("--format", format_flag, "csv | json | markdown");
  report_cmd->add_flag("--bold-best", bold_best, "bold best means per dataset");
  report_cmd->add_flag("--bold-best-std", bold_best_std, "bold lowest stds per dataset");
  report_cmd->add_option("--precision", precision_flag, "decimal places (1-10)");
  report_cmd->add_option("--out-file", report_out, "write to file instead of stdout");

  CLI11_PARSE(app, argc, argv);

  try {
    CliConfig config = load_config(config_path);
    if (!out_dir_flag.empty()) config.out_dir = out_dir_flag;
    if (parallelism_flag > 0) config.parallelism = parallelism_flag;
    if (seed_set) config.seed = seed_flag;
    if (!corpus_flag.empty()) config.corpus_path = corpus_flag;
    if (!dataset_flag.empty()) config.dataset_path = dataset_flag;
    if (chunk_size_flag >= 0) {
      if (chunk_size_flag == 0) throw ConfigError("chunk_size must be >= 1");
      config.eval.chunk_size = static_cast<std::size_t>(chunk_size_flag);
    }
    if (k_flag >= 0) {
      if (k_flag == 0) throw ConfigError("k must be >= 1");
      config.eval.k = static_cast<std::size_t>(k_flag);
    }
    if (lossy_flag) config.lossy = true;
    if (num_questions_flag >= 0) config.num_questions = num_questions_flag;
    if (!timestamp_flag.empty()) config.timestamp = timestamp_flag;

    if (ingest->parsed()) {
      std::string out = ingest_out;
      if (out.empty()) {
        out = (std::filesystem::path(config.out_dir) / "corpus.json").string();
      }
      return cmd_ingest(config, manifest_path, out);
    }
    if (generate->parsed()) return cmd_generate(config);
    if (evaluate_cmd->parsed()) return run_eval_or_sweep(config, false, dump_chunks_path);
    if (sweep_cmd->parsed()) return run_eval_or_sweep(config, true, "");
    if (report_cmd->parsed()) {
      return cmd_report(summary_path, format_flag, bold_best, bold_best_std,
                        precision_flag, report_out);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
