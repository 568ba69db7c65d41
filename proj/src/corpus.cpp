#include "spanbench/corpus.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <istream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "spanbench/errors.hpp"
#include "spanbench/io.hpp"
#include "spanbench/utf8.hpp"

namespace spanbench {

using ordered_json = nlohmann::ordered_json;

namespace {

std::string normalize_newlines(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '\r') {
      out.push_back('\n');
      if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
    } else {
      out.push_back(text[i]);
    }
  }
  return out;
}

void reject_unknown_keys(const nlohmann::json& obj,
                         std::initializer_list<std::string_view> allowed,
                         int line_no, const std::string& where) {
  for (const auto& [key, _] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw SchemaError(line_no, "unknown key \"" + key + "\" in " + where);
    }
  }
}

Provenance parse_provenance(const nlohmann::json& j, int line_no) {
  if (!j.is_object()) throw SchemaError(line_no, "provenance must be an object");
  reject_unknown_keys(j, {"kind", "model", "timestamp", "seed", "template"},
                      line_no, "provenance");
  Provenance p;
  const std::string kind = j.value("kind", "");
  if (kind == "human") {
    p.kind = Provenance::Kind::human;
  } else if (kind == "synthetic") {
    p.kind = Provenance::Kind::synthetic;
  } else {
    throw SchemaError(line_no, "provenance.kind must be \"human\" or \"synthetic\"");
  }
  if (j.contains("model")) p.model = j.at("model").get<std::string>();
  if (j.contains("timestamp")) p.timestamp = j.at("timestamp").get<std::string>();
  if (j.contains("seed")) p.seed = j.at("seed").get<std::int64_t>();
  if (j.contains("template")) p.template_id = j.at("template").get<std::string>();
  return p;
}

ordered_json provenance_to_json(const Provenance& p) {
  ordered_json j;
  j["kind"] = p.kind == Provenance::Kind::human ? "human" : "synthetic";
  if (!p.model.empty()) j["model"] = p.model;
  if (!p.timestamp.empty()) j["timestamp"] = p.timestamp;
  if (p.seed) j["seed"] = *p.seed;
  if (!p.template_id.empty()) j["template"] = p.template_id;
  return j;
}

}  // namespace

const Document& Corpus::document(const std::string& doc_id) const {
  auto it = documents.find(doc_id);
  if (it == documents.end()) {
    throw UnknownDocument(doc_id, "unknown document \"" + doc_id + "\"");
  }
  return it->second;
}

bool Corpus::has_document(const std::string& doc_id) const {
  return documents.count(doc_id) > 0;
}

Document ingest_document(std::string_view raw_bytes, const std::string& doc_id,
                         bool lossy) {
  if (doc_id.empty()) throw SchemaError(0, "doc_id must be nonempty");
  std::string text = normalize_newlines(utf8::decode(raw_bytes, lossy));
  if (text.empty()) {
    throw EmptyDocument("document \"" + doc_id + "\" is empty after normalization");
  }
  Document doc;
  doc.doc_id = doc_id;
  doc.char_len = utf8::scalar_count(text);
  doc.text = std::move(text);
  return doc;
}

HighlightSpan validate_span(const Document& doc, const HighlightSpan& span) {
  if (span.start >= span.end || span.end > doc.char_len) {
    throw OutOfBounds("span [" + std::to_string(span.start) + ", " +
                      std::to_string(span.end) + ") out of bounds for document \"" +
                      doc.doc_id + "\" of length " + std::to_string(doc.char_len));
  }
  const std::string_view actual = utf8::slice(doc.text, span.start, span.end);
  if (actual != span.excerpt) {
    throw SpanMismatch("", "excerpt does not match document \"" + doc.doc_id +
                               "\" slice [" + std::to_string(span.start) + ", " +
                               std::to_string(span.end) + ")");
  }
  return span;
}

std::vector<HighlightSpan> merge_spans(const Corpus& corpus,
                                       std::vector<HighlightSpan> spans) {
  std::sort(spans.begin(), spans.end(), [](const auto& a, const auto& b) {
    return std::tie(a.doc_id, a.start, a.end) < std::tie(b.doc_id, b.start, b.end);
  });
  std::vector<HighlightSpan> merged;
  for (auto& s : spans) {
    if (!merged.empty() && merged.back().doc_id == s.doc_id &&
        s.start <= merged.back().end) {
      merged.back().end = std::max(merged.back().end, s.end);
    } else {
      merged.push_back(std::move(s));
    }
  }
  for (auto& s : merged) {
    const Document& doc = corpus.document(s.doc_id);
    s.excerpt = std::string(utf8::slice(doc.text, s.start, s.end));
  }
  return merged;
}

std::vector<QAPair> load_qa_dataset(std::istream& stream, const Corpus& corpus) {
  std::vector<QAPair> pairs;
  std::string line;
  int line_no = 0;
  while (std::getline(stream, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(line_no, std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw SchemaError(line_no, "record must be a JSON object");
    reject_unknown_keys(j, {"query_id", "question", "spans", "provenance"},
                        line_no, "record");

    QAPair pair;
    try {
      pair.query_id = j.at("query_id").get<std::string>();
      pair.question = j.at("question").get<std::string>();
      if (!j.at("spans").is_array() || j.at("spans").empty()) {
        throw SchemaError(line_no, "spans must be a nonempty array");
      }
      for (const auto& js : j.at("spans")) {
        reject_unknown_keys(js, {"doc", "start", "end", "excerpt"}, line_no, "span");
        HighlightSpan s;
        s.doc_id = js.at("doc").get<std::string>();
        const auto start = js.at("start").get<std::int64_t>();
        const auto end = js.at("end").get<std::int64_t>();
        if (start < 0 || end < 0) throw SchemaError(line_no, "negative span offset");
        s.start = static_cast<std::size_t>(start);
        s.end = static_cast<std::size_t>(end);
        s.excerpt = js.at("excerpt").get<std::string>();
        pair.spans.push_back(std::move(s));
      }
      if (j.contains("provenance")) {
        pair.provenance = parse_provenance(j.at("provenance"), line_no);
      }
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(line_no, std::string("bad record shape: ") + e.what());
    }
    if (pair.query_id.empty()) throw SchemaError(line_no, "query_id must be nonempty");
    if (pair.question.empty()) throw SchemaError(line_no, "question must be nonempty");

    for (const auto& s : pair.spans) {
      const Document& doc = corpus.document(s.doc_id);
      try {
        validate_span(doc, s);
      } catch (const SpanMismatch& e) {
        throw SpanMismatch(pair.query_id,
                           "query \"" + pair.query_id + "\": " + e.what());
      }
    }
    pair.spans = merge_spans(corpus, std::move(pair.spans));
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

std::string save_qa_dataset(const std::vector<QAPair>& pairs) {
  std::string out;
  for (const auto& pair : pairs) {
    ordered_json j;
    j["query_id"] = pair.query_id;
    j["question"] = pair.question;
    j["spans"] = ordered_json::array();
    for (const auto& s : pair.spans) {
      ordered_json js;
      js["doc"] = s.doc_id;
      js["start"] = s.start;
      js["end"] = s.end;
      js["excerpt"] = s.excerpt;
      j["spans"].push_back(std::move(js));
    }
    j["provenance"] = provenance_to_json(pair.provenance);
    out += j.dump();
    out += '\n';
  }
  return out;
}

Corpus load_manifest(const std::string& manifest_path, bool lossy) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(manifest_path));
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(0, "manifest " + manifest_path + ": " + e.what());
  }
  if (!j.is_object() || !j.contains("documents") || !j.at("documents").is_array()) {
    throw SchemaError(0, "manifest must be {\"documents\": [...]}");
  }
  if (j.at("documents").empty()) {
    throw SchemaError(0, "manifest lists no documents");
  }
  const auto base = std::filesystem::path(manifest_path).parent_path();
  Corpus corpus;
  for (const auto& entry : j.at("documents")) {
    std::string doc_id, rel;
    try {
      doc_id = entry.at("doc_id").get<std::string>();
      rel = entry.at("path").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(0, std::string("bad manifest entry: ") + e.what());
    }
    if (corpus.has_document(doc_id)) {
      throw SchemaError(0, "duplicate doc_id \"" + doc_id + "\" in manifest");
    }
    const auto path = (base / rel).string();
    corpus.documents.emplace(doc_id, ingest_document(read_file(path), doc_id, lossy));
  }
  return corpus;
}

std::string save_corpus_archive(const Corpus& corpus) {
  ordered_json j;
  j["schema_version"] = 1;
  j["documents"] = ordered_json::array();
  for (const auto& [_, doc] : corpus.documents) {
    ordered_json jd;
    jd["doc_id"] = doc.doc_id;
    jd["char_len"] = doc.char_len;
    jd["text"] = doc.text;
    j["documents"].push_back(std::move(jd));
  }
  return j.dump(2) + "\n";
}

Corpus load_corpus_archive(std::string_view json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(0, std::string("invalid corpus archive: ") + e.what());
  }
  if (!j.is_object() || !j.contains("documents")) {
    throw SchemaError(0, "corpus archive must contain \"documents\"");
  }
  Corpus corpus;
  for (const auto& jd : j.at("documents")) {
    std::string doc_id;
    try {
      doc_id = jd.at("doc_id").get<std::string>();
      if (corpus.has_document(doc_id)) {
        throw SchemaError(0, "duplicate doc_id \"" + doc_id + "\" in archive");
      }
      Document doc = ingest_document(jd.at("text").get<std::string>(), doc_id);
      if (jd.contains("char_len") &&
          jd.at("char_len").get<std::size_t>() != doc.char_len) {
        throw SchemaError(0, "char_len mismatch for document \"" + doc_id + "\"");
      }
      corpus.documents.emplace(doc_id, std::move(doc));
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(0, std::string("bad archive entry: ") + e.what());
    }
  }
  if (corpus.documents.empty()) throw SchemaError(0, "corpus archive lists no documents");
  return corpus;
}

Corpus load_corpus_any(const std::string& path, bool lossy) {
  const std::string text = read_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(0, "corpus file " + path + ": " + e.what());
  }
  if (j.is_object() && j.contains("documents") && j.at("documents").is_array() &&
      !j.at("documents").empty() && j.at("documents").front().contains("path")) {
    return load_manifest(path, lossy);
  }
  return load_corpus_archive(text);
}

}  // namespace spanbench
