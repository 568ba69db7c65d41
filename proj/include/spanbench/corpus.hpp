#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace spanbench {

// All offsets in this toolkit are Unicode scalar values, not bytes, so
// datasets stay portable across implementations. Text is normalized on
// ingest: CRLF and lone CR become LF, nothing else is touched.
struct Document {
  std::string doc_id;
  std::string text;       // UTF-8, newline-normalized
  std::size_t char_len = 0;  // scalar values in `text`
};

struct HighlightSpan {
  std::string doc_id;
  std::size_t start = 0;  // inclusive, scalar offset
  std::size_t end = 0;    // exclusive
  std::string excerpt;    // must equal the document slice [start, end)
};

struct Provenance {
  enum class Kind { human, synthetic };
  Kind kind = Kind::human;
  std::string model;      // synthetic only
  std::string timestamp;  // synthetic only
  std::optional<std::int64_t> seed;
  std::string template_id;
};

struct QAPair {
  std::string query_id;
  std::string question;
  std::vector<HighlightSpan> spans;  // nonempty; merged, non-overlapping per doc
  Provenance provenance;
};

struct Corpus {
  std::map<std::string, Document> documents;
  std::vector<QAPair> qa_pairs;

  const Document& document(const std::string& doc_id) const;
  bool has_document(const std::string& doc_id) const;
};

// Decodes and normalizes raw bytes into a Document. Throws DecodeError for
// invalid UTF-8 unless `lossy`, EmptyDocument if nothing remains.
Document ingest_document(std::string_view raw_bytes, const std::string& doc_id,
                         bool lossy = false);

// Checks bounds and that the excerpt equals the document slice exactly.
// Throws OutOfBounds / SpanMismatch. Returns the validated span.
HighlightSpan validate_span(const Document& doc, const HighlightSpan& span);

// Coalesces overlapping or touching spans per document into maximal spans,
// re-deriving excerpts from the corpus text. Result is sorted by
// (doc_id, start). Idempotent and order-independent.
std::vector<HighlightSpan> merge_spans(const Corpus& corpus,
                                       std::vector<HighlightSpan> spans);

// JSON Lines dataset, one object per query:
//   {"query_id": str, "question": str,
//    "spans": [{"doc": str, "start": int, "end": int, "excerpt": str}],
//    "provenance": {"kind": "human"|"synthetic", "model"?, "timestamp"?,
//                   "seed"?, "template"?}}
// Validates every span against the corpus and merges overlapping spans.
// Throws SchemaError(line), SpanMismatch(query_id), UnknownDocument.
std::vector<QAPair> load_qa_dataset(std::istream& stream, const Corpus& corpus);

std::string save_qa_dataset(const std::vector<QAPair>& pairs);

// Corpus manifest: {"documents": [{"doc_id": str, "path": str}]}; paths are
// resolved relative to the manifest file. Document files are UTF-8 text.
Corpus load_manifest(const std::string& manifest_path, bool lossy = false);

// Normalized single-file corpus archive (documents only).
std::string save_corpus_archive(const Corpus& corpus);
Corpus load_corpus_archive(std::string_view json_text);

// Loads either a manifest or an archive, sniffing the document entries.
Corpus load_corpus_any(const std::string& path, bool lossy = false);

}  // namespace spanbench
