#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "spanbench/chat.hpp"
#include "spanbench/corpus.hpp"

namespace spanbench {

struct GenerationRequest {
  Document doc;
  int num_questions = 3;
  int max_spans_per_question = 2;  // >1 enables multi-hop questions
  std::string prompt_template_id = "qa-v1";
  std::int64_t seed = 0;
  std::string timestamp;  // recorded in provenance as given
};

struct RawModelAnswer {
  std::string question;
  std::vector<std::string> excerpts;
};

struct AnchorResult {
  HighlightSpan span;
  bool ambiguous = false;  // matched more than one location; first wins
};

// Locates `excerpt` in the document by exact substring match where runs of
// whitespace on either side compare equal. The span is reported in original
// document offsets and always satisfies validate_span. Leading/trailing
// whitespace of the excerpt is ignored. Throws AnchorNotFound.
AnchorResult anchor_excerpt(const Document& doc, const std::string& excerpt);

// Drops pairs whose normalized question (ASCII-case-folded,
// whitespace-collapsed) duplicates an earlier pair. Stable.
std::vector<QAPair> dedupe(std::vector<QAPair> pairs);

struct Rejection {
  std::string doc_id;
  std::string question;
  std::string reason;   // "unanchorable" | "duplicate" | "surplus"
  std::string detail;   // offending excerpt for unanchorable
};

struct GenerationReport {
  std::size_t parsed_answers = 0;    // well-formed {question, excerpts} objects
  std::size_t malformed_items = 0;   // array elements that failed the shape
  std::size_t attempts = 0;          // chat calls made
  std::vector<Rejection> rejections;
  std::vector<std::string> warnings;  // e.g. ambiguous anchors
};

struct GenerationResult {
  std::vector<QAPair> pairs;
  GenerationReport report;
};

// Prompts the chat provider for {question, excerpts} records, anchors every
// excerpt verbatim, rejects answers containing unanchorable excerpts, and
// retries the provider until `num_questions` pairs are collected or
// max_retries extra attempts are spent. Emitted + rejected == parsed answers.
// Throws MalformedModelOutput when no attempt yields parseable output and
// ZeroYield when nothing survives validation.
GenerationResult generate_qa(ChatProvider& provider, const GenerationRequest& request,
                             int max_retries = 2);

// Versioned prompt templates shipped with the toolkit.
struct PromptTemplate {
  std::string id;
  std::string system;
  std::string user;  // with {n}, {max_spans}, {document} placeholders
};
const PromptTemplate& prompt_template(const std::string& id);

// Parsing helpers for reasoning-model output (exposed for tests).
std::string strip_think_segments(const std::string& text);
std::optional<std::string> extract_first_json_array(const std::string& text);
std::string normalize_question(const std::string& question);

}  // namespace spanbench
