#include "spanbench/synthgen.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include <nlohmann/json.hpp>

#include "spanbench/errors.hpp"
#include "spanbench/utf8.hpp"

namespace spanbench {

namespace {

// Excerpt split into non-whitespace segments; whitespace runs between them
// match any whitespace run in the document.
struct ExcerptPattern {
  std::vector<std::u32string> segments;
};

ExcerptPattern compile_excerpt(const std::string& excerpt) {
  ExcerptPattern p;
  std::u32string current;
  for (const auto& s : utf8::scalars(excerpt)) {
    if (utf8::is_whitespace(s.cp)) {
      if (!current.empty()) {
        p.segments.push_back(std::move(current));
        current.clear();
      }
    } else {
      current.push_back(s.cp);
    }
  }
  if (!current.empty()) p.segments.push_back(std::move(current));
  return p;
}

// Tries to match the pattern with its first segment starting at scalar
// position `pos`. Returns the exclusive end position on success.
std::optional<std::size_t> match_at(const std::vector<utf8::Scalar>& doc,
                                    const ExcerptPattern& p, std::size_t pos) {
  std::size_t i = pos;
  for (std::size_t seg = 0; seg < p.segments.size(); ++seg) {
    if (seg > 0) {
      std::size_t ws = 0;
      while (i < doc.size() && utf8::is_whitespace(doc[i].cp)) {
        ++i;
        ++ws;
      }
      if (ws == 0) return std::nullopt;
    }
    for (char32_t cp : p.segments[seg]) {
      if (i >= doc.size() || doc[i].cp != cp) return std::nullopt;
      ++i;
    }
  }
  return i;
}

}  // namespace

AnchorResult anchor_excerpt(const Document& doc, const std::string& excerpt) {
  if (excerpt.empty()) throw std::invalid_argument("anchor_excerpt: empty excerpt");
  const ExcerptPattern pattern = compile_excerpt(excerpt);
  if (pattern.segments.empty()) {
    throw AnchorNotFound("excerpt is all whitespace in document \"" + doc.doc_id + "\"");
  }
  const auto scalars = utf8::scalars(doc.text);

  std::optional<std::size_t> first_start;
  std::optional<std::size_t> first_end;
  bool ambiguous = false;
  for (std::size_t pos = 0; pos < scalars.size(); ++pos) {
    if (scalars[pos].cp != pattern.segments.front().front()) continue;
    if (auto end = match_at(scalars, pattern, pos)) {
      if (!first_start) {
        first_start = pos;
        first_end = *end;
      } else {
        ambiguous = true;
        break;
      }
    }
  }
  if (!first_start) {
    throw AnchorNotFound("excerpt not found in document \"" + doc.doc_id + "\"");
  }

  AnchorResult result;
  result.span.doc_id = doc.doc_id;
  result.span.start = *first_start;
  result.span.end = *first_end;
  result.span.excerpt = std::string(utf8::slice(doc.text, *first_start, *first_end));
  result.ambiguous = ambiguous;
  return result;
}

std::string normalize_question(const std::string& question) {
  std::string out;
  bool pending_space = false;
  for (const auto& s : utf8::scalars(question)) {
    if (utf8::is_whitespace(s.cp)) {
      if (!out.empty()) pending_space = true;
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    if (s.cp < 0x80) {
      out.push_back(static_cast<char>(
          std::tolower(static_cast<unsigned char>(static_cast<char>(s.cp)))));
    } else {
      // non-ASCII kept as-is; full case folding is out of scope
      char buf[4];
      int len = 0;
      char32_t cp = s.cp;
      if (cp < 0x800) {
        buf[len++] = static_cast<char>(0xC0 | (cp >> 6));
        buf[len++] = static_cast<char>(0x80 | (cp & 0x3F));
      } else if (cp < 0x10000) {
        buf[len++] = static_cast<char>(0xE0 | (cp >> 12));
        buf[len++] = static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        buf[len++] = static_cast<char>(0x80 | (cp & 0x3F));
      } else {
        buf[len++] = static_cast<char>(0xF0 | (cp >> 18));
        buf[len++] = static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
        buf[len++] = static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        buf[len++] = static_cast<char>(0x80 | (cp & 0x3F));
      }
      out.append(buf, static_cast<std::size_t>(len));
    }
  }
  return out;
}

std::vector<QAPair> dedupe(std::vector<QAPair> pairs) {
  std::set<std::string> seen;
  std::vector<QAPair> out;
  out.reserve(pairs.size());
  for (auto& p : pairs) {
    if (seen.insert(normalize_question(p.question)).second) {
      out.push_back(std::move(p));
    }
  }
  return out;
}

std::string strip_think_segments(const std::string& text) {
  static constexpr std::string_view open = "<think>";
  static constexpr std::string_view close = "</think>";
  std::string out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t begin = text.find(open, pos);
    if (begin == std::string::npos) {
      out.append(text, pos, std::string::npos);
      break;
    }
    out.append(text, pos, begin - pos);
    const std::size_t end = text.find(close, begin + open.size());
    if (end == std::string::npos) break;  // unterminated: rest is thinking
    pos = end + close.size();
  }
  return out;
}

std::optional<std::string> extract_first_json_array(const std::string& text) {
  for (std::size_t start = text.find('['); start != std::string::npos;
       start = text.find('[', start + 1)) {
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = start; i < text.size(); ++i) {
      const char c = text[i];
      if (in_string) {
        if (escaped) {
          escaped = false;
        } else if (c == '\\') {
          escaped = true;
        } else if (c == '"') {
          in_string = false;
        }
        continue;
      }
      if (c == '"') {
        in_string = true;
      } else if (c == '[') {
        ++depth;
      } else if (c == ']') {
        if (--depth == 0) {
          std::string candidate = text.substr(start, i - start + 1);
          if (nlohmann::json::accept(candidate)) return candidate;
          break;
        }
      }
    }
  }
  return std::nullopt;
}

const PromptTemplate& prompt_template(const std::string& id) {
  static const std::vector<PromptTemplate> templates = {
      {"qa-v1",
       "You write retrieval evaluation questions for a document. Reply with a "
       "JSON array only, no prose and no code fences. Each element must be an "
       "object with exactly two keys: \"question\" (a self-contained question) "
       "and \"excerpts\" (1 to {max_spans} strings copied verbatim from the "
       "document, character for character). Every question must be answerable "
       "from its excerpts alone. When a question needs evidence from more than "
       "one place in the document, use multiple excerpts from those places.",
       "Generate {n} distinct questions for the document below.\n\nDOCUMENT:\n"
       "{document}"},
  };
  for (const auto& t : templates) {
    if (t.id == id) return t;
  }
  throw ConfigError("unknown prompt template \"" + id + "\"");
}

namespace {

std::string substitute(std::string text, const std::string& key,
                       const std::string& value) {
  const std::string needle = "{" + key + "}";
  for (std::size_t pos = text.find(needle); pos != std::string::npos;
       pos = text.find(needle, pos + value.size())) {
    text.replace(pos, needle.size(), value);
  }
  return text;
}

std::vector<RawModelAnswer> parse_answers(const std::string& content,
                                          std::size_t& malformed_items) {
  const std::string visible = strip_think_segments(content);
  const auto array_text = extract_first_json_array(visible);
  if (!array_text) return {};
  const auto arr = nlohmann::json::parse(*array_text);
  std::vector<RawModelAnswer> answers;
  for (const auto& item : arr) {
    if (!item.is_object() || !item.contains("question") || !item.contains("excerpts") ||
        !item.at("question").is_string() || !item.at("excerpts").is_array() ||
        item.at("excerpts").empty()) {
      ++malformed_items;
      continue;
    }
    RawModelAnswer a;
    a.question = item.at("question").get<std::string>();
    bool ok = !a.question.empty();
    for (const auto& e : item.at("excerpts")) {
      if (!e.is_string() || e.get<std::string>().empty()) {
        ok = false;
        break;
      }
      a.excerpts.push_back(e.get<std::string>());
    }
    if (!ok) {
      ++malformed_items;
      continue;
    }
    answers.push_back(std::move(a));
  }
  return answers;
}

}  // namespace

GenerationResult generate_qa(ChatProvider& provider, const GenerationRequest& request,
                             int max_retries) {
  if (request.doc.text.empty()) throw std::invalid_argument("generate_qa: empty document");
  if (request.num_questions < 1) throw ConfigError("num_questions must be >= 1");
  if (request.max_spans_per_question < 1) {
    throw ConfigError("max_spans_per_question must be >= 1");
  }
  const PromptTemplate& tmpl = prompt_template(request.prompt_template_id);

  Corpus doc_corpus;
  doc_corpus.documents.emplace(request.doc.doc_id, request.doc);

  GenerationResult result;
  std::vector<QAPair> accepted;
  std::set<std::string> seen_questions;
  bool any_parsed_output = false;

  for (int attempt = 0; attempt <= max_retries; ++attempt) {
    if (static_cast<int>(accepted.size()) >= request.num_questions) break;

    std::vector<ChatMessage> messages = {
        {"system",
         substitute(tmpl.system, "max_spans", std::to_string(request.max_spans_per_question))},
        {"user", substitute(substitute(tmpl.user, "n",
                                       std::to_string(request.num_questions)),
                            "document", request.doc.text)},
    };
    result.report.attempts += 1;
    std::string content;
    try {
      content = provider.complete(messages, request.seed);
    } catch (const Error& e) {
      // a failed top-up retry must not void pairs already in hand
      if (attempt > 0 && !accepted.empty() && e.kind() == Error::Kind::provider) {
        result.report.warnings.push_back(std::string("retry abandoned: ") + e.what());
        break;
      }
      throw;
    }
    auto answers = parse_answers(content, result.report.malformed_items);
    if (answers.empty()) continue;
    any_parsed_output = true;
    result.report.parsed_answers += answers.size();

    for (auto& answer : answers) {
      // duplicate questions are rejected, not silently dropped, so the
      // yield accounting stays exact
      if (!seen_questions.insert(normalize_question(answer.question)).second) {
        result.report.rejections.push_back(
            {request.doc.doc_id, answer.question, "duplicate", ""});
        continue;
      }
      if (static_cast<int>(accepted.size()) >= request.num_questions) {
        result.report.rejections.push_back(
            {request.doc.doc_id, answer.question, "surplus", ""});
        continue;
      }
      std::vector<HighlightSpan> spans;
      std::string bad_excerpt;
      for (const auto& excerpt : answer.excerpts) {
        try {
          AnchorResult anchored = anchor_excerpt(request.doc, excerpt);
          if (anchored.ambiguous) {
            result.report.warnings.push_back(
                "ambiguous excerpt for question \"" + answer.question +
                "\" in document \"" + request.doc.doc_id + "\"; first occurrence used");
          }
          spans.push_back(std::move(anchored.span));
        } catch (const AnchorNotFound&) {
          bad_excerpt = excerpt;
          break;
        }
      }
      if (!bad_excerpt.empty()) {
        result.report.rejections.push_back(
            {request.doc.doc_id, answer.question, "unanchorable", bad_excerpt});
        continue;
      }
      QAPair pair;
      pair.question = answer.question;
      pair.spans = merge_spans(doc_corpus, std::move(spans));
      pair.provenance.kind = Provenance::Kind::synthetic;
      pair.provenance.model = provider.model_label();
      pair.provenance.timestamp = request.timestamp;
      pair.provenance.seed = request.seed;
      pair.provenance.template_id = request.prompt_template_id;
      accepted.push_back(std::move(pair));
    }
  }

  if (!any_parsed_output) {
    throw MalformedModelOutput("no parseable model output after " +
                               std::to_string(result.report.attempts) + " attempt(s)");
  }
  if (accepted.empty()) {
    throw ZeroYield("no QA pair survived anchoring for document \"" +
                    request.doc.doc_id + "\"");
  }

  for (std::size_t i = 0; i < accepted.size(); ++i) {
    accepted[i].query_id = request.doc.doc_id + "-q" + std::to_string(i + 1);
  }
  result.pairs = std::move(accepted);
  return result;
}

}  // namespace spanbench
