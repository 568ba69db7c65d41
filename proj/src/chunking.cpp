#include "spanbench/chunking.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

#include "spanbench/errors.hpp"
#include "spanbench/utf8.hpp"

namespace spanbench {

std::vector<Token> tokenize(const Document& doc) {
  std::vector<Token> tokens;
  const auto scalars = utf8::scalars(doc.text);
  std::size_t i = 0;
  while (i < scalars.size()) {
    if (utf8::is_whitespace(scalars[i].cp)) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < scalars.size() && !utf8::is_whitespace(scalars[j].cp)) ++j;
    Token t;
    t.index = tokens.size();
    t.start = i;
    t.end = j;
    t.byte_start = scalars[i].byte_offset;
    t.byte_end = j < scalars.size() ? scalars[j].byte_offset : doc.text.size();
    tokens.push_back(t);
    i = j;
  }
  return tokens;
}

std::vector<Chunk> chunk_fixed(const Document& doc, std::span<const Token> tokens,
                               std::size_t size, std::size_t overlap,
                               std::size_t first_chunk_id) {
  if (size == 0) throw InvalidChunkSize("chunk size must be >= 1");
  if (overlap >= size) throw InvalidChunkSize("chunk overlap must be < chunk size");
  std::vector<Chunk> chunks;
  const std::size_t stride = size - overlap;
  for (std::size_t begin = 0; begin < tokens.size(); begin += stride) {
    const std::size_t end = std::min(begin + size, tokens.size());
    Chunk c;
    c.chunk_id = first_chunk_id + chunks.size();
    c.doc_id = doc.doc_id;
    c.token_start = begin;
    c.token_end = end;
    c.char_start = tokens[begin].start;
    c.char_end = tokens[end - 1].end;
    c.text = doc.text.substr(tokens[begin].byte_start,
                             tokens[end - 1].byte_end - tokens[begin].byte_start);
    chunks.push_back(std::move(c));
    if (end == tokens.size()) break;
  }
  return chunks;
}

CorpusChunking chunk_corpus(const Corpus& corpus, std::size_t size,
                            std::size_t overlap) {
  CorpusChunking out;
  std::size_t next_id = 0;
  for (const auto& [doc_id, doc] : corpus.documents) {
    auto tokens = tokenize(doc);
    auto chunks = chunk_fixed(doc, tokens, size, overlap, next_id);
    next_id += chunks.size();
    out.chunks.insert(out.chunks.end(), std::make_move_iterator(chunks.begin()),
                      std::make_move_iterator(chunks.end()));
    out.tokens.emplace(doc_id, std::move(tokens));
  }
  return out;
}

void TokenSet::add(const std::string& doc_id, std::size_t token_index) {
  docs_[doc_id].insert(token_index);
}

void TokenSet::add_range(const std::string& doc_id, std::size_t begin,
                         std::size_t end) {
  if (begin >= end) return;
  auto& s = docs_[doc_id];
  for (std::size_t i = begin; i < end; ++i) s.insert(i);
}

std::size_t TokenSet::size() const {
  std::size_t n = 0;
  for (const auto& [_, s] : docs_) n += s.size();
  return n;
}

std::size_t TokenSet::intersection_size(const TokenSet& other) const {
  std::size_t n = 0;
  for (const auto& [doc, s] : docs_) {
    auto it = other.docs_.find(doc);
    if (it == other.docs_.end()) continue;
    const auto& a = s.size() <= it->second.size() ? s : it->second;
    const auto& b = s.size() <= it->second.size() ? it->second : s;
    for (std::size_t idx : a) {
      if (b.count(idx)) ++n;
    }
  }
  return n;
}

std::size_t TokenSet::union_size(const TokenSet& other) const {
  return size() + other.size() - intersection_size(other);
}

bool TokenSet::intersects_range(const std::string& doc_id, std::size_t begin,
                                std::size_t end) const {
  if (begin >= end) return false;
  auto it = docs_.find(doc_id);
  if (it == docs_.end()) return false;
  auto lo = it->second.lower_bound(begin);
  return lo != it->second.end() && *lo < end;
}

std::string TokenSet::canonical_key() const {
  std::string key;
  for (const auto& [doc, s] : docs_) {
    key += doc;
    key += ':';
    bool first = true;
    for (std::size_t idx : s) {
      if (!first) key += ',';
      key += std::to_string(idx);
      first = false;
    }
    key += ';';
  }
  return key;
}

TokenSet span_to_token_set(const std::string& doc_id, std::span<const Token> tokens,
                           std::span<const HighlightSpan> spans) {
  TokenSet set;
  for (const auto& span : spans) {
    if (span.doc_id != doc_id) continue;
    for (const auto& t : tokens) {
      if (t.start < span.end && span.start < t.end) set.add(doc_id, t.index);
      if (t.start >= span.end) break;
    }
  }
  return set;
}

TokenSet span_to_token_set(const std::map<std::string, std::vector<Token>>& doc_tokens,
                           std::span<const HighlightSpan> spans) {
  TokenSet set;
  for (const auto& span : spans) {
    auto it = doc_tokens.find(span.doc_id);
    if (it == doc_tokens.end()) {
      throw UnknownDocument(span.doc_id,
                            "span references untokenized document \"" + span.doc_id + "\"");
    }
    for (const auto& t : it->second) {
      if (t.start < span.end && span.start < t.end) set.add(span.doc_id, t.index);
      if (t.start >= span.end) break;
    }
  }
  return set;
}

TokenSet chunks_to_token_set(std::span<const Chunk> chunks) {
  TokenSet set;
  for (const auto& c : chunks) set.add_range(c.doc_id, c.token_start, c.token_end);
  return set;
}

std::string chunk_dump_jsonl(std::span<const Chunk> chunks) {
  std::string out;
  for (const auto& c : chunks) {
    nlohmann::ordered_json j;
    j["chunk_id"] = c.chunk_id;
    j["doc_id"] = c.doc_id;
    j["token_start"] = c.token_start;
    j["token_end"] = c.token_end;
    j["char_start"] = c.char_start;
    j["char_end"] = c.char_end;
    out += j.dump();
    out += '\n';
  }
  return out;
}

}  // namespace spanbench
