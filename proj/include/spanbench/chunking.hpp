#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "spanbench/corpus.hpp"

namespace spanbench {

// A token is a maximal run of non-whitespace scalars (Unicode White_Space
// delimits). Punctuation stays attached. Offsets are scalar offsets into the
// document; byte offsets are carried alongside so slicing stays O(1).
struct Token {
  std::size_t index = 0;
  std::size_t start = 0;  // scalar offset, inclusive
  std::size_t end = 0;    // scalar offset, exclusive
  std::size_t byte_start = 0;
  std::size_t byte_end = 0;
};

struct Chunk {
  std::size_t chunk_id = 0;  // ordinal; corpus-global when chunked via chunk_corpus
  std::string doc_id;
  std::size_t token_start = 0;  // inclusive
  std::size_t token_end = 0;    // exclusive
  std::size_t char_start = 0;
  std::size_t char_end = 0;
  std::string text;
};

std::vector<Token> tokenize(const Document& doc);

// Greedy left-to-right grouping of `size` consecutive tokens; the final chunk
// may be shorter and is always kept. `overlap` tokens are shared between
// consecutive chunks (0 = disjoint tiling, the default everywhere that the
// coverage invariants matter). Throws InvalidChunkSize.
std::vector<Chunk> chunk_fixed(const Document& doc, std::span<const Token> tokens,
                               std::size_t size, std::size_t overlap = 0,
                               std::size_t first_chunk_id = 0);

// Chunks every document of the corpus (doc_id order) with corpus-global
// sequential chunk ids. Also returns the per-document token streams.
struct CorpusChunking {
  std::vector<Chunk> chunks;
  std::map<std::string, std::vector<Token>> tokens;
};
CorpusChunking chunk_corpus(const Corpus& corpus, std::size_t size,
                            std::size_t overlap = 0);

// Doc-scoped positional sets of token indices; the operand of every metric.
class TokenSet {
public:
  void add(const std::string& doc_id, std::size_t token_index);
  void add_range(const std::string& doc_id, std::size_t begin, std::size_t end);

  std::size_t size() const;
  bool empty() const { return size() == 0; }
  std::size_t intersection_size(const TokenSet& other) const;
  std::size_t union_size(const TokenSet& other) const;
  bool intersects_range(const std::string& doc_id, std::size_t begin,
                        std::size_t end) const;

  const std::map<std::string, std::set<std::size_t>>& docs() const { return docs_; }

  // Canonical "doc:i,j,k;doc2:..." form, usable as a cache key.
  std::string canonical_key() const;

private:
  std::map<std::string, std::set<std::size_t>> docs_;
};

// A token belongs to the set iff its character range overlaps a span by at
// least one scalar (partial overlap counts). Only spans referencing `doc_id`
// are considered.
TokenSet span_to_token_set(const std::string& doc_id, std::span<const Token> tokens,
                           std::span<const HighlightSpan> spans);

// Multi-document form: unions the per-document sets for every span.
TokenSet span_to_token_set(const std::map<std::string, std::vector<Token>>& doc_tokens,
                           std::span<const HighlightSpan> spans);

TokenSet chunks_to_token_set(std::span<const Chunk> chunks);

// Debug dump, one JSON object per chunk.
std::string chunk_dump_jsonl(std::span<const Chunk> chunks);

}  // namespace spanbench
