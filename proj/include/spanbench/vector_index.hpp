#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "spanbench/chunking.hpp"

namespace spanbench {

struct ScoredChunk {
  std::size_t chunk_id = 0;
  double score = 0.0;
};

// Ranked top-k result: scores non-increasing, ties broken by ascending
// chunk_id, length <= k.
using Retrieved = std::vector<ScoredChunk>;

// Immutable brute-force index over the full corpus chunking. Searches are
// exact and safe to run concurrently. Entries keep their own contiguous
// vectors so search scores are bit-identical to cosine_similarity calls.
class VectorIndex {
public:
  VectorIndex() = default;

  std::size_t size() const { return chunk_ids_.size(); }
  Eigen::Index dim() const { return dim_; }
  std::span<const std::size_t> chunk_ids() const { return chunk_ids_; }

  friend VectorIndex build_index(std::span<const Chunk> chunks,
                                 const std::vector<Eigen::VectorXd>& vectors);
  friend Retrieved search(const VectorIndex& index, const Eigen::VectorXd& query,
                          std::size_t k);

private:
  std::vector<Eigen::VectorXd> vectors_;
  std::vector<std::size_t> chunk_ids_;
  Eigen::Index dim_ = 0;
};

// Throws LengthMismatch / DimensionMismatch / DataError (duplicate chunk ids,
// non-finite values).
VectorIndex build_index(std::span<const Chunk> chunks,
                        const std::vector<Eigen::VectorXd>& vectors);

// Exact cosine top-k. Zero-norm vectors (entry or query) score 0. Returns
// fewer than k entries only when the index is smaller than k.
Retrieved search(const VectorIndex& index, const Eigen::VectorXd& query,
                 std::size_t k);

// Shared cosine routine; 0 when either vector has zero norm.
double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

}  // namespace spanbench
