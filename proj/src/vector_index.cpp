#include "spanbench/vector_index.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "spanbench/errors.hpp"

namespace spanbench {

double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) {
    throw DimensionMismatch("cosine over dims " + std::to_string(a.size()) + " and " +
                            std::to_string(b.size()));
  }
  // sequential accumulation, index order 0..n-1: rankings must be bit-stable
  // across platforms and reproducible from the documented scheme in any
  // language, so no reassociating (SIMD) reductions here
  double dot = 0.0, sa = 0.0, sb = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    sa += a[i] * a[i];
    sb += b[i] * b[i];
  }
  const double na = std::sqrt(sa);
  const double nb = std::sqrt(sb);
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (na * nb);
}

VectorIndex build_index(std::span<const Chunk> chunks,
                        const std::vector<Eigen::VectorXd>& vectors) {
  if (chunks.size() != vectors.size()) {
    throw LengthMismatch("build_index: " + std::to_string(chunks.size()) +
                         " chunks vs " + std::to_string(vectors.size()) + " vectors");
  }
  VectorIndex index;
  if (chunks.empty()) return index;

  const Eigen::Index dim = vectors.front().size();
  std::set<std::size_t> seen;
  index.dim_ = dim;
  index.vectors_.reserve(chunks.size());
  index.chunk_ids_.reserve(chunks.size());
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    if (vectors[i].size() != dim) {
      throw DimensionMismatch("build_index: vector " + std::to_string(i) + " has dim " +
                              std::to_string(vectors[i].size()) + ", expected " +
                              std::to_string(dim));
    }
    if (!vectors[i].allFinite()) {
      throw DataError("build_index: non-finite vector at entry " + std::to_string(i));
    }
    if (!seen.insert(chunks[i].chunk_id).second) {
      throw DataError("build_index: duplicate chunk id " +
                      std::to_string(chunks[i].chunk_id));
    }
    index.vectors_.push_back(vectors[i]);
    index.chunk_ids_.push_back(chunks[i].chunk_id);
  }
  return index;
}

Retrieved search(const VectorIndex& index, const Eigen::VectorXd& query,
                 std::size_t k) {
  if (k == 0) throw ConfigError("search requires k >= 1");
  if (index.size() == 0) return {};
  if (query.size() != index.dim()) {
    throw DimensionMismatch("query dim " + std::to_string(query.size()) +
                            " vs index dim " + std::to_string(index.dim()));
  }
  if (!query.allFinite()) throw DataError("search: non-finite query vector");

  const std::size_t n = index.size();
  std::vector<ScoredChunk> scored(n);
  for (std::size_t i = 0; i < n; ++i) {
    scored[i] = {index.chunk_ids_[i], cosine_similarity(index.vectors_[i], query)};
  }

  const std::size_t take = std::min(k, n);
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take),
                    scored.end(), [](const ScoredChunk& a, const ScoredChunk& b) {
                      if (a.score != b.score) return a.score > b.score;
                      return a.chunk_id < b.chunk_id;
                    });
  scored.resize(take);
  return scored;
}

}  // namespace spanbench
