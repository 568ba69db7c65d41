#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "spanbench/chunking.hpp"

namespace spanbench {

// Token-level scoring between the highlight token set t_e and the retrieved
// token set t_r. Degenerate cases follow a vacuous-truth convention, pinned
// here and in the tests:
//   |t_e| = 0          -> recall = 1, precision_omega = 1
//   |t_r| = 0          -> precision = 1 if t_e is also empty, else 0
//   empty union        -> iou = 1
struct MetricQuadruple {
  double recall = 0.0;
  double precision = 0.0;
  double iou = 0.0;
  double precision_omega = 0.0;
};

double recall(const TokenSet& t_e, const TokenSet& t_r);
double precision(const TokenSet& t_e, const TokenSet& t_r);
double iou(const TokenSet& t_e, const TokenSet& t_r);

// Best precision achievable if retrieval returned exactly the chunks that
// overlap the highlights: |t_e ∩ tokens(S)| / |tokens(S)| where S is every
// chunk whose token range intersects t_e. A property of the chunking alone.
// `all_chunks` must be the complete chunking of the corpus.
double precision_omega(std::span<const Chunk> all_chunks, const TokenSet& t_e);

// Alternative |t_e ∩ t_r| / (|t_r| + |t_e|) form, kept behind an
// off-by-default compatibility switch in the evaluation config.
double precision_omega_literal(const TokenSet& t_e, const TokenSet& t_r);

struct AggregateStats {
  double mean = 0.0;
  double std = 0.0;  // sample std (n-1 denominator); 0 when n == 1
  std::size_t n = 0;
};

// Throws EmptyInput for an empty list.
AggregateStats aggregate(std::span<const double> values);

}  // namespace spanbench
