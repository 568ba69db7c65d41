#include "spanbench/metrics.hpp"

#include <cmath>

#include "spanbench/errors.hpp"

namespace spanbench {

double recall(const TokenSet& t_e, const TokenSet& t_r) {
  const std::size_t ne = t_e.size();
  if (ne == 0) return 1.0;
  return static_cast<double>(t_e.intersection_size(t_r)) / static_cast<double>(ne);
}

double precision(const TokenSet& t_e, const TokenSet& t_r) {
  const std::size_t nr = t_r.size();
  if (nr == 0) return t_e.empty() ? 1.0 : 0.0;
  return static_cast<double>(t_e.intersection_size(t_r)) / static_cast<double>(nr);
}

double iou(const TokenSet& t_e, const TokenSet& t_r) {
  const std::size_t overlap = t_e.intersection_size(t_r);
  const std::size_t uni = t_e.size() + t_r.size() - overlap;
  if (uni == 0) return 1.0;
  return static_cast<double>(overlap) / static_cast<double>(uni);
}

double precision_omega(std::span<const Chunk> all_chunks, const TokenSet& t_e) {
  if (t_e.empty()) return 1.0;
  TokenSet covered;
  for (const auto& c : all_chunks) {
    if (t_e.intersects_range(c.doc_id, c.token_start, c.token_end)) {
      covered.add_range(c.doc_id, c.token_start, c.token_end);
    }
  }
  const std::size_t denom = covered.size();
  if (denom == 0) return 0.0;  // highlights exist but no chunk reaches them
  return static_cast<double>(t_e.intersection_size(covered)) /
         static_cast<double>(denom);
}

double precision_omega_literal(const TokenSet& t_e, const TokenSet& t_r) {
  const std::size_t denom = t_e.size() + t_r.size();
  if (denom == 0) return 1.0;
  return static_cast<double>(t_e.intersection_size(t_r)) / static_cast<double>(denom);
}

AggregateStats aggregate(std::span<const double> values) {
  if (values.empty()) throw EmptyInput("aggregate over empty value list");
  AggregateStats stats;
  stats.n = values.size();
  double sum = 0.0;
  for (double v : values) sum += v;
  stats.mean = sum / static_cast<double>(stats.n);
  if (stats.n > 1) {
    double ss = 0.0;
    for (double v : values) {
      const double d = v - stats.mean;
      ss += d * d;
    }
    stats.std = std::sqrt(ss / static_cast<double>(stats.n - 1));
  }
  return stats;
}

}  // namespace spanbench
