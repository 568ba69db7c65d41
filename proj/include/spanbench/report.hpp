#pragma once

#include <string>

#include "spanbench/evaluate.hpp"

namespace spanbench {

struct ReportSpec {
  enum class Format { csv, json, markdown };
  Format format = Format::markdown;
  bool bold_best = false;      // markdown: bold the best mean per column per dataset
  bool bold_best_std = false;  // markdown: also bold the lowest std per column
  int float_precision = 4;     // decimal places, half-even rounding
};

ReportSpec::Format report_format_from_string(const std::string& s);

// Deterministic rendering of a sweep table. CSV carries the pinned header
//   dataset,embedder,model,chunk_size,iou_mean,iou_std,recall_mean,recall_std,
//   p_mean,p_std,pomega_mean,pomega_std,n
// and valid rows only; markdown appends error-marker lines for failed cells;
// JSON carries rows and errors. Throws EmptyTable when there is nothing to
// render.
std::string emit(const SweepTable& table, const ReportSpec& spec);

// Half-even fixed-point formatting used for all rendered numbers.
std::string format_fixed(double value, int places);

}  // namespace spanbench
