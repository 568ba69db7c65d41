#include "spanbench/report.hpp"

#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include <nlohmann/json.hpp>

#include "spanbench/errors.hpp"

namespace spanbench {

using ordered_json = nlohmann::ordered_json;

ReportSpec::Format report_format_from_string(const std::string& s) {
  if (s == "csv") return ReportSpec::Format::csv;
  if (s == "json") return ReportSpec::Format::json;
  if (s == "markdown" || s == "md") return ReportSpec::Format::markdown;
  throw ConfigError("unknown report format \"" + s + "\"");
}

std::string format_fixed(double value, int places) {
  double scale = 1.0;
  for (int i = 0; i < places; ++i) scale *= 10.0;
  // nearbyint under the default FE_TONEAREST mode implements half-even
  const auto scaled = static_cast<std::int64_t>(std::nearbyint(value * scale));
  const bool negative = scaled < 0;
  std::string digits = std::to_string(negative ? -scaled : scaled);
  if (digits.size() <= static_cast<std::size_t>(places)) {
    digits.insert(0, static_cast<std::size_t>(places) + 1 - digits.size(), '0');
  }
  digits.insert(digits.size() - static_cast<std::size_t>(places), ".");
  return negative ? "-" + digits : digits;
}

namespace {

constexpr const char* kCsvHeader =
    "dataset,embedder,model,chunk_size,iou_mean,iou_std,recall_mean,recall_std,"
    "p_mean,p_std,pomega_mean,pomega_std,n";

struct RowCells {
  const SweepRow* row;
  std::vector<std::string> cells;  // matches kCsvHeader order
};

std::vector<RowCells> render_cells(const SweepTable& table, int places) {
  std::vector<RowCells> out;
  for (const auto& r : table.rows) {
    RowCells rc;
    rc.row = &r;
    rc.cells = {r.dataset,
                r.embedder,
                r.model,
                std::to_string(r.chunk_size),
                format_fixed(r.iou.mean, places),
                format_fixed(r.iou.std, places),
                format_fixed(r.recall.mean, places),
                format_fixed(r.recall.std, places),
                format_fixed(r.precision.mean, places),
                format_fixed(r.precision.std, places),
                format_fixed(r.pomega.mean, places),
                format_fixed(r.pomega.std, places),
                std::to_string(r.iou.n)};
    out.push_back(std::move(rc));
  }
  return out;
}

std::string emit_csv(const SweepTable& table, const ReportSpec& spec) {
  std::string out = kCsvHeader;
  out += '\n';
  for (const auto& rc : render_cells(table, spec.float_precision)) {
    for (std::size_t i = 0; i < rc.cells.size(); ++i) {
      if (i) out += ',';
      out += rc.cells[i];
    }
    out += '\n';
  }
  return out;
}

std::string emit_json(const SweepTable& table, const ReportSpec& spec) {
  double scale = 1.0;
  for (int i = 0; i < spec.float_precision; ++i) scale *= 10.0;
  auto rounded = [&](double v) { return std::nearbyint(v * scale) / scale; };

  ordered_json j;
  j["rows"] = ordered_json::array();
  for (const auto& r : table.rows) {
    ordered_json jr;
    jr["dataset"] = r.dataset;
    jr["embedder"] = r.embedder;
    jr["model"] = r.model;
    jr["chunk_size"] = r.chunk_size;
    jr["iou_mean"] = rounded(r.iou.mean);
    jr["iou_std"] = rounded(r.iou.std);
    jr["recall_mean"] = rounded(r.recall.mean);
    jr["recall_std"] = rounded(r.recall.std);
    jr["p_mean"] = rounded(r.precision.mean);
    jr["p_std"] = rounded(r.precision.std);
    jr["pomega_mean"] = rounded(r.pomega.mean);
    jr["pomega_std"] = rounded(r.pomega.std);
    jr["n"] = r.iou.n;
    j["rows"].push_back(std::move(jr));
  }
  j["errors"] = ordered_json::array();
  for (const auto& e : table.errors) {
    j["errors"].push_back({{"dataset", e.dataset},
                           {"embedder", e.embedder},
                           {"model", e.model},
                           {"chunk_size", e.chunk_size},
                           {"error", e.message}});
  }
  return j.dump(2) + "\n";
}

std::string emit_markdown(const SweepTable& table, const ReportSpec& spec) {
  auto cells = render_cells(table, spec.float_precision);

  if (spec.bold_best || spec.bold_best_std) {
    // per dataset group: bold the best mean (max) and, when asked, the best
    // (lowest) std for each metric column; ties all get bolded
    const std::vector<std::size_t> mean_cols = {4, 6, 8, 10};
    const std::vector<std::size_t> std_cols = {5, 7, 9, 11};
    std::map<std::string, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      groups[cells[i].row->dataset].push_back(i);
    }
    auto metric = [](const SweepRow& r, std::size_t col) {
      switch (col) {
        case 4: return r.iou.mean;
        case 5: return r.iou.std;
        case 6: return r.recall.mean;
        case 7: return r.recall.std;
        case 8: return r.precision.mean;
        case 9: return r.precision.std;
        case 10: return r.pomega.mean;
        default: return r.pomega.std;
      }
    };
    for (const auto& [_, members] : groups) {
      auto mark = [&](std::size_t col, bool maximize) {
        double best = metric(*cells[members.front()].row, col);
        for (std::size_t i : members) {
          const double v = metric(*cells[i].row, col);
          if (maximize ? v > best : v < best) best = v;
        }
        for (std::size_t i : members) {
          if (metric(*cells[i].row, col) == best) {
            cells[i].cells[col] = "**" + cells[i].cells[col] + "**";
          }
        }
      };
      if (spec.bold_best) {
        for (std::size_t col : mean_cols) mark(col, true);
      }
      if (spec.bold_best_std) {
        for (std::size_t col : std_cols) mark(col, false);
      }
    }
  }

  const std::vector<std::string> header = {
      "dataset", "embedder", "model", "chunk_size", "iou_mean", "iou_std",
      "recall_mean", "recall_std", "p_mean", "p_std", "pomega_mean",
      "pomega_std", "n"};
  std::vector<std::size_t> widths(header.size());
  for (std::size_t i = 0; i < header.size(); ++i) widths[i] = header[i].size();
  for (const auto& rc : cells) {
    for (std::size_t i = 0; i < rc.cells.size(); ++i) {
      widths[i] = std::max(widths[i], rc.cells[i].size());
    }
  }

  auto pad = [](const std::string& s, std::size_t w) {
    return s + std::string(w - s.size(), ' ');
  };
  std::string out = "|";
  for (std::size_t i = 0; i < header.size(); ++i) out += " " + pad(header[i], widths[i]) + " |";
  out += "\n|";
  for (std::size_t i = 0; i < header.size(); ++i) out += std::string(widths[i] + 2, '-') + "|";
  out += "\n";
  for (const auto& rc : cells) {
    out += "|";
    for (std::size_t i = 0; i < rc.cells.size(); ++i) {
      out += " " + pad(rc.cells[i], widths[i]) + " |";
    }
    out += "\n";
  }
  for (const auto& e : table.errors) {
    out += "ERROR " + e.dataset + "/" + e.embedder + "/" + e.model + "/size=" +
           std::to_string(e.chunk_size) + ": " + e.message + "\n";
  }
  return out;
}

}  // namespace

std::string emit(const SweepTable& table, const ReportSpec& spec) {
  if (spec.float_precision < 1 || spec.float_precision > 10) {
    throw ConfigError("float_precision must be in [1, 10]");
  }
  if (table.rows.empty() && table.errors.empty()) {
    throw EmptyTable("nothing to render");
  }
  switch (spec.format) {
    case ReportSpec::Format::csv: return emit_csv(table, spec);
    case ReportSpec::Format::json: return emit_json(table, spec);
    case ReportSpec::Format::markdown: return emit_markdown(table, spec);
  }
  throw ConfigError("unknown report format");
}

}  // namespace spanbench
