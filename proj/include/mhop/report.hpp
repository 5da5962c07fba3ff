// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mhop/error.hpp"
#include "mhop/scoring.hpp"
#include "mhop/text.hpp"

namespace mhop::report {

struct ReportRow {
  std::string label;
  double single_pct = 0.0;  // accuracy in percent
  double multi_pct = 0.0;
  double abs_improvement_pp = 0.0;
  std::optional<double> rel_improvement_pct;  // undefined when single accuracy is 0

  bool operator==(const ReportRow&) const = default;
};

inline constexpr std::string_view kImprovementNote =
    "Note: improvement columns are derived from the accuracy columns: absolute = multi - single "
    "(percentage points), relative = (multi - single) / single x 100 (percent). Reference improvement "
    "figures that match neither definition are not carried over.";

inline ReportRow make_row(std::string label, double single_pct, double multi_pct) {
  ReportRow row;
  row.label = std::move(label);
  row.single_pct = single_pct;
  row.multi_pct = multi_pct;
  row.abs_improvement_pp = multi_pct - single_pct;
  if (single_pct != 0.0) row.rel_improvement_pct = row.abs_improvement_pp / single_pct * 100.0;
  return row;
}

inline ReportRow compare_report(const scoring::ScoreSummary& single, const scoring::ScoreSummary& multi, std::string label) {
  if (single.empty || multi.empty)
    throw Error(ErrorKind::precondition_violation, "comparison needs two non-empty summaries");
  return make_row(std::move(label), single.accuracy * 100.0, multi.accuracy * 100.0);
}

inline std::string pct(double v) { return text::format_fixed(v, 2); }

inline std::string signed_pct(double v) {
  auto s = text::format_fixed(v, 2);
  return s.front() == '-' ? s : "+" + s;
}

inline std::string signed_pct(const std::optional<double>& v) { return v ? signed_pct(*v) : "n/a"; }

namespace detail {

inline std::string pad(std::string_view s, std::size_t width, bool right) {
  std::string cell(s);
  // Width counts bytes; labels are expected to be ASCII.
  if (cell.size() >= width) return cell;
  std::string fill(width - cell.size(), ' ');
  return right ? fill + cell : cell + fill;
}

inline std::string aligned(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> widths(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) {
    widths[c] = header[c].size();
    for (const auto& r : rows) widths[c] = std::max(widths[c], r[c].size());
  }
  auto line = [&](const std::vector<std::string>& cells) {
    std::string out;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c) out += "  ";
      out += pad(cells[c], widths[c], c > 0);
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out + "\n";
  };
  std::string out = line(header);
  std::size_t total = 0;
  for (auto w : widths) total += w;
  out += std::string(total + 2 * (widths.size() - 1), '-') + "\n";
  for (const auto& r : rows) out += line(r);
  return out;
}

inline std::string markdown(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
  auto line = [](const std::vector<std::string>& cells) { return "| " + text::join(cells, " | ") + " |\n"; };
  std::string out = line(header);
  std::string sep = "|";
  for (std::size_t c = 0; c < header.size(); ++c) sep += c == 0 ? " --- |" : " ---: |";
  out += sep + "\n";
  for (const auto& r : rows) out += line(r);
  return out;
}

inline const std::vector<std::string>& comparison_header() {
  static const std::vector<std::string> h{"Configuration", "Single-hop accuracy (%)", "Multi-hop accuracy (%)",
                                          "Abs. improvement (pp)", "Rel. improvement (%)"};
  return h;
}

inline std::vector<std::vector<std::string>> comparison_cells(std::span<const ReportRow> rows) {
  std::vector<std::vector<std::string>> cells;
  for (const auto& r : rows)
    cells.push_back({r.label, pct(r.single_pct), pct(r.multi_pct), signed_pct(r.abs_improvement_pp),
                     signed_pct(r.rel_improvement_pct)});
  return cells;
}

}  // namespace detail

inline std::string render_text(std::span<const ReportRow> rows) {
  return detail::aligned(detail::comparison_header(), detail::comparison_cells(rows)) + "\n" +
         std::string(kImprovementNote) + "\n";
}

inline std::string render_markdown(std::span<const ReportRow> rows) {
  return detail::markdown(detail::comparison_header(), detail::comparison_cells(rows)) + "\n" +
         std::string(kImprovementNote) + "\n";
}

namespace detail {

inline std::vector<std::vector<std::string>> summary_cells(std::span<const scoring::ScoreSummary> summaries) {
  std::vector<std::vector<std::string>> cells;
  for (const auto& s : summaries)
    cells.push_back({s.label, std::to_string(s.total), std::to_string(s.correct),
                     s.empty ? "n/a (empty)" : pct(s.accuracy * 100.0)});
  return cells;
}

inline const std::vector<std::string>& summary_header() {
  static const std::vector<std::string> h{"Mode", "Total", "Correct", "Accuracy (%)"};
  return h;
}

}  // namespace detail

/// Per-mode summary without improvement columns (used when only one log is scored).
inline std::string render_summary_text(std::span<const scoring::ScoreSummary> summaries) {
  return detail::aligned(detail::summary_header(), detail::summary_cells(summaries));
}

inline std::string render_summary_markdown(std::span<const scoring::ScoreSummary> summaries) {
  return detail::markdown(detail::summary_header(), detail::summary_cells(summaries));
}

inline constexpr std::string_view kPlotHeader =
    "configuration,single_accuracy,multi_accuracy,abs_improvement_pp,rel_improvement_pct";

/// Values are written at full precision; an undefined relative improvement is an empty field.
inline std::string plot_data_csv(std::span<const ReportRow> rows) {
  std::string out = std::string(kPlotHeader) + "\n";
  for (const auto& r : rows) {
    out += text::csv_escape(r.label) + "," + text::format_double(r.single_pct) + "," + text::format_double(r.multi_pct) +
           "," + text::format_double(r.abs_improvement_pp) + "," +
           (r.rel_improvement_pct ? text::format_double(*r.rel_improvement_pct) : std::string()) + "\n";
  }
  return out;
}

inline void emit_plot_data(std::span<const ReportRow> rows, const std::filesystem::path& path) {
  text::write_file(path, plot_data_csv(rows));
}

inline std::vector<ReportRow> parse_plot_data(std::string_view csv) {
  auto rows = text::parse_csv(csv);
  if (rows.empty() || text::join(rows.front(), ",") != kPlotHeader)
    throw Error(ErrorKind::malformed_syntax, "plot data header mismatch");
  auto number = [](const std::string& s) {
    try {
      std::size_t used = 0;
      double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw Error(ErrorKind::malformed_syntax, "bad number '" + s + "' in plot data");
    }
  };
  std::vector<ReportRow> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.size() != 5) throw Error(ErrorKind::malformed_syntax, "plot data row " + std::to_string(i) + " needs 5 fields");
    ReportRow row;
    row.label = r[0];
    row.single_pct = number(r[1]);
    row.multi_pct = number(r[2]);
    row.abs_improvement_pp = number(r[3]);
    if (!r[4].empty()) row.rel_improvement_pct = number(r[4]);
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace mhop::report
