#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qabias/stats.hpp"

namespace qabias {

enum class ReportFormat { Json, Markdown, Csv };
ReportFormat parse_report_format(std::string_view name);

/// Table sorted by bias (descending, stable). Bias and scores are printed
/// with 3 decimals; the JSON form embeds every measurement verbatim.
/// Throws ValidationError when the measurements mix metrics.
std::string render_report(std::span<const BiasMeasurement> measurements, ReportFormat format);

/// Measurements embedded in a JSON report.
std::vector<BiasMeasurement> parse_report(std::string_view json_text);

/// Per-heuristic bias deltas (variant - baseline).
struct CrossBiasMatrix {
  std::vector<std::string> rows;
  std::vector<HeuristicId> cols;
  std::vector<double> baseline_bias;  // per column
  std::vector<std::vector<double>> cells;
  std::vector<double> row_means;
};

using NamedMeasurements = std::vector<std::pair<std::string, std::vector<BiasMeasurement>>>;

/// Columns are the heuristics measured for the baseline. Every variant must
/// carry a measurement with the same heuristic, threshold, metric and
/// bootstrap config for every column, otherwise ValidationError names the hole.
CrossBiasMatrix cross_bias_matrix(std::span<const BiasMeasurement> baseline,
                                  const NamedMeasurements& variants);

std::string render_matrix(const CrossBiasMatrix& matrix, ReportFormat format);

/// Self-contained SVG: one stacked bar per (model, heuristic), lower part the
/// worse-split score and upper part the bias, grouped by heuristic and the
/// groups ordered by mean bias (descending).
std::string render_chart(std::span<const BiasMeasurement> measurements);

}  // namespace qabias
