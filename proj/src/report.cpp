#include "qabias/report.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <json.hpp>
#include <numeric>
#include <sstream>

#include "qabias/error.hpp"
#include "qabias/version.hpp"

namespace qabias {

using nlohmann::ordered_json;

namespace {

constexpr std::string_view kLegend =
    "bias = max(0, E1_lo - E2_hi, E2_lo - E1_hi) over bootstrapped score quantiles; "
    "with q = 0.025/0.975 the true gap between the groups is at least the reported bias "
    "with probability 0.975 x 0.975 = 95.06%, so bias is a lower bound. "
    "worse-split is the full-group score of the weaker group.";

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::string percent(double v) { return fixed(v * 100.0, 1) + "%"; }

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  return out + "\"";
}

std::string threshold_text(double t) {
  std::ostringstream out;
  out << t;
  return out.str();
}

std::vector<const BiasMeasurement*> sorted_by_bias(std::span<const BiasMeasurement> measurements) {
  std::vector<const BiasMeasurement*> rows;
  for (const auto& m : measurements) rows.push_back(&m);
  std::stable_sort(rows.begin(), rows.end(),
                   [](const auto* a, const auto* b) { return a->bias > b->bias; });
  return rows;
}

}  // namespace

ReportFormat parse_report_format(std::string_view name) {
  if (name == "json") return ReportFormat::Json;
  if (name == "md" || name == "markdown") return ReportFormat::Markdown;
  if (name == "csv") return ReportFormat::Csv;
  throw ConfigError("unknown report format '" + std::string(name) + "' (expected json, markdown or csv)");
}

std::string render_report(std::span<const BiasMeasurement> measurements, ReportFormat format) {
  for (const auto& m : measurements) {
    if (m.metric != measurements.front().metric) {
      throw ValidationError("report mixes metrics " + std::string(to_string(measurements.front().metric)) +
                            " and " + std::string(to_string(m.metric)));
    }
  }
  const auto rows = sorted_by_bias(measurements);
  const std::string metric = measurements.empty() ? "EM" : std::string(to_string(measurements.front().metric));

  if (format == ReportFormat::Json) {
    ordered_json root;
    root["toolkit_version"] = kToolkitVersion;
    root["metric"] = metric;
    root["legend"] = kLegend;
    root["measurements"] = ordered_json::array();
    for (const auto* m : rows) root["measurements"].push_back(ordered_json::parse(dump_measurement(*m)));
    return root.dump(1, ' ', false, ordered_json::error_handler_t::replace) + "\n";
  }

  std::ostringstream out;
  if (format == ReportFormat::Csv) {
    out << "model,heuristic,threshold,n1,n2,e1_lo,e1_hi,e2_lo,e2_hi,bias,worse_split\n";
    for (const auto* m : rows) {
      out << csv_field(m->model_name) << ',' << to_string(m->heuristic) << ','
          << threshold_text(m->threshold) << ',' << m->n1 << ',' << m->n2 << ',' << fixed(m->e1_lo, 3)
          << ',' << fixed(m->e1_hi, 3) << ',' << fixed(m->e2_lo, 3) << ',' << fixed(m->e2_hi, 3) << ','
          << fixed(m->bias, 3) << ',' << fixed(m->worse_split_mean, 3) << '\n';
    }
    return out.str();
  }

  out << "# Prediction bias (" << metric << ")\n\n";
  out << "| model | heuristic | threshold | n1 | n2 | E1 [lo, hi] | E2 [lo, hi] | bias | worse split |\n";
  out << "|---|---|---|---|---|---|---|---|---|\n";
  for (const auto* m : rows) {
    out << "| " << m->model_name << " | " << to_string(m->heuristic) << " | " << threshold_text(m->threshold)
        << " | " << m->n1 << " | " << m->n2 << " | [" << fixed(m->e1_lo, 3) << ", " << fixed(m->e1_hi, 3)
        << "] | [" << fixed(m->e2_lo, 3) << ", " << fixed(m->e2_hi, 3) << "] | " << fixed(m->bias, 3)
        << " | " << fixed(m->worse_split_mean, 3) << " |\n";
  }
  out << "\n" << kLegend << "\n";
  return out.str();
}

std::vector<BiasMeasurement> parse_report(std::string_view json_text) {
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("malformed report JSON at byte " + std::to_string(e.byte));
  }
  if (!root.contains("measurements") || !root["measurements"].is_array()) {
    throw ParseError("report has no 'measurements' array");
  }
  std::vector<BiasMeasurement> out;
  for (const auto& m : root["measurements"]) out.push_back(parse_measurement(m.dump()));
  return out;
}

CrossBiasMatrix cross_bias_matrix(std::span<const BiasMeasurement> baseline,
                                  const NamedMeasurements& variants) {
  CrossBiasMatrix matrix;
  std::vector<const BiasMeasurement*> base;
  for (auto id : kAllHeuristics) {
    const BiasMeasurement* found = nullptr;
    for (const auto& m : baseline) {
      if (m.heuristic != id) continue;
      if (found) throw ValidationError("baseline has two measurements for " + std::string(to_string(id)));
      found = &m;
    }
    if (found) {
      matrix.cols.push_back(id);
      matrix.baseline_bias.push_back(found->bias);
      base.push_back(found);
    }
  }
  if (matrix.cols.empty()) throw ValidationError("baseline has no measurements");

  for (const auto& [name, measurements] : variants) {
    std::vector<double> row;
    for (const auto* b : base) {
      const auto it = std::find_if(measurements.begin(), measurements.end(), [&](const BiasMeasurement& m) {
        return m.heuristic == b->heuristic && m.threshold == b->threshold && m.metric == b->metric &&
               m.config == b->config;
      });
      if (it == measurements.end()) {
        throw ValidationError("variant '" + name + "' has no measurement matching the baseline for " +
                              std::string(to_string(b->heuristic)) + " at threshold " +
                              threshold_text(b->threshold) + " (" + std::string(to_string(b->metric)) + ")");
      }
      row.push_back(it->bias - b->bias);
    }
    matrix.row_means.push_back(std::accumulate(row.begin(), row.end(), 0.0) / static_cast<double>(row.size()));
    matrix.rows.push_back(name);
    matrix.cells.push_back(std::move(row));
  }
  return matrix;
}

std::string render_matrix(const CrossBiasMatrix& matrix, ReportFormat format) {
  if (format == ReportFormat::Json) {
    ordered_json root;
    root["toolkit_version"] = kToolkitVersion;
    root["cols"] = ordered_json::array();
    for (auto id : matrix.cols) root["cols"].push_back(to_string(id));
    root["baseline_bias"] = matrix.baseline_bias;
    root["rows"] = ordered_json::array();
    for (std::size_t r = 0; r < matrix.rows.size(); ++r) {
      root["rows"].push_back(ordered_json{{"variant", matrix.rows[r]},
                                          {"delta", matrix.cells[r]},
                                          {"mean_delta", matrix.row_means[r]}});
    }
    return root.dump(1, ' ', false, ordered_json::error_handler_t::replace) + "\n";
  }
  std::ostringstream out;
  const bool csv = format == ReportFormat::Csv;
  if (csv) {
    out << "variant";
    for (auto id : matrix.cols) out << ',' << to_string(id);
    out << ",mean\n";
    for (std::size_t r = 0; r < matrix.rows.size(); ++r) {
      out << csv_field(matrix.rows[r]);
      for (double v : matrix.cells[r]) out << ',' << fixed(v, 3);
      out << ',' << fixed(matrix.row_means[r], 3) << '\n';
    }
    return out.str();
  }
  out << "# Change of prediction bias against the baseline\n\n| variant |";
  for (auto id : matrix.cols) out << ' ' << to_string(id) << " |";
  out << " mean |\n|---|";
  for (std::size_t c = 0; c <= matrix.cols.size(); ++c) out << "---|";
  out << "\n| (baseline bias) |";
  for (double b : matrix.baseline_bias) out << ' ' << fixed(b, 3) << " |";
  out << " |\n";
  for (std::size_t r = 0; r < matrix.rows.size(); ++r) {
    out << "| " << matrix.rows[r] << " |";
    for (double v : matrix.cells[r]) out << ' ' << (v > 0 ? "+" : "") << fixed(v, 3) << " |";
    out << ' ' << (matrix.row_means[r] > 0 ? "+" : "") << fixed(matrix.row_means[r], 3) << " |\n";
  }
  return out.str();
}

std::string render_chart(std::span<const BiasMeasurement> measurements) {
  if (measurements.empty()) throw ValidationError("chart needs at least one measurement");

  // Models in first-seen order give stable colors; groups by heuristic.
  std::vector<std::string> models;
  for (const auto& m : measurements) {
    if (std::find(models.begin(), models.end(), m.model_name) == models.end()) models.push_back(m.model_name);
  }
  struct Group {
    HeuristicId heuristic;
    std::vector<const BiasMeasurement*> bars;
    double mean_bias = 0.0;
  };
  std::vector<Group> groups;
  for (const auto& m : measurements) {
    auto it = std::find_if(groups.begin(), groups.end(), [&](const Group& g) { return g.heuristic == m.heuristic; });
    if (it == groups.end()) {
      groups.push_back(Group{m.heuristic, {}, 0.0});
      it = std::prev(groups.end());
    }
    it->bars.push_back(&m);
  }
  for (auto& g : groups) {
    double sum = 0.0;
    for (const auto* m : g.bars) sum += m->bias;
    g.mean_bias = sum / static_cast<double>(g.bars.size());
    std::stable_sort(g.bars.begin(), g.bars.end(), [&](const auto* a, const auto* b) {
      return std::find(models.begin(), models.end(), a->model_name) <
             std::find(models.begin(), models.end(), b->model_name);
    });
  }
  std::stable_sort(groups.begin(), groups.end(),
                   [](const Group& a, const Group& b) { return a.mean_bias > b.mean_bias; });

  static constexpr std::array<std::pair<std::string_view, std::string_view>, 8> kPalette = {{
      {"#9ecae1", "#08519c"}, {"#fdae6b", "#a63603"}, {"#a1d99b", "#006d2c"}, {"#bcbddc", "#54278f"},
      {"#fc9272", "#a50f15"}, {"#d9d9d9", "#252525"}, {"#fdd0a2", "#7f2704"}, {"#c7e9c0", "#00441b"}}};

  constexpr int kBarWidth = 22;
  constexpr int kBarGap = 4;
  constexpr int kGroupGap = 26;
  constexpr int kPlotHeight = 300;
  constexpr int kLeft = 60;
  constexpr int kTop = 30;
  constexpr int kLegendRow = 18;
  int plot_width = 0;
  for (const auto& g : groups) {
    plot_width += static_cast<int>(g.bars.size()) * (kBarWidth + kBarGap) + kGroupGap;
  }
  const int width = kLeft + plot_width + 20;
  const int axis_y = kTop + kPlotHeight;
  const int height = axis_y + 60 + kLegendRow * static_cast<int>(models.size());

  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << width << "\" height=\""
      << height << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n"
      << "<title>Prediction bias (" << to_string(measurements.front().metric)
      << "): worse-split score (lower bar) and bias (upper bar)</title>\n"
      << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height << "\" fill=\"#ffffff\"/>\n";
  for (int tick = 0; tick <= 100; tick += 20) {
    const int y = axis_y - tick * kPlotHeight / 100;
    svg << "<line x1=\"" << kLeft << "\" y1=\"" << y << "\" x2=\"" << kLeft + plot_width << "\" y2=\"" << y
        << "\" stroke=\"#e0e0e0\"/>\n"
        << "<text x=\"" << kLeft - 6 << "\" y=\"" << y + 4
        << "\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"end\">" << tick << "%</text>\n";
  }
  int x = kLeft + kGroupGap / 2;
  for (const auto& g : groups) {
    const int group_start = x;
    for (const auto* m : g.bars) {
      const auto model_index = static_cast<std::size_t>(
          std::find(models.begin(), models.end(), m->model_name) - models.begin());
      const auto& [light, dark] = kPalette[model_index % kPalette.size()];
      const double lower_h = m->worse_split_mean * kPlotHeight;
      const double upper_h = m->bias * kPlotHeight;
      const double lower_y = axis_y - lower_h;
      const double upper_y = lower_y - upper_h;
      svg << "<g class=\"bar\" data-model=\"" << xml_escape(m->model_name) << "\" data-heuristic=\""
          << to_string(m->heuristic) << "\">\n"
          << "<rect class=\"worse-split\" x=\"" << x << "\" y=\"" << fixed(lower_y, 2) << "\" width=\""
          << kBarWidth << "\" height=\"" << fixed(lower_h, 2) << "\" fill=\"" << light << "\"/>\n"
          << "<rect class=\"bias\" x=\"" << x << "\" y=\"" << fixed(upper_y, 2) << "\" width=\"" << kBarWidth
          << "\" height=\"" << fixed(upper_h, 2) << "\" fill=\"" << dark << "\"/>\n"
          << "<text x=\"" << x + kBarWidth / 2 << "\" y=\"" << fixed(upper_y - 4, 2)
          << "\" font-family=\"sans-serif\" font-size=\"8\" text-anchor=\"middle\">" << percent(m->bias)
          << "</text>\n"
          << "<text x=\"" << x + kBarWidth / 2 << "\" y=\"" << axis_y - 4
          << "\" font-family=\"sans-serif\" font-size=\"8\" text-anchor=\"middle\" fill=\"#333333\">"
          << percent(m->worse_split_mean) << "</text>\n"
          << "</g>\n";
      x += kBarWidth + kBarGap;
    }
    svg << "<text x=\"" << (group_start + x - kBarGap) / 2 << "\" y=\"" << axis_y + 16
        << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">" << to_string(g.heuristic)
        << "</text>\n";
    x += kGroupGap;
  }
  svg << "<line x1=\"" << kLeft << "\" y1=\"" << axis_y << "\" x2=\"" << kLeft + plot_width << "\" y2=\""
      << axis_y << "\" stroke=\"#000000\"/>\n";
  for (std::size_t i = 0; i < models.size(); ++i) {
    const int y = axis_y + 34 + kLegendRow * static_cast<int>(i);
    const auto& [light, dark] = kPalette[i % kPalette.size()];
    svg << "<rect x=\"" << kLeft << "\" y=\"" << y << "\" width=\"10\" height=\"10\" fill=\"" << light << "\"/>\n"
        << "<rect x=\"" << kLeft + 12 << "\" y=\"" << y << "\" width=\"10\" height=\"10\" fill=\"" << dark
        << "\"/>\n"
        << "<text x=\"" << kLeft + 28 << "\" y=\"" << y + 9 << "\" font-family=\"sans-serif\" font-size=\"10\">"
        << xml_escape(models[i]) << " (worse split / bias)</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace qabias
