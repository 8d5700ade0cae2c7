// Copyright 2026 The CVM Analytics Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CVM_RENDER_HPP_
#define CVM_RENDER_HPP_

// Text (aligned markdown), record (JSON) and plot-data renderings of the
// analytics results. All numbers pass through format.hpp.

#include <algorithm>
#include <cstddef>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cvm/cvm_analytics.hpp"
#include "cvm/format.hpp"
#include "cvm/ls_engine.hpp"
#include "cvm/nps_metrics.hpp"
#include "json.hpp"

namespace cvm {

enum class Align { kLeft, kRight };

// Markdown table padded so the columns line up in plain text too.
inline std::string render_markdown_table(const std::vector<std::string>& header,
                                         const std::vector<Align>& align,
                                         const std::vector<std::vector<std::string>>& rows) {
  auto width = [](const std::string& s) {
    // Display width: count UTF-8 lead bytes only.
    std::size_t w = 0;
    for (unsigned char c : s) w += (c & 0xC0) != 0x80;
    return w;
  };
  std::vector<std::size_t> w(header.size(), 3);
  for (std::size_t c = 0; c < header.size(); ++c) w[c] = std::max(w[c], width(header[c]));
  for (const auto& r : rows) {
    for (std::size_t c = 0; c < r.size(); ++c) w[c] = std::max(w[c], width(r[c]));
  }
  auto cell = [&](const std::string& s, std::size_t c) {
    const std::string pad(w[c] - width(s), ' ');
    return align[c] == Align::kLeft ? s + pad : pad + s;
  };
  std::ostringstream os;
  auto line = [&](const std::vector<std::string>& r) {
    os << '|';
    for (std::size_t c = 0; c < r.size(); ++c) os << ' ' << cell(r[c], c) << " |";
    os << '\n';
  };
  line(header);
  os << '|';
  for (std::size_t c = 0; c < header.size(); ++c) {
    os << (align[c] == Align::kLeft ? std::string(w[c] + 1, '-') + "-|"
                                    : std::string(w[c] + 1, '-') + ":|");
  }
  os << '\n';
  for (const auto& r : rows) line(r);
  return os.str();
}

inline std::string mean_cell(const std::optional<MeanWithHalfWidth>& m) {
  return m ? format_fixed(m->mean, 1) : "n/a";
}

inline std::string relative_cell(const std::optional<int>& r) {
  return r ? std::to_string(*r) : "n/a";
}

inline std::string r_squared_text(double r2) {
  return "R² = " + format_percent(100.0 * r2) + "%";
}

// Largest 95% half-width in the table, rounded up to one decimal.
inline double table_half_width(const ProfileTable& t) {
  double hw = t.parent_own_mean.half_width;
  if (t.parent_competitor_mean) hw = std::max(hw, t.parent_competitor_mean->half_width);
  for (const ProfileRow& r : t.rows) {
    hw = std::max(hw, r.own_mean.half_width);
    if (r.competitor_mean) hw = std::max(hw, r.competitor_mean->half_width);
  }
  return std::ceil(hw * 10.0 - 1e-9) / 10.0;
}

inline std::string render_profile_table(const ProfileTable& t) {
  std::vector<std::vector<std::string>> rows;
  for (const ProfileRow& r : t.rows) {
    rows.push_back({r.label, std::to_string(r.impact_weight), format_fixed(r.own_mean.mean, 1),
                    mean_cell(r.competitor_mean), relative_cell(r.relative_rating)});
  }
  std::string parent_rel = relative_cell(t.parent_relative);
  if (t.is_root) parent_rel = "CVA = " + parent_rel;
  rows.push_back({t.parent_label, "(" + r_squared_text(t.r_squared) + ")",
                  format_fixed(t.parent_own_mean.mean, 1), mean_cell(t.parent_competitor_mean),
                  parent_rel});
  std::ostringstream os;
  os << "### " << t.parent_label << "\n\n";
  os << render_markdown_table(
      {"Driver", "Impact weight (%)", "Our company", "Competitors", "Relative rating (%)"},
      {Align::kLeft, Align::kRight, Align::kRight, Align::kRight, Align::kRight}, rows);
  os << "\nMean ratings ± " << format_fixed(table_half_width(t), 1)
     << " (95% half-width); model n = " << t.n << ".\n";
  if (t.is_root) os << "\nCVA = " << relative_cell(t.parent_relative) << "\n";
  if (!t.has_competitors()) os << "\nCompetitor columns unavailable: no competitor ratings.\n";
  return os.str();
}

inline nlohmann::ordered_json mean_to_json(const std::optional<MeanWithHalfWidth>& m) {
  if (!m) return nullptr;
  return {{"mean", m->mean}, {"half_width", m->half_width}, {"n", m->n}};
}

inline nlohmann::ordered_json profile_table_to_json(const ProfileTable& t) {
  nlohmann::ordered_json doc;
  doc["parent"] = t.parent;
  doc["is_root"] = t.is_root;
  doc["r_squared"] = t.r_squared;
  doc["n"] = t.n;
  doc["own_mean"] = mean_to_json(t.parent_own_mean);
  doc["competitor_mean"] = mean_to_json(t.parent_competitor_mean);
  doc["relative_rating"] = t.parent_relative ? nlohmann::ordered_json(*t.parent_relative) : nullptr;
  auto& rows = doc["rows"] = nlohmann::ordered_json::array();
  for (const ProfileRow& r : t.rows) {
    rows.push_back({{"driver", r.driver},
                    {"impact_weight", r.impact_weight},
                    {"coefficient", r.coefficient},
                    {"own_mean", mean_to_json(r.own_mean)},
                    {"competitor_mean", mean_to_json(r.competitor_mean)},
                    {"relative_rating", r.relative_rating ? nlohmann::ordered_json(*r.relative_rating)
                                                          : nlohmann::ordered_json(nullptr)}});
  }
  return doc;
}

inline std::string render_fit_summary(const FittedHierarchy& h) {
  std::ostringstream os;
  os << "# Fitted hierarchy: " << h.tree().name() << "\n\n";
  std::vector<std::vector<std::string>> rows;
  for (const NodeModel& m : h.models()) {
    std::string weights;
    for (const auto& [child, w] : m.impact_weights) {
      if (!weights.empty()) weights += ", ";
      weights += child + " " + std::to_string(w);
    }
    rows.push_back({m.node, std::to_string(m.fit.n), format_fixed(m.fit.r_squared, 3),
                    format_fixed(m.fit.residual_sd, 3), weights});
  }
  os << render_markdown_table({"Node", "n", "R²", "Residual sd", "Impact weights (%)"},
                              {Align::kLeft, Align::kRight, Align::kRight, Align::kRight, Align::kLeft},
                              rows);
  for (const NodeModel& m : h.models()) {
    for (const NodeId& c : m.negative_children) {
      os << "\nwarning: negative coefficient for '" << c << "' in '" << m.node << "'";
    }
  }
  for (const UnfitNode& u : h.unfit()) os << "\nunfit: " << u.node << ": " << u.reason;
  if (!h.unfit().empty() || std::any_of(h.models().begin(), h.models().end(),
                                        [](const NodeModel& m) { return !m.negative_children.empty(); })) {
    os << "\n";
  }
  return os.str();
}

inline std::string render_priorities(const PriorityRanking& p, const ValueTree& tree,
                                     std::size_t limit = 10) {
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < p.ranked.size() && i < limit; ++i) {
    const Priority& x = p.ranked[i];
    rows.push_back({std::to_string(i + 1), tree.node(x.node).label, format_fixed(x.path_slope, 4),
                    format_fixed(x.gap, 2), format_fixed(x.score, 4)});
  }
  std::string s = render_markdown_table(
      {"Rank", "Node", "Slope to Value", "Competitor gap", "Priority score"},
      {Align::kRight, Align::kLeft, Align::kRight, Align::kRight, Align::kRight}, rows);
  for (const UnfitNode& u : p.excluded) s += "excluded: " + u.node + ": " + u.reason + "\n";
  return s;
}

inline nlohmann::ordered_json priorities_to_json(const PriorityRanking& p) {
  nlohmann::ordered_json doc;
  auto& ranked = doc["ranked"] = nlohmann::ordered_json::array();
  for (const Priority& x : p.ranked) {
    ranked.push_back({{"node", x.node},
                      {"score", x.score},
                      {"path_slope", x.path_slope},
                      {"gap", x.gap},
                      {"depth", x.depth}});
  }
  auto& ex = doc["excluded"] = nlohmann::ordered_json::array();
  for (const UnfitNode& u : p.excluded) ex.push_back({{"node", u.node}, {"reason", u.reason}});
  return doc;
}

inline nlohmann::ordered_json loyalty_to_json(const LoyaltyCurve& c) {
  nlohmann::ordered_json doc;
  doc["outcome"] = std::string(to_string(c.outcome));
  doc["threshold"] = c.threshold;
  auto& pts = doc["points"] = nlohmann::ordered_json::array();
  for (const LoyaltyPoint& p : c.points) {
    pts.push_back({{"value_score", p.value_score},
                   {"proportion", p.proportion},
                   {"raw_proportion", p.raw_proportion},
                   {"count", p.count}});
  }
  return doc;
}

// Whitespace-separated columns with a '#' header line.
inline std::string loyalty_plot_data(const LoyaltyCurve& c) {
  std::ostringstream os;
  os << "# value_score proportion raw_proportion count\n";
  for (const LoyaltyPoint& p : c.points) {
    os << format_fixed(p.value_score, 1) << ' ' << format_fixed(p.proportion, 6) << ' '
       << format_fixed(p.raw_proportion, 6) << ' ' << p.count << '\n';
  }
  return os.str();
}

inline std::string render_value_map(const std::vector<ValueMapPoint>& pts, double band) {
  std::vector<std::vector<std::string>> rows;
  for (const ValueMapPoint& p : pts) {
    rows.push_back({p.supplier, format_percent(p.relative_quality), format_percent(p.relative_price),
                    format_fixed(p.excess_quality, 1), std::string(to_string(p.zone))});
  }
  return render_markdown_table(
             {"Supplier", "Relative quality (%)", "Relative price (%)", "Excess quality", "Zone"},
             {Align::kLeft, Align::kRight, Align::kRight, Align::kRight, Align::kLeft}, rows) +
         "\nFair-value line: relative quality = 200 - relative price, band ± " +
         format_fixed(band, 1) + ".\n";
}

inline nlohmann::ordered_json value_map_to_json(const std::vector<ValueMapPoint>& pts, double band) {
  nlohmann::ordered_json doc;
  doc["band"] = band;
  auto& list = doc["points"] = nlohmann::ordered_json::array();
  for (const ValueMapPoint& p : pts) {
    list.push_back({{"supplier", p.supplier},
                    {"relative_quality", p.relative_quality},
                    {"relative_price", p.relative_price},
                    {"excess_quality", p.excess_quality},
                    {"zone", std::string(to_string(p.zone))}});
  }
  return doc;
}

inline std::string value_map_plot_data(const std::vector<ValueMapPoint>& pts) {
  std::ostringstream os;
  os << "# relative_price relative_quality supplier zone\n";
  for (const ValueMapPoint& p : pts) {
    os << format_fixed(p.relative_price, 4) << ' ' << format_fixed(p.relative_quality, 4) << ' '
       << p.supplier << ' ' << to_string(p.zone) << '\n';
  }
  return os.str();
}

inline nlohmann::ordered_json nps_to_json(const NpsResult& r) {
  return {{"n", r.n},
          {"pct_promoters", r.pct_promoters},
          {"pct_passives", r.pct_passives},
          {"pct_detractors", r.pct_detractors},
          {"nps", r.nps},
          {"nps_display", format_fixed(r.nps, 1)},
          {"histogram", r.histogram}};
}

inline std::string nps_histogram_plot_data(const NpsResult& r) {
  std::ostringstream os;
  os << "# rating count segment\n";
  for (int v = 0; v <= 10; ++v) {
    os << v << ' ' << r.histogram[static_cast<std::size_t>(v)] << ' ' << to_string(classify(v)) << '\n';
  }
  return os.str();
}

inline std::string render_nps_comparison(const NpsCvaComparison& c) {
  std::vector<std::vector<std::string>> rows{
      {"Headline", "NPS = " + format_fixed(c.nps.nps, 1), "CVA = " + std::to_string(c.cva)},
      {"Respondents", "own customers (n = " + std::to_string(c.nps.n) + ")",
       "own and competitors' customers"},
      {"Competitive calibration", "none", "relative to competitor ratings"},
      {"Drill-down", c.nps_drill_down ? "present" : "absent",
       c.cva_drill_down ? "present (" + std::to_string(c.profile_levels) + " profile tables)"
                        : "absent"},
      {"Improvement priorities", "none", "ranked by predicted Value gain"},
  };
  return render_markdown_table({"", "NPS", "CVA"}, {Align::kLeft, Align::kLeft, Align::kLeft},
                               rows);
}

inline nlohmann::ordered_json nps_comparison_to_json(const NpsCvaComparison& c) {
  return {{"nps", nps_to_json(c.nps)},
          {"cva", c.cva},
          {"drill_down", {{"nps", c.nps_drill_down ? "present" : "absent"},
                          {"cva", c.cva_drill_down ? "present" : "absent"}}},
          {"profile_levels", c.profile_levels}};
}

}  // namespace cvm

#endif  // CVM_RENDER_HPP_
