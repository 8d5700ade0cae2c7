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

#ifndef CVM_CVM_ANALYTICS_HPP_
#define CVM_CVM_ANALYTICS_HPP_

// Customer Value decision artifacts computed from a fitted hierarchy and the
// own/competitor samples: profile tables, CVA, what-if predictions,
// improvement priorities, loyalty curves, value maps, retention projections
// and the top-box calculation.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cvm/error.hpp"
#include "cvm/format.hpp"
#include "cvm/ls_engine.hpp"
#include "cvm/survey_store.hpp"
#include "cvm/value_tree.hpp"

namespace cvm {

// 100 * own / competitor, rounded half away from zero.
inline int relative_rating(double own, double competitor) {
  if (!(competitor > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "competitor mean must be positive, got " + format_exact(competitor));
  }
  return static_cast<int>(round_half_away(100.0 * own / competitor));
}

struct ProfileRow {
  NodeId driver;
  std::string label;
  int impact_weight = 0;
  double coefficient = 0.0;
  MeanWithHalfWidth own_mean;
  std::optional<MeanWithHalfWidth> competitor_mean;  // nullopt: no competitor data
  std::optional<int> relative_rating;
};

struct ProfileTable {
  NodeId parent;
  std::string parent_label;
  bool is_root = false;
  std::vector<ProfileRow> rows;  // parent's children, in tree order
  MeanWithHalfWidth parent_own_mean;
  std::optional<MeanWithHalfWidth> parent_competitor_mean;
  std::optional<int> parent_relative;
  double r_squared = 0.0;
  std::size_t n = 0;

  bool has_competitors() const { return parent_competitor_mean.has_value(); }
};

namespace detail {

inline MeanWithHalfWidth own_mean_or_throw(const SurveySample& own, std::string_view node) {
  if (auto m = try_node_mean(own, node)) return *m;
  throw Error(ErrorCode::kNoData, "own sample has no ratings for '" + std::string(node) + "'");
}

inline std::optional<int> relative_if(const MeanWithHalfWidth& own,
                                      const std::optional<MeanWithHalfWidth>& comp) {
  if (!comp) return std::nullopt;
  return relative_rating(own.mean, comp->mean);
}

}  // namespace detail

// One drill-down level. An empty competitor sample yields a table whose
// competitor and relative cells are unavailable.
inline ProfileTable profile_table(const FittedHierarchy& hierarchy, const SurveySample& own,
                                  const SurveySample& competitors, std::string_view parent) {
  const NodeModel& model = hierarchy.model(parent);
  const ValueTree& tree = hierarchy.tree();
  const TreeNode& pnode = tree.node(parent);

  ProfileTable table;
  table.parent = pnode.id;
  table.parent_label = pnode.label;
  table.is_root = pnode.id == tree.root();
  table.r_squared = model.fit.r_squared;
  table.n = model.fit.n;
  table.parent_own_mean = detail::own_mean_or_throw(own, parent);
  table.parent_competitor_mean = try_node_mean(competitors, parent);
  table.parent_relative = detail::relative_if(table.parent_own_mean, table.parent_competitor_mean);
  for (const NodeId& child : pnode.children) {
    ProfileRow row;
    row.driver = child;
    row.label = tree.node(child).label;
    row.impact_weight = model.impact_weight(child);
    row.coefficient = model.coefficient(child);
    row.own_mean = detail::own_mean_or_throw(own, child);
    row.competitor_mean = try_node_mean(competitors, child);
    row.relative_rating = detail::relative_if(row.own_mean, row.competitor_mean);
    table.rows.push_back(std::move(row));
  }
  return table;
}

// Tables for every fitted internal node, in tree pre-order.
inline std::vector<ProfileTable> profile_tables(const FittedHierarchy& hierarchy,
                                                const SurveySample& own,
                                                const SurveySample& competitors) {
  std::vector<ProfileTable> out;
  for (const NodeModel& m : hierarchy.models()) {
    out.push_back(profile_table(hierarchy, own, competitors, m.node));
  }
  return out;
}

// Customer Value Added: the relative rating of the root (Value) node.
inline int cva(const FittedHierarchy& hierarchy, const SurveySample& own,
               const SurveySample& competitors) {
  const ProfileTable t = profile_table(hierarchy, own, competitors, hierarchy.tree().root());
  if (!t.parent_relative) {
    throw Error(ErrorCode::kNoData, "competitor sample has no ratings for the root");
  }
  return *t.parent_relative;
}

// Product of child-in-parent coefficients from `node` up to the root: the
// change in the root score per unit change in `node`.
inline double path_slope(const FittedHierarchy& hierarchy, std::string_view node) {
  const std::vector<NodeId> path = path_to_root(hierarchy.tree(), node);
  double slope = 1.0;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    slope *= hierarchy.model(path[i + 1]).coefficient(path[i]);
  }
  return slope;
}

// Predicted change in the root score when `node` moves by `delta`.
inline double what_if(const FittedHierarchy& hierarchy, std::string_view node, double delta) {
  return delta * path_slope(hierarchy, node);
}

struct WhatIfResult {
  double root_change = 0.0;
  std::optional<double> node_mean_after;
  std::optional<double> root_mean_after;
  std::vector<std::string> warnings;
};

// what_if plus bounds checks against the own sample's current means. The
// linear model is a local approximation, so leaving the 1-10 scale is a
// warning rather than an error.
inline WhatIfResult what_if_checked(const FittedHierarchy& hierarchy, const SurveySample& own,
                                    std::string_view node, double delta) {
  WhatIfResult r;
  r.root_change = what_if(hierarchy, node, delta);
  auto check = [&r](const std::string& what, double v) {
    if (v < kMinNodeRating || v > kMaxNodeRating) {
      r.warnings.push_back(what + " would move to " + format_fixed(v, 2) +
                           ", outside the 1-10 rating scale");
    }
  };
  if (auto m = try_node_mean(own, node)) {
    r.node_mean_after = m->mean + delta;
    check("mean of '" + std::string(node) + "'", *r.node_mean_after);
  }
  if (auto m = try_node_mean(own, hierarchy.tree().root())) {
    r.root_mean_after = m->mean + r.root_change;
    check("root mean", *r.root_mean_after);
  }
  return r;
}

struct Priority {
  NodeId node;
  double score = 0.0;       // path_slope * max(0, competitor - own)
  double path_slope = 0.0;
  double gap = 0.0;         // competitor mean - own mean (signed)
  std::size_t depth = 0;
};

struct PriorityRanking {
  std::vector<Priority> ranked;
  std::vector<UnfitNode> excluded;
};

struct PriorityOptions {
  // Score internal (non-root) nodes as well as the rated leaves.
  bool include_internal = false;
};

// Ranks improvement candidates by predicted root gain from closing the
// competitive gap. Sorted by score descending, then deeper node first, then
// node id.
inline PriorityRanking rank_priorities(const FittedHierarchy& hierarchy, const SurveySample& own,
                                       const SurveySample& competitors,
                                       PriorityOptions options = {}) {
  const ValueTree& tree = hierarchy.tree();
  PriorityRanking out;
  for (const TreeNode& n : tree.nodes()) {
    if (n.id == tree.root()) continue;
    if (!n.children.empty() && !options.include_internal) continue;
    Priority p;
    p.node = n.id;
    p.depth = tree.depth(n.id);
    try {
      p.path_slope = path_slope(hierarchy, n.id);
    } catch (const Error& e) {
      out.excluded.push_back({n.id, e.message()});
      continue;
    }
    auto mo = try_node_mean(own, n.id);
    auto mc = try_node_mean(competitors, n.id);
    if (!mo || !mc) {
      out.excluded.push_back({n.id, mo ? "no competitor ratings" : "no own ratings"});
      continue;
    }
    p.gap = mc->mean - mo->mean;
    p.score = p.path_slope * std::max(0.0, p.gap);
    out.ranked.push_back(std::move(p));
  }
  std::sort(out.ranked.begin(), out.ranked.end(), [](const Priority& a, const Priority& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.depth != b.depth) return a.depth > b.depth;
    return a.node < b.node;
  });
  return out;
}

// Weighted pool-adjacent-violators: the non-decreasing sequence closest to
// `values` in weighted least squares.
inline std::vector<double> isotonic_fit(std::span<const double> values,
                                        std::span<const double> weights) {
  if (values.size() != weights.size()) {
    throw Error(ErrorCode::kInvalidArgument, "isotonic_fit: size mismatch");
  }
  struct Block {
    double mean;
    double weight;
    std::size_t count;
  };
  std::vector<Block> blocks;
  for (std::size_t i = 0; i < values.size(); ++i) {
    blocks.push_back({values[i], weights[i], 1});
    while (blocks.size() > 1 && blocks[blocks.size() - 2].mean > blocks.back().mean) {
      Block b = blocks.back();
      blocks.pop_back();
      Block& a = blocks.back();
      const double w = a.weight + b.weight;
      a.mean = w > 0.0 ? (a.mean * a.weight + b.mean * b.weight) / w : (a.mean + b.mean) / 2;
      a.weight = w;
      a.count += b.count;
    }
  }
  std::vector<double> out;
  out.reserve(values.size());
  for (const Block& b : blocks) out.insert(out.end(), b.count, b.mean);
  return out;
}

inline constexpr int kDefaultLoyaltyThreshold = 8;

struct LoyaltyPoint {
  double value_score = 0.0;     // integer root rating of the bin
  double proportion = 0.0;      // after monotone smoothing
  double raw_proportion = 0.0;  // share with outcome >= threshold
  std::size_t count = 0;
};

struct LoyaltyCurve {
  OutcomeKind outcome = OutcomeKind::kRecommend;
  int threshold = kDefaultLoyaltyThreshold;
  std::vector<LoyaltyPoint> points;  // increasing value_score, non-empty

  // Piecewise-linear between bins, flat beyond the outermost bins.
  double at(double score) const {
    if (score <= points.front().value_score) return points.front().proportion;
    if (score >= points.back().value_score) return points.back().proportion;
    for (std::size_t i = 0; i + 1 < points.size(); ++i) {
      const LoyaltyPoint& a = points[i];
      const LoyaltyPoint& b = points[i + 1];
      if (score <= b.value_score) {
        const double t = (score - a.value_score) / (b.value_score - a.value_score);
        return a.proportion + t * (b.proportion - a.proportion);
      }
    }
    return points.back().proportion;
  }

  double max_proportion() const { return points.back().proportion; }
};

// Bins respondents by integer root rating and smooths the per-bin share of
// outcome >= threshold with isotonic regression weighted by bin size.
inline LoyaltyCurve loyalty_curve(const SurveySample& sample, OutcomeKind outcome,
                                  int threshold = kDefaultLoyaltyThreshold) {
  if (threshold < 1 || threshold > 10) {
    throw Error(ErrorCode::kInvalidArgument,
                "loyalty threshold must be in [1,10], got " + std::to_string(threshold));
  }
  const std::size_t root = sample.tree().index(sample.tree().root());
  std::map<int, std::pair<std::size_t, std::size_t>> bins;  // rating -> (count, hits)
  for (const Respondent& r : sample.respondents()) {
    const auto& v = r.ratings[root];
    const auto o = r.outcome(outcome);
    if (!v || !o) continue;
    auto& [count, hits] = bins[*v];
    ++count;
    if (*o >= threshold) ++hits;
  }
  if (bins.empty()) {
    throw Error(ErrorCode::kNoData, "no respondents rate both the root and the " +
                                        std::string(to_string(outcome)) + " outcome");
  }
  LoyaltyCurve curve;
  curve.outcome = outcome;
  curve.threshold = threshold;
  std::vector<double> raw, weight;
  for (const auto& [rating, ch] : bins) {
    LoyaltyPoint p;
    p.value_score = rating;
    p.count = ch.first;
    p.raw_proportion = static_cast<double>(ch.second) / static_cast<double>(ch.first);
    raw.push_back(p.raw_proportion);
    weight.push_back(static_cast<double>(ch.first));
    curve.points.push_back(p);
  }
  const std::vector<double> smooth = isotonic_fit(raw, weight);
  for (std::size_t i = 0; i < smooth.size(); ++i) curve.points[i].proportion = smooth[i];
  return curve;
}

// Smallest value score at which the curve reaches `target`; nullopt when the
// curve never gets there.
inline std::optional<double> value_target_for_loyalty(const LoyaltyCurve& curve, double target) {
  if (!(target > 0.0 && target <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "target proportion must be in (0,1]");
  }
  const auto& pts = curve.points;
  if (target <= pts.front().proportion) return pts.front().value_score;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const LoyaltyPoint& a = pts[i];
    const LoyaltyPoint& b = pts[i + 1];
    if (a.proportion < target && target <= b.proportion) {
      const double t = (target - a.proportion) / (b.proportion - a.proportion);
      return a.value_score + t * (b.value_score - a.value_score);
    }
  }
  return std::nullopt;
}

enum class ValueZone { kSuperior, kFair, kInferior };

inline std::string_view to_string(ValueZone z) {
  switch (z) {
    case ValueZone::kSuperior: return "superior_value";
    case ValueZone::kFair: return "fair_value";
    case ValueZone::kInferior: return "inferior_value";
  }
  return "fair_value";
}

inline constexpr double kDefaultValueMapBand = 3.0;

struct ValueMapInput {
  std::string supplier;
  double relative_quality = 100.0;  // percent
  double relative_price = 100.0;    // percent; > 100 = better price satisfaction
};

struct ValueMapPoint {
  std::string supplier;
  double relative_quality = 0.0;
  double relative_price = 0.0;
  ValueZone zone = ValueZone::kFair;
  // Distance above the fair-value line quality = 200 - price.
  double excess_quality = 0.0;
};

// Classifies each supplier against the fair-value line, on which excess
// relative quality offsets relative price dissatisfaction one for one.
// Points within `band` of the line (inclusive) are fair value.
inline std::vector<ValueMapPoint> value_map(std::span<const ValueMapInput> inputs,
                                            double band = kDefaultValueMapBand) {
  if (!(band >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "band must be non-negative");
  std::vector<ValueMapPoint> out;
  for (const ValueMapInput& in : inputs) {
    if (!(in.relative_quality > 0.0) || !(in.relative_price > 0.0)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "relative ratings for '" + in.supplier + "' must be positive");
    }
    ValueMapPoint p;
    p.supplier = in.supplier;
    p.relative_quality = in.relative_quality;
    p.relative_price = in.relative_price;
    p.excess_quality = in.relative_quality - (200.0 - in.relative_price);
    if (std::abs(p.excess_quality) <= band) p.zone = ValueZone::kFair;
    else p.zone = p.excess_quality > 0.0 ? ValueZone::kSuperior : ValueZone::kInferior;
    out.push_back(std::move(p));
  }
  return out;
}

// Relative quality/price for the own supplier against pooled competitors,
// and for each competitor against the rest of the market.
inline std::vector<ValueMapInput> value_map_inputs(const SurveySample& market,
                                                   std::string_view quality_node,
                                                   std::string_view price_node) {
  std::vector<std::string> order{market.own_supplier()};
  for (const std::string& s : market.suppliers()) {
    if (s != market.own_supplier()) order.push_back(s);
  }
  std::vector<ValueMapInput> out;
  for (const std::string& s : order) {
    auto mine = filter_respondents(market, [&](const Respondent& r) { return r.supplier == s; });
    auto rest = filter_respondents(market, [&](const Respondent& r) { return r.supplier != s; });
    auto q = try_node_mean(mine, quality_node), qr = try_node_mean(rest, quality_node);
    auto p = try_node_mean(mine, price_node), pr = try_node_mean(rest, price_node);
    if (!q || !qr || !p || !pr || !(qr->mean > 0) || !(pr->mean > 0)) continue;
    out.push_back({s, 100.0 * q->mean / qr->mean, 100.0 * p->mean / pr->mean});
  }
  return out;
}

// Expected survivors after `periods` rounds at a constant retention rate.
inline double retention_projection(double initial, double retention_rate, unsigned periods) {
  if (!(retention_rate >= 0.0 && retention_rate <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "retention rate must be in [0,1]");
  }
  return initial * std::pow(retention_rate, static_cast<double>(periods));
}

enum class SatisfactionCategory { kPoor = 0, kFair = 1, kGood = 2, kExcellent = 3 };

// Percent of ratings in `box`, which must be a top segment of the
// Poor < Fair < Good < Excellent order.
inline double top_box_rate(std::span<const SatisfactionCategory> ratings,
                           const std::set<SatisfactionCategory>& box) {
  if (ratings.empty()) throw Error(ErrorCode::kNoData, "no ratings");
  if (!box.empty()) {
    const int lowest = static_cast<int>(*box.begin());
    if (static_cast<std::size_t>(4 - lowest) != box.size()) {
      throw Error(ErrorCode::kInvalidArgument, "box must be a top segment of the category order");
    }
  }
  std::size_t hits = 0;
  for (SatisfactionCategory c : ratings) hits += box.count(c);
  return 100.0 * static_cast<double>(hits) / static_cast<double>(ratings.size());
}

}  // namespace cvm

#endif  // CVM_CVM_ANALYTICS_HPP_
