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

#ifndef CVM_NPS_METRICS_HPP_
#define CVM_NPS_METRICS_HPP_

// Net-Promoter Score: percent promoters (9-10) minus percent detractors
// (0-6) on the 0-10 recommend question. Reichheld calls this a "ratio" but
// defines it by subtraction; the subtraction is what is computed here.

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cvm/cvm_analytics.hpp"
#include "cvm/error.hpp"
#include "cvm/format.hpp"
#include "cvm/ls_engine.hpp"
#include "cvm/survey_store.hpp"

namespace cvm {

enum class NpsSegment { kPromoter, kPassive, kDetractor };

inline std::string_view to_string(NpsSegment s) {
  switch (s) {
    case NpsSegment::kPromoter: return "promoter";
    case NpsSegment::kPassive: return "passive";
    case NpsSegment::kDetractor: return "detractor";
  }
  return "detractor";
}

inline NpsSegment classify(int rating) {
  if (rating < 0 || rating > 10) {
    throw Error(ErrorCode::kOutOfRange, "NPS rating " + std::to_string(rating) + " outside [0,10]");
  }
  if (rating >= 9) return NpsSegment::kPromoter;
  if (rating >= 7) return NpsSegment::kPassive;
  return NpsSegment::kDetractor;
}

struct NpsResult {
  std::size_t n = 0;
  double pct_promoters = 0.0;
  double pct_passives = 0.0;
  double pct_detractors = 0.0;
  double nps = 0.0;  // full precision; displayed to one decimal
  std::array<std::size_t, 11> histogram{};
};

inline NpsResult nps(std::span<const int> ratings) {
  if (ratings.empty()) throw Error(ErrorCode::kNoData, "NPS of an empty rating list");
  NpsResult r;
  for (int v : ratings) {
    classify(v);
    ++r.histogram[static_cast<std::size_t>(v)];
  }
  r.n = ratings.size();
  std::size_t promoters = 0, passives = 0, detractors = 0;
  for (int v = 0; v <= 10; ++v) {
    const std::size_t c = r.histogram[static_cast<std::size_t>(v)];
    switch (classify(v)) {
      case NpsSegment::kPromoter: promoters += c; break;
      case NpsSegment::kPassive: passives += c; break;
      case NpsSegment::kDetractor: detractors += c; break;
    }
  }
  const double n = static_cast<double>(r.n);
  r.pct_promoters = 100.0 * static_cast<double>(promoters) / n;
  r.pct_passives = 100.0 * static_cast<double>(passives) / n;
  r.pct_detractors = 100.0 * static_cast<double>(detractors) / n;
  // From counts, so the result depends only on the segment tallies.
  r.nps = 100.0 * (static_cast<double>(promoters) - static_cast<double>(detractors)) / n;
  return r;
}

inline std::string nps_summary_line(const NpsResult& r) {
  return "NPS = " + format_fixed(r.nps, 1) + " (n = " + std::to_string(r.n) +
         "; promoters " + format_fixed(r.pct_promoters, 1) + "%, passives " +
         format_fixed(r.pct_passives, 1) + "%, detractors " + format_fixed(r.pct_detractors, 1) +
         "%)";
}

enum class NpsAggregation { kPooledRespondents, kAverageOfUnits };

inline constexpr std::string_view kAggregationRefusal =
    "averaging per-unit NPS values is not supported: there is no agreed standard for "
    "aggregating NPS across units, and an average of differences of percentages weights "
    "small units like large ones. Pool the respondents instead.";

// Combines several units (branches, regions). Only pooling respondents is
// implemented; averaging unit scores is refused.
inline NpsResult aggregate_nps(std::span<const std::vector<int>> units, NpsAggregation how) {
  if (how == NpsAggregation::kAverageOfUnits) {
    throw Error(ErrorCode::kRefused, std::string(kAggregationRefusal));
  }
  std::vector<int> pooled;
  for (const auto& u : units) pooled.insert(pooled.end(), u.begin(), u.end());
  return nps(pooled);
}

inline std::vector<int> outcome_ratings(const SurveySample& sample, OutcomeKind kind) {
  std::vector<int> out;
  for (const Respondent& r : sample.respondents()) {
    if (auto o = r.outcome(kind)) out.push_back(*o);
  }
  return out;
}

struct NpsCvaComparison {
  NpsResult nps;
  int cva = 0;
  bool nps_drill_down = false;
  bool cva_drill_down = true;
  std::size_t profile_levels = 0;  // drill-down tables behind the CVA figure
};

// NPS from own customers only, set beside CVA and what each one offers
// below the headline number.
inline NpsCvaComparison nps_vs_cva_report(const SurveySample& own,
                                          const FittedHierarchy& hierarchy,
                                          const SurveySample& competitors) {
  if (own.empty() || own.competitor_only()) {
    throw Error(ErrorCode::kNoData, "no own customers in the sample");
  }
  const std::vector<int> ratings = outcome_ratings(own, OutcomeKind::kRecommend);
  if (ratings.empty()) {
    throw Error(ErrorCode::kNoData, "own customers gave no recommend ratings");
  }
  NpsCvaComparison c;
  c.nps = nps(ratings);
  c.cva = cva(hierarchy, own, competitors);
  c.profile_levels = hierarchy.models().size();
  return c;
}

}  // namespace cvm

#endif  // CVM_NPS_METRICS_HPP_
