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

#ifndef CVM_CLI_REPORTS_HPP_
#define CVM_CLI_REPORTS_HPP_

// Subcommands behind the `cvm` tool: fit, report, nps, simulate, validate,
// calibrate. Each returns the process exit status; artifacts go to the
// output directory, diagnostics to `err` ("error: ..." / "warning: ...").
// Artifacts contain no timestamps; run.log in the output directory does.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cvm/cvm_analytics.hpp"
#include "cvm/error.hpp"
#include "cvm/format.hpp"
#include "cvm/ls_engine.hpp"
#include "cvm/market_sim.hpp"
#include "cvm/nps_metrics.hpp"
#include "cvm/render.hpp"
#include "cvm/survey_store.hpp"
#include "cvm/value_tree.hpp"
#include "json.hpp"

namespace cvm {

enum class OutputFormat { kText, kRecords, kPlotData };

inline std::optional<OutputFormat> parse_output_format(std::string_view s) {
  if (s == "text") return OutputFormat::kText;
  if (s == "records") return OutputFormat::kRecords;
  if (s == "plotdata") return OutputFormat::kPlotData;
  return std::nullopt;
}

struct RunConfig {
  std::filesystem::path tree;
  std::vector<std::filesystem::path> surveys;
  std::string own;
  int loyalty_threshold = kDefaultLoyaltyThreshold;
  OutcomeKind loyalty_outcome = OutcomeKind::kRecommend;
  std::optional<double> target_loyalty;
  double band = kDefaultValueMapBand;
  std::filesystem::path out = ".";
  std::set<OutputFormat> formats{OutputFormat::kText, OutputFormat::kRecords,
                                 OutputFormat::kPlotData};
  std::filesystem::path seed_config;
  std::filesystem::path targets;
  std::optional<std::filesystem::path> hierarchy;
  std::string aggregate = "pooled";
  std::vector<std::string> what_if;  // "node:delta"
  std::string quality_node = "quality";
  std::string price_node = "price";
  bool include_internal = false;
  bool parallel = false;
};

// Throws kInvalidArgument on values outside their allowed ranges.
inline void check_run_config(const RunConfig& c) {
  if (c.loyalty_threshold < 1 || c.loyalty_threshold > 10) {
    throw Error(ErrorCode::kInvalidArgument, "--loyalty-threshold must be in [1,10]");
  }
  if (!(c.band >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "--band must be >= 0");
  if (c.target_loyalty && !(*c.target_loyalty > 0.0 && *c.target_loyalty <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "--target-loyalty must be in (0,1]");
  }
}

namespace detail {

// Writes via a temporary file and rename so readers never see partial output.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw Error(ErrorCode::kIo, "cannot write " + tmp.string());
    os << content;
    if (!os) throw Error(ErrorCode::kIo, "write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

class Session {
 public:
  Session(const RunConfig& config, std::string command, std::ostream& err)
      : config_(config), command_(std::move(command)), err_(err) {}

  bool wants(OutputFormat f) const { return config_.formats.count(f) > 0; }

  void write(const std::string& name, const std::string& content) {
    write_atomic(config_.out / name, content);
    written_.push_back(name);
  }

  void warn(const std::string& msg) { err_ << "warning: " << msg << '\n'; }

  int fail(const std::string& msg) {
    err_ << "error: " << msg << '\n';
    return 1;
  }

  // Sidecar log; the only output carrying a timestamp.
  void log() {
    std::error_code ec;
    std::filesystem::create_directories(config_.out, ec);
    std::ofstream os(config_.out / "run.log", std::ios::trunc);
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    os << stamp << ' ' << command_ << '\n';
    for (const auto& w : written_) os << "wrote " << w << '\n';
  }

 private:
  const RunConfig& config_;
  std::string command_;
  std::ostream& err_;
  std::vector<std::string> written_;
};

inline std::shared_ptr<const ValueTree> load_tree_ptr(const RunConfig& c) {
  if (c.tree.empty()) throw Error(ErrorCode::kInvalidArgument, "--tree is required");
  return std::make_shared<const ValueTree>(load_tree_file(c.tree));
}

inline std::vector<SurveySample> load_units(const RunConfig& c,
                                            const std::shared_ptr<const ValueTree>& tree,
                                            Session& session) {
  if (c.surveys.empty()) throw Error(ErrorCode::kInvalidArgument, "--survey is required");
  std::vector<SurveySample> units;
  for (const auto& path : c.surveys) {
    IngestResult r = ingest_responses_file(path, tree, c.own);
    for (const auto& w : r.warnings) session.warn(w);
    units.push_back(std::move(r.sample));
  }
  return units;
}

inline SurveySample pooled(const std::vector<SurveySample>& units) {
  SurveySample all = units.front();
  for (std::size_t i = 1; i < units.size(); ++i) all = concat(all, units[i]);
  return all;
}

inline FittedHierarchy obtain_hierarchy(const RunConfig& c, const SurveySample& market,
                                        Session& session) {
  if (c.hierarchy) {
    return hierarchy_from_json(nlohmann::json::parse(read_text_file(*c.hierarchy)),
                               market.tree_ptr());
  }
  FittedHierarchy h = fit_hierarchy(market, {c.parallel});
  for (const UnfitNode& u : h.unfit()) session.warn("unfit node " + u.node + ": " + u.reason);
  return h;
}

template <typename Body>
int run_guarded(Session& session, Body body) {
  try {
    const int status = body();
    session.log();
    return status;
  } catch (const Error& e) {
    return session.fail(e.what());
  } catch (const std::exception& e) {
    return session.fail(e.what());
  }
}

}  // namespace detail

inline int cmd_fit(const RunConfig& config, std::ostream& out, std::ostream& err) {
  detail::Session session(config, "fit", err);
  return detail::run_guarded(session, [&] {
    check_run_config(config);
    auto tree = detail::load_tree_ptr(config);
    const SurveySample market = detail::pooled(detail::load_units(config, tree, session));
    const FittedHierarchy h = fit_hierarchy(market, {config.parallel});
    for (const UnfitNode& u : h.unfit()) session.warn("unfit node " + u.node + ": " + u.reason);
    for (const NodeModel& m : h.models()) {
      for (const NodeId& c : m.negative_children) {
        session.warn("negative coefficient for '" + c + "' in '" + m.node + "'");
      }
    }
    session.write("hierarchy.json", hierarchy_to_json(h).dump(2) + "\n");
    const std::string summary = render_fit_summary(h);
    if (session.wants(OutputFormat::kText)) session.write("fit_summary.md", summary);
    out << summary;
    return 0;
  });
}

inline int cmd_report(const RunConfig& config, std::ostream& out, std::ostream& err) {
  detail::Session session(config, "report", err);
  return detail::run_guarded(session, [&] {
    check_run_config(config);
    auto tree = detail::load_tree_ptr(config);
    const SurveySample market = detail::pooled(detail::load_units(config, tree, session));
    if (config.own.empty()) throw Error(ErrorCode::kInvalidArgument, "--own is required");
    const auto [own, competitors] = split_by_supplier(market);
    if (own.empty()) throw Error(ErrorCode::kNoData, "no respondents for own supplier '" + config.own + "'");
    if (competitors.empty()) {
      session.warn("no competitor respondents; relative columns are unavailable");
    }
    const FittedHierarchy h = detail::obtain_hierarchy(config, market, session);

    std::ostringstream text;
    nlohmann::ordered_json records;
    text << "# Customer Value report: " << tree->name() << "\n\n";
    text << "Own supplier: " << config.own << " (n = " << own.size()
         << "); competitors n = " << competitors.size() << ".\n\n";

    text << "## Profile tables\n\n";
    auto& tables = records["profile_tables"] = nlohmann::ordered_json::array();
    for (const ProfileTable& t : profile_tables(h, own, competitors)) {
      text << render_profile_table(t) << "\n";
      tables.push_back(profile_table_to_json(t));
    }
    if (!competitors.empty()) {
      const int value_cva = cva(h, own, competitors);
      records["cva"] = value_cva;
    } else {
      records["cva"] = nullptr;
    }

    if (!config.what_if.empty()) {
      text << "## What-if\n\n";
      auto& wi = records["what_if"] = nlohmann::ordered_json::array();
      for (const std::string& spec : config.what_if) {
        const auto colon = spec.rfind(':');
        if (colon == std::string::npos) {
          throw Error(ErrorCode::kInvalidArgument, "--what-if expects node:delta, got '" + spec + "'");
        }
        const std::string node = spec.substr(0, colon);
        double delta = 0.0;
        try {
          delta = std::stod(spec.substr(colon + 1));
        } catch (const std::exception&) {
          throw Error(ErrorCode::kInvalidArgument, "--what-if delta in '" + spec + "'");
        }
        const WhatIfResult r = what_if_checked(h, own, node, delta);
        for (const auto& w : r.warnings) session.warn(w);
        text << "- " << tree->node(node).label << " " << (delta >= 0 ? "+" : "")
             << format_fixed(delta, 2) << " -> predicted Value change "
             << (r.root_change >= 0 ? "+" : "") << format_fixed(r.root_change, 3) << " (≈ "
             << format_fixed(r.root_change, 2) << ")\n";
        wi.push_back({{"node", node}, {"delta", delta}, {"root_change", r.root_change}});
      }
      text << "\n";
    }

    text << "## Improvement priorities\n\n";
    const PriorityRanking ranking = rank_priorities(h, own, competitors, {config.include_internal});
    if (ranking.ranked.empty()) session.warn("no scorable nodes for improvement priorities");
    text << render_priorities(ranking, *tree) << "\n";
    records["priorities"] = priorities_to_json(ranking);

    text << "## Loyalty\n\n";
    std::optional<LoyaltyCurve> curve;
    try {
      curve = loyalty_curve(own, config.loyalty_outcome, config.loyalty_threshold);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNoData) throw;
      session.warn(e.message());
    }
    if (curve) {
      const double current = node_mean(own, tree->root()).mean;
      text << "Current Value score " << format_fixed(current, 1) << " corresponds to "
           << format_percent(100.0 * curve->at(current)) << "% of own customers very willing to "
           << to_string(config.loyalty_outcome) << " (rating >= " << config.loyalty_threshold
           << ").\n";
      auto& lj = records["loyalty"] = loyalty_to_json(*curve);
      lj["current_value_score"] = current;
      lj["current_proportion"] = curve->at(current);
      if (config.target_loyalty) {
        const auto need = value_target_for_loyalty(*curve, *config.target_loyalty);
        if (need) {
          text << "Target " << format_percent(100.0 * *config.target_loyalty)
               << "% very willing: required Value score ≈ " << format_fixed(*need, 1) << "\n";
          lj["target"] = {{"proportion", *config.target_loyalty}, {"value_score", *need}};
        } else {
          text << "Target " << format_percent(100.0 * *config.target_loyalty)
               << "% very willing: unattainable on the observed curve\n";
          lj["target"] = {{"proportion", *config.target_loyalty}, {"value_score", nullptr}};
        }
      }
      if (session.wants(OutputFormat::kPlotData)) {
        session.write("loyalty_curve.dat", loyalty_plot_data(*curve));
      }
    }
    text << "\n";

    text << "## Value map\n\n";
    std::vector<ValueMapPoint> map;
    if (tree->contains(config.quality_node) && tree->contains(config.price_node) &&
        !competitors.empty()) {
      map = value_map(value_map_inputs(market, config.quality_node, config.price_node), config.band);
    } else {
      session.warn("value map skipped: needs '" + config.quality_node + "' and '" +
                   config.price_node + "' nodes and competitor data");
    }
    text << render_value_map(map, config.band);
    records["value_map"] = value_map_to_json(map, config.band);
    if (session.wants(OutputFormat::kPlotData)) {
      session.write("value_map.dat", value_map_plot_data(map));
    }

    if (session.wants(OutputFormat::kText)) session.write("report.md", text.str());
    if (session.wants(OutputFormat::kRecords)) session.write("report.json", records.dump(2) + "\n");
    out << text.str();
    return 0;
  });
}

inline int cmd_nps(const RunConfig& config, std::ostream& out, std::ostream& err) {
  detail::Session session(config, "nps", err);
  return detail::run_guarded(session, [&] {
    check_run_config(config);
    if (config.aggregate == "average-of-units") {
      throw Error(ErrorCode::kRefused, std::string(kAggregationRefusal));
    }
    if (config.aggregate != "pooled") {
      throw Error(ErrorCode::kInvalidArgument,
                  "--aggregate must be 'pooled' or 'average-of-units'");
    }
    if (config.own.empty()) throw Error(ErrorCode::kInvalidArgument, "--own is required");
    auto tree = detail::load_tree_ptr(config);
    const SurveySample market = detail::pooled(detail::load_units(config, tree, session));
    const auto [own, competitors] = split_by_supplier(market);
    if (own.empty()) throw Error(ErrorCode::kNoData, "no own customers in the sample");
    const std::vector<int> ratings = outcome_ratings(own, OutcomeKind::kRecommend);
    if (ratings.empty()) throw Error(ErrorCode::kNoData, "no recommend outcome ratings from own customers");
    const NpsResult result = nps(ratings);

    std::ostringstream text;
    nlohmann::ordered_json records;
    text << "# Net-Promoter Score\n\n" << nps_summary_line(result) << "\n\n";
    records["nps"] = nps_to_json(result);
    if (!competitors.empty()) {
      const FittedHierarchy h = detail::obtain_hierarchy(config, market, session);
      const NpsCvaComparison cmp = nps_vs_cva_report(own, h, competitors);
      text << "## NPS versus CVA\n\n" << render_nps_comparison(cmp);
      records["comparison"] = nps_comparison_to_json(cmp);
    } else {
      session.warn("no competitor respondents; CVA comparison unavailable");
    }
    if (session.wants(OutputFormat::kText)) session.write("nps.md", text.str());
    if (session.wants(OutputFormat::kRecords)) session.write("nps.json", records.dump(2) + "\n");
    if (session.wants(OutputFormat::kPlotData)) {
      session.write("nps_histogram.dat", nps_histogram_plot_data(result));
    }
    out << text.str();
    return 0;
  });
}

inline int cmd_simulate(const RunConfig& config, std::ostream& out, std::ostream& err) {
  detail::Session session(config, "simulate", err);
  return detail::run_guarded(session, [&] {
    if (config.seed_config.empty()) throw Error(ErrorCode::kInvalidArgument, "--seed-config is required");
    const GroundTruth truth = load_truth_file(config.seed_config);
    const SurveySample sample = generate_market(truth);
    if (sample.empty()) session.warn("configuration generates no respondents; header only");
    std::ostringstream csv;
    export_responses(sample, csv);
    session.write("survey.csv", csv.str());
    if (session.wants(OutputFormat::kRecords)) {
      session.write("survey.json", export_records(sample).dump(2) + "\n");
    }
    out << "generated " << sample.size() << " respondents (seed " << truth.seed << ")\n";
    if (!sample.empty()) {
      const auto [own, comp] = split_by_supplier(sample);
      const NodeId& root = truth.tree->root();
      if (auto m = try_node_mean(own, root)) {
        out << "own '" << truth.own_supplier << "': n = " << own.size() << ", mean "
            << truth.tree->node(root).label << " " << format_fixed(m->mean, 2) << "\n";
      }
      if (auto m = try_node_mean(comp, root)) {
        out << "competitors: n = " << comp.size() << ", mean " << truth.tree->node(root).label
            << " " << format_fixed(m->mean, 2) << "\n";
      }
    }
    return 0;
  });
}

inline int cmd_validate(const RunConfig& config, std::ostream& out, std::ostream& err) {
  detail::Session session(config, "validate", err);
  try {
    if (config.tree.empty()) throw Error(ErrorCode::kInvalidArgument, "--tree is required");
    const std::string text = read_text_file(config.tree);
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error&) {
      parse_tree_spec(text);  // rethrows with a position-annotated message
    }
    const TreeSpec spec = tree_spec_from_json(doc);
    const ValidationReport report = validate_tree(spec);
    for (const Violation& v : report) {
      out << config.tree.string() << ": " << to_string(v.rule) << " at '" << v.node
          << "': " << v.detail << "\n";
    }
    if (!report.empty()) return session.fail(std::to_string(report.size()) + " violation(s)");
    out << config.tree.string() << ": valid (" << spec.nodes.size() << " nodes)\n";
    if (!config.surveys.empty()) {
      auto tree = std::make_shared<const ValueTree>(ValueTree::build(spec));
      for (const auto& path : config.surveys) {
        IngestResult r = ingest_responses_file(path, tree, config.own);
        for (const auto& w : r.warnings) session.warn(w);
        out << path.string() << ": " << r.sample.size() << " respondents\n";
      }
    }
    return 0;
  } catch (const std::exception& e) {
    return session.fail(e.what());
  }
}

inline int cmd_calibrate(const RunConfig& config, std::ostream& out, std::ostream& err) {
  detail::Session session(config, "calibrate", err);
  return detail::run_guarded(session, [&] {
    if (config.seed_config.empty() || config.targets.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "--seed-config and --targets are required");
    }
    const GroundTruth base = load_truth_file(config.seed_config);
    const CalibrationTargets targets =
        calibration_targets_from_json(nlohmann::json::parse(read_text_file(config.targets)));
    const CalibrationResult r = calibrate_to_tables(base, targets);
    session.write("calibrated_config.json", truth_to_json(r.truth).dump(2) + "\n");
    out << "calibrated in " << r.iterations << " iterations\n";
    return 0;
  });
}

}  // namespace cvm

#endif  // CVM_CLI_REPORTS_HPP_
