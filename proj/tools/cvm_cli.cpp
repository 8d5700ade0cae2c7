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

// Command-line front end: cvm <fit|report|nps|simulate|validate|calibrate>.

#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cvm/cli_reports.hpp"

namespace {

void add_common(CLI::App& sub, cvm::RunConfig& c, std::vector<std::string>& formats) {
  sub.add_option("--out", c.out, "Output directory")->capture_default_str();
  sub.add_option("--format", formats, "Artifact formats: text, records, plotdata")
      ->check(CLI::IsMember({"text", "records", "plotdata"}));
}

void add_survey_inputs(CLI::App& sub, cvm::RunConfig& c) {
  sub.add_option("--tree", c.tree, "Value tree JSON file")->required();
  sub.add_option("--survey", c.surveys, "Survey CSV file (repeatable)")->required();
  sub.add_option("--own", c.own, "Own supplier label")->required();
  sub.add_option("--hierarchy", c.hierarchy, "Previously fitted hierarchy JSON");
  sub.add_flag("--parallel", c.parallel, "Fit node regressions concurrently");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Customer Value Management analytics"};
  app.set_config("--config", "", "TOML/INI file with option defaults");
  app.require_subcommand(1);

  cvm::RunConfig c;
  std::vector<std::string> formats;
  std::string outcome = "recommend";

  auto* fit = app.add_subcommand("fit", "Fit the hierarchical regression and print weights");
  add_survey_inputs(*fit, c);
  add_common(*fit, c, formats);

  auto* report = app.add_subcommand("report", "Profile tables, CVA, priorities, loyalty, value map");
  add_survey_inputs(*report, c);
  add_common(*report, c, formats);
  report->add_option("--loyalty-threshold", c.loyalty_threshold, "Top rating band lower bound")
      ->capture_default_str();
  report->add_option("--loyalty-outcome", outcome, "recommend or repurchase")
      ->check(CLI::IsMember({"recommend", "repurchase"}))
      ->capture_default_str();
  report->add_option("--target-loyalty", c.target_loyalty, "Target share very willing, in (0,1]");
  report->add_option("--band", c.band, "Fair-value band half width")->capture_default_str();
  report->add_option("--what-if", c.what_if, "node:delta rating change (repeatable)");
  report->add_option("--quality-node", c.quality_node)->capture_default_str();
  report->add_option("--price-node", c.price_node)->capture_default_str();
  report->add_flag("--include-internal", c.include_internal, "Rank internal nodes too");

  auto* nps = app.add_subcommand("nps", "Net-Promoter Score beside CVA");
  add_survey_inputs(*nps, c);
  add_common(*nps, c, formats);
  nps->add_option("--aggregate", c.aggregate, "pooled or average-of-units")->capture_default_str();

  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic market survey");
  simulate->add_option("--seed-config", c.seed_config, "Ground-truth JSON")
      ->required()
      ->check(CLI::ExistingFile);
  add_common(*simulate, c, formats);

  auto* validate = app.add_subcommand("validate", "Check a tree file and optional surveys");
  validate->add_option("--tree", c.tree, "Value tree JSON file")->required();
  validate->add_option("--survey", c.surveys, "Survey CSV file (repeatable)");
  validate->add_option("--own", c.own, "Own supplier label");
  add_common(*validate, c, formats);

  auto* calibrate = app.add_subcommand("calibrate", "Fit a ground truth to target profile tables");
  calibrate->add_option("--seed-config", c.seed_config, "Starting ground-truth JSON")
      ->required()
      ->check(CLI::ExistingFile);
  calibrate->add_option("--targets", c.targets, "Calibration targets JSON")
      ->required()
      ->check(CLI::ExistingFile);
  add_common(*calibrate, c, formats);

  CLI11_PARSE(app, argc, argv);

  if (!formats.empty()) {
    c.formats.clear();
    for (const auto& f : formats) c.formats.insert(*cvm::parse_output_format(f));
  }
  c.loyalty_outcome = *cvm::parse_outcome_kind(outcome);

  using Command = int (*)(const cvm::RunConfig&, std::ostream&, std::ostream&);
  const std::map<const CLI::App*, Command> dispatch{
      {fit, cvm::cmd_fit},           {report, cvm::cmd_report},     {nps, cvm::cmd_nps},
      {simulate, cvm::cmd_simulate}, {validate, cvm::cmd_validate}, {calibrate, cvm::cmd_calibrate}};
  for (const auto& [sub, command] : dispatch) {
    if (sub->parsed()) return command(c, std::cout, std::cerr);
  }
  return 2;
}
