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

#include <filesystem>
#include <sstream>

#include <gtest/gtest.h>

#include "support.hpp"

namespace cvm {
namespace {

namespace fs = std::filesystem;
using testing::data_path;
using testing::golden_path;
using testing::slurp;

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / ("cvm_cli_" + std::string(info->name()));
    fs::remove_all(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  RunConfig fixture_config(const std::string& sub = "out") const {
    RunConfig c;
    c.tree = data_path("automobile_tree.json");
    c.surveys = {data_path("canonical_survey.csv")};
    c.own = "our_company";
    c.out = dir_ / sub;
    return c;
  }

  static RunConfig golden_report_config(RunConfig c) {
    c.target_loyalty = 0.8;
    c.what_if = {"quality:0.6", "billing:1"};
    return c;
  }

  fs::path write_file(const std::string& name, const std::string& text) const {
    fs::create_directories(dir_);
    const fs::path p = dir_ / name;
    std::ofstream(p, std::ios::binary) << text;
    return p;
  }

  fs::path dir_;
  std::ostringstream out_, err_;
};

TEST_F(Cli, ReportMatchesGoldenFiles) {
  const RunConfig c = golden_report_config(fixture_config());
  ASSERT_EQ(cmd_report(c, out_, err_), 0) << err_.str();
  for (const char* f : {"report.md", "report.json", "loyalty_curve.dat", "value_map.dat"}) {
    EXPECT_EQ(slurp(c.out / f), slurp(golden_path(f))) << f;
  }
  EXPECT_EQ(out_.str(), slurp(golden_path("report.md")));
  EXPECT_EQ(err_.str(), "");
}

TEST_F(Cli, ReportContainsTableCells) {
  const RunConfig c = golden_report_config(fixture_config());
  ASSERT_EQ(cmd_report(c, out_, err_), 0);
  const std::string md = slurp(c.out / "report.md");
  for (const char* line : {
           "| Quality             |                51 |         7.4 |         7.7 |                  96 |",
           "| Price               |                35 |         7.1 |         7.0 |                 101 |",
           "| Worth What Paid For |        (R² = 81%) |         7.3 |         7.5 |            CVA = 97 |",
           "| Automobile       |                39 |         7.8 |         7.5 |                 104 |",
           "| Delivery process |                59 |         6.9 |         7.8 |                  88 |",
           "| Billing          |                40 |         6.1 |         7.5 |                  81 |",
           "\nCVA = 97\n",
           "required Value score ≈ 7.8",
           "predicted Value change +0.306 (≈ 0.31)",
           "|    1 | Billing          |",
       }) {
    EXPECT_NE(md.find(line), std::string::npos) << line;
  }
}

TEST_F(Cli, CommandsAreByteDeterministic) {
  const RunConfig a = golden_report_config(fixture_config("a"));
  const RunConfig b = golden_report_config(fixture_config("b"));
  ASSERT_EQ(cmd_report(a, out_, err_), 0);
  ASSERT_EQ(cmd_report(b, out_, err_), 0);
  ASSERT_EQ(cmd_fit(a, out_, err_), 0);
  ASSERT_EQ(cmd_fit(b, out_, err_), 0);
  ASSERT_EQ(cmd_nps(a, out_, err_), 0);
  ASSERT_EQ(cmd_nps(b, out_, err_), 0);
  std::size_t compared = 0;
  for (const auto& e : fs::directory_iterator(a.out)) {
    const auto name = e.path().filename();
    if (name == "run.log") continue;
    EXPECT_EQ(slurp(e.path()), slurp(b.out / name)) << name;
    ++compared;
  }
  EXPECT_EQ(compared, 9u);
  EXPECT_TRUE(fs::exists(a.out / "run.log"));
  EXPECT_NE(slurp(a.out / "run.log").find("T"), std::string::npos);
}

TEST_F(Cli, FitWritesHierarchyAndSummary) {
  const RunConfig c = fixture_config();
  ASSERT_EQ(cmd_fit(c, out_, err_), 0) << err_.str();
  EXPECT_EQ(slurp(c.out / "hierarchy.json"), slurp(golden_path("hierarchy.json")));
  EXPECT_EQ(slurp(c.out / "fit_summary.md"), slurp(golden_path("fit_summary.md")));
  const auto doc = nlohmann::json::parse(slurp(c.out / "hierarchy.json"));
  std::map<std::string, double> r2;
  for (const auto& m : doc["models"]) r2[m["node"]] = m["r_squared"];
  EXPECT_NEAR(r2.at("worth_what_paid_for"), 0.81, 0.05);
  EXPECT_NEAR(r2.at("quality"), 0.89, 0.05);
  EXPECT_NEAR(r2.at("delivery_process"), 0.86, 0.05);
}

TEST_F(Cli, ReportReusesSavedHierarchy) {
  RunConfig c = golden_report_config(fixture_config());
  c.hierarchy = golden_path("hierarchy.json");
  ASSERT_EQ(cmd_report(c, out_, err_), 0) << err_.str();
  EXPECT_EQ(slurp(c.out / "report.md"), slurp(golden_path("report.md")));
}

TEST_F(Cli, MissingSurveyFile) {
  RunConfig c = fixture_config();
  c.surveys = {dir_ / "absent.csv"};
  EXPECT_NE(cmd_fit(c, out_, err_), 0);
  EXPECT_NE(err_.str().find("file not found"), std::string::npos) << err_.str();
  EXPECT_EQ(err_.str().rfind("error: ", 0), 0u);
}

TEST_F(Cli, OutOfRangeRatingNamesRow) {
  std::string text = slurp(data_path("small_survey.csv"));
  // Third data row, first node column.
  std::size_t pos = 0;
  for (int i = 0; i < 3; ++i) pos = text.find('\n', pos) + 1;
  for (int i = 0; i < 3; ++i) pos = text.find(',', pos) + 1;
  text.replace(pos, text.find(',', pos) - pos, "11");
  RunConfig c = fixture_config();
  c.surveys = {write_file("bad.csv", text)};
  EXPECT_NE(cmd_fit(c, out_, err_), 0);
  EXPECT_NE(err_.str().find("bad.csv:4"), std::string::npos) << err_.str();
}

TEST_F(Cli, EmptyCompetitorSampleWarnsAndSucceeds) {
  std::string text = slurp(data_path("small_survey.csv"));
  std::istringstream in(text);
  std::string line, own_only;
  while (std::getline(in, line)) {
    if (own_only.empty() || line.find(",our_company,") != std::string::npos) own_only += line + "\n";
  }
  RunConfig c = fixture_config();
  c.surveys = {write_file("own.csv", own_only)};
  EXPECT_EQ(cmd_report(c, out_, err_), 0);
  EXPECT_NE(err_.str().find("warning: no competitor respondents"), std::string::npos) << err_.str();
  EXPECT_EQ(err_.str().find("error:"), std::string::npos);
  const std::string md = slurp(c.out / "report.md");
  EXPECT_NE(md.find("n/a"), std::string::npos);
  EXPECT_NE(md.find("unavailable"), std::string::npos);
}

TEST_F(Cli, NpsReportAndRefusal) {
  RunConfig c = fixture_config();
  ASSERT_EQ(cmd_nps(c, out_, err_), 0) << err_.str();
  EXPECT_EQ(slurp(c.out / "nps.md"), slurp(golden_path("nps.md")));
  EXPECT_EQ(slurp(c.out / "nps.json"), slurp(golden_path("nps.json")));
  EXPECT_EQ(slurp(c.out / "nps_histogram.dat"), slurp(golden_path("nps_histogram.dat")));

  c.aggregate = "average-of-units";
  std::ostringstream err;
  EXPECT_NE(cmd_nps(c, out_, err), 0);
  EXPECT_NE(err.str().find("no agreed standard"), std::string::npos);
}

TEST_F(Cli, NpsWithoutOutcomesFails) {
  std::string text = slurp(data_path("small_survey.csv"));
  std::istringstream in(text);
  std::string line, blanked;
  bool header = true;
  while (std::getline(in, line)) {
    if (!header) {
      // Drop both trailing outcome values.
      line = line.substr(0, line.rfind(','));
      line = line.substr(0, line.rfind(',')) + ",,";
    }
    header = false;
    blanked += line + "\n";
  }
  RunConfig c = fixture_config();
  c.surveys = {write_file("no_outcomes.csv", blanked)};
  EXPECT_NE(cmd_nps(c, out_, err_), 0);
}

TEST_F(Cli, SimulateRegeneratesFixture) {
  RunConfig c;
  c.seed_config = data_path("canonical_config.json");
  c.out = dir_;
  ASSERT_EQ(cmd_simulate(c, out_, err_), 0) << err_.str();
  EXPECT_EQ(slurp(dir_ / "survey.csv"), slurp(data_path("canonical_survey.csv")));
  EXPECT_NE(out_.str().find("generated 2000 respondents"), std::string::npos);
}

TEST_F(Cli, SimulateZeroRespondents) {
  GroundTruth t = load_truth_file(data_path("small_config.json"));
  for (auto& s : t.suppliers) s.n = 0;
  RunConfig c;
  c.seed_config = write_file("zero.json", truth_to_json(t).dump(2));
  c.out = dir_ / "out";
  ASSERT_EQ(cmd_simulate(c, out_, err_), 0);
  const std::string csv = slurp(c.out / "survey.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1);
  EXPECT_NE(err_.str().find("warning"), std::string::npos);
}

TEST_F(Cli, Validate) {
  RunConfig c;
  c.tree = data_path("automobile_tree.json");
  c.out = dir_;
  EXPECT_EQ(cmd_validate(c, out_, err_), 0);
  EXPECT_NE(out_.str().find("valid (30 nodes)"), std::string::npos) << out_.str();

  c.tree = write_file("bad_tree.json", R"({"root": "v", "nodes": [
      {"id": "v", "kind": "root", "children": ["a"]},
      {"id": "a", "kind": "attribute"}]})");
  std::ostringstream out;
  EXPECT_NE(cmd_validate(c, out, err_), 0);
  EXPECT_NE(out.str().find("degenerate internal node"), std::string::npos) << out.str();

  c.tree = write_file("broken.json", "{\"root\": ");
  EXPECT_NE(cmd_validate(c, out, err_), 0);
}

TEST_F(Cli, ConfigRangeChecks) {
  RunConfig c = fixture_config();
  c.loyalty_threshold = 11;
  EXPECT_NE(cmd_report(c, out_, err_), 0);
  c.loyalty_threshold = 8;
  c.band = -1;
  EXPECT_NE(cmd_report(c, out_, err_), 0);
  c.band = 3;
  c.target_loyalty = 1.5;
  EXPECT_NE(cmd_report(c, out_, err_), 0);
}

TEST_F(Cli, FormatSelection) {
  RunConfig c = fixture_config();
  c.formats = {OutputFormat::kRecords};
  ASSERT_EQ(cmd_report(c, out_, err_), 0);
  EXPECT_TRUE(fs::exists(c.out / "report.json"));
  EXPECT_FALSE(fs::exists(c.out / "report.md"));
  EXPECT_FALSE(fs::exists(c.out / "value_map.dat"));
  EXPECT_EQ(parse_output_format("plotdata"), OutputFormat::kPlotData);
  EXPECT_FALSE(parse_output_format("pdf"));
}

TEST_F(Cli, CalibrateWritesCanonicalConfig) {
  RunConfig c;
  c.seed_config = data_path("base_config.json");
  c.targets = data_path("calibration_targets.json");
  c.out = dir_;
  ASSERT_EQ(cmd_calibrate(c, out_, err_), 0) << err_.str();
  EXPECT_EQ(slurp(dir_ / "calibrated_config.json"), slurp(data_path("canonical_config.json")));
}

}  // namespace
}  // namespace cvm
