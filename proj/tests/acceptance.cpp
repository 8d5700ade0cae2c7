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

// One PASS/FAIL line per acceptance criterion; exit status 1 if any fail.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "support.hpp"

namespace {

using namespace cvm;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double x, int d) { return format_fixed(x, d); }

Outcome table_reproduction() {
  Outcome o;
  const auto t0 = Clock::now();
  const auto tree = testing::automobile_tree();
  const SurveySample market =
      ingest_responses_file(testing::data_path("canonical_survey.csv"), tree, "our_company").sample;
  const auto [own, comp] = split_by_supplier(market);
  const FittedHierarchy h = fit_hierarchy(market);
  std::string md;
  for (const char* parent : {"worth_what_paid_for", "quality", "delivery_process"}) {
    md += render_profile_table(profile_table(h, own, comp, parent));
  }
  const double elapsed = seconds_since(t0);
  const std::vector<std::string> rows{
      "| Quality             |                51 |         7.4 |         7.7 |                  96 |",
      "| Price               |                35 |         7.1 |         7.0 |                 101 |",
      "| Worth What Paid For |        (R² = 81%) |         7.3 |         7.5 |            CVA = 97 |",
      "| Automobile       |                39 |         7.8 |         7.5 |                 104 |",
      "| Delivery process |                59 |         6.9 |         7.8 |                  88 |",
      "| Billing          |                40 |         6.1 |         7.5 |                  81 |",
      "\nCVA = 97\n",
  };
  for (const std::string& r : rows) o.require(md.find(r) != std::string::npos, "missing row: " + r);
  o.require(elapsed < 10.0, "runtime " + fmt(elapsed, 2) + " s");
  if (o.pass) o.detail = "all profile table cells and the billing row match; " + fmt(elapsed, 2) + " s";
  return o;
}

Outcome what_if_anchor() {
  Outcome o;
  const FittedHierarchy& h = testing::fixture().hierarchy;
  const double coef = h.model("worth_what_paid_for").coefficient("quality");
  const double change = what_if(h, "quality", 0.6);
  o.require(impact_weight_percent(coef) == 51, "quality weight " + fmt(coef, 4));
  o.require(std::abs(change - 0.306) <= 0.005, "what_if = " + fmt(change, 4));
  o.require(format_fixed(change, 2) == "0.31", "displayed " + format_fixed(change, 2));
  if (o.pass) o.detail = "coefficient " + fmt(coef, 4) + ", what_if " + fmt(change, 4) + " ≈ 0.31";
  return o;
}

Outcome loyalty_anchors() {
  Outcome o;
  const LoyaltyCurve c = loyalty_curve(testing::fixture().own, OutcomeKind::kRecommend);
  const double at = c.at(7.3);
  const auto target = value_target_for_loyalty(c, 0.80);
  o.require(at >= 0.61 && at <= 0.65, "curve(7.3) = " + fmt(at, 4));
  o.require(target && *target >= 7.7 && *target <= 7.9,
            "target(0.80) = " + (target ? fmt(*target, 3) : std::string("unattainable")));
  if (o.pass) o.detail = "curve(7.3) = " + fmt(at, 4) + ", target(0.80) = " + fmt(*target, 3);
  return o;
}

Outcome retention_anchor() {
  Outcome o;
  const double r = retention_projection(1200, 0.9, 9);
  o.require(std::abs(r - 464.4) <= 0.1, "projection " + fmt(r, 3));
  if (o.pass) o.detail = "1200 x 0.9^9 = " + fmt(r, 3);
  return o;
}

Outcome ols_oracle() {
  Outcome o;
  const auto t0 = Clock::now();
  std::mt19937_64 gen(20240601);
  std::uniform_int_distribution<int> pdist(1, 8);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  std::normal_distribution<double> z(0.0, 1.0);
  constexpr int kInstances = 200;
  double worst = 0.0;
  for (int t = 0; t < kInstances; ++t) {
    const std::size_t p = static_cast<std::size_t>(pdist(gen));
    const std::size_t n = std::uniform_int_distribution<std::size_t>(p + 12, 200)(gen);
    std::vector<NamedColumn> cols(p);
    std::vector<std::vector<double>> raw(p);
    std::vector<double> y(n), beta(p);
    for (std::size_t j = 0; j < p; ++j) {
      cols[j].name = "x" + std::to_string(j);
      beta[j] = u(gen);
    }
    const double b0 = u(gen);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = b0 + z(gen);
      for (std::size_t j = 0; j < p; ++j) {
        const double v = u(gen);
        cols[j].values.push_back(v);
        raw[j].push_back(v);
        y[i] += beta[j] * v;
      }
    }
    const LinearFit f = fit_linear(y, cols);
    const auto b = testing::normal_equations_oracle(y, raw);
    auto rel = [](double a, double e) { return std::abs(a - e) / std::max(1.0, std::abs(e)); };
    worst = std::max(worst, rel(f.intercept, b[0]));
    for (std::size_t j = 0; j < p; ++j) worst = std::max(worst, rel(f.coefficients[j].value, b[j + 1]));
  }
  const double elapsed = seconds_since(t0);
  std::ostringstream w;
  w << worst;
  o.require(worst <= 1e-8, "max relative difference " + w.str());
  o.require(elapsed < 5.0, "runtime " + fmt(elapsed, 2) + " s");
  if (o.pass) {
    o.detail = std::to_string(kInstances) + " instances, max relative difference " + w.str() + ", " +
               fmt(elapsed, 2) + " s";
  }
  return o;
}

Outcome coefficient_recovery() {
  Outcome o;
  const auto t0 = Clock::now();
  double worst2000 = 0.0, worst10000 = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    for (std::size_t n : {2000u, 10000u}) {
      const NodeModel m = fit_node_model(generate_market(testing::recovery_truth(seed, n)), "value");
      const double dev = std::max(std::abs(m.coefficient("quality") - 0.51),
                                  std::abs(m.coefficient("price") - 0.35));
      double& worst = n == 2000 ? worst2000 : worst10000;
      worst = std::max(worst, dev);
    }
  }
  const double elapsed = seconds_since(t0);
  o.require(worst2000 <= 0.05, "n=2000 max deviation " + fmt(worst2000, 4));
  o.require(worst10000 <= 0.02, "n=10000 max deviation " + fmt(worst10000, 4));
  o.require(elapsed < 60.0, "runtime " + fmt(elapsed, 2) + " s");
  if (o.pass) {
    o.detail = "20 seeds; max deviation " + fmt(worst2000, 4) + " at n=2000, " + fmt(worst10000, 4) +
               " at n=10000; " + fmt(elapsed, 2) + " s";
  }
  return o;
}

Outcome nps_properties() {
  Outcome o;
  std::mt19937 gen(77);
  std::uniform_int_distribution<int> len(1, 80), v(0, 10);
  constexpr int kCases = 2000;
  for (int t = 0; t < kCases && o.pass; ++t) {
    std::vector<int> r(static_cast<std::size_t>(len(gen)));
    for (int& x : r) x = v(gen);
    const double base = nps(r).nps;
    o.require(base >= -100.0 && base <= 100.0, "out of bounds");
    std::vector<int> s = r;
    std::shuffle(s.begin(), s.end(), gen);
    o.require(nps(s).nps == base, "permutation changed nps");
    std::vector<int> m = r;
    for (int& x : m) {
      const int lo = x >= 9 ? 9 : x >= 7 ? 7 : 0, hi = x >= 9 ? 10 : x >= 7 ? 8 : 6;
      x = std::uniform_int_distribution<int>(lo, hi)(gen);
    }
    o.require(nps(m).nps == base, "within-band change moved nps");
    std::vector<int> top = r, bottom = r;
    for (int& x : top) x = 9 + x % 2;
    for (int& x : bottom) x = x % 7;
    o.require(nps(top).nps == 100.0, "all 9/10 is not 100");
    o.require(nps(bottom).nps == -100.0, "all <= 6 is not -100");
  }
  if (o.pass) o.detail = std::to_string(kCases) + " random cases";
  return o;
}

Outcome r_squared_plausibility() {
  Outcome o;
  const FittedHierarchy& h = testing::fixture().hierarchy;
  std::string d;
  for (const auto& [node, target] : std::vector<std::pair<std::string, double>>{
           {"worth_what_paid_for", 0.81}, {"quality", 0.89}, {"delivery_process", 0.86}}) {
    const double r2 = h.model(node).fit.r_squared;
    o.require(std::abs(r2 - target) <= 0.05, node + " R² " + fmt(r2, 3));
    d += (d.empty() ? "" : ", ") + node + " " + fmt(r2, 3);
  }
  if (o.pass) o.detail = d;
  return o;
}

Outcome determinism() {
  Outcome o;
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "cvm_acceptance";
  fs::remove_all(dir);
  std::ostringstream sink;
  RunConfig sim;
  sim.seed_config = testing::data_path("canonical_config.json");
  sim.out = dir / "sim";
  o.require(cmd_simulate(sim, sink, sink) == 0, "simulate failed");
  o.require(testing::slurp(sim.out / "survey.csv") ==
                testing::slurp(testing::data_path("canonical_survey.csv")),
            "regenerated survey differs from the fixture");
  std::size_t compared = 0;
  for (const char* run : {"a", "b"}) {
    RunConfig c;
    c.tree = testing::data_path("automobile_tree.json");
    c.surveys = {testing::data_path("canonical_survey.csv")};
    c.own = "our_company";
    c.target_loyalty = 0.8;
    c.out = dir / run;
    o.require(cmd_fit(c, sink, sink) == 0, "fit failed");
    o.require(cmd_report(c, sink, sink) == 0, "report failed");
    o.require(cmd_nps(c, sink, sink) == 0, "nps failed");
  }
  for (const auto& e : fs::directory_iterator(dir / "a")) {
    if (e.path().filename() == "run.log") continue;
    o.require(testing::slurp(e.path()) == testing::slurp(dir / "b" / e.path().filename()),
              e.path().filename().string() + " differs between runs");
    ++compared;
  }
  fs::remove_all(dir);
  if (o.pass) o.detail = "fixture regenerated byte-identically; " + std::to_string(compared) +
                         " report artifacts identical across runs";
  return o;
}

Outcome priority_reproduction() {
  Outcome o;
  const auto& f = testing::fixture();
  const PriorityRanking p = rank_priorities(f.hierarchy, f.own, f.competitors);
  o.require(!p.ranked.empty() && p.ranked[0].node == "billing",
            "first is " + (p.ranked.empty() ? std::string("nothing") : p.ranked[0].node));
  if (o.pass) {
    o.detail = "billing first, score " + fmt(p.ranked[0].score, 4) + "; next " + p.ranked[1].node +
               " " + fmt(p.ranked[1].score, 4);
  }
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"table reproduction", table_reproduction},
      {"what-if anchor", what_if_anchor},
      {"loyalty anchors", loyalty_anchors},
      {"retention anchor", retention_anchor},
      {"OLS oracle equivalence", ols_oracle},
      {"coefficient recovery", coefficient_recovery},
      {"NPS property suite", nps_properties},
      {"R² plausibility", r_squared_plausibility},
      {"determinism", determinism},
      {"priority reproduction", priority_reproduction},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << ' ' << (i + 1) << ' ' << criteria[i].first << ": "
              << o.detail << '\n';
  }
  return failed == 0 ? 0 : 1;
}
