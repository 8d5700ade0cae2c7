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

#ifndef CVM_TESTS_SUPPORT_HPP_
#define CVM_TESTS_SUPPORT_HPP_

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "cvm/cvm.hpp"

namespace cvm::testing {

inline std::filesystem::path data_path(const std::string& name) {
  return std::filesystem::path(CVM_DATA_DIR) / name;
}

inline std::filesystem::path golden_path(const std::string& name) {
  return std::filesystem::path(CVM_GOLDEN_DIR) / name;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline std::shared_ptr<const ValueTree> automobile_tree() {
  static const auto tree =
      std::make_shared<const ValueTree>(load_tree_file(data_path("automobile_tree.json")));
  return tree;
}

// The calibrated 2000-respondent fixture, loaded once per process.
struct Fixture {
  SurveySample market;
  SurveySample own;
  SurveySample competitors;
  FittedHierarchy hierarchy;
};

inline const Fixture& fixture() {
  static const Fixture f = [] {
    SurveySample market =
        ingest_responses_file(data_path("canonical_survey.csv"), automobile_tree(), "our_company")
            .sample;
    auto [own, comp] = split_by_supplier(market);
    FittedHierarchy h = fit_hierarchy(market);
    return Fixture{std::move(market), std::move(own), std::move(comp), std::move(h)};
  }();
  return f;
}

// Builds a tree from (id, kind, children) triples; the first entry is the root.
struct NodeDef {
  std::string id;
  NodeKind kind;
  std::vector<std::string> children;
};

inline TreeSpec make_spec(const std::vector<NodeDef>& defs, std::string name = "test") {
  TreeSpec spec;
  spec.name = std::move(name);
  spec.root = defs.front().id;
  for (const NodeDef& d : defs) spec.nodes.push_back({d.id, d.id, d.kind, d.children});
  return spec;
}

// value -> {a, b}; the smallest useful hierarchy.
inline std::shared_ptr<const ValueTree> two_leaf_tree() {
  return std::make_shared<const ValueTree>(ValueTree::build(make_spec({
      {"value", NodeKind::kRoot, {"a", "b"}},
      {"a", NodeKind::kAttribute, {}},
      {"b", NodeKind::kAttribute, {}},
  })));
}

inline Respondent make_respondent(const ValueTree& tree, std::string id, std::string supplier,
                                  const std::map<std::string, int>& ratings,
                                  std::optional<int> recommend = std::nullopt,
                                  std::optional<int> repurchase = std::nullopt) {
  Respondent r;
  r.id = std::move(id);
  r.supplier = std::move(supplier);
  r.ratings.assign(tree.size(), std::nullopt);
  for (const auto& [node, v] : ratings) r.ratings[tree.index(node)] = v;
  r.outcomes = {recommend, repurchase};
  return r;
}

// Dense least squares via the normal equations XᵀX b = Xᵀy, solved by
// Gauss-Jordan elimination with partial pivoting in long double. Returns
// [intercept, b1, ..., bp].
inline std::vector<double> normal_equations_oracle(const std::vector<double>& y,
                                                   const std::vector<std::vector<double>>& cols) {
  const std::size_t n = y.size();
  const std::size_t k = cols.size() + 1;
  auto x = [&](std::size_t i, std::size_t j) -> long double {
    return j == 0 ? 1.0L : static_cast<long double>(cols[j - 1][i]);
  };
  std::vector<std::vector<long double>> m(k, std::vector<long double>(k + 1, 0.0L));
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = 0; b < k; ++b) {
      for (std::size_t i = 0; i < n; ++i) m[a][b] += x(i, a) * x(i, b);
    }
    for (std::size_t i = 0; i < n; ++i) m[a][k] += x(i, a) * y[i];
  }
  for (std::size_t c = 0; c < k; ++c) {
    std::size_t pivot = c;
    for (std::size_t r = c + 1; r < k; ++r) {
      if (std::fabs(m[r][c]) > std::fabs(m[pivot][c])) pivot = r;
    }
    std::swap(m[c], m[pivot]);
    for (std::size_t r = 0; r < k; ++r) {
      if (r == c) continue;
      const long double f = m[r][c] / m[c][c];
      for (std::size_t j = c; j <= k; ++j) m[r][j] -= f * m[c][j];
    }
  }
  std::vector<double> b(k);
  for (std::size_t c = 0; c < k; ++c) b[c] = static_cast<double>(m[c][k] / m[c][c]);
  return b;
}

// Mean of one CSV column over rows whose supplier matches, parsed with plain
// string splitting (fixture files never quote fields).
inline double raw_column_mean(const std::filesystem::path& csv, const std::string& column,
                              const std::string& supplier) {
  std::ifstream in(csv);
  std::string line;
  std::getline(in, line);
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!s.empty() && s.back() == ',') out.emplace_back();
    return out;
  };
  const auto header = split(line);
  std::size_t col = 0, sup = 0;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == column) col = i;
    if (header[i] == "supplier") sup = i;
  }
  double sum = 0.0;
  int count = 0;
  while (std::getline(in, line)) {
    const auto cells = split(line);
    if (cells[sup] != supplier || cells[col].empty()) continue;
    sum += std::stod(cells[col]);
    ++count;
  }
  return sum / count;
}

// Value -> {quality, price}, both rated leaves, with planted slopes
// 0.51 and 0.35. Means sit mid-scale so clamping is rare.
inline GroundTruth recovery_truth(std::uint64_t seed, std::size_t n, double noise = 0.8) {
  static const auto tree = std::make_shared<const ValueTree>(ValueTree::build(make_spec({
      {"value", NodeKind::kRoot, {"quality", "price"}},
      {"quality", NodeKind::kAttribute, {}},
      {"price", NodeKind::kAttribute, {}},
  })));
  GroundTruth t;
  t.tree = tree;
  t.seed = seed;
  t.own_supplier = "own";
  t.suppliers = {{"own", "base", n}};
  t.profiles["base"].leaf_means = {{"quality", 6.0}, {"price", 6.0}};
  t.profiles["base"].node_offsets = {{"value", 0.5}};
  t.coefficients["value"] = {{"quality", 0.51}, {"price", 0.35}};
  t.noise_sd = {{"value", noise}, {"quality", 1.5}, {"price", 1.5}};
  t.halo_sd = 0.2;
  t.recommend_link = {0.02, 0.04, 0.07, 0.12, 0.2, 0.33, 0.53, 0.87, 0.95, 0.98};
  t.repurchase_link = t.recommend_link;
  return t;
}

// Classical OLS standard errors: residual_sd * sqrt(diag((X'X)^-1)), intercept
// first. Inverse by Gauss-Jordan in long double.
inline std::vector<double> ols_standard_errors(const std::vector<std::vector<double>>& cols,
                                               double residual_sd) {
  const std::size_t n = cols.front().size();
  const std::size_t k = cols.size() + 1;
  auto x = [&](std::size_t i, std::size_t j) -> long double {
    return j == 0 ? 1.0L : static_cast<long double>(cols[j - 1][i]);
  };
  std::vector<std::vector<long double>> m(k, std::vector<long double>(2 * k, 0.0L));
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = 0; b < k; ++b) {
      for (std::size_t i = 0; i < n; ++i) m[a][b] += x(i, a) * x(i, b);
    }
    m[a][k + a] = 1.0L;
  }
  for (std::size_t c = 0; c < k; ++c) {
    std::size_t pivot = c;
    for (std::size_t r = c + 1; r < k; ++r) {
      if (std::fabs(m[r][c]) > std::fabs(m[pivot][c])) pivot = r;
    }
    std::swap(m[c], m[pivot]);
    const long double d = m[c][c];
    for (auto& v : m[c]) v /= d;
    for (std::size_t r = 0; r < k; ++r) {
      if (r == c) continue;
      const long double f = m[r][c];
      for (std::size_t j = 0; j < 2 * k; ++j) m[r][j] -= f * m[c][j];
    }
  }
  std::vector<double> se(k);
  for (std::size_t j = 0; j < k; ++j) {
    se[j] = residual_sd * std::sqrt(static_cast<double>(m[j][k + j]));
  }
  return se;
}

// Child rating columns used by the model at `node` (complete cases).
inline std::vector<std::vector<double>> model_columns(const SurveySample& s, const std::string& node) {
  const ValueTree& t = s.tree();
  const auto& kids = t.node(node).children;
  std::vector<std::vector<double>> cols(kids.size());
  for (const Respondent& r : s.respondents()) {
    bool complete = r.ratings[t.index(node)].has_value();
    for (const auto& c : kids) complete = complete && r.ratings[t.index(c)].has_value();
    if (!complete) continue;
    for (std::size_t j = 0; j < kids.size(); ++j) cols[j].push_back(*r.ratings[t.index(kids[j])]);
  }
  return cols;
}

}  // namespace cvm::testing

#endif  // CVM_TESTS_SUPPORT_HPP_
