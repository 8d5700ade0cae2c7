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

#ifndef CVM_SURVEY_STORE_HPP_
#define CVM_SURVEY_STORE_HPP_

// Survey respondents, the delimited survey file format, supplier partitions
// and per-node descriptive statistics.
//
// Survey files are comma-separated with one header row:
//
//   respondent_id,role,supplier,<node id>...,outcome_recommend,outcome_repurchase
//
// role is `decision_maker` or `user`; node columns hold integer ratings 1-10
// (1 = Poor, 10 = Excellent); outcome columns hold integers 0-10. An empty
// cell is a missing rating. Node columns may be any subset of the tree's
// nodes, in any order; nodes without a column are missing for everyone.

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cvm/csv.hpp"
#include "cvm/error.hpp"
#include "cvm/value_tree.hpp"
#include "json.hpp"

namespace cvm {

enum class Role { kDecisionMaker, kUser };

inline std::string_view to_string(Role role) {
  return role == Role::kDecisionMaker ? "decision_maker" : "user";
}

inline std::optional<Role> parse_role(std::string_view text) {
  if (text == "decision_maker") return Role::kDecisionMaker;
  if (text == "user") return Role::kUser;
  return std::nullopt;
}

enum class OutcomeKind { kRecommend = 0, kRepurchase = 1 };

inline constexpr std::array<OutcomeKind, 2> kOutcomeKinds = {OutcomeKind::kRecommend,
                                                              OutcomeKind::kRepurchase};

inline std::string_view to_string(OutcomeKind kind) {
  return kind == OutcomeKind::kRecommend ? "recommend" : "repurchase";
}

inline std::optional<OutcomeKind> parse_outcome_kind(std::string_view text) {
  if (text == "recommend") return OutcomeKind::kRecommend;
  if (text == "repurchase") return OutcomeKind::kRepurchase;
  return std::nullopt;
}

inline constexpr int kMinNodeRating = 1;
inline constexpr int kMaxNodeRating = 10;
inline constexpr int kMinOutcomeRating = 0;
inline constexpr int kMaxOutcomeRating = 10;

struct Respondent {
  std::string id;
  Role role = Role::kDecisionMaker;
  std::string supplier;
  // Indexed by ValueTree node index; nullopt = not rated.
  std::vector<std::optional<int>> ratings;
  std::array<std::optional<int>, 2> outcomes;

  std::optional<int> outcome(OutcomeKind kind) const {
    return outcomes[static_cast<std::size_t>(kind)];
  }

  friend bool operator==(const Respondent&, const Respondent&) = default;
};

// An immutable set of respondents validated against one tree.
class SurveySample {
 public:
  SurveySample(std::shared_ptr<const ValueTree> tree, std::string own_supplier,
               std::vector<Respondent> respondents)
      : tree_(std::move(tree)),
        own_supplier_(std::move(own_supplier)),
        respondents_(std::move(respondents)) {
    if (!tree_) throw Error(ErrorCode::kInvalidArgument, "survey sample needs a tree");
    for (const Respondent& r : respondents_) {
      if (r.ratings.size() != tree_->size()) {
        throw Error(ErrorCode::kInvalidArgument,
                    "respondent '" + r.id + "' has ratings for a different tree");
      }
      for (std::size_t i = 0; i < r.ratings.size(); ++i) {
        if (r.ratings[i] && (*r.ratings[i] < kMinNodeRating || *r.ratings[i] > kMaxNodeRating)) {
          throw Error(ErrorCode::kOutOfRange, "respondent '" + r.id + "' rates '" +
                                                  tree_->node_at(i).id + "' " +
                                                  std::to_string(*r.ratings[i]));
        }
      }
      for (const auto& o : r.outcomes) {
        if (o && (*o < kMinOutcomeRating || *o > kMaxOutcomeRating)) {
          throw Error(ErrorCode::kOutOfRange, "respondent '" + r.id + "' has outcome rating " +
                                                  std::to_string(*o));
        }
      }
    }
  }

  const ValueTree& tree() const { return *tree_; }
  const std::shared_ptr<const ValueTree>& tree_ptr() const { return tree_; }
  const std::string& own_supplier() const { return own_supplier_; }
  std::span<const Respondent> respondents() const { return respondents_; }
  std::size_t size() const { return respondents_.size(); }
  bool empty() const { return respondents_.empty(); }

  std::optional<int> rating(const Respondent& r, std::string_view node) const {
    return r.ratings[tree_->index(node)];
  }

  // Distinct supplier labels, sorted.
  std::vector<std::string> suppliers() const {
    std::set<std::string> s;
    for (const Respondent& r : respondents_) s.insert(r.supplier);
    return {s.begin(), s.end()};
  }

  bool competitor_only() const {
    for (const Respondent& r : respondents_) {
      if (r.supplier == own_supplier_) return false;
    }
    return true;
  }

  friend bool operator==(const SurveySample& a, const SurveySample& b) {
    return *a.tree_ == *b.tree_ && a.own_supplier_ == b.own_supplier_ &&
           a.respondents_ == b.respondents_;
  }

 private:
  std::shared_ptr<const ValueTree> tree_;
  std::string own_supplier_;
  std::vector<Respondent> respondents_;
};

struct IngestResult {
  SurveySample sample;
  std::vector<std::string> warnings;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

inline std::optional<int> parse_int(std::string_view s) {
  int v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
  return v;
}

}  // namespace detail

inline constexpr std::string_view kIdColumn = "respondent_id";
inline constexpr std::string_view kRoleColumn = "role";
inline constexpr std::string_view kSupplierColumn = "supplier";
inline constexpr std::string_view kRecommendColumn = "outcome_recommend";
inline constexpr std::string_view kRepurchaseColumn = "outcome_repurchase";

// Reads a survey file. Every malformed row is collected; if any row is
// rejected, throws an Error (code of the first reject) listing all rejects
// by line number. `source` prefixes diagnostics.
inline IngestResult ingest_responses(std::istream& in, std::shared_ptr<const ValueTree> tree,
                                     std::string own_supplier, std::string_view source = "survey") {
  const std::string where(source);
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorCode::kMalformedRow, where + ":1: missing header row");
  }
  auto header = csv::split_record(line);
  if (!header) throw Error(ErrorCode::kMalformedRow, where + ":1: malformed header");

  enum class Col { kId, kRole, kSupplier, kNode, kRecommend, kRepurchase };
  std::vector<std::pair<Col, std::size_t>> layout;
  std::set<std::string> seen;
  for (const std::string& raw : *header) {
    const std::string name(detail::trim(raw));
    if (!seen.insert(name).second) {
      throw Error(ErrorCode::kMalformedRow, where + ":1: duplicate column '" + name + "'");
    }
    if (name == kIdColumn) layout.emplace_back(Col::kId, 0);
    else if (name == kRoleColumn) layout.emplace_back(Col::kRole, 0);
    else if (name == kSupplierColumn) layout.emplace_back(Col::kSupplier, 0);
    else if (name == kRecommendColumn) layout.emplace_back(Col::kRecommend, 0);
    else if (name == kRepurchaseColumn) layout.emplace_back(Col::kRepurchase, 0);
    else if (auto idx = tree->find_index(name)) layout.emplace_back(Col::kNode, *idx);
    else {
      throw Error(ErrorCode::kUnknownColumn,
                  where + ":1: column '" + name + "' is not a node of tree '" + tree->name() + "'");
    }
  }
  for (std::string_view required :
       {kIdColumn, kRoleColumn, kSupplierColumn, kRecommendColumn, kRepurchaseColumn}) {
    if (!seen.count(std::string(required))) {
      throw Error(ErrorCode::kMalformedRow,
                  where + ":1: missing required column '" + std::string(required) + "'");
    }
  }

  std::vector<Respondent> rows;
  std::vector<std::pair<ErrorCode, std::string>> rejects;
  std::set<std::string> ids;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string at = where + ":" + std::to_string(line_no) + ": ";
    auto reject = [&](ErrorCode code, const std::string& msg) {
      rejects.emplace_back(code, at + msg);
    };
    auto fields = csv::split_record(line);
    if (!fields) {
      reject(ErrorCode::kMalformedRow, "unbalanced quotes");
      continue;
    }
    if (fields->size() != layout.size()) {
      reject(ErrorCode::kMalformedRow, "expected " + std::to_string(layout.size()) +
                                           " fields, found " + std::to_string(fields->size()));
      continue;
    }
    Respondent r;
    r.ratings.assign(tree->size(), std::nullopt);
    bool ok = true;
    for (std::size_t c = 0; c < layout.size() && ok; ++c) {
      const std::string_view cell = detail::trim((*fields)[c]);
      const auto [col, node] = layout[c];
      switch (col) {
        case Col::kId:
          r.id = std::string(cell);
          break;
        case Col::kSupplier:
          r.supplier = std::string(cell);
          break;
        case Col::kRole: {
          auto role = parse_role(cell);
          if (!role) {
            reject(ErrorCode::kUnknownRole, "unknown role '" + std::string(cell) + "'");
            ok = false;
          } else {
            r.role = *role;
          }
          break;
        }
        case Col::kNode:
        case Col::kRecommend:
        case Col::kRepurchase: {
          if (cell.empty()) break;
          const bool is_node = col == Col::kNode;
          const std::string column =
              is_node ? tree->node_at(node).id
                      : std::string(col == Col::kRecommend ? kRecommendColumn : kRepurchaseColumn);
          auto v = detail::parse_int(cell);
          if (!v) {
            reject(ErrorCode::kMalformedRow,
                   "column '" + column + "': '" + std::string(cell) + "' is not an integer");
            ok = false;
            break;
          }
          const int lo = is_node ? kMinNodeRating : kMinOutcomeRating;
          const int hi = is_node ? kMaxNodeRating : kMaxOutcomeRating;
          if (*v < lo || *v > hi) {
            reject(ErrorCode::kOutOfRange, "column '" + column + "': rating " + std::to_string(*v) +
                                               " outside [" + std::to_string(lo) + "," +
                                               std::to_string(hi) + "]");
            ok = false;
            break;
          }
          if (is_node) r.ratings[node] = *v;
          else r.outcomes[col == Col::kRecommend ? 0 : 1] = *v;
          break;
        }
      }
    }
    if (!ok) continue;
    if (r.id.empty()) {
      reject(ErrorCode::kMalformedRow, "empty respondent_id");
      continue;
    }
    if (r.supplier.empty()) {
      reject(ErrorCode::kMalformedRow, "empty supplier");
      continue;
    }
    if (!ids.insert(r.id).second) {
      reject(ErrorCode::kMalformedRow, "duplicate respondent_id '" + r.id + "'");
      continue;
    }
    rows.push_back(std::move(r));
  }

  if (!rejects.empty()) {
    constexpr std::size_t kMaxListed = 20;
    std::string msg = std::to_string(rejects.size()) + " rejected row(s): ";
    for (std::size_t i = 0; i < rejects.size() && i < kMaxListed; ++i) {
      if (i) msg += "; ";
      msg += rejects[i].second;
    }
    if (rejects.size() > kMaxListed) msg += "; ...";
    throw Error(rejects.front().first, msg);
  }

  IngestResult result{SurveySample(std::move(tree), std::move(own_supplier), std::move(rows)), {}};
  if (result.sample.empty()) result.warnings.push_back(where + ": no respondents");
  else if (result.sample.competitor_only()) {
    result.warnings.push_back(where + ": own supplier '" + result.sample.own_supplier() +
                              "' has no respondents; sample is competitor-only");
  }
  return result;
}

inline IngestResult ingest_responses_file(const std::filesystem::path& path,
                                          std::shared_ptr<const ValueTree> tree,
                                          std::string own_supplier) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "file not found: " + path.string());
  return ingest_responses(in, std::move(tree), std::move(own_supplier), path.string());
}

// Writes the canonical survey file: node columns in tree pre-order.
inline void export_responses(const SurveySample& sample, std::ostream& out) {
  const ValueTree& tree = sample.tree();
  out << kIdColumn << ',' << kRoleColumn << ',' << kSupplierColumn;
  for (const TreeNode& n : tree.nodes()) out << ',' << csv::escape_field(n.id);
  out << ',' << kRecommendColumn << ',' << kRepurchaseColumn << '\n';
  for (const Respondent& r : sample.respondents()) {
    out << csv::escape_field(r.id) << ',' << to_string(r.role) << ','
        << csv::escape_field(r.supplier);
    for (const auto& v : r.ratings) {
      out << ',';
      if (v) out << *v;
    }
    for (const auto& o : r.outcomes) {
      out << ',';
      if (o) out << *o;
    }
    out << '\n';
  }
}

// One record per respondent; missing ratings are omitted.
inline nlohmann::ordered_json export_records(const SurveySample& sample) {
  nlohmann::ordered_json doc;
  doc["tree"] = sample.tree().name();
  doc["own_supplier"] = sample.own_supplier();
  auto& list = doc["respondents"] = nlohmann::ordered_json::array();
  for (const Respondent& r : sample.respondents()) {
    nlohmann::ordered_json rec;
    rec["respondent_id"] = r.id;
    rec["role"] = std::string(to_string(r.role));
    rec["supplier"] = r.supplier;
    auto& ratings = rec["ratings"] = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < r.ratings.size(); ++i) {
      if (r.ratings[i]) ratings[sample.tree().node_at(i).id] = *r.ratings[i];
    }
    auto& outcomes = rec["outcomes"] = nlohmann::ordered_json::object();
    for (OutcomeKind k : kOutcomeKinds) {
      if (auto o = r.outcome(k)) outcomes[std::string(to_string(k))] = *o;
    }
    list.push_back(std::move(rec));
  }
  return doc;
}

inline SurveySample ingest_records(const nlohmann::json& doc, std::shared_ptr<const ValueTree> tree) {
  std::vector<Respondent> rows;
  try {
    for (const auto& rec : doc.at("respondents")) {
      Respondent r;
      r.id = rec.at("respondent_id").get<std::string>();
      auto role = parse_role(rec.at("role").get<std::string>());
      if (!role) throw Error(ErrorCode::kUnknownRole, "respondent '" + r.id + "'");
      r.role = *role;
      r.supplier = rec.at("supplier").get<std::string>();
      r.ratings.assign(tree->size(), std::nullopt);
      for (const auto& [node, v] : rec.at("ratings").items()) {
        auto idx = tree->find_index(node);
        if (!idx) throw Error(ErrorCode::kUnknownColumn, "node '" + node + "'");
        r.ratings[*idx] = v.get<int>();
      }
      for (const auto& [kind, v] : rec.at("outcomes").items()) {
        auto k = parse_outcome_kind(kind);
        if (!k) throw Error(ErrorCode::kUnknownColumn, "outcome '" + kind + "'");
        r.outcomes[static_cast<std::size_t>(*k)] = v.get<int>();
      }
      rows.push_back(std::move(r));
    }
    return SurveySample(std::move(tree), doc.at("own_supplier").get<std::string>(),
                        std::move(rows));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedRow, std::string("survey records: ") + e.what());
  }
}

// Partitions by supplier == own_supplier; respondent order is preserved in
// both halves.
inline std::pair<SurveySample, SurveySample> split_by_supplier(const SurveySample& sample) {
  std::vector<Respondent> own, rest;
  for (const Respondent& r : sample.respondents()) {
    (r.supplier == sample.own_supplier() ? own : rest).push_back(r);
  }
  return {SurveySample(sample.tree_ptr(), sample.own_supplier(), std::move(own)),
          SurveySample(sample.tree_ptr(), sample.own_supplier(), std::move(rest))};
}

// Respondents whose supplier satisfies `keep`.
template <typename Pred>
SurveySample filter_respondents(const SurveySample& sample, Pred keep) {
  std::vector<Respondent> out;
  for (const Respondent& r : sample.respondents()) {
    if (keep(r)) out.push_back(r);
  }
  return SurveySample(sample.tree_ptr(), sample.own_supplier(), std::move(out));
}

inline SurveySample concat(const SurveySample& a, const SurveySample& b) {
  std::vector<Respondent> all(a.respondents().begin(), a.respondents().end());
  all.insert(all.end(), b.respondents().begin(), b.respondents().end());
  return SurveySample(a.tree_ptr(), a.own_supplier(), std::move(all));
}

inline constexpr double kHalfWidthMultiplier = 1.96;

struct MeanWithHalfWidth {
  double mean = 0.0;
  double half_width = 0.0;  // 1.96 * sd / sqrt(n); 0 when n == 1
  std::size_t n = 0;
};

// Mean of the available ratings of `node`; nullopt when nobody rated it.
// Integer sums keep the result independent of respondent order.
inline std::optional<MeanWithHalfWidth> try_node_mean(const SurveySample& sample,
                                                      std::string_view node) {
  const std::size_t idx = sample.tree().index(node);
  std::int64_t n = 0, sum = 0, sum_sq = 0;
  for (const Respondent& r : sample.respondents()) {
    if (const auto& v = r.ratings[idx]) {
      ++n;
      sum += *v;
      sum_sq += static_cast<std::int64_t>(*v) * *v;
    }
  }
  if (n == 0) return std::nullopt;
  MeanWithHalfWidth m;
  m.n = static_cast<std::size_t>(n);
  m.mean = static_cast<double>(sum) / static_cast<double>(n);
  if (n > 1) {
    const double var = static_cast<double>(n * sum_sq - sum * sum) /
                       (static_cast<double>(n) * static_cast<double>(n - 1));
    m.half_width = kHalfWidthMultiplier * std::sqrt(var / static_cast<double>(n));
  }
  return m;
}

inline MeanWithHalfWidth node_mean(const SurveySample& sample, std::string_view node) {
  if (auto m = try_node_mean(sample, node)) return *m;
  throw Error(ErrorCode::kNoData, "no ratings for node '" + std::string(node) + "'");
}

// Per-supplier breakdown; suppliers with no rating of `node` are omitted.
inline std::map<std::string, MeanWithHalfWidth> node_mean_by_supplier(const SurveySample& sample,
                                                                      std::string_view node) {
  std::map<std::string, MeanWithHalfWidth> out;
  for (const std::string& s : sample.suppliers()) {
    auto part = filter_respondents(sample, [&](const Respondent& r) { return r.supplier == s; });
    if (auto m = try_node_mean(part, node)) out.emplace(s, *m);
  }
  return out;
}

}  // namespace cvm

#endif  // CVM_SURVEY_STORE_HPP_
