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

#ifndef CVM_LS_ENGINE_HPP_
#define CVM_LS_ENGINE_HPP_

// Ordinary least squares via Householder QR, and the hierarchical fitter
// that regresses every internal node of a Value tree on its children.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <future>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cvm/error.hpp"
#include "cvm/format.hpp"
#include "cvm/survey_store.hpp"
#include "cvm/value_tree.hpp"
#include "json.hpp"

namespace cvm {

struct NamedColumn {
  std::string name;
  std::vector<double> values;
};

struct Coefficient {
  std::string name;
  double value = 0.0;

  friend bool operator==(const Coefficient&, const Coefficient&) = default;
};

struct LinearFit {
  double intercept = 0.0;
  std::vector<Coefficient> coefficients;  // in regressor order
  double r_squared = 0.0;
  std::size_t n = 0;
  double residual_sd = 0.0;

  std::optional<double> find_coefficient(std::string_view name) const {
    for (const Coefficient& c : coefficients) {
      if (c.name == name) return c.value;
    }
    return std::nullopt;
  }

  double coefficient(std::string_view name) const {
    if (auto v = find_coefficient(name)) return *v;
    throw Error(ErrorCode::kUnknownNode, "no regressor '" + std::string(name) + "'");
  }

  friend bool operator==(const LinearFit&, const LinearFit&) = default;
};

inline constexpr std::string_view kInterceptName = "(intercept)";

namespace detail {

// Relative tolerance below which a column's component orthogonal to the
// preceding columns is treated as zero.
inline constexpr double kRankTolerance = 1e-10;

// Column-major n x k matrix.
struct DenseColumns {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  double& at(std::size_t i, std::size_t j) { return data[j * rows + i]; }
  double at(std::size_t i, std::size_t j) const { return data[j * rows + i]; }
};

// Applies the reflector H = I - beta v v^T (v stored in rows [j, n) of
// column j, with v_j == 1 implicit) to vector x.
inline void apply_reflector(const DenseColumns& qr, std::size_t j, double beta, double* x) {
  double dot = x[j];
  for (std::size_t i = j + 1; i < qr.rows; ++i) dot += qr.at(i, j) * x[i];
  dot *= beta;
  x[j] -= dot;
  for (std::size_t i = j + 1; i < qr.rows; ++i) x[i] -= dot * qr.at(i, j);
}

}  // namespace detail

// Regresses y on an intercept plus `columns`. Throws kInsufficientData when
// n < #columns + 2 and kSingular (naming the dependent columns) when the
// design is rank deficient.
inline LinearFit fit_linear(std::span<const double> y, std::span<const NamedColumn> columns) {
  const std::size_t n = y.size();
  const std::size_t p = columns.size();
  const std::size_t k = p + 1;
  for (const NamedColumn& c : columns) {
    if (c.values.size() != n) {
      throw Error(ErrorCode::kInvalidArgument,
                  "column '" + c.name + "' has " + std::to_string(c.values.size()) +
                      " values, response has " + std::to_string(n));
    }
  }
  if (n < p + 2) {
    throw Error(ErrorCode::kInsufficientData,
                "need at least " + std::to_string(p + 2) + " observations for " +
                    std::to_string(p) + " regressors, have " + std::to_string(n));
  }

  auto name_of = [&](std::size_t j) {
    return j == 0 ? std::string(kInterceptName) : columns[j - 1].name;
  };

  detail::DenseColumns a{n, k, std::vector<double>(n * k)};
  for (std::size_t i = 0; i < n; ++i) a.at(i, 0) = 1.0;
  for (std::size_t j = 1; j < k; ++j) {
    std::copy(columns[j - 1].values.begin(), columns[j - 1].values.end(), a.data.begin() + j * n);
  }
  const detail::DenseColumns design = a;

  std::vector<double> original_norm(k);
  for (std::size_t j = 0; j < k; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a.at(i, j) * a.at(i, j);
    original_norm[j] = std::sqrt(s);
  }

  std::vector<double> beta(k, 0.0);
  std::vector<double> qty(y.begin(), y.end());
  for (std::size_t j = 0; j < k; ++j) {
    double tail = 0.0;
    for (std::size_t i = j; i < n; ++i) tail += a.at(i, j) * a.at(i, j);
    tail = std::sqrt(tail);
    if (tail <= detail::kRankTolerance * std::max(original_norm[j], 1.0)) {
      // Column j lies in the span of columns [0, j): back-solve R b = r_top
      // to find which of them it depends on.
      std::vector<double> b(j, 0.0);
      for (std::size_t r = j; r-- > 0;) {
        double s = a.at(r, j);
        for (std::size_t c = r + 1; c < j; ++c) s -= a.at(r, c) * b[c];
        b[r] = s / a.at(r, r);
      }
      double scale = 0.0;
      for (double v : b) scale = std::max(scale, std::abs(v));
      std::string names = "'" + name_of(j) + "'";
      for (std::size_t c = 0; c < j; ++c) {
        if (std::abs(b[c]) > 1e-8 * std::max(scale, 1e-300)) names += ", '" + name_of(c) + "'";
      }
      throw Error(ErrorCode::kSingular, "linearly dependent columns: " + names);
    }
    const double alpha = a.at(j, j) > 0 ? -tail : tail;
    const double v0 = a.at(j, j) - alpha;
    for (std::size_t i = j + 1; i < n; ++i) a.at(i, j) /= v0;
    beta[j] = -v0 / alpha;
    a.at(j, j) = alpha;
    for (std::size_t c = j + 1; c < k; ++c) {
      double* col = &a.data[c * n];
      detail::apply_reflector(a, j, beta[j], col);
    }
    detail::apply_reflector(a, j, beta[j], qty.data());
  }

  std::vector<double> coef(k);
  for (std::size_t r = k; r-- > 0;) {
    double s = qty[r];
    for (std::size_t c = r + 1; c < k; ++c) s -= a.at(r, c) * coef[c];
    coef[r] = s / a.at(r, r);
  }

  double mean_y = 0.0;
  for (double v : y) mean_y += v;
  mean_y /= static_cast<double>(n);
  double sse = 0.0, sst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double fitted = 0.0;
    for (std::size_t j = 0; j < k; ++j) fitted += design.at(i, j) * coef[j];
    const double e = y[i] - fitted;
    sse += e * e;
    sst += (y[i] - mean_y) * (y[i] - mean_y);
  }

  LinearFit fit;
  fit.intercept = coef[0];
  for (std::size_t j = 1; j < k; ++j) fit.coefficients.push_back({columns[j - 1].name, coef[j]});
  fit.n = n;
  fit.r_squared = sst > 0.0 ? std::clamp(1.0 - sse / sst, 0.0, 1.0) : 1.0;
  fit.residual_sd = std::sqrt(sse / static_cast<double>(n - k));
  return fit;
}

inline int impact_weight_percent(double coefficient) {
  return static_cast<int>(round_half_away(100.0 * coefficient));
}

struct NodeModel {
  NodeId node;
  LinearFit fit;
  std::vector<std::pair<NodeId, int>> impact_weights;  // children order
  std::vector<NodeId> negative_children;               // flagged, kept in the fit

  double coefficient(std::string_view child) const { return fit.coefficient(child); }

  int impact_weight(std::string_view child) const {
    for (const auto& [c, w] : impact_weights) {
      if (c == child) return w;
    }
    throw Error(ErrorCode::kUnknownNode, "'" + std::string(child) + "' is not a child of '" + node + "'");
  }

  friend bool operator==(const NodeModel&, const NodeModel&) = default;
};

// Regresses the rating of `node` on its children's observed ratings over
// respondents who rated the node and every child.
inline NodeModel fit_node_model(const SurveySample& sample, std::string_view node) {
  const ValueTree& tree = sample.tree();
  const TreeNode& parent = tree.node(node);
  if (parent.children.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "'" + parent.id + "' is a leaf and has no model");
  }
  const std::size_t parent_idx = tree.index(node);
  std::vector<std::size_t> child_idx;
  for (const NodeId& c : parent.children) child_idx.push_back(tree.index(c));

  std::vector<double> y;
  std::vector<NamedColumn> x(parent.children.size());
  for (std::size_t c = 0; c < x.size(); ++c) x[c].name = parent.children[c];
  for (const Respondent& r : sample.respondents()) {
    if (!r.ratings[parent_idx]) continue;
    bool complete = true;
    for (std::size_t ci : child_idx) complete = complete && r.ratings[ci].has_value();
    if (!complete) continue;
    y.push_back(*r.ratings[parent_idx]);
    for (std::size_t c = 0; c < x.size(); ++c) x[c].values.push_back(*r.ratings[child_idx[c]]);
  }
  if (y.size() < x.size() + 2) {
    throw Error(ErrorCode::kInsufficientData,
                "'" + parent.id + "': " + std::to_string(y.size()) +
                    " complete cases, need at least " + std::to_string(x.size() + 2));
  }

  NodeModel model;
  model.node = parent.id;
  try {
    model.fit = fit_linear(y, x);
  } catch (const Error& e) {
    throw Error(e.code(), "'" + parent.id + "': " + e.message());
  }
  for (const Coefficient& c : model.fit.coefficients) {
    model.impact_weights.emplace_back(c.name, impact_weight_percent(c.value));
    if (c.value < 0.0) model.negative_children.push_back(c.name);
  }
  return model;
}

struct UnfitNode {
  NodeId node;
  std::string reason;

  friend bool operator==(const UnfitNode&, const UnfitNode&) = default;
};

class FittedHierarchy {
 public:
  FittedHierarchy(std::shared_ptr<const ValueTree> tree, std::vector<NodeModel> models,
                  std::vector<UnfitNode> unfit)
      : tree_(std::move(tree)), models_(std::move(models)), unfit_(std::move(unfit)) {
    for (const NodeModel& m : models_) {
      if (tree_->is_leaf(m.node)) {
        throw Error(ErrorCode::kInvalidArgument, "model for leaf '" + m.node + "'");
      }
    }
  }

  const ValueTree& tree() const { return *tree_; }
  const std::shared_ptr<const ValueTree>& tree_ptr() const { return tree_; }
  // Models in tree pre-order.
  const std::vector<NodeModel>& models() const { return models_; }
  const std::vector<UnfitNode>& unfit() const { return unfit_; }

  const NodeModel* find(std::string_view node) const {
    for (const NodeModel& m : models_) {
      if (m.node == node) return &m;
    }
    return nullptr;
  }

  const NodeModel& model(std::string_view node) const {
    if (const NodeModel* m = find(node)) return *m;
    std::string why;
    for (const UnfitNode& u : unfit_) {
      if (u.node == node) why = " (" + u.reason + ")";
    }
    throw Error(ErrorCode::kMissingModel, "no fitted model for '" + std::string(node) + "'" + why);
  }

  friend bool operator==(const FittedHierarchy& a, const FittedHierarchy& b) {
    return *a.tree_ == *b.tree_ && a.models_ == b.models_ && a.unfit_ == b.unfit_;
  }

 private:
  std::shared_ptr<const ValueTree> tree_;
  std::vector<NodeModel> models_;
  std::vector<UnfitNode> unfit_;
};

struct FitOptions {
  // Evaluate node models concurrently. Results are identical either way.
  bool parallel = false;
};

// Fits one model per internal node. Nodes that cannot be fitted are listed
// in unfit() with the reason instead of aborting the whole hierarchy.
inline FittedHierarchy fit_hierarchy(const SurveySample& sample, FitOptions options = {}) {
  const std::vector<NodeId> internal = sample.tree().internal_nodes();
  using Outcome = std::pair<std::optional<NodeModel>, std::string>;
  auto attempt = [&sample](const NodeId& node) -> Outcome {
    try {
      return {fit_node_model(sample, node), {}};
    } catch (const Error& e) {
      return {std::nullopt, e.what()};
    }
  };

  std::vector<Outcome> outcomes;
  if (options.parallel) {
    std::vector<std::future<Outcome>> jobs;
    for (const NodeId& node : internal) {
      jobs.push_back(std::async(std::launch::async, attempt, std::cref(node)));
    }
    for (auto& j : jobs) outcomes.push_back(j.get());
  } else {
    for (const NodeId& node : internal) outcomes.push_back(attempt(node));
  }

  std::vector<NodeModel> models;
  std::vector<UnfitNode> unfit;
  for (std::size_t i = 0; i < internal.size(); ++i) {
    if (outcomes[i].first) models.push_back(std::move(*outcomes[i].first));
    else unfit.push_back({internal[i], outcomes[i].second});
  }
  return FittedHierarchy(sample.tree_ptr(), std::move(models), std::move(unfit));
}

// Hierarchy document: coefficients at full precision, integer weights.
inline nlohmann::ordered_json hierarchy_to_json(const FittedHierarchy& h) {
  nlohmann::ordered_json doc;
  doc["tree"] = h.tree().name();
  auto& models = doc["models"] = nlohmann::ordered_json::array();
  for (const NodeModel& m : h.models()) {
    nlohmann::ordered_json rec;
    rec["node"] = m.node;
    rec["n"] = m.fit.n;
    rec["r_squared"] = m.fit.r_squared;
    rec["residual_sd"] = m.fit.residual_sd;
    rec["intercept"] = m.fit.intercept;
    auto& cs = rec["coefficients"] = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < m.fit.coefficients.size(); ++i) {
      nlohmann::ordered_json c;
      c["child"] = m.fit.coefficients[i].name;
      c["coefficient"] = m.fit.coefficients[i].value;
      c["impact_weight"] = m.impact_weights[i].second;
      c["negative"] = m.fit.coefficients[i].value < 0.0;
      cs.push_back(std::move(c));
    }
    models.push_back(std::move(rec));
  }
  auto& unfit = doc["unfit"] = nlohmann::ordered_json::array();
  for (const UnfitNode& u : h.unfit()) unfit.push_back({{"node", u.node}, {"reason", u.reason}});
  return doc;
}

inline FittedHierarchy hierarchy_from_json(const nlohmann::json& doc,
                                           std::shared_ptr<const ValueTree> tree) {
  try {
    std::vector<NodeModel> models;
    for (const auto& rec : doc.at("models")) {
      NodeModel m;
      m.node = rec.at("node").get<std::string>();
      const TreeNode& tn = tree->node(m.node);
      m.fit.n = rec.at("n").get<std::size_t>();
      m.fit.r_squared = rec.at("r_squared").get<double>();
      m.fit.residual_sd = rec.at("residual_sd").get<double>();
      m.fit.intercept = rec.at("intercept").get<double>();
      for (const auto& c : rec.at("coefficients")) {
        const std::string child = c.at("child").get<std::string>();
        if (std::find(tn.children.begin(), tn.children.end(), child) == tn.children.end()) {
          throw Error(ErrorCode::kUnknownNode, "'" + child + "' is not a child of '" + m.node + "'");
        }
        const double v = c.at("coefficient").get<double>();
        m.fit.coefficients.push_back({child, v});
        m.impact_weights.emplace_back(child, c.at("impact_weight").get<int>());
        if (v < 0.0) m.negative_children.push_back(child);
      }
      models.push_back(std::move(m));
    }
    std::vector<UnfitNode> unfit;
    for (const auto& u : doc.at("unfit")) {
      unfit.push_back({u.at("node").get<std::string>(), u.at("reason").get<std::string>()});
    }
    return FittedHierarchy(std::move(tree), std::move(models), std::move(unfit));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kSyntax, std::string("hierarchy document: ") + e.what());
  }
}

}  // namespace cvm

#endif  // CVM_LS_ENGINE_HPP_
