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

#ifndef CVM_MARKET_SIM_HPP_
#define CVM_MARKET_SIM_HPP_

// Seeded synthetic markets with a planted linear hierarchy.
//
// Generation, per respondent and in this exact draw order:
//   role    uniform() < decision_maker_share -> decision_maker, else user
//   halo    halo_sd * normal(), shared by every leaf of the respondent
//   z[i]    one normal() per tree node, in tree pre-order
//   outcome two uniform() per outcome kind (recommend, then repurchase)
// Ratings are then built bottom-up:
//   leaf      mean[profile][leaf] + halo + noise_sd[leaf] * z
//   internal  offset[profile][node] + sum(coef * child rating) + noise_sd[node] * z
// each clamped to [1, 10] and rounded half away from zero. An outcome is
// "very willing" (>= threshold) with probability link[root rating]; very
// willing ratings are uniform on [threshold, 10], the rest fall below the
// threshold, concentrated just under it.
//
// The draw count per respondent never depends on parameter values, so two
// truths that differ only in parameters share their random numbers. The
// calibration loop relies on this.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "cvm/cvm_analytics.hpp"
#include "cvm/error.hpp"
#include "cvm/format.hpp"
#include "cvm/ls_engine.hpp"
#include "cvm/rng.hpp"
#include "cvm/survey_store.hpp"
#include "cvm/value_tree.hpp"
#include "json.hpp"

namespace cvm {

struct SupplierConfig {
  std::string label;
  std::string profile;
  std::size_t n = 0;
};

struct SupplierProfile {
  std::map<NodeId, double> leaf_means;
  std::map<NodeId, double> node_offsets;  // internal nodes; absent = 0
};

// P(outcome >= threshold | root rating r) = probability[r - 1].
using WillingnessLink = std::array<double, 10>;

struct GroundTruth {
  std::shared_ptr<const ValueTree> tree;
  std::uint64_t seed = 42;
  std::string own_supplier;
  std::vector<SupplierConfig> suppliers;
  std::map<std::string, SupplierProfile> profiles;
  std::map<NodeId, std::map<NodeId, double>> coefficients;  // parent -> child -> slope
  std::map<NodeId, double> noise_sd;
  double halo_sd = 0.0;
  double decision_maker_share = 1.0;
  int threshold = kDefaultLoyaltyThreshold;
  WillingnessLink recommend_link{};
  WillingnessLink repurchase_link{};

  const WillingnessLink& link(OutcomeKind k) const {
    return k == OutcomeKind::kRecommend ? recommend_link : repurchase_link;
  }
  WillingnessLink& link(OutcomeKind k) {
    return k == OutcomeKind::kRecommend ? recommend_link : repurchase_link;
  }

  std::size_t total_respondents() const {
    std::size_t n = 0;
    for (const auto& s : suppliers) n += s.n;
    return n;
  }
};

// Throws kInvalidArgument describing the first problem found.
inline void validate_truth(const GroundTruth& t) {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::kInvalidArgument, msg); };
  if (!t.tree) fail("ground truth has no tree");
  const ValueTree& tree = *t.tree;
  std::set<std::string> labels;
  for (const SupplierConfig& s : t.suppliers) {
    if (s.label.empty()) fail("supplier with empty label");
    if (!labels.insert(s.label).second) fail("duplicate supplier '" + s.label + "'");
    if (!t.profiles.count(s.profile)) {
      fail("supplier '" + s.label + "' uses unknown profile '" + s.profile + "'");
    }
  }
  for (const TreeNode& n : tree.nodes()) {
    auto sd = t.noise_sd.find(n.id);
    if (sd == t.noise_sd.end() || !(sd->second >= 0.0)) {
      fail("noise_sd for '" + n.id + "' missing or negative");
    }
    if (n.children.empty()) {
      for (const auto& [name, p] : t.profiles) {
        auto m = p.leaf_means.find(n.id);
        if (m == p.leaf_means.end()) fail("profile '" + name + "' has no mean for '" + n.id + "'");
        if (m->second < kMinNodeRating || m->second > kMaxNodeRating) {
          fail("profile '" + name + "' mean for '" + n.id + "' outside [1,10]");
        }
      }
    } else {
      auto c = t.coefficients.find(n.id);
      for (const NodeId& child : n.children) {
        if (c == t.coefficients.end() || !c->second.count(child)) {
          fail("no coefficient for '" + child + "' in '" + n.id + "'");
        }
      }
    }
  }
  for (const auto& [parent, row] : t.coefficients) {
    if (!tree.contains(parent)) fail("coefficients for unknown node '" + parent + "'");
    const auto& kids = tree.node(parent).children;
    for (const auto& [child, v] : row) {
      if (std::find(kids.begin(), kids.end(), child) == kids.end()) {
        fail("'" + child + "' is not a child of '" + parent + "'");
      }
    }
  }
  for (const auto& [name, p] : t.profiles) {
    for (const auto& [node, v] : p.node_offsets) {
      if (!tree.contains(node) || tree.is_leaf(node)) {
        fail("profile '" + name + "' offset for non-internal node '" + node + "'");
      }
    }
  }
  if (!(t.halo_sd >= 0.0)) fail("halo_sd must be non-negative");
  if (!(t.decision_maker_share >= 0.0 && t.decision_maker_share <= 1.0)) {
    fail("decision_maker_share must be in [0,1]");
  }
  if (t.threshold < 1 || t.threshold > 10) fail("threshold must be in [1,10]");
  for (OutcomeKind k : kOutcomeKinds) {
    const WillingnessLink& link = t.link(k);
    for (std::size_t i = 0; i < link.size(); ++i) {
      if (!(link[i] >= 0.0 && link[i] <= 1.0)) fail("willingness link values must be in [0,1]");
      if (i > 0 && link[i] < link[i - 1]) fail("willingness link must be non-decreasing");
    }
  }
}

namespace detail {

inline int to_rating(double x) {
  return static_cast<int>(round_half_away(std::clamp(x, double{kMinNodeRating}, double{kMaxNodeRating})));
}

inline int draw_outcome(double p_willing, int threshold, double u1, double u2) {
  if (u1 < p_willing) {
    return std::min(10, threshold + static_cast<int>(u2 * (11 - threshold)));
  }
  return std::max(0, threshold - 1 - static_cast<int>(u2 * u2 * threshold));
}

inline std::string respondent_id(std::size_t k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "R%05zu", k);
  return buf;
}

}  // namespace detail

inline SurveySample generate_market(const GroundTruth& truth) {
  validate_truth(truth);
  const ValueTree& tree = *truth.tree;
  const std::size_t size = tree.size();

  // Resolve names to indices once.
  struct Plan {
    std::vector<double> leaf_mean;  // per node (leaves only)
    std::vector<double> offset;     // per node (internal only)
  };
  std::map<std::string, Plan> plans;
  for (const auto& [name, p] : truth.profiles) {
    Plan plan{std::vector<double>(size, 0.0), std::vector<double>(size, 0.0)};
    for (const auto& [node, v] : p.leaf_means) {
      if (auto i = tree.find_index(node)) plan.leaf_mean[*i] = v;
    }
    for (const auto& [node, v] : p.node_offsets) plan.offset[tree.index(node)] = v;
    plans.emplace(name, std::move(plan));
  }
  std::vector<std::vector<std::pair<std::size_t, double>>> terms(size);
  std::vector<double> sd(size);
  for (std::size_t i = 0; i < size; ++i) {
    const TreeNode& n = tree.node_at(i);
    sd[i] = truth.noise_sd.at(n.id);
    for (const NodeId& c : n.children) {
      terms[i].emplace_back(tree.index(c), truth.coefficients.at(n.id).at(c));
    }
  }
  const std::size_t root = tree.index(tree.root());

  Rng rng(truth.seed);
  std::vector<Respondent> out;
  out.reserve(truth.total_respondents());
  std::vector<double> z(size);
  std::size_t counter = 0;
  for (const SupplierConfig& s : truth.suppliers) {
    const Plan& plan = plans.at(s.profile);
    for (std::size_t k = 0; k < s.n; ++k) {
      Respondent r;
      r.id = detail::respondent_id(++counter);
      r.supplier = s.label;
      r.role = rng.uniform() < truth.decision_maker_share ? Role::kDecisionMaker : Role::kUser;
      const double halo = truth.halo_sd * rng.normal();
      for (double& v : z) v = rng.normal();
      r.ratings.assign(size, std::nullopt);
      // Reverse pre-order visits children before parents.
      for (std::size_t i = size; i-- > 0;) {
        double x;
        if (terms[i].empty()) {
          x = plan.leaf_mean[i] + halo + sd[i] * z[i];
        } else {
          x = plan.offset[i];
          for (const auto& [c, coef] : terms[i]) x += coef * *r.ratings[c];
          x += sd[i] * z[i];
        }
        r.ratings[i] = detail::to_rating(x);
      }
      for (OutcomeKind kind : kOutcomeKinds) {
        const double u1 = rng.uniform();
        const double u2 = rng.uniform();
        const double p = truth.link(kind)[static_cast<std::size_t>(*r.ratings[root] - 1)];
        r.outcomes[static_cast<std::size_t>(kind)] =
            detail::draw_outcome(p, truth.threshold, u1, u2);
      }
      out.push_back(std::move(r));
    }
  }
  return SurveySample(truth.tree, truth.own_supplier, std::move(out));
}

// --- configuration documents -------------------------------------------

inline nlohmann::ordered_json truth_to_json(const GroundTruth& t) {
  nlohmann::ordered_json doc;
  doc["seed"] = t.seed;
  doc["own_supplier"] = t.own_supplier;
  doc["decision_maker_share"] = t.decision_maker_share;
  doc["halo_sd"] = t.halo_sd;
  auto& sup = doc["suppliers"] = nlohmann::ordered_json::array();
  for (const SupplierConfig& s : t.suppliers) {
    sup.push_back({{"label", s.label}, {"profile", s.profile}, {"n", s.n}});
  }
  auto& prof = doc["profiles"] = nlohmann::ordered_json::object();
  for (const auto& [name, p] : t.profiles) {
    prof[name]["leaf_means"] = p.leaf_means;
    prof[name]["node_offsets"] = p.node_offsets;
  }
  doc["coefficients"] = t.coefficients;
  doc["noise_sd"] = t.noise_sd;
  doc["willingness"] = {{"threshold", t.threshold},
                        {"recommend", t.recommend_link},
                        {"repurchase", t.repurchase_link}};
  doc["tree"] = tree_to_json(*t.tree);
  return doc;
}

inline GroundTruth truth_from_json(const nlohmann::json& doc) {
  GroundTruth t;
  try {
    t.tree = std::make_shared<const ValueTree>(ValueTree::build(tree_spec_from_json(doc.at("tree"))));
    t.seed = doc.at("seed").get<std::uint64_t>();
    t.own_supplier = doc.at("own_supplier").get<std::string>();
    t.decision_maker_share = doc.value("decision_maker_share", 1.0);
    t.halo_sd = doc.value("halo_sd", 0.0);
    for (const auto& s : doc.at("suppliers")) {
      t.suppliers.push_back({s.at("label").get<std::string>(), s.at("profile").get<std::string>(),
                             s.at("n").get<std::size_t>()});
    }
    for (const auto& [name, p] : doc.at("profiles").items()) {
      SupplierProfile sp;
      sp.leaf_means = p.at("leaf_means").get<std::map<NodeId, double>>();
      if (p.contains("node_offsets")) sp.node_offsets = p.at("node_offsets").get<std::map<NodeId, double>>();
      t.profiles.emplace(name, std::move(sp));
    }
    t.coefficients = doc.at("coefficients").get<std::map<NodeId, std::map<NodeId, double>>>();
    t.noise_sd = doc.at("noise_sd").get<std::map<NodeId, double>>();
    const auto& w = doc.at("willingness");
    t.threshold = w.at("threshold").get<int>();
    t.recommend_link = w.at("recommend").get<WillingnessLink>();
    t.repurchase_link = w.at("repurchase").get<WillingnessLink>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kSyntax, std::string("ground truth document: ") + e.what());
  }
  validate_truth(t);
  return t;
}

inline GroundTruth load_truth_file(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  try {
    return truth_from_json(nlohmann::json::parse(text));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kSyntax, path.string() + ": " + e.what());
  }
}

// --- calibration -----------------------------------------------------------

struct MeanTarget {
  NodeId node;
  double own = 0.0;
  double competitor = 0.0;
  std::optional<int> relative;  // checked against own/competitor when given
};

struct WeightTarget {
  NodeId parent;
  NodeId child;
  int weight = 0;  // percent
};

struct FitTarget {
  NodeId parent;
  double r_squared = 0.0;
};

struct LoyaltyTarget {
  double value_score = 0.0;
  double proportion = 0.0;
};

struct CalibrationTargets {
  std::vector<MeanTarget> means;
  std::vector<WeightTarget> weights;
  std::vector<FitTarget> fits;
  std::vector<LoyaltyTarget> loyalty;
  OutcomeKind loyalty_outcome = OutcomeKind::kRecommend;
};

struct CalibrationOptions {
  int max_iterations = 1000;
  double mean_tolerance = 0.0015;
  double coefficient_tolerance = 0.0015;
  double r_squared_tolerance = 0.01;
  double loyalty_tolerance = 0.004;
  // When set, one line per iteration listing every target's current error.
  std::ostream* trace = nullptr;
};

struct CalibrationResult {
  GroundTruth truth;
  int iterations = 0;
};

inline CalibrationTargets calibration_targets_from_json(const nlohmann::json& doc) {
  CalibrationTargets t;
  try {
    for (const auto& m : doc.value("means", nlohmann::json::array())) {
      MeanTarget mt{m.at("node").get<std::string>(), m.at("own").get<double>(),
                    m.at("competitor").get<double>(), std::nullopt};
      if (m.contains("relative")) mt.relative = m.at("relative").get<int>();
      t.means.push_back(std::move(mt));
    }
    for (const auto& w : doc.value("weights", nlohmann::json::array())) {
      t.weights.push_back({w.at("parent").get<std::string>(), w.at("child").get<std::string>(),
                           w.at("weight").get<int>()});
    }
    for (const auto& f : doc.value("fits", nlohmann::json::array())) {
      t.fits.push_back({f.at("parent").get<std::string>(), f.at("r_squared").get<double>()});
    }
    for (const auto& l : doc.value("loyalty", nlohmann::json::array())) {
      t.loyalty.push_back({l.at("value_score").get<double>(), l.at("proportion").get<double>()});
    }
    if (doc.contains("loyalty_outcome")) {
      auto k = parse_outcome_kind(doc.at("loyalty_outcome").get<std::string>());
      if (!k) throw Error(ErrorCode::kSyntax, "calibration targets: unknown loyalty_outcome");
      t.loyalty_outcome = *k;
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kSyntax, std::string("calibration targets: ") + e.what());
  }
  return t;
}

// Throws kInconsistentTargets when a stated relative rating disagrees with
// its means, or when targets reference nodes the tree does not have.
inline void check_targets(const CalibrationTargets& targets, const ValueTree& tree) {
  auto bad = [](const std::string& msg) { throw Error(ErrorCode::kInconsistentTargets, msg); };
  for (const MeanTarget& m : targets.means) {
    if (!tree.contains(m.node)) bad("unknown node '" + m.node + "'");
    for (double v : {m.own, m.competitor}) {
      if (v < kMinNodeRating || v > kMaxNodeRating) bad("mean target for '" + m.node + "' outside [1,10]");
    }
    if (m.relative && relative_rating(m.own, m.competitor) != *m.relative) {
      bad("'" + m.node + "': " + format_fixed(m.own, 2) + " / " + format_fixed(m.competitor, 2) +
          " gives relative rating " + std::to_string(relative_rating(m.own, m.competitor)) +
          ", not " + std::to_string(*m.relative));
    }
  }
  for (const WeightTarget& w : targets.weights) {
    if (!tree.contains(w.parent)) bad("unknown node '" + w.parent + "'");
    const auto& kids = tree.node(w.parent).children;
    if (std::find(kids.begin(), kids.end(), w.child) == kids.end()) {
      bad("'" + w.child + "' is not a child of '" + w.parent + "'");
    }
  }
  for (const FitTarget& f : targets.fits) {
    if (!tree.contains(f.parent) || tree.is_leaf(f.parent)) bad("no model at '" + f.parent + "'");
    if (!(f.r_squared > 0.0 && f.r_squared < 1.0)) bad("R^2 target must be in (0,1)");
  }
  for (const LoyaltyTarget& l : targets.loyalty) {
    if (!(l.proportion >= 0.0 && l.proportion <= 1.0)) bad("loyalty proportion outside [0,1]");
    if (l.value_score < kMinNodeRating || l.value_score > kMaxNodeRating) {
      bad("loyalty value score outside [1,10]");
    }
  }
}

namespace detail {

inline void keep_link_monotone(WillingnessLink& link, std::size_t lo, std::size_t hi) {
  for (double& v : link) v = std::clamp(v, 0.0, 1.0);
  for (std::size_t i = lo + 1; i <= hi; ++i) link[i] = std::max(link[i], link[i - 1]);
  for (std::size_t i = lo; i-- > 0;) link[i] = std::min(link[i], link[i + 1]);
  for (std::size_t i = hi + 1; i < link.size(); ++i) link[i] = std::max(link[i], link[i - 1]);
}

}  // namespace detail

// Adjusts leaf means, node offsets, coefficients, noise levels and the
// willingness link of `base` until a sample generated from it reproduces
// every target: means within mean_tolerance (and stated relative ratings
// exactly), fitted coefficients within coefficient_tolerance of weight/100
// (and the integer weights exactly), R^2 within r_squared_tolerance, and
// own-sample loyalty lookups within loyalty_tolerance.
//
// The own supplier and the competitors must use two distinct profiles; all
// competitors share one. The procedure is deterministic.
inline CalibrationResult calibrate_to_tables(GroundTruth base, const CalibrationTargets& targets,
                                             CalibrationOptions options = {}) {
  validate_truth(base);
  const ValueTree& tree = *base.tree;
  check_targets(targets, tree);

  std::string own_profile, comp_profile;
  for (const SupplierConfig& s : base.suppliers) {
    std::string& slot = s.label == base.own_supplier ? own_profile : comp_profile;
    if (!slot.empty() && slot != s.profile) {
      throw Error(ErrorCode::kInvalidArgument, "competitors must share one profile for calibration");
    }
    slot = s.profile;
  }
  if (own_profile.empty() || comp_profile.empty() || own_profile == comp_profile) {
    throw Error(ErrorCode::kInvalidArgument,
                "calibration needs own and competitor suppliers with distinct profiles");
  }

  GroundTruth truth = std::move(base);
  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    const SurveySample market = generate_market(truth);
    const auto [own, comp] = split_by_supplier(market);
    bool done = true;

    struct MeanUpdate {
      const MeanTarget* target;
      double own_error;
      double comp_error;
    };
    std::vector<MeanUpdate> mean_updates;
    for (const MeanTarget& m : targets.means) {
      const double o = node_mean(own, m.node).mean;
      const double c = node_mean(comp, m.node).mean;
      const double eo = m.own - o, ec = m.competitor - c;
      done = done && std::abs(eo) <= options.mean_tolerance &&
             std::abs(ec) <= options.mean_tolerance &&
             round_to(o, 1) == round_to(m.own, 1) && round_to(c, 1) == round_to(m.competitor, 1) &&
             (!m.relative || relative_rating(o, c) == *m.relative);
      mean_updates.push_back({&m, eo, ec});
    }

    std::map<NodeId, NodeModel> models;
    auto model_for = [&](const NodeId& parent) -> const NodeModel& {
      auto it = models.find(parent);
      if (it == models.end()) it = models.emplace(parent, fit_node_model(market, parent)).first;
      return it->second;
    };
    std::vector<std::pair<const WeightTarget*, double>> coef_updates;
    for (const WeightTarget& w : targets.weights) {
      const double fitted = model_for(w.parent).coefficient(w.child);
      const double e = w.weight / 100.0 - fitted;
      done = done && std::abs(e) <= options.coefficient_tolerance &&
             impact_weight_percent(fitted) == w.weight;
      coef_updates.emplace_back(&w, e);
    }
    std::vector<std::pair<const FitTarget*, double>> fit_updates;
    for (const FitTarget& f : targets.fits) {
      const double r2 = model_for(f.parent).fit.r_squared;
      done = done && std::abs(f.r_squared - r2) <= options.r_squared_tolerance;
      fit_updates.emplace_back(&f, r2);
    }

    std::optional<LoyaltyCurve> curve;
    if (!targets.loyalty.empty()) {
      curve = loyalty_curve(own, targets.loyalty_outcome, truth.threshold);
      for (const LoyaltyTarget& l : targets.loyalty) {
        done = done && std::abs(l.proportion - curve->at(l.value_score)) <= options.loyalty_tolerance;
      }
    }

    if (options.trace) {
      std::ostream& os = *options.trace;
      os << "iter " << iter << (done ? " done" : "");
      for (const MeanUpdate& u : mean_updates) {
        os << " | " << u.target->node << " " << format_fixed(u.own_error, 4) << "/"
           << format_fixed(u.comp_error, 4);
      }
      for (const auto& [w, e] : coef_updates) os << " | b:" << w->child << " " << format_fixed(e, 4);
      for (const auto& [f, r2] : fit_updates) os << " | r2:" << f->parent << " " << format_fixed(r2, 3);
      if (curve) {
        for (const LoyaltyTarget& l : targets.loyalty) {
          os << " | L" << format_fixed(l.value_score, 1) << " " << format_fixed(curve->at(l.value_score), 4);
        }
      }
      os << '\n';
    }
    if (done) return {std::move(truth), iter};

    // Coefficient steps, then offsets chosen so each targeted node moves by
    // exactly its error once the predicted shifts of its children and the
    // coefficient changes are accounted for (bottom-up).
    // Rounding makes the response piecewise constant in the parameters; a
    // decaying gain stops the iteration from cycling between steps.
    const double gain = std::max(0.1, 1.0 / (1.0 + 0.1 * (iter - 1)));
    std::map<std::pair<NodeId, NodeId>, double> coef_step;
    for (const auto& [w, e] : coef_updates) {
      truth.coefficients[w->parent][w->child] += gain * e;
      coef_step[{w->parent, w->child}] = gain * e;
    }
    std::map<NodeId, const MeanUpdate*> mean_by_node;
    for (const MeanUpdate& u : mean_updates) mean_by_node[u.target->node] = &u;
    for (const bool own_side : {true, false}) {
      SupplierProfile& profile = truth.profiles[own_side ? own_profile : comp_profile];
      const SurveySample& group = own_side ? own : comp;
      std::vector<double> shift(tree.size(), 0.0);
      for (std::size_t i = tree.size(); i-- > 0;) {
        const TreeNode& n = tree.node_at(i);
        double natural = 0.0;
        for (const NodeId& c : n.children) {
          natural += truth.coefficients.at(n.id).at(c) * shift[tree.index(c)];
          auto step = coef_step.find({n.id, c});
          if (step != coef_step.end()) {
            if (auto m = try_node_mean(group, c)) natural += step->second * m->mean;
          }
        }
        auto target = mean_by_node.find(n.id);
        if (target == mean_by_node.end()) {
          shift[i] = natural;
          continue;
        }
        const double e =
            gain * (own_side ? target->second->own_error : target->second->comp_error);
        if (n.children.empty()) {
          double& v = profile.leaf_means[n.id];
          v = std::clamp(v + e, double{kMinNodeRating}, double{kMaxNodeRating});
        } else {
          profile.node_offsets[n.id] += e - natural;
        }
        shift[i] = e;
      }
    }
    for (const auto& [f, r2] : fit_updates) {
      double& sd = truth.noise_sd[f->parent];
      const double ratio = std::sqrt((1.0 - f->r_squared) / std::max(1.0 - r2, 1e-6));
      sd = std::max(0.01, sd * std::clamp(ratio, 0.7, 1.4));
    }
    if (curve) {
      // Landweber step on the bin probabilities the targets interpolate.
      WillingnessLink& link = truth.link(targets.loyalty_outcome);
      std::size_t lo = link.size(), hi = 0;
      WillingnessLink step{};
      for (const LoyaltyTarget& l : targets.loyalty) {
        const double e = gain * (l.proportion - curve->at(l.value_score));
        const double fl = std::floor(l.value_score);
        const double frac = l.value_score - fl;
        const auto a = static_cast<std::size_t>(fl) - 1;
        step[a] += (1.0 - frac) * e;
        lo = std::min(lo, a);
        hi = std::max(hi, a);
        if (frac > 0.0 && a + 1 < link.size()) {
          step[a + 1] += frac * e;
          hi = std::max(hi, a + 1);
        }
      }
      for (std::size_t i = 0; i < link.size(); ++i) link[i] += step[i];
      detail::keep_link_monotone(link, lo, hi);
    }
  }
  throw Error(ErrorCode::kNotConverged, "calibration did not converge in " +
                                            std::to_string(options.max_iterations) + " iterations");
}

}  // namespace cvm

#endif  // CVM_MARKET_SIM_HPP_
