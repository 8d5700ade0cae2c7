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

#ifndef CVM_VALUE_TREE_HPP_
#define CVM_VALUE_TREE_HPP_

// Customer Value trees: the Value -> driver -> sub-process -> attribute
// hierarchy that every survey, model and report is keyed on.
//
// Tree documents are JSON:
//
//   {
//     "name": "Automobile purchase",
//     "root": "worth_what_paid_for",
//     "nodes": [
//       {"id": "worth_what_paid_for", "label": "Worth What Paid For",
//        "kind": "root", "children": ["quality", "price"]},
//       ...
//     ]
//   }
//
// The canonical serialization lists nodes in pre-order from the root, with
// children in document order, one node record per line group.

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "cvm/error.hpp"
#include "json.hpp"

namespace cvm {

using NodeId = std::string;

enum class NodeKind { kRoot, kDriver, kSubprocess, kAttribute };

inline std::string_view to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::kRoot: return "root";
    case NodeKind::kDriver: return "driver";
    case NodeKind::kSubprocess: return "subprocess";
    case NodeKind::kAttribute: return "attribute";
  }
  return "attribute";
}

inline std::optional<NodeKind> parse_node_kind(std::string_view text) {
  if (text == "root") return NodeKind::kRoot;
  if (text == "driver") return NodeKind::kDriver;
  if (text == "subprocess") return NodeKind::kSubprocess;
  if (text == "attribute") return NodeKind::kAttribute;
  return std::nullopt;
}

struct TreeNode {
  NodeId id;
  std::string label;
  NodeKind kind = NodeKind::kAttribute;
  std::vector<NodeId> children;

  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

// Node records exactly as written in a document; nothing is checked yet.
struct TreeSpec {
  std::string name;
  NodeId root;
  std::vector<TreeNode> nodes;

  friend bool operator==(const TreeSpec&, const TreeSpec&) = default;
};

enum class TreeRule {
  kEmptyId,
  kDuplicateId,
  kMissingRoot,
  kDanglingChild,
  kMultipleParents,
  kCycle,
  kUnreachable,
  kDegenerateInternal,
  kKindMismatch,
};

inline std::string_view to_string(TreeRule rule) {
  switch (rule) {
    case TreeRule::kEmptyId: return "empty id";
    case TreeRule::kDuplicateId: return "duplicate id";
    case TreeRule::kMissingRoot: return "missing root";
    case TreeRule::kDanglingChild: return "dangling child";
    case TreeRule::kMultipleParents: return "multiple parents";
    case TreeRule::kCycle: return "cycle";
    case TreeRule::kUnreachable: return "unreachable node";
    case TreeRule::kDegenerateInternal: return "degenerate internal node";
    case TreeRule::kKindMismatch: return "kind mismatch";
  }
  return "violation";
}

struct Violation {
  NodeId node;
  TreeRule rule;
  std::string detail;
};

using ValidationReport = std::vector<Violation>;

inline ValidationReport validate_tree(const TreeSpec& spec) {
  ValidationReport report;
  auto add = [&](const NodeId& node, TreeRule rule, std::string detail) {
    report.push_back({node, rule, std::move(detail)});
  };

  std::map<NodeId, std::size_t> first_index;
  for (std::size_t i = 0; i < spec.nodes.size(); ++i) {
    const TreeNode& n = spec.nodes[i];
    if (n.id.empty()) {
      add(n.id, TreeRule::kEmptyId, "node #" + std::to_string(i) + " has an empty id");
      continue;
    }
    if (!first_index.emplace(n.id, i).second) {
      add(n.id, TreeRule::kDuplicateId, "id '" + n.id + "' is used by more than one node");
    }
  }

  const bool has_root = first_index.count(spec.root) > 0;
  if (!has_root) {
    add(spec.root, TreeRule::kMissingRoot,
        "root '" + spec.root + "' is not among the nodes");
  }

  std::map<NodeId, std::vector<NodeId>> parents;
  for (const auto& [id, idx] : first_index) {
    for (const NodeId& c : spec.nodes[idx].children) {
      if (!first_index.count(c)) {
        add(id, TreeRule::kDanglingChild, "child '" + c + "' is not defined");
        continue;
      }
      parents[c].push_back(id);
    }
  }
  for (const auto& [child, ps] : parents) {
    if (ps.size() > 1) {
      add(child, TreeRule::kMultipleParents,
          "'" + child + "' is listed as a child " + std::to_string(ps.size()) + " times");
    }
  }

  // Cycle detection over the child relation (self-loops included).
  enum class Mark { kNone, kActive, kDone };
  std::map<NodeId, Mark> mark;
  std::set<NodeId> cyclic;
  for (const auto& [start, idx0] : first_index) {
    if (mark[start] != Mark::kNone) continue;
    std::vector<std::pair<NodeId, std::size_t>> stack{{start, 0}};
    mark[start] = Mark::kActive;
    while (!stack.empty()) {
      auto& [id, next] = stack.back();
      const auto& kids = spec.nodes[first_index.at(id)].children;
      if (next == kids.size()) {
        mark[id] = Mark::kDone;
        stack.pop_back();
        continue;
      }
      const NodeId c = kids[next++];
      if (!first_index.count(c)) continue;
      if (mark[c] == Mark::kActive) {
        if (cyclic.insert(c).second) {
          add(c, TreeRule::kCycle, "'" + c + "' is reachable from itself");
        }
      } else if (mark[c] == Mark::kNone) {
        mark[c] = Mark::kActive;
        stack.emplace_back(c, 0);
      }
    }
  }

  if (has_root) {
    if (parents.count(spec.root) && cyclic.empty()) {
      add(spec.root, TreeRule::kMultipleParents, "the root is listed as a child");
    }
    std::set<NodeId> seen{spec.root};
    std::vector<NodeId> todo{spec.root};
    while (!todo.empty()) {
      NodeId id = todo.back();
      todo.pop_back();
      for (const NodeId& c : spec.nodes[first_index.at(id)].children) {
        if (first_index.count(c) && seen.insert(c).second) todo.push_back(c);
      }
    }
    for (const auto& [id, idx] : first_index) {
      if (!seen.count(id)) {
        add(id, TreeRule::kUnreachable, "'" + id + "' is not connected to the root");
      }
    }
  }

  for (const auto& [id, idx] : first_index) {
    const TreeNode& n = spec.nodes[idx];
    const bool is_root = id == spec.root;
    if (n.children.size() == 1) {
      add(id, TreeRule::kDegenerateInternal,
          "internal node '" + id + "' has a single child");
    }
    if ((n.kind == NodeKind::kAttribute) != n.children.empty()) {
      add(id, TreeRule::kKindMismatch,
          n.children.empty() ? "leaf '" + id + "' must have kind attribute"
                             : "attribute '" + id + "' must not have children");
    }
    if ((n.kind == NodeKind::kRoot) != is_root) {
      add(id, TreeRule::kKindMismatch,
          is_root ? "root '" + id + "' must have kind root"
                  : "'" + id + "' has kind root but is not the tree root");
    }
  }
  return report;
}

// A validated, immutable Customer Value tree. Nodes are stored in pre-order
// from the root; node indices are stable for the lifetime of the tree.
class ValueTree {
 public:
  // Validates `spec` and canonicalizes node order. Throws Error with the
  // code of the first violation found.
  static ValueTree build(TreeSpec spec) {
    ValidationReport report = validate_tree(spec);
    if (!report.empty()) throw violation_error(report);

    std::map<NodeId, const TreeNode*> by_id;
    for (const TreeNode& n : spec.nodes) by_id.emplace(n.id, &n);

    ValueTree tree;
    tree.spec_.name = spec.name;
    tree.spec_.root = spec.root;
    // Iterative pre-order walk preserving child order.
    std::vector<std::tuple<NodeId, std::optional<std::size_t>, std::size_t>> stack{
        {spec.root, std::nullopt, 0}};
    while (!stack.empty()) {
      auto [id, parent, depth] = stack.back();
      stack.pop_back();
      const std::size_t idx = tree.spec_.nodes.size();
      tree.spec_.nodes.push_back(*by_id.at(id));
      tree.parent_.push_back(parent);
      tree.depth_.push_back(depth);
      tree.index_.emplace(id, idx);
      const auto& kids = by_id.at(id)->children;
      for (auto it = kids.rbegin(); it != kids.rend(); ++it) {
        stack.emplace_back(*it, idx, depth + 1);
      }
    }
    return tree;
  }

  const std::string& name() const { return spec_.name; }
  const NodeId& root() const { return spec_.root; }
  std::size_t size() const { return spec_.nodes.size(); }
  const std::vector<TreeNode>& nodes() const { return spec_.nodes; }
  const TreeSpec& spec() const { return spec_; }

  bool contains(std::string_view id) const { return index_.find(id) != index_.end(); }

  std::optional<std::size_t> find_index(std::string_view id) const {
    auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t index(std::string_view id) const {
    if (auto i = find_index(id)) return *i;
    throw Error(ErrorCode::kUnknownNode, "node '" + std::string(id) + "' is not in tree '" + name() + "'");
  }

  const TreeNode& node(std::string_view id) const { return spec_.nodes[index(id)]; }
  const TreeNode& node_at(std::size_t idx) const { return spec_.nodes.at(idx); }

  std::optional<NodeId> parent(std::string_view id) const {
    const auto p = parent_[index(id)];
    if (!p) return std::nullopt;
    return spec_.nodes[*p].id;
  }
  std::optional<std::size_t> parent_index(std::size_t idx) const { return parent_.at(idx); }

  // Root has depth 0.
  std::size_t depth(std::string_view id) const { return depth_[index(id)]; }

  // Number of levels (a lone root has one level).
  std::size_t levels() const {
    return 1 + *std::max_element(depth_.begin(), depth_.end());
  }

  bool is_leaf(std::string_view id) const { return node(id).children.empty(); }

  std::vector<NodeId> internal_nodes() const {
    std::vector<NodeId> out;
    for (const TreeNode& n : spec_.nodes) {
      if (!n.children.empty()) out.push_back(n.id);
    }
    return out;
  }

  std::vector<NodeId> leaves() const {
    std::vector<NodeId> out;
    for (const TreeNode& n : spec_.nodes) {
      if (n.children.empty()) out.push_back(n.id);
    }
    return out;
  }

  friend bool operator==(const ValueTree& a, const ValueTree& b) { return a.spec_ == b.spec_; }

 private:
  ValueTree() = default;

  static Error violation_error(const ValidationReport& report) {
    static constexpr std::pair<TreeRule, ErrorCode> kPriority[] = {
        {TreeRule::kDuplicateId, ErrorCode::kDuplicateId},
        {TreeRule::kDanglingChild, ErrorCode::kDanglingChild},
        {TreeRule::kCycle, ErrorCode::kCycle},
    };
    std::string all;
    for (const Violation& v : report) {
      if (!all.empty()) all += "; ";
      all += std::string(to_string(v.rule)) + " at '" + v.node + "': " + v.detail;
    }
    for (const auto& [rule, code] : kPriority) {
      for (const Violation& v : report) {
        if (v.rule == rule) return Error(code, all);
      }
    }
    return Error(ErrorCode::kInvalidTree, all);
  }

  TreeSpec spec_;
  std::vector<std::optional<std::size_t>> parent_;
  std::vector<std::size_t> depth_;
  std::map<NodeId, std::size_t, std::less<>> index_;
};

inline ValidationReport validate_tree(const ValueTree& tree) { return validate_tree(tree.spec()); }

// Node followed by each ancestor up to and including the root.
inline std::vector<NodeId> path_to_root(const ValueTree& tree, std::string_view node) {
  std::vector<NodeId> path;
  std::optional<std::size_t> idx = tree.index(node);
  while (idx) {
    path.push_back(tree.node_at(*idx).id);
    idx = tree.parent_index(*idx);
  }
  return path;
}

namespace detail {

inline std::string line_column(std::string_view text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

inline const nlohmann::json& require(const nlohmann::json& obj, const char* key,
                                     const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw Error(ErrorCode::kSyntax, where + ": missing field '" + key + "'");
  return *it;
}

inline std::string require_string(const nlohmann::json& obj, const char* key,
                                  const std::string& where) {
  const auto& v = require(obj, key, where);
  if (!v.is_string()) throw Error(ErrorCode::kSyntax, where + "." + key + ": expected a string");
  return v.get<std::string>();
}

}  // namespace detail

inline TreeSpec tree_spec_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw Error(ErrorCode::kSyntax, "tree document must be an object");
  TreeSpec spec;
  spec.name = doc.contains("name") ? detail::require_string(doc, "name", "tree") : "";
  spec.root = detail::require_string(doc, "root", "tree");
  const auto& nodes = detail::require(doc, "nodes", "tree");
  if (!nodes.is_array()) throw Error(ErrorCode::kSyntax, "tree.nodes: expected an array");
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const std::string where = "nodes[" + std::to_string(i) + "]";
    const auto& rec = nodes[i];
    if (!rec.is_object()) throw Error(ErrorCode::kSyntax, where + ": expected an object");
    TreeNode n;
    n.id = detail::require_string(rec, "id", where);
    n.label = rec.contains("label") ? detail::require_string(rec, "label", where) : n.id;
    const std::string kind = detail::require_string(rec, "kind", where);
    auto k = parse_node_kind(kind);
    if (!k) throw Error(ErrorCode::kSyntax, where + ".kind: unknown kind '" + kind + "'");
    n.kind = *k;
    if (rec.contains("children")) {
      const auto& kids = rec.at("children");
      if (!kids.is_array()) throw Error(ErrorCode::kSyntax, where + ".children: expected an array");
      for (const auto& c : kids) {
        if (!c.is_string()) throw Error(ErrorCode::kSyntax, where + ".children: expected strings");
        n.children.push_back(c.get<std::string>());
      }
    }
    spec.nodes.push_back(std::move(n));
  }
  return spec;
}

inline nlohmann::ordered_json tree_to_json(const ValueTree& tree) {
  nlohmann::ordered_json doc;
  doc["name"] = tree.name();
  doc["root"] = tree.root();
  auto& nodes = doc["nodes"] = nlohmann::ordered_json::array();
  for (const TreeNode& n : tree.nodes()) {
    nlohmann::ordered_json rec;
    rec["id"] = n.id;
    rec["label"] = n.label;
    rec["kind"] = std::string(to_string(n.kind));
    rec["children"] = n.children;
    nodes.push_back(std::move(rec));
  }
  return doc;
}

// Parses a tree document. Only trees that pass validate_tree are returned.
inline ValueTree parse_tree_spec(std::string_view text) {
  if (text.find_first_not_of(" \t\r\n") == std::string_view::npos) {
    throw Error(ErrorCode::kSyntax, "line 1, column 1: empty document");
  }
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    const std::size_t at = e.byte > 0 ? e.byte - 1 : 0;
    throw Error(ErrorCode::kSyntax, detail::line_column(text, at) + ": " + e.what());
  }
  return ValueTree::build(tree_spec_from_json(doc));
}

// Canonical text form: pre-order nodes, fixed key order, 2-space indent,
// trailing newline.
inline std::string serialize_tree(const ValueTree& tree) {
  return tree_to_json(tree).dump(2) + "\n";
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "file not found: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline ValueTree load_tree_file(const std::filesystem::path& path) {
  try {
    return parse_tree_spec(read_text_file(path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kIo) throw;
    throw Error(e.code(), path.string() + ": " + e.message());
  }
}

}  // namespace cvm

#endif  // CVM_VALUE_TREE_HPP_
