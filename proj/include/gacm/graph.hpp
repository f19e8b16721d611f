#pragma once

// Typed policy graph: principal, category, action and resource nodes joined
// by PC, CC, CA and AR edges. Each Par becomes one PC CC* CA AR path.

#include <algorithm>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "gacm/model.hpp"

namespace gacm {

enum class NodeType { P, C, A, R };

inline char to_char(NodeType t) {
  switch (t) {
    case NodeType::P: return 'P';
    case NodeType::C: return 'C';
    case NodeType::A: return 'A';
    case NodeType::R: return 'R';
  }
  return '?';
}

inline std::string to_string(NodeType t) { return std::string(1, to_char(t)); }

/// Any ordered pair of node types; only PC, CC, CA and AR are well typed.
struct EdgeType {
  NodeType from = NodeType::P;
  NodeType to = NodeType::C;
  friend auto operator<=>(const EdgeType&, const EdgeType&) = default;
};

inline constexpr EdgeType kPC{NodeType::P, NodeType::C};
inline constexpr EdgeType kCC{NodeType::C, NodeType::C};
inline constexpr EdgeType kCA{NodeType::C, NodeType::A};
inline constexpr EdgeType kAR{NodeType::A, NodeType::R};

inline std::string to_string(EdgeType t) { return {to_char(t.from), to_char(t.to)}; }

inline bool is_allowed(EdgeType t) { return t == kPC || t == kCC || t == kCA || t == kAR; }

enum class EdgeSign { neutral, grant, deny };

inline std::string_view to_string(EdgeSign s) {
  switch (s) {
    case EdgeSign::neutral: return "neutral";
    case EdgeSign::grant: return "grant";
    case EdgeSign::deny: return "deny";
  }
  return "?";
}

struct GraphNode {
  std::string id;  // "P:000001", "C:clinician", ...
  EntityId entity;
  std::string label;
  NodeType type = NodeType::P;
  friend auto operator<=>(const GraphNode&, const GraphNode&) = default;
};

struct GraphEdge {
  std::string from;
  std::string to;
  EdgeType type;
  EdgeSign sign = EdgeSign::neutral;
  friend auto operator<=>(const GraphEdge&, const GraphEdge&) = default;
};

struct PolicyGraph {
  std::vector<GraphNode> nodes;  // sorted by id
  std::vector<GraphEdge> edges;  // sorted, no duplicates

  const GraphNode* find(std::string_view id) const {
    auto it = std::lower_bound(nodes.begin(), nodes.end(), id,
                               [](const GraphNode& n, std::string_view v) { return n.id < v; });
    return it != nodes.end() && it->id == id ? &*it : nullptr;
  }
  friend bool operator==(const PolicyGraph&, const PolicyGraph&) = default;
};

inline std::string node_id(NodeType t, const EntityId& entity) { return to_string(t) + ":" + entity; }

/// Builds the graph for a ParSet. Labels are display names from `registry`
/// when given, entity ids otherwise.
inline PolicyGraph build_graph(const ParSet& pars, const Registry* registry = nullptr) {
  std::set<GraphNode> nodes;
  std::set<GraphEdge> edges;
  auto node = [&](NodeType t, EntityKind kind, const EntityId& id) {
    std::string label = registry ? registry->display_name(kind, id) : id;
    std::string nid = node_id(t, id);
    nodes.insert({nid, id, std::move(label), t});
    return nid;
  };
  for (const auto& par : pars) {
    if (par.chain.empty()) continue;
    const auto p = node(NodeType::P, EntityKind::principal, par.principal);
    std::vector<std::string> chain;
    for (const auto& c : par.chain) chain.push_back(node(NodeType::C, EntityKind::category, c));
    const auto a = node(NodeType::A, EntityKind::action, par.permission.action);
    const auto r = node(NodeType::R, EntityKind::resource, par.permission.resource);
    edges.insert({p, chain.front(), kPC, EdgeSign::neutral});
    // CC edges always point from the more specific to the more general
    // category; deny chains run downwards, so flip them.
    for (std::size_t i = 0; i + 1 < chain.size(); ++i) {
      if (par.sign == Sign::grant) edges.insert({chain[i], chain[i + 1], kCC, EdgeSign::neutral});
      else edges.insert({chain[i + 1], chain[i], kCC, EdgeSign::neutral});
    }
    edges.insert({chain.back(), a, kCA, EdgeSign::neutral});
    edges.insert({a, r, kAR, par.sign == Sign::grant ? EdgeSign::grant : EdgeSign::deny});
  }
  return {{nodes.begin(), nodes.end()}, {edges.begin(), edges.end()}};
}

struct GraphViolation {
  GraphEdge edge;
  std::string reason;
};

/// Empty when every edge has an allowed type matching its endpoints (in
/// either direction, since CC edges may be read both ways) and node
/// identities are unique.
inline std::vector<GraphViolation> check_well_typed(const PolicyGraph& g) {
  std::vector<GraphViolation> out;
  std::set<std::pair<NodeType, EntityId>> entities;
  std::set<std::string> ids;
  for (const auto& n : g.nodes) {
    if (!ids.insert(n.id).second)
      out.push_back({{n.id, n.id, {n.type, n.type}, EdgeSign::neutral}, "duplicate node id " + n.id});
    if (!entities.insert({n.type, n.entity}).second)
      out.push_back({{n.id, n.id, {n.type, n.type}, EdgeSign::neutral},
                     "two nodes label entity " + n.entity});
  }
  for (const auto& e : g.edges) {
    const GraphNode* from = g.find(e.from);
    const GraphNode* to = g.find(e.to);
    if (!from || !to) {
      out.push_back({e, "edge endpoint is not a node"});
      continue;
    }
    if (e.from == e.to) out.push_back({e, "self-edge"});
    if (!is_allowed(e.type)) {
      out.push_back({e, "edge type " + to_string(e.type) + " is not allowed"});
      continue;
    }
    const EdgeType actual{from->type, to->type};
    const EdgeType reversed{to->type, from->type};
    if (actual != e.type && reversed != e.type)
      out.push_back({e, "edge type " + to_string(e.type) + " does not match endpoints " +
                            to_string(actual)});
    if ((e.type == kAR) == (e.sign == EdgeSign::neutral))
      out.push_back({e, "only AR edges carry a grant or deny sign"});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Export

enum class GraphFormat { node_link, dot };

inline std::optional<GraphFormat> parse_graph_format(std::string_view s) {
  if (s == "node-link") return GraphFormat::node_link;
  if (s == "dot") return GraphFormat::dot;
  return std::nullopt;
}

inline nlohmann::ordered_json to_node_link(const PolicyGraph& g) {
  nlohmann::ordered_json nodes = nlohmann::ordered_json::array();
  for (const auto& n : g.nodes)
    nodes.push_back({{"id", n.id}, {"entity", n.entity}, {"label", n.label},
                     {"nodeType", to_string(n.type)}});
  nlohmann::ordered_json links = nlohmann::ordered_json::array();
  for (const auto& e : g.edges)
    links.push_back({{"source", e.from}, {"target", e.to}, {"edgeType", to_string(e.type)},
                     {"sign", std::string(to_string(e.sign))}});
  return {{"nodes", std::move(nodes)}, {"links", std::move(links)}};
}

namespace graph_detail {

inline std::string dot_quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out += c;
  }
  return out + '"';
}

inline std::string_view fill(NodeType t) {
  switch (t) {
    case NodeType::P: return "#8dd3c7";
    case NodeType::C: return "#ffffb3";
    case NodeType::A: return "#bebada";
    case NodeType::R: return "#80b1d3";
  }
  return "white";
}

inline std::string_view shape(NodeType t) {
  switch (t) {
    case NodeType::P: return "ellipse";
    case NodeType::C: return "box";
    case NodeType::A: return "diamond";
    case NodeType::R: return "note";
  }
  return "ellipse";
}

}  // namespace graph_detail

inline std::string to_dot(const PolicyGraph& g) {
  using graph_detail::dot_quote;
  std::string out = "digraph policy {\n  rankdir=LR;\n  node [style=filled];\n";
  for (const auto& n : g.nodes) {
    out += "  " + dot_quote(n.id) + " [label=" + dot_quote(n.label) + ", shape=" +
           std::string(graph_detail::shape(n.type)) + ", fillcolor=" +
           dot_quote(graph_detail::fill(n.type)) + "];\n";
  }
  for (const auto& e : g.edges) {
    out += "  " + dot_quote(e.from) + " -> " + dot_quote(e.to) + " [label=" +
           dot_quote(to_string(e.type));
    if (e.sign == EdgeSign::grant) out += ", color=\"#1a9641\"";
    if (e.sign == EdgeSign::deny) out += ", color=\"#d7191c\", style=dashed";
    out += "];\n";
  }
  return out + "}\n";
}

inline std::string export_graph(const PolicyGraph& g, GraphFormat format) {
  if (format == GraphFormat::dot) return to_dot(g);
  return to_node_link(g).dump(2) + "\n";
}

}  // namespace gacm
