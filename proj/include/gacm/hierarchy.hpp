#pragma once

// The category order: an edge (child, parent) means child ⊆ parent, the
// parent being the more general category. Permissions flow down the order,
// prohibitions flow up.

#include <algorithm>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gacm/model.hpp"

namespace gacm {

struct HierarchyEdge {
  EntityId child;
  EntityId parent;
  friend auto operator<=>(const HierarchyEdge&, const HierarchyEdge&) = default;
};

class NoPathError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class HierarchyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Returns one directed cycle (first id repeated at the end) or nullopt.
/// The search visits nodes in id order so the reported cycle is stable.
inline std::optional<std::vector<EntityId>> check_acyclic(const std::vector<HierarchyEdge>& edges) {
  std::map<EntityId, std::vector<EntityId>> out;
  for (const auto& e : edges) {
    out[e.child].push_back(e.parent);
    out[e.parent];
  }
  for (auto& [_, parents] : out) std::sort(parents.begin(), parents.end());

  enum class Mark { fresh, active, done };
  std::map<EntityId, Mark> mark;
  for (const auto& [id, _] : out) mark[id] = Mark::fresh;

  std::vector<EntityId> stack;
  std::optional<std::vector<EntityId>> cycle;

  auto visit = [&](auto&& self, const EntityId& node) -> void {
    mark[node] = Mark::active;
    stack.push_back(node);
    for (const auto& next : out[node]) {
      if (cycle) return;
      if (mark[next] == Mark::active) {
        auto from = std::find(stack.begin(), stack.end(), next);
        std::vector<EntityId> c(from, stack.end());
        c.push_back(next);
        cycle = std::move(c);
        return;
      }
      if (mark[next] == Mark::fresh) self(self, next);
    }
    stack.pop_back();
    mark[node] = Mark::done;
  };

  for (const auto& [id, _] : out) {
    if (cycle) break;
    if (mark[id] == Mark::fresh) visit(visit, id);
  }
  return cycle;
}

class CategoryHierarchy {
 public:
  CategoryHierarchy() = default;

  /// Throws HierarchyError on unknown endpoints, self-edges or cycles.
  CategoryHierarchy(std::set<EntityId> nodes, std::vector<HierarchyEdge> edges)
      : nodes_(std::move(nodes)) {
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    for (const auto& e : edges) {
      if (!nodes_.contains(e.child))
        throw HierarchyError("hierarchy edge references unknown category '" + e.child + "'");
      if (!nodes_.contains(e.parent))
        throw HierarchyError("hierarchy edge references unknown category '" + e.parent + "'");
      if (e.child == e.parent) throw HierarchyError("self-edge on category '" + e.child + "'");
    }
    if (auto cycle = check_acyclic(edges)) {
      std::string text;
      for (const auto& id : *cycle) text += (text.empty() ? "" : " -> ") + id;
      throw HierarchyError("hierarchy cycle: " + text);
    }
    edges_ = std::move(edges);
    for (const auto& id : nodes_) {
      parents_[id];
      children_[id];
    }
    for (const auto& e : edges_) {
      parents_[e.child].push_back(e.parent);
      children_[e.parent].push_back(e.child);
    }
    for (const auto& id : nodes_) ancestors_[id] = reach(id, parents_);
  }

  const std::set<EntityId>& nodes() const { return nodes_; }
  const std::vector<HierarchyEdge>& edges() const { return edges_; }
  bool contains(const EntityId& id) const { return nodes_.contains(id); }

  /// True iff general == specific or general is an ancestor of specific.
  bool contains_or_equals(const EntityId& general, const EntityId& specific) const {
    require(general);
    return ancestors_of(specific).contains(general);
  }

  /// Ancestors of a category, itself included.
  const std::set<EntityId>& ancestors_of(const EntityId& id) const {
    auto it = ancestors_.find(id);
    if (it == ancestors_.end()) throw UnknownIdError(EntityKind::category, id);
    return it->second;
  }

  std::set<EntityId> descendants_of(const EntityId& id) const {
    require(id);
    return reach(id, children_);
  }

  const std::vector<EntityId>& parents_of(const EntityId& id) const {
    require(id);
    return parents_.at(id);
  }

  /// Upward path [from, ..., to]; shortest first, then least by id sequence.
  std::vector<EntityId> permission_chain(const EntityId& from, const EntityId& to) const {
    require(from);
    require(to);
    if (!ancestors_of(from).contains(to))
      throw NoPathError("'" + to + "' does not contain '" + from + "'");

    // Distance to `to` along child->parent edges, computed backwards over children.
    std::map<EntityId, std::size_t> dist{{to, 0}};
    std::deque<EntityId> queue{to};
    while (!queue.empty()) {
      EntityId cur = queue.front();
      queue.pop_front();
      for (const auto& child : children_.at(cur)) {
        if (dist.contains(child)) continue;
        dist[child] = dist[cur] + 1;
        queue.push_back(child);
      }
    }

    std::vector<EntityId> path{from};
    EntityId cur = from;
    while (cur != to) {
      const std::size_t want = dist.at(cur) - 1;
      const EntityId* best = nullptr;
      for (const auto& parent : parents_.at(cur)) {
        auto it = dist.find(parent);
        if (it == dist.end() || it->second != want) continue;
        if (!best || parent < *best) best = &parent;
      }
      cur = *best;
      path.push_back(cur);
    }
    return path;
  }

  /// Downward path [from, ..., to]; the reverse of permission_chain(to, from).
  std::vector<EntityId> prohibition_chain(const EntityId& from, const EntityId& to) const {
    require(from);
    require(to);
    if (!ancestors_of(to).contains(from))
      throw NoPathError("'" + from + "' does not contain '" + to + "'");
    auto path = permission_chain(to, from);
    std::reverse(path.begin(), path.end());
    return path;
  }

  friend bool operator==(const CategoryHierarchy& a, const CategoryHierarchy& b) {
    return a.nodes_ == b.nodes_ && a.edges_ == b.edges_;
  }

 private:
  void require(const EntityId& id) const {
    if (!nodes_.contains(id)) throw UnknownIdError(EntityKind::category, id);
  }

  static std::set<EntityId> reach(const EntityId& start,
                                  const std::map<EntityId, std::vector<EntityId>>& next) {
    std::set<EntityId> seen{start};
    std::vector<EntityId> todo{start};
    while (!todo.empty()) {
      EntityId cur = std::move(todo.back());
      todo.pop_back();
      for (const auto& n : next.at(cur))
        if (seen.insert(n).second) todo.push_back(n);
    }
    return seen;
  }

  std::set<EntityId> nodes_;
  std::vector<HierarchyEdge> edges_;
  std::map<EntityId, std::vector<EntityId>> parents_;
  std::map<EntityId, std::vector<EntityId>> children_;
  std::map<EntityId, std::set<EntityId>> ancestors_;
};

}  // namespace gacm
