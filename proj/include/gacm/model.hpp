#pragma once

// Entity, relation and result types shared by every gacm module.
//
// Everything here is a plain value: entity references inside relations are
// held by id and resolved through a Registry built once at load time, so
// facts compare, hash and serialize structurally.

#include <cctype>
#include <compare>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace gacm {

using EntityId = std::string;

enum class EntityKind { principal, category, action, resource, site };

inline constexpr EntityKind kAllEntityKinds[] = {EntityKind::principal, EntityKind::category,
                                                  EntityKind::action, EntityKind::resource,
                                                  EntityKind::site};

/// Upper-case token used in config files ("optionType": "PRINCIPAL").
inline std::string_view option_type_name(EntityKind kind) {
  switch (kind) {
    case EntityKind::principal: return "PRINCIPAL";
    case EntityKind::category: return "CATEGORY";
    case EntityKind::action: return "ACTION";
    case EntityKind::resource: return "RESOURCE";
    case EntityKind::site: return "SITE";
  }
  return "?";
}

inline std::optional<EntityKind> parse_option_type(std::string_view token) {
  for (EntityKind k : kAllEntityKinds)
    if (option_type_name(k) == token) return k;
  return std::nullopt;
}

/// Fact-kind name as written in rule patterns ("Principal", "Category", ...).
inline std::string_view entity_kind_name(EntityKind kind) {
  switch (kind) {
    case EntityKind::principal: return "Principal";
    case EntityKind::category: return "Category";
    case EntityKind::action: return "Action";
    case EntityKind::resource: return "Resource";
    case EntityKind::site: return "Site";
  }
  return "?";
}

class UnknownIdError : public std::runtime_error {
 public:
  UnknownIdError(EntityKind kind, EntityId id)
      : std::runtime_error("unknown " + std::string(entity_kind_name(kind)) + " id '" + id + "'"),
        kind_(kind),
        id_(std::move(id)) {}

  EntityKind kind() const noexcept { return kind_; }
  const EntityId& id() const noexcept { return id_; }

 private:
  EntityKind kind_;
  EntityId id_;
};

struct Principal {
  EntityId id;
  std::string name;
  std::string title;
  friend auto operator<=>(const Principal&, const Principal&) = default;
};

/// Categories, actions, resources and sites only carry a display name.
template <EntityKind Kind>
struct NamedEntity {
  static constexpr EntityKind kind = Kind;
  EntityId id;
  std::string name;
  friend auto operator<=>(const NamedEntity&, const NamedEntity&) = default;
};

using Category = NamedEntity<EntityKind::category>;
using Action = NamedEntity<EntityKind::action>;
using Resource = NamedEntity<EntityKind::resource>;
using Site = NamedEntity<EntityKind::site>;

/// Immutable-after-load lookup tables, ordered by id.
struct Registry {
  std::map<EntityId, Principal> principals;
  std::map<EntityId, Category> categories;
  std::map<EntityId, Action> actions;
  std::map<EntityId, Resource> resources;
  std::map<EntityId, Site> sites;

  bool contains(EntityKind kind, const EntityId& id) const {
    switch (kind) {
      case EntityKind::principal: return principals.contains(id);
      case EntityKind::category: return categories.contains(id);
      case EntityKind::action: return actions.contains(id);
      case EntityKind::resource: return resources.contains(id);
      case EntityKind::site: return sites.contains(id);
    }
    return false;
  }

  void require(EntityKind kind, const EntityId& id) const {
    if (!contains(kind, id)) throw UnknownIdError(kind, id);
  }

  /// Display name of an entity, or the id itself when the entity has no name.
  std::string display_name(EntityKind kind, const EntityId& id) const {
    auto pick = [&](const auto& table) -> std::string {
      auto it = table.find(id);
      if (it == table.end() || it->second.name.empty()) return id;
      return it->second.name;
    };
    switch (kind) {
      case EntityKind::principal: return pick(principals);
      case EntityKind::category: return pick(categories);
      case EntityKind::action: return pick(actions);
      case EntityKind::resource: return pick(resources);
      case EntityKind::site: return pick(sites);
    }
    return id;
  }

  std::vector<EntityId> ids(EntityKind kind) const {
    std::vector<EntityId> out;
    auto collect = [&](const auto& table) {
      for (const auto& [id, _] : table) out.push_back(id);
    };
    switch (kind) {
      case EntityKind::principal: collect(principals); break;
      case EntityKind::category: collect(categories); break;
      case EntityKind::action: collect(actions); break;
      case EntityKind::resource: collect(resources); break;
      case EntityKind::site: collect(sites); break;
    }
    return out;
  }

  friend bool operator==(const Registry&, const Registry&) = default;
};

enum class Answer { grant, deny, undetermined };
enum class Sign { grant, deny };

inline std::string_view to_string(Answer a) {
  switch (a) {
    case Answer::grant: return "grant";
    case Answer::deny: return "deny";
    case Answer::undetermined: return "undetermined";
  }
  return "?";
}

inline std::string_view to_string(Sign s) { return s == Sign::grant ? "grant" : "deny"; }

/// A typed reference to a registered entity. Entity facts in working memory
/// are represented by their reference.
struct EntityRef {
  EntityKind kind = EntityKind::principal;
  EntityId id;
  friend auto operator<=>(const EntityRef&, const EntityRef&) = default;
};

struct Permission {
  EntityId action;
  EntityId resource;
  friend auto operator<=>(const Permission&, const Permission&) = default;
};

inline Permission make_permission(const EntityId& action, const EntityId& resource,
                                  const Registry& registry) {
  registry.require(EntityKind::action, action);
  registry.require(EntityKind::resource, resource);
  return Permission{action, resource};
}

struct Pca {
  EntityId principal;
  EntityId category;
  friend auto operator<=>(const Pca&, const Pca&) = default;
};

struct Arca {
  EntityId category;
  Permission permission;
  friend auto operator<=>(const Arca&, const Arca&) = default;
};

struct Barca {
  EntityId category;
  Permission permission;
  friend auto operator<=>(const Barca&, const Barca&) = default;
};

/// A computed authorisation (grant) or prohibition (deny).
///
/// For grants the chain runs from the principal's category up to the
/// category holding the Arca; for denies it runs from the principal's
/// category down to the category holding the Barca.
struct Par {
  EntityId principal;
  std::vector<EntityId> chain;
  Permission permission;
  Sign sign = Sign::grant;

  friend bool operator==(const Par&, const Par&) = default;
  // principal, resource, action, sign, chain
  friend std::strong_ordering operator<=>(const Par& a, const Par& b) {
    if (auto c = a.principal <=> b.principal; c != 0) return c;
    if (auto c = a.permission.resource <=> b.permission.resource; c != 0) return c;
    if (auto c = a.permission.action <=> b.permission.action; c != 0) return c;
    if (auto c = a.sign <=> b.sign; c != 0) return c;
    return a.chain <=> b.chain;
  }
};

using ParSet = std::set<Par>;

/// The Pca/Arca/Barca relations, e.g. as loaded or as left in working memory
/// after a session quiesced.
struct Relations {
  std::set<Pca> pcas;
  std::set<Arca> arcas;
  std::set<Barca> barcas;
  friend bool operator==(const Relations&, const Relations&) = default;
};

using ParamValue = std::variant<bool, EntityRef, std::string>;

struct CustomFactInstance {
  std::string fact_id;
  std::vector<ParamValue> parameters;
  friend auto operator<=>(const CustomFactInstance&, const CustomFactInstance&) = default;
};

/// Anything that can live in a session's working memory.
using Fact = std::variant<EntityRef, Pca, Arca, Barca, CustomFactInstance>;

inline bool fact_equals(const Fact& a, const Fact& b) { return a == b; }

/// Rule-language kind name for a custom fact id: SEALED_RESOURCE -> SealedResource.
inline std::string custom_kind_name(std::string_view fact_id) {
  std::string out;
  bool upper = true;
  for (char ch : fact_id) {
    if (ch == '_' || ch == '-' || ch == ' ') {
      upper = true;
      continue;
    }
    unsigned char u = static_cast<unsigned char>(ch);
    out.push_back(upper ? static_cast<char>(std::toupper(u)) : static_cast<char>(std::tolower(u)));
    upper = false;
  }
  return out;
}

/// Field name for a custom-fact parameter label: "Responsible physician" -> responsiblePhysician.
inline std::string parameter_field_name(std::string_view label) {
  std::string out;
  bool word_start = true;
  for (char ch : label) {
    unsigned char u = static_cast<unsigned char>(ch);
    if (!std::isalnum(u)) {
      word_start = true;
      continue;
    }
    if (word_start)
      out.push_back(static_cast<char>(out.empty() ? std::tolower(u) : std::toupper(u)));
    else
      out.push_back(ch);
    word_start = false;
  }
  return out;
}

inline std::string fact_kind(const Fact& fact) {
  struct Visitor {
    std::string operator()(const EntityRef& e) const { return std::string(entity_kind_name(e.kind)); }
    std::string operator()(const Pca&) const { return "Pca"; }
    std::string operator()(const Arca&) const { return "Arca"; }
    std::string operator()(const Barca&) const { return "Barca"; }
    std::string operator()(const CustomFactInstance& c) const { return custom_kind_name(c.fact_id); }
  };
  return std::visit(Visitor{}, fact);
}

}  // namespace gacm
