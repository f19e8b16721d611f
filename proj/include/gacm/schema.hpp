#pragma once

// Custom-fact declarations and the fact schema the rule language is checked
// against: which fact kinds exist and what fields (with which types) each
// kind exposes to patterns and expressions.

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gacm/model.hpp"

namespace gacm {

enum class ParameterType { selection, boolean, text };

inline std::string_view to_string(ParameterType t) {
  switch (t) {
    case ParameterType::selection: return "SELECTION";
    case ParameterType::boolean: return "BOOLEAN";
    case ParameterType::text: return "TEXT";
  }
  return "?";
}

inline std::optional<ParameterType> parse_parameter_type(std::string_view token) {
  if (token == "SELECTION") return ParameterType::selection;
  if (token == "BOOLEAN") return ParameterType::boolean;
  if (token == "TEXT") return ParameterType::text;
  return std::nullopt;
}

struct ParameterDecl {
  ParameterType type = ParameterType::text;
  std::size_t rank = 0;
  std::string label;
  std::string description;
  std::optional<EntityKind> option_type;  // SELECTION only

  std::string field_name() const { return parameter_field_name(label); }
  friend bool operator==(const ParameterDecl&, const ParameterDecl&) = default;
};

struct CustomFactDecl {
  std::string fact;
  std::string description;
  std::string label;
  bool single = false;
  std::vector<ParameterDecl> parameters;  // ordered by rank

  std::string kind_name() const { return custom_kind_name(fact); }
  friend bool operator==(const CustomFactDecl&, const CustomFactDecl&) = default;
};

enum class ValueType { boolean, string, entity, permission, fact, chain };

struct TypeRef {
  ValueType type = ValueType::string;
  EntityKind entity = EntityKind::principal;  // ValueType::entity
  std::string kind;                           // ValueType::fact

  static TypeRef boolean() { return {ValueType::boolean, {}, {}}; }
  static TypeRef string() { return {ValueType::string, {}, {}}; }
  static TypeRef of(EntityKind k) { return {ValueType::entity, k, {}}; }
  static TypeRef permission() { return {ValueType::permission, {}, {}}; }
  static TypeRef fact(std::string kind) { return {ValueType::fact, {}, std::move(kind)}; }
  static TypeRef chain() { return {ValueType::chain, {}, {}}; }

  friend bool operator==(const TypeRef& a, const TypeRef& b) {
    if (a.type != b.type) return false;
    if (a.type == ValueType::entity) return a.entity == b.entity;
    if (a.type == ValueType::fact) return a.kind == b.kind;
    return true;
  }
};

inline std::string describe(const TypeRef& t) {
  switch (t.type) {
    case ValueType::boolean: return "Boolean";
    case ValueType::string: return "String";
    case ValueType::entity: return std::string(entity_kind_name(t.entity));
    case ValueType::permission: return "Permission";
    case ValueType::fact: return t.kind;
    case ValueType::chain: return "Chain";
  }
  return "?";
}

struct FieldSpec {
  std::string name;
  TypeRef type;
};

enum class KindBase { entity, pca, arca, barca, custom };

struct KindSpec {
  std::string name;
  KindBase base = KindBase::entity;
  EntityKind entity = EntityKind::principal;  // KindBase::entity
  const CustomFactDecl* decl = nullptr;       // KindBase::custom
  std::vector<FieldSpec> fields;              // for custom kinds, index == rank

  /// Type a variable bound to a whole fact of this kind carries.
  TypeRef fact_type() const {
    return base == KindBase::entity ? TypeRef::of(entity) : TypeRef::fact(name);
  }
  std::optional<std::size_t> field_index(std::string_view field) const {
    for (std::size_t i = 0; i < fields.size(); ++i)
      if (fields[i].name == field) return i;
    return std::nullopt;
  }
};

/// Fields reachable from a non-fact value type (entity references and permissions).
inline std::vector<FieldSpec> value_fields(const TypeRef& t) {
  if (t.type == ValueType::entity) {
    std::vector<FieldSpec> out{{"id", TypeRef::string()}, {"name", TypeRef::string()}};
    if (t.entity == EntityKind::principal) out.push_back({"title", TypeRef::string()});
    return out;
  }
  if (t.type == ValueType::permission)
    return {{"action", TypeRef::of(EntityKind::action)},
            {"resource", TypeRef::of(EntityKind::resource)}};
  return {};
}

class FactSchema {
 public:
  /// Entity kinds plus Pca, Arca and Barca.
  static FactSchema builtin() {
    FactSchema s;
    for (EntityKind k : {EntityKind::principal, EntityKind::category, EntityKind::action,
                         EntityKind::resource}) {
      KindSpec spec{std::string(entity_kind_name(k)), KindBase::entity, k, nullptr,
                    value_fields(TypeRef::of(k))};
      s.kinds_.emplace(spec.name, std::move(spec));
    }
    s.kinds_.emplace("Pca", KindSpec{"Pca", KindBase::pca, {}, nullptr,
                                     {{"principal", TypeRef::of(EntityKind::principal)},
                                      {"category", TypeRef::of(EntityKind::category)}}});
    for (auto [name, base] : {std::pair{"Arca", KindBase::arca}, std::pair{"Barca", KindBase::barca}})
      s.kinds_.emplace(name, KindSpec{name, base, {}, nullptr,
                                      {{"category", TypeRef::of(EntityKind::category)},
                                       {"permission", TypeRef::permission()}}});
    return s;
  }

  /// Builtin kinds plus one kind per declaration. The declarations must
  /// outlive the schema.
  static FactSchema with_custom(const std::vector<CustomFactDecl>& decls) {
    FactSchema s = builtin();
    for (const auto& decl : decls) {
      KindSpec spec{decl.kind_name(), KindBase::custom, {}, &decl, {}};
      for (const auto& p : decl.parameters) {
        TypeRef t = TypeRef::string();
        if (p.type == ParameterType::boolean) t = TypeRef::boolean();
        if (p.type == ParameterType::selection && p.option_type) t = TypeRef::of(*p.option_type);
        spec.fields.push_back({p.field_name(), t});
      }
      s.kinds_.insert_or_assign(spec.name, std::move(spec));
    }
    return s;
  }

  const KindSpec* find(std::string_view kind) const {
    auto it = kinds_.find(std::string(kind));
    return it == kinds_.end() ? nullptr : &it->second;
  }

  const std::map<std::string, KindSpec>& kinds() const { return kinds_; }

 private:
  std::map<std::string, KindSpec> kinds_;
};

}  // namespace gacm
