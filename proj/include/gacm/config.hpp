#pragma once

// Policy directory loading and custom-fact value validation.
//
// A policy directory holds one JSON array per file:
//
//   principal.json   {"id", "name", "title"}
//   category.json    {"id", "name"}
//   action.json      {"id", "name"}
//   resource.json    {"id", "name"}
//   site.json        {"id", "name"}              (optional)
//   hierarchy.json   {"child", "parent"}         (optional)
//   pca.json         {"principal", "category"}
//   arca.json        {"category", "action", "resource"}
//   barca.json       {"category", "action", "resource"}
//   customfacts.json {"fact", "description", "label", "single", "parameters": [...]}
//
// Loading collects every problem it finds before failing, and each
// diagnostic names the file it came from.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "gacm/hierarchy.hpp"
#include "gacm/model.hpp"
#include "gacm/schema.hpp"

namespace gacm {

struct PolicyConfig {
  Registry registry;
  CategoryHierarchy hierarchy;
  Relations relations;
  std::vector<CustomFactDecl> custom_facts;  // ordered by fact id

  const CustomFactDecl* find_fact(std::string_view fact_id) const {
    for (const auto& d : custom_facts)
      if (d.fact == fact_id) return &d;
    return nullptr;
  }

  friend bool operator==(const PolicyConfig&, const PolicyConfig&) = default;
};

struct Diagnostic {
  std::string file;
  std::string location;  // "[3]", "[3].parameters[0]", "line 2, column 5", or empty
  std::string message;

  std::string to_string() const {
    return file + (location.empty() ? "" : location.front() == '[' ? location : " " + location) +
           ": " + message;
  }
};

class PolicyLoadError : public std::runtime_error {
 public:
  explicit PolicyLoadError(std::vector<Diagnostic> diagnostics)
      : std::runtime_error(summary(diagnostics)), diagnostics_(std::move(diagnostics)) {}

  const std::vector<Diagnostic>& diagnostics() const noexcept { return diagnostics_; }

 private:
  static std::string summary(const std::vector<Diagnostic>& d) {
    std::string out = std::to_string(d.size()) + " policy error(s)";
    for (const auto& x : d) out += "\n  " + x.to_string();
    return out;
  }
  std::vector<Diagnostic> diagnostics_;
};

struct LoadOptions {
  bool lenient = false;  // accept unknown fields
};

namespace config_detail {

using nlohmann::json;

class Loader {
 public:
  Loader(std::filesystem::path dir, LoadOptions opts) : dir_(std::move(dir)), opts_(opts) {}

  PolicyConfig load() {
    PolicyConfig cfg;
    if (!std::filesystem::is_directory(dir_)) {
      error("", "", "policy directory '" + dir_.string() + "' does not exist");
      throw PolicyLoadError(std::move(errors_));
    }

    load_entities("principal.json", true, [&](const json& o, const std::string& loc) {
      Principal p{str(o, "id", loc, "principal.json"), str(o, "name", loc, "principal.json"),
                  opt_str(o, "title", loc, "principal.json")};
      add_unique(cfg.registry.principals, std::move(p), "principal.json", loc);
    }, {"id", "name", "title"});
    load_named<EntityKind::category>("category.json", true, cfg.registry.categories);
    load_named<EntityKind::action>("action.json", true, cfg.registry.actions);
    load_named<EntityKind::resource>("resource.json", true, cfg.registry.resources);
    load_named<EntityKind::site>("site.json", false, cfg.registry.sites);

    std::vector<HierarchyEdge> edges;
    load_entities("hierarchy.json", false, [&](const json& o, const std::string& loc) {
      HierarchyEdge e{str(o, "child", loc, "hierarchy.json"), str(o, "parent", loc, "hierarchy.json")};
      bool ok = resolve(cfg.registry, EntityKind::category, e.child, "hierarchy.json", loc) &
                resolve(cfg.registry, EntityKind::category, e.parent, "hierarchy.json", loc);
      if (ok && e.child == e.parent) {
        error("hierarchy.json", loc, "category '" + e.child + "' cannot contain itself");
        ok = false;
      }
      if (ok) edges.push_back(std::move(e));
    }, {"child", "parent"});
    if (auto cycle = check_acyclic(edges)) {
      std::string text;
      for (const auto& id : *cycle) text += (text.empty() ? "" : " -> ") + id;
      error("hierarchy.json", "", "hierarchy cycle: " + text);
    } else {
      std::set<EntityId> nodes;
      for (const auto& [id, _] : cfg.registry.categories) nodes.insert(id);
      cfg.hierarchy = CategoryHierarchy(std::move(nodes), std::move(edges));
    }

    load_entities("pca.json", true, [&](const json& o, const std::string& loc) {
      Pca pca{str(o, "principal", loc, "pca.json"), str(o, "category", loc, "pca.json")};
      if (resolve(cfg.registry, EntityKind::principal, pca.principal, "pca.json", loc) &
          resolve(cfg.registry, EntityKind::category, pca.category, "pca.json", loc))
        cfg.relations.pcas.insert(std::move(pca));
    }, {"principal", "category"});
    load_assignments("arca.json", cfg, cfg.relations.arcas);
    load_assignments("barca.json", cfg, cfg.relations.barcas);

    load_entities("customfacts.json", true, [&](const json& o, const std::string& loc) {
      if (auto decl = custom_fact(o, loc, cfg.registry)) {
        bool dup = std::any_of(cfg.custom_facts.begin(), cfg.custom_facts.end(),
                               [&](const CustomFactDecl& d) { return d.fact == decl->fact; });
        if (dup) error("customfacts.json", loc, "duplicate fact '" + decl->fact + "'");
        else cfg.custom_facts.push_back(std::move(*decl));
      }
    }, {"fact", "description", "label", "single", "parameters"});
    std::sort(cfg.custom_facts.begin(), cfg.custom_facts.end(),
              [](const CustomFactDecl& a, const CustomFactDecl& b) { return a.fact < b.fact; });

    if (!errors_.empty()) throw PolicyLoadError(std::move(errors_));
    return cfg;
  }

 private:
  void error(std::string file, std::string loc, std::string msg) {
    errors_.push_back({std::move(file), std::move(loc), std::move(msg)});
  }

  template <typename Fn>
  void load_entities(const std::string& file, bool required, Fn&& each,
                     std::initializer_list<std::string_view> allowed) {
    const auto path = dir_ / file;
    if (!std::filesystem::exists(path)) {
      if (required) error(file, "", "missing file");
      return;
    }
    std::ifstream in(path, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    json doc;
    try {
      doc = json::parse(buf.str());
    } catch (const json::parse_error& e) {
      error(file, "", std::string("malformed JSON: ") + e.what());
      return;
    }
    if (!doc.is_array()) {
      error(file, "", "expected a JSON array of objects");
      return;
    }
    for (std::size_t i = 0; i < doc.size(); ++i) {
      const std::string loc = "[" + std::to_string(i) + "]";
      const json& o = doc[i];
      if (!o.is_object()) {
        error(file, loc, "expected an object");
        continue;
      }
      if (!check_fields(o, allowed, file, loc)) continue;
      try {
        each(o, loc);
      } catch (const FieldError&) {
        // already reported
      }
    }
  }

  bool check_fields(const json& o, std::initializer_list<std::string_view> allowed,
                    const std::string& file, const std::string& loc) {
    if (opts_.lenient) return true;
    bool ok = true;
    for (const auto& [key, _] : o.items()) {
      if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
        error(file, loc, "unknown field '" + key + "'");
        ok = false;
      }
    }
    return ok;
  }

  struct FieldError {};

  std::string str(const json& o, const char* key, const std::string& loc, const std::string& file) {
    auto it = o.find(key);
    if (it == o.end() || !it->is_string() || it->get<std::string>().empty()) {
      error(file, loc, std::string("field '") + key + "' must be a non-empty string");
      throw FieldError{};
    }
    return it->get<std::string>();
  }

  std::string opt_str(const json& o, const char* key, const std::string& loc,
                      const std::string& file) {
    auto it = o.find(key);
    if (it == o.end()) return {};
    if (!it->is_string()) {
      error(file, loc, std::string("field '") + key + "' must be a string");
      throw FieldError{};
    }
    return it->get<std::string>();
  }

  template <typename Map, typename Entity>
  void add_unique(Map& table, Entity e, const std::string& file, const std::string& loc) {
    if (table.contains(e.id)) {
      error(file, loc, "duplicate id '" + e.id + "'");
      return;
    }
    auto id = e.id;
    table.emplace(std::move(id), std::move(e));
  }

  template <EntityKind Kind>
  void load_named(const std::string& file, bool required,
                  std::map<EntityId, NamedEntity<Kind>>& table) {
    load_entities(file, required, [&](const json& o, const std::string& loc) {
      NamedEntity<Kind> e{str(o, "id", loc, file), opt_str(o, "name", loc, file)};
      add_unique(table, std::move(e), file, loc);
    }, {"id", "name"});
  }

  bool resolve(const Registry& reg, EntityKind kind, const EntityId& id, const std::string& file,
               const std::string& loc) {
    if (reg.contains(kind, id)) return true;
    error(file, loc, "unresolved " + std::string(entity_kind_name(kind)) + " '" + id + "'");
    return false;
  }

  template <typename Rel>
  void load_assignments(const std::string& file, PolicyConfig& cfg, std::set<Rel>& out) {
    load_entities(file, true, [&](const json& o, const std::string& loc) {
      Rel rel{str(o, "category", loc, file),
              Permission{str(o, "action", loc, file), str(o, "resource", loc, file)}};
      if (resolve(cfg.registry, EntityKind::category, rel.category, file, loc) &
          resolve(cfg.registry, EntityKind::action, rel.permission.action, file, loc) &
          resolve(cfg.registry, EntityKind::resource, rel.permission.resource, file, loc))
        out.insert(std::move(rel));
    }, {"category", "action", "resource"});
  }

  std::optional<CustomFactDecl> custom_fact(const json& o, const std::string& loc,
                                            const Registry&) {
    const std::string file = "customfacts.json";
    CustomFactDecl d;
    d.fact = str(o, "fact", loc, file);
    d.description = opt_str(o, "description", loc, file);
    d.label = opt_str(o, "label", loc, file);
    if (auto it = o.find("single"); it != o.end()) {
      if (!it->is_boolean()) {
        error(file, loc, "field 'single' must be a boolean");
        return std::nullopt;
      }
      d.single = it->get<bool>();
    }
    auto params = o.find("parameters");
    if (params == o.end() || !params->is_array()) {
      error(file, loc, "field 'parameters' must be an array");
      return std::nullopt;
    }
    bool ok = true;
    for (std::size_t i = 0; i < params->size(); ++i) {
      const std::string ploc = loc + ".parameters[" + std::to_string(i) + "]";
      const json& p = (*params)[i];
      if (!p.is_object()) {
        error(file, ploc, "expected an object");
        ok = false;
        continue;
      }
      if (!check_fields(p, {"type", "rank", "label", "description", "optionType"}, file, ploc)) {
        ok = false;
        continue;
      }
      try {
        ParameterDecl pd;
        auto type = parse_parameter_type(str(p, "type", ploc, file));
        if (!type) {
          error(file, ploc, "type must be SELECTION, BOOLEAN or TEXT");
          ok = false;
          continue;
        }
        pd.type = *type;
        auto rank = p.find("rank");
        if (rank == p.end() || !rank->is_number_unsigned()) {
          error(file, ploc, "field 'rank' must be a non-negative integer");
          ok = false;
          continue;
        }
        pd.rank = rank->get<std::size_t>();
        pd.label = str(p, "label", ploc, file);
        pd.description = opt_str(p, "description", ploc, file);
        std::string option = opt_str(p, "optionType", ploc, file);
        if (!option.empty()) {
          pd.option_type = parse_option_type(option);
          if (!pd.option_type) {
            error(file, ploc, "unknown optionType '" + option + "'");
            ok = false;
            continue;
          }
        }
        if (pd.type == ParameterType::selection && !pd.option_type) {
          error(file, ploc, "SELECTION parameters need an optionType");
          ok = false;
          continue;
        }
        if (pd.type != ParameterType::selection && pd.option_type) {
          error(file, ploc, "optionType is only allowed on SELECTION parameters");
          ok = false;
          continue;
        }
        if (pd.field_name().empty()) {
          error(file, ploc, "label must contain at least one letter or digit");
          ok = false;
          continue;
        }
        d.parameters.push_back(std::move(pd));
      } catch (const FieldError&) {
        ok = false;
      }
    }
    if (!ok) return std::nullopt;
    std::sort(d.parameters.begin(), d.parameters.end(),
              [](const ParameterDecl& a, const ParameterDecl& b) { return a.rank < b.rank; });
    std::set<std::string> fields;
    for (std::size_t i = 0; i < d.parameters.size(); ++i) {
      if (d.parameters[i].rank != i) {
        error(file, loc, "parameter ranks must be 0.." + std::to_string(d.parameters.size() - 1) +
                             " without gaps or repeats");
        return std::nullopt;
      }
      if (!fields.insert(d.parameters[i].field_name()).second) {
        error(file, loc, "two parameters map to field '" + d.parameters[i].field_name() + "'");
        return std::nullopt;
      }
    }
    return d;
  }

  std::filesystem::path dir_;
  LoadOptions opts_;
  std::vector<Diagnostic> errors_;
};

}  // namespace config_detail

/// Loads and validates a policy directory. Throws PolicyLoadError listing
/// every problem found.
inline PolicyConfig load_policy(const std::filesystem::path& dir, LoadOptions opts = {}) {
  return config_detail::Loader(dir, opts).load();
}

// ---------------------------------------------------------------------------
// Custom-fact values

/// A value as supplied by a client: JSON booleans/strings, or CLI text.
using RawValue = std::variant<bool, std::string>;

struct FactRequest {
  std::string fact;
  std::vector<RawValue> parameters;
};

enum class FactErrorCode { unknown_fact, arity, type_mismatch, unknown_option, duplicate_single };

inline std::string_view to_string(FactErrorCode c) {
  switch (c) {
    case FactErrorCode::unknown_fact: return "unknown_fact";
    case FactErrorCode::arity: return "arity";
    case FactErrorCode::type_mismatch: return "type_mismatch";
    case FactErrorCode::unknown_option: return "unknown_option";
    case FactErrorCode::duplicate_single: return "duplicate_single";
  }
  return "?";
}

struct FactDiagnostic {
  std::size_t index = 0;  // position of the entry in the request
  FactErrorCode code = FactErrorCode::unknown_fact;
  std::string message;
};

class CustomFactError : public std::runtime_error {
 public:
  explicit CustomFactError(std::vector<FactDiagnostic> d)
      : std::runtime_error(summary(d)), diagnostics_(std::move(d)) {}
  const std::vector<FactDiagnostic>& diagnostics() const noexcept { return diagnostics_; }

 private:
  static std::string summary(const std::vector<FactDiagnostic>& d) {
    std::string out;
    for (const auto& x : d)
      out += (out.empty() ? "" : "; ") + std::string("entry ") + std::to_string(x.index) + ": " +
             x.message;
    return out;
  }
  std::vector<FactDiagnostic> diagnostics_;
};

/// Checks one entry's values against its declaration. Does not check the
/// `single` flag, which needs the whole scenario.
inline CustomFactInstance validate_custom_fact_values(const CustomFactDecl& decl,
                                                      const std::vector<RawValue>& values,
                                                      const Registry& registry,
                                                      std::size_t index = 0) {
  auto fail = [&](FactErrorCode code, std::string msg) -> CustomFactInstance {
    throw CustomFactError({{index, code, decl.fact + ": " + std::move(msg)}});
  };
  if (values.size() != decl.parameters.size())
    return fail(FactErrorCode::arity, "expected " + std::to_string(decl.parameters.size()) +
                                          " parameter(s), got " + std::to_string(values.size()));
  CustomFactInstance out{decl.fact, {}};
  for (std::size_t rank = 0; rank < values.size(); ++rank) {
    const ParameterDecl& p = decl.parameters[rank];
    const RawValue& v = values[rank];
    const std::string where = "parameter " + std::to_string(rank) + " (" + p.label + ")";
    switch (p.type) {
      case ParameterType::boolean:
        if (auto b = std::get_if<bool>(&v)) {
          out.parameters.emplace_back(*b);
        } else if (std::get<std::string>(v) == "true" || std::get<std::string>(v) == "false") {
          out.parameters.emplace_back(std::get<std::string>(v) == "true");
        } else {
          return fail(FactErrorCode::type_mismatch,
                      where + " must be true or false, got '" + std::get<std::string>(v) + "'");
        }
        break;
      case ParameterType::selection: {
        const auto* id = std::get_if<std::string>(&v);
        if (!id) return fail(FactErrorCode::type_mismatch, where + " must be an id string");
        if (!registry.contains(*p.option_type, *id))
          return fail(FactErrorCode::unknown_option,
                      where + ": no " + std::string(entity_kind_name(*p.option_type)) + " '" + *id +
                          "'");
        out.parameters.emplace_back(EntityRef{*p.option_type, *id});
        break;
      }
      case ParameterType::text: {
        const auto* s = std::get_if<std::string>(&v);
        if (!s) return fail(FactErrorCode::type_mismatch, where + " must be a string");
        out.parameters.emplace_back(*s);
        break;
      }
    }
  }
  return out;
}

/// Validates a whole scenario, reporting every bad entry at once.
inline std::vector<CustomFactInstance> validate_scenario(const PolicyConfig& policy,
                                                         const std::vector<FactRequest>& entries) {
  std::vector<CustomFactInstance> out;
  std::vector<FactDiagnostic> errors;
  std::set<std::string> singles_seen;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const CustomFactDecl* decl = policy.find_fact(entries[i].fact);
    if (!decl) {
      errors.push_back({i, FactErrorCode::unknown_fact, "unknown fact '" + entries[i].fact + "'"});
      continue;
    }
    if (decl->single && !singles_seen.insert(decl->fact).second) {
      errors.push_back({i, FactErrorCode::duplicate_single,
                        decl->fact + " may appear at most once per scenario"});
      continue;
    }
    try {
      out.push_back(validate_custom_fact_values(*decl, entries[i].parameters, policy.registry, i));
    } catch (const CustomFactError& e) {
      errors.insert(errors.end(), e.diagnostics().begin(), e.diagnostics().end());
    }
  }
  if (!errors.empty()) throw CustomFactError(std::move(errors));
  return out;
}

}  // namespace gacm
