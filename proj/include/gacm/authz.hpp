#pragma once

// Rule-free authorization: the permission/prohibition axiom evaluated by
// exhaustive enumeration, conflict removal and single-request decisions.
// Used on its own and as the oracle the rule engine is checked against.

#include <algorithm>
#include <compare>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "gacm/config.hpp"
#include "gacm/engine.hpp"
#include "gacm/hierarchy.hpp"
#include "gacm/model.hpp"

namespace gacm {

struct BaseRelations {
  std::set<Pca> pcas;
  std::set<Arca> arcas;
  std::set<Barca> barcas;
  CategoryHierarchy hierarchy;

  static BaseRelations from(const Relations& r, const CategoryHierarchy& h) {
    return {r.pcas, r.arcas, r.barcas, h};
  }
  friend bool operator==(const BaseRelations&, const BaseRelations&) = default;
};

struct Authorization {
  EntityId principal;
  EntityId action;
  EntityId resource;
  Sign sign = Sign::grant;
  friend auto operator<=>(const Authorization&, const Authorization&) = default;
};

using AuthorizationSet = std::set<Authorization>;

inline std::string to_string(const Authorization& a) {
  return "(" + a.principal + ", " + a.action + ", " + a.resource + ", " +
         std::string(to_string(a.sign)) + ")";
}

/// The grant and deny triples implied by the relations, with no conflict
/// handling: a triple may appear with both signs.
inline AuthorizationSet axiom_par(const BaseRelations& base) {
  AuthorizationSet out;
  const auto& h = base.hierarchy;
  for (const auto& pca : base.pcas) {
    for (const auto& arca : base.arcas)
      if (h.contains_or_equals(arca.category, pca.category))
        out.insert({pca.principal, arca.permission.action, arca.permission.resource, Sign::grant});
    for (const auto& barca : base.barcas)
      if (h.contains_or_equals(pca.category, barca.category))
        out.insert({pca.principal, barca.permission.action, barca.permission.resource, Sign::deny});
  }
  return out;
}

/// Copy of `base` with the side the priority sacrifices removed wherever an
/// Arca and a Barca on the same permission meet along the order: under
/// permission priority a Barca goes when an Arca on the same permission
/// sits at or above its category, under prohibition priority the Arca goes
/// when a Barca sits at or below it.
inline BaseRelations resolve_conflicts(const BaseRelations& base, Priority priority) {
  BaseRelations out = base;
  const auto& h = base.hierarchy;
  if (priority == Priority::permissions) {
    std::erase_if(out.barcas, [&](const Barca& b) {
      return std::any_of(base.arcas.begin(), base.arcas.end(), [&](const Arca& a) {
        return a.permission == b.permission && h.contains_or_equals(a.category, b.category);
      });
    });
  } else {
    std::erase_if(out.arcas, [&](const Arca& a) {
      return std::any_of(base.barcas.begin(), base.barcas.end(), [&](const Barca& b) {
        return a.permission == b.permission && h.contains_or_equals(a.category, b.category);
      });
    });
  }
  return out;
}

/// Throws UnknownIdError when an id is not known to the relations'
/// universe; pass the registry to check against the full policy.
inline Answer decide(const BaseRelations& base, const EntityId& principal, const EntityId& action,
                     const EntityId& resource, Priority priority) {
  const BaseRelations resolved = resolve_conflicts(base, priority);
  const auto& h = resolved.hierarchy;
  bool denied = false;
  for (const auto& pca : resolved.pcas) {
    if (pca.principal != principal) continue;
    for (const auto& arca : resolved.arcas)
      if (arca.permission.action == action && arca.permission.resource == resource &&
          h.contains_or_equals(arca.category, pca.category))
        return Answer::grant;
    for (const auto& barca : resolved.barcas)
      if (barca.permission.action == action && barca.permission.resource == resource &&
          h.contains_or_equals(pca.category, barca.category))
        denied = true;
  }
  return denied ? Answer::deny : Answer::undetermined;
}

inline Answer decide(const PolicyConfig& policy, const EntityId& principal, const EntityId& action,
                     const EntityId& resource, Priority priority) {
  policy.registry.require(EntityKind::principal, principal);
  policy.registry.require(EntityKind::action, action);
  policy.registry.require(EntityKind::resource, resource);
  return decide(BaseRelations::from(policy.relations, policy.hierarchy), principal, action, resource,
                priority);
}

/// Grant/deny projection of a ParSet.
inline AuthorizationSet project(const ParSet& pars) {
  AuthorizationSet out;
  for (const auto& p : pars)
    out.insert({p.principal, p.permission.action, p.permission.resource, p.sign});
  return out;
}

struct EquivalenceReport {
  AuthorizationSet engine_only;  // produced by the engine, not implied by the axiom
  AuthorizationSet oracle_only;  // implied by the axiom, missing from the engine
  Evaluation evaluation;

  bool ok() const { return engine_only.empty() && oracle_only.empty(); }

  std::string describe() const {
    if (ok()) return "ok";
    std::string out = "mismatch:";
    for (const auto& a : engine_only) out += "\n  engine only: " + to_string(a);
    for (const auto& a : oracle_only) out += "\n  oracle only: " + to_string(a);
    return out;
  }
};

/// Evaluates the scenario with the rule engine and compares the result with
/// the axiom applied to the relations the engine ended up with, after the
/// priority's conflict removal.
inline EquivalenceReport check_equivalence(const PolicyConfig& policy,
                                           const std::vector<CustomFactInstance>& facts,
                                           Priority priority, EvaluateOptions options = {}) {
  EquivalenceReport report;
  report.evaluation = evaluate(policy, facts, priority, options);
  const auto base =
      resolve_conflicts(BaseRelations::from(report.evaluation.relations, policy.hierarchy), priority);
  const AuthorizationSet expected = axiom_par(base);
  const AuthorizationSet actual = project(report.evaluation.pars);
  std::set_difference(actual.begin(), actual.end(), expected.begin(), expected.end(),
                      std::inserter(report.engine_only, report.engine_only.end()));
  std::set_difference(expected.begin(), expected.end(), actual.begin(), actual.end(),
                      std::inserter(report.oracle_only, report.oracle_only.end()));
  return report;
}

}  // namespace gacm
