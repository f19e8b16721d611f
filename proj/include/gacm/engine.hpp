#pragma once

// Forward-chaining session over a value-semantics working memory.
//
// Matching is nested iteration over working memory per pattern. The agenda
// is kept incrementally: inserting a fact joins it into every pattern
// position of its kind, deleting a fact invalidates the activations that
// used it (lazily, when they reach the top of the agenda) and re-derives
// activations for rules that have the deleted kind under `not`.
//
// Activations fire highest salience first, then in rule declaration order,
// then most recent tuple first. A rule never fires twice on the same tuple
// of fact handles; a fact deleted and inserted again gets a new handle and
// therefore a fresh chance to fire.

#include <algorithm>
#include <chrono>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "gacm/config.hpp"
#include "gacm/corpus_data.hpp"
#include "gacm/hierarchy.hpp"
#include "gacm/model.hpp"
#include "gacm/rulelang.hpp"
#include "gacm/schema.hpp"

namespace gacm {

enum class Priority { permissions, prohibitions };

inline std::string_view to_string(Priority p) {
  return p == Priority::permissions ? "permissions" : "prohibitions";
}

inline std::optional<Priority> parse_priority(std::string_view s) {
  if (s == "permissions") return Priority::permissions;
  if (s == "prohibitions") return Priority::prohibitions;
  return std::nullopt;
}

class BudgetExhausted : public std::runtime_error {
 public:
  BudgetExhausted(std::size_t budget, std::vector<std::string> last_rules)
      : std::runtime_error(message(budget, last_rules)), last_rules_(std::move(last_rules)) {}
  const std::vector<std::string>& last_rules() const noexcept { return last_rules_; }

 private:
  static std::string message(std::size_t budget, const std::vector<std::string>& rules) {
    std::string out = "firing budget of " + std::to_string(budget) + " exhausted; last rules:";
    for (const auto& r : rules) out += " [" + r + "]";
    return out;
  }
  std::vector<std::string> last_rules_;
};

/// Append-only, deduplicating result collector handed to rules as `pars`.
class ParSink {
 public:
  bool add(Par par) { return pars_.insert(std::move(par)).second; }
  const ParSet& pars() const { return pars_; }
  std::size_t size() const { return pars_.size(); }

 private:
  ParSet pars_;
};

struct FiringReport {
  std::size_t fired_count = 0;
  std::size_t iterations = 0;  // agenda pops, including stale activations discarded
};

struct FactHandle {
  std::size_t slot = 0;
  friend auto operator<=>(const FactHandle&, const FactHandle&) = default;
};

/// Runtime value of an expression or bound variable.
using Value = std::variant<std::monostate, bool, std::string, EntityRef, Permission, FactHandle>;

struct Activation {
  std::size_t rule = 0;  // index into Session::rules()
  std::vector<std::size_t> tuple;  // fact handles, one per positive pattern
  std::vector<Value> bindings;     // per rule variable slot
};

struct SessionOptions {
  std::size_t budget = 100000;
  /// Rebuild the whole agenda after every firing instead of maintaining it
  /// incrementally. Slow; used to cross-check the incremental matcher.
  bool naive_matching = false;
};

class Session {
 public:
  /// The schema, registry and hierarchy must outlive the session.
  Session(std::vector<rules::RuleAst> rules, const FactSchema& schema, const Registry& registry,
          const CategoryHierarchy& hierarchy, SessionOptions options = {})
      : rules_(std::move(rules)),
        schema_(schema),
        registry_(registry),
        hierarchy_(hierarchy),
        options_(options) {
    if (options_.budget == 0) throw std::invalid_argument("firing budget must be positive");
    for (std::size_t i = 0; i < rules_.size(); ++i) compiled_.push_back(compile(rules_[i]));
    for (std::size_t i = 0; i < compiled_.size(); ++i) add_rule_activations(i, std::nullopt);
  }

  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  const std::vector<rules::RuleAst>& rules() const { return rules_; }

  /// Adds a fact unless an equal one is present. Throws UnknownIdError when
  /// the fact references an unregistered entity.
  bool insert(const Fact& fact) {
    check_references(fact);
    if (alive_.contains(fact)) return false;
    const std::size_t slot = memory_.size();
    memory_.push_back({fact, true});
    alive_.emplace(fact, slot);
    by_kind_[fact_kind(fact)].push_back(slot);
    if (!options_.naive_matching) {
      const std::string kind = fact_kind(fact);
      for (std::size_t r = 0; r < compiled_.size(); ++r) {
        const auto& positives = compiled_[r].positive;
        for (std::size_t pos = 0; pos < positives.size(); ++pos)
          if (positives[pos].kind == kind) add_rule_activations(r, std::pair{pos, slot});
      }
    }
    return true;
  }

  /// Removes the equal fact if present.
  bool erase(const Fact& fact) {
    auto it = alive_.find(fact);
    if (it == alive_.end()) return false;
    const std::size_t slot = it->second;
    alive_.erase(it);
    memory_[slot].alive = false;
    if (!options_.naive_matching) {
      const std::string kind = fact_kind(fact);
      for (std::size_t r = 0; r < compiled_.size(); ++r)
        if (compiled_[r].negated_kinds.contains(kind)) add_rule_activations(r, std::nullopt);
    }
    return true;
  }

  bool contains(const Fact& fact) const { return alive_.contains(fact); }

  /// Live facts in insertion order.
  std::vector<Fact> facts() const {
    std::vector<Fact> out;
    for (const auto& s : memory_)
      if (s.alive) out.push_back(s.fact);
    return out;
  }

  Relations relations() const {
    Relations out;
    for (const auto& s : memory_) {
      if (!s.alive) continue;
      if (auto p = std::get_if<Pca>(&s.fact)) out.pcas.insert(*p);
      else if (auto a = std::get_if<Arca>(&s.fact)) out.arcas.insert(*a);
      else if (auto b = std::get_if<Barca>(&s.fact)) out.barcas.insert(*b);
    }
    return out;
  }

  const Fact& fact_at(std::size_t handle) const { return memory_.at(handle).fact; }

  /// Currently satisfied, not yet fired activations in firing order.
  std::vector<Activation> activations() {
    if (options_.naive_matching) rebuild_agenda();
    std::vector<Activation> out;
    for (const auto& a : agenda_)
      if (still_valid(a)) out.push_back(a);
    return out;
  }

  /// Every satisfied, not yet fired activation found by a full join over
  /// working memory, in firing order. Independent of the agenda.
  std::vector<Activation> enumerate_activations() const {
    std::set<Activation, AgendaOrder> all{AgendaOrder{this}};
    for (std::size_t r = 0; r < compiled_.size(); ++r)
      enumerate(r, std::nullopt, [&](Activation a) {
        if (!fired_.contains({a.rule, a.tuple})) all.insert(std::move(a));
      });
    return {all.begin(), all.end()};
  }

  ParSink& pars() { return sink_; }
  const ParSink& pars() const { return sink_; }

  /// Fires activations until none remain. Throws BudgetExhausted when the
  /// firing budget runs out first.
  FiringReport fire_until_quiescent() {
    if (options_.naive_matching) rebuild_agenda();
    while (!agenda_.empty()) {
      auto top = agenda_.begin();
      Activation act = *top;
      agenda_.erase(top);
      ++report_.iterations;
      if (!still_valid(act)) continue;
      if (report_.fired_count >= options_.budget) {
        std::vector<std::string> last(recent_.begin(), recent_.end());
        throw BudgetExhausted(options_.budget, std::move(last));
      }
      fired_.insert({act.rule, act.tuple});
      ++report_.fired_count;
      recent_.push_back(rules_[act.rule].name);
      if (recent_.size() > 10) recent_.pop_front();
      execute(act);
      if (options_.naive_matching) rebuild_agenda();
    }
    return report_;
  }

 private:
  // ---- compiled form -----------------------------------------------------

  struct CExpr {
    rules::Expr::Op op = rules::Expr::Op::literal;
    Value literal;
    int var = -1;
    std::vector<std::string> path;
    std::string kind;
    std::vector<CExpr> args;
  };

  struct CConstraint {
    enum class Type { compare, bind, contains } type = Type::compare;
    std::vector<std::string> field;
    rules::CompareOp op = rules::CompareOp::eq;
    int var = -1;
    std::vector<CExpr> operands;  // compare: 1, contains: 2
  };

  struct CPattern {
    std::string kind;
    int binding = -1;
    std::vector<CConstraint> constraints;
  };

  struct CAction {
    enum class Type { insert, erase, collect } type = Type::insert;
    CExpr expr;  // insert
    int var = -1;  // erase
    rules::ChainFunction chain = rules::ChainFunction::permission;
    std::vector<CExpr> par_args;  // collect: principal, from, to, permission
  };

  struct CRule {
    std::vector<CPattern> positive;
    std::vector<CPattern> negated;
    std::vector<CAction> actions;
    std::set<std::string> negated_kinds;
    std::size_t var_count = 0;
  };

  CRule compile(const rules::RuleAst& rule) const {
    CRule out;
    std::map<std::string, int> slots;
    auto slot = [&](const std::string& name) {
      auto [it, added] = slots.emplace(name, static_cast<int>(slots.size()));
      return it->second;
    };
    auto expr = [&](auto&& self, const rules::Expr& e) -> CExpr {
      CExpr c;
      c.op = e.op;
      c.path = e.path;
      c.kind = e.name;
      if (e.op == rules::Expr::Op::literal)
        c.literal = std::visit([](const auto& v) -> Value { return v; }, e.literal);
      if (e.op == rules::Expr::Op::var) c.var = slot(e.name);
      for (const auto& a : e.args) c.args.push_back(self(self, a));
      return c;
    };
    auto pattern = [&](const rules::Pattern& p) {
      CPattern cp;
      cp.kind = p.kind;
      for (const auto& c : p.constraints) {
        CConstraint cc;
        if (auto cmp = std::get_if<rules::FieldComparison>(&c)) {
          cc.type = CConstraint::Type::compare;
          cc.field = cmp->field;
          cc.op = cmp->op;
          cc.operands.push_back(expr(expr, cmp->operand));
        } else if (auto b = std::get_if<rules::FieldBinding>(&c)) {
          cc.type = CConstraint::Type::bind;
          cc.field = b->field;
          cc.var = slot(b->var);
        } else {
          const auto& call = std::get<rules::BuiltinCall>(c);
          cc.type = CConstraint::Type::contains;
          for (const auto& a : call.args) cc.operands.push_back(expr(expr, a));
        }
        cp.constraints.push_back(std::move(cc));
      }
      if (p.binding) cp.binding = slot(*p.binding);
      return cp;
    };
    for (const auto& p : rule.patterns) out.positive.push_back(pattern(p));
    for (const auto& p : rule.negated_patterns) {
      out.negated.push_back(pattern(p));
      out.negated_kinds.insert(p.kind);
    }
    for (const auto& a : rule.actions) {
      CAction ca;
      if (auto ins = std::get_if<rules::InsertAction>(&a)) {
        ca.type = CAction::Type::insert;
        ca.expr = expr(expr, ins->fact);
      } else if (auto del = std::get_if<rules::DeleteAction>(&a)) {
        ca.type = CAction::Type::erase;
        ca.var = slot(del->var);
      } else {
        const auto& par = std::get<rules::CollectParAction>(a);
        ca.type = CAction::Type::collect;
        ca.chain = par.chain;
        for (const auto* e : {&par.principal, &par.chain_from, &par.chain_to, &par.permission})
          ca.par_args.push_back(expr(expr, *e));
      }
      out.actions.push_back(std::move(ca));
    }
    out.var_count = slots.size();
    return out;
  }

  // ---- values ------------------------------------------------------------

  [[noreturn]] static void type_error(const std::string& what) {
    throw std::logic_error("rule evaluation: " + what);
  }

  Value entity_field(const EntityRef& e, const std::string& name) const {
    if (name == "id") return e.id;
    if (name == "name") return registry_.display_name(e.kind, e.id);
    if (name == "title" && e.kind == EntityKind::principal) {
      auto it = registry_.principals.find(e.id);
      return it == registry_.principals.end() ? std::string{} : it->second.title;
    }
    type_error("no field '" + name + "' on " + std::string(entity_kind_name(e.kind)));
  }

  static Value param_value(const ParamValue& p) {
    return std::visit([](const auto& v) -> Value { return v; }, p);
  }

  Value fact_field(const Fact& fact, const std::string& name) const {
    if (auto e = std::get_if<EntityRef>(&fact)) return entity_field(*e, name);
    if (auto p = std::get_if<Pca>(&fact)) {
      if (name == "principal") return EntityRef{EntityKind::principal, p->principal};
      if (name == "category") return EntityRef{EntityKind::category, p->category};
    } else if (auto a = std::get_if<Arca>(&fact)) {
      if (name == "category") return EntityRef{EntityKind::category, a->category};
      if (name == "permission") return a->permission;
    } else if (auto b = std::get_if<Barca>(&fact)) {
      if (name == "category") return EntityRef{EntityKind::category, b->category};
      if (name == "permission") return b->permission;
    } else {
      const auto& c = std::get<CustomFactInstance>(fact);
      const KindSpec* spec = schema_.find(custom_kind_name(c.fact_id));
      if (spec) {
        if (auto idx = spec->field_index(name); idx && *idx < c.parameters.size())
          return param_value(c.parameters[*idx]);
      }
    }
    type_error("no field '" + name + "' on " + fact_kind(fact));
  }

  Value value_field(const Value& v, const std::string& name) const {
    if (auto e = std::get_if<EntityRef>(&v)) return entity_field(*e, name);
    if (auto p = std::get_if<Permission>(&v)) {
      if (name == "action") return EntityRef{EntityKind::action, p->action};
      if (name == "resource") return EntityRef{EntityKind::resource, p->resource};
    }
    if (auto h = std::get_if<FactHandle>(&v)) return fact_field(memory_[h->slot].fact, name);
    type_error("no field '" + name + "'");
  }

  Value fact_path(const Fact& fact, const std::vector<std::string>& path) const {
    Value v = fact_field(fact, path.front());
    for (std::size_t i = 1; i < path.size(); ++i) v = value_field(v, path[i]);
    return v;
  }

  /// A bound variable holding a whole fact: entity facts are their reference.
  Value fact_value(std::size_t slot) const {
    if (auto e = std::get_if<EntityRef>(&memory_[slot].fact)) return *e;
    return FactHandle{slot};
  }

  Value eval(const CExpr& e, const std::vector<Value>& b, const Fact* current) const {
    using Op = rules::Expr::Op;
    switch (e.op) {
      case Op::literal: return e.literal;
      case Op::var: {
        Value v = b.at(static_cast<std::size_t>(e.var));
        for (const auto& seg : e.path) v = value_field(v, seg);
        return v;
      }
      case Op::field:
        if (!current) type_error("field reference outside a pattern");
        return fact_path(*current, e.path);
      case Op::category_by_id: {
        std::string id = std::get<std::string>(eval(e.args.at(0), b, current));
        registry_.require(EntityKind::category, id);
        return EntityRef{EntityKind::category, std::move(id)};
      }
      case Op::build_permission:
        return make_permission(id_of(eval(e.args.at(0), b, current)),
                               id_of(eval(e.args.at(1), b, current)), registry_);
      case Op::new_fact: type_error("fact constructor outside insert");
    }
    return std::monostate{};
  }

  static EntityId id_of(const Value& v) {
    if (auto s = std::get_if<std::string>(&v)) return *s;
    if (auto e = std::get_if<EntityRef>(&v)) return e->id;
    type_error("expected an id");
  }

  static bool values_equal(const Value& a, const Value& b) { return a == b; }

  Fact build_fact(const CExpr& e, const std::vector<Value>& b) const {
    std::vector<Value> args;
    for (const auto& a : e.args) args.push_back(eval(a, b, nullptr));
    if (e.kind == "Pca") return Pca{id_of(args.at(0)), id_of(args.at(1))};
    if (e.kind == "Arca") return Arca{id_of(args.at(0)), std::get<Permission>(args.at(1))};
    if (e.kind == "Barca") return Barca{id_of(args.at(0)), std::get<Permission>(args.at(1))};
    const KindSpec* spec = schema_.find(e.kind);
    if (!spec || spec->base != KindBase::custom) type_error("cannot construct " + e.kind);
    CustomFactInstance c{spec->decl->fact, {}};
    for (auto& v : args) {
      if (auto x = std::get_if<bool>(&v)) c.parameters.emplace_back(*x);
      else if (auto r = std::get_if<EntityRef>(&v)) c.parameters.emplace_back(*r);
      else if (auto s = std::get_if<std::string>(&v)) c.parameters.emplace_back(*s);
      else type_error("bad argument for " + e.kind);
    }
    return c;
  }

  // ---- matching ----------------------------------------------------------

  bool match(const CPattern& p, std::size_t slot, std::vector<Value>& b) const {
    const Fact& fact = memory_[slot].fact;
    for (const auto& c : p.constraints) {
      switch (c.type) {
        case CConstraint::Type::compare: {
          Value lhs = fact_path(fact, c.field);
          Value rhs = eval(c.operands[0], b, &fact);
          if (values_equal(lhs, rhs) != (c.op == rules::CompareOp::eq)) return false;
          break;
        }
        case CConstraint::Type::bind:
          b[static_cast<std::size_t>(c.var)] = fact_path(fact, c.field);
          break;
        case CConstraint::Type::contains: {
          EntityId general = id_of(eval(c.operands[0], b, &fact));
          EntityId specific = id_of(eval(c.operands[1], b, &fact));
          if (!hierarchy_.contains(general) || !hierarchy_.contains(specific)) return false;
          if (!hierarchy_.contains_or_equals(general, specific)) return false;
          break;
        }
      }
    }
    if (p.binding >= 0) b[static_cast<std::size_t>(p.binding)] = fact_value(slot);
    return true;
  }

  bool negations_hold(const CRule& rule, const std::vector<Value>& b) const {
    for (const auto& neg : rule.negated) {
      auto it = by_kind_.find(neg.kind);
      if (it == by_kind_.end()) continue;
      for (std::size_t slot : it->second) {
        if (!memory_[slot].alive) continue;
        std::vector<Value> scratch = b;
        if (match(neg, slot, scratch)) return false;
      }
    }
    return true;
  }

  template <typename Emit>
  void enumerate(std::size_t r, std::optional<std::pair<std::size_t, std::size_t>> fixed,
                 Emit&& emit) const {
    const CRule& rule = compiled_[r];
    std::vector<Value> b(rule.var_count);
    std::vector<std::size_t> tuple;
    auto step = [&](auto&& self, std::size_t pos) -> void {
      if (pos == rule.positive.size()) {
        if (negations_hold(rule, b)) emit(Activation{r, tuple, b});
        return;
      }
      const CPattern& p = rule.positive[pos];
      auto try_slot = [&](std::size_t slot) {
        if (!memory_[slot].alive) return;
        std::vector<Value> saved = b;
        if (match(p, slot, b)) {
          tuple.push_back(slot);
          self(self, pos + 1);
          tuple.pop_back();
        }
        b = std::move(saved);
      };
      if (fixed && fixed->first == pos) {
        try_slot(fixed->second);
        return;
      }
      auto it = by_kind_.find(p.kind);
      if (it == by_kind_.end()) return;
      for (std::size_t slot : it->second) try_slot(slot);
    };
    step(step, 0);
  }

  void add_rule_activations(std::size_t r, std::optional<std::pair<std::size_t, std::size_t>> fixed) {
    enumerate(r, fixed, [&](Activation a) {
      if (fired_.contains({a.rule, a.tuple})) return;
      agenda_.insert(std::move(a));
    });
  }

  void rebuild_agenda() {
    agenda_.clear();
    for (std::size_t r = 0; r < compiled_.size(); ++r) add_rule_activations(r, std::nullopt);
  }

  bool still_valid(const Activation& a) const {
    for (std::size_t slot : a.tuple)
      if (!memory_[slot].alive) return false;
    return negations_hold(compiled_[a.rule], a.bindings);
  }

  // ---- firing ------------------------------------------------------------

  void execute(const Activation& act) {
    const CRule& rule = compiled_[act.rule];
    for (const auto& action : rule.actions) {
      switch (action.type) {
        case CAction::Type::insert: {
          if (action.expr.op == rules::Expr::Op::new_fact) {
            insert(build_fact(action.expr, act.bindings));
          } else {
            Value v = eval(action.expr, act.bindings, nullptr);
            insert(memory_.at(std::get<FactHandle>(v).slot).fact);
          }
          break;
        }
        case CAction::Type::erase: {
          const Value& v = act.bindings.at(static_cast<std::size_t>(action.var));
          if (auto h = std::get_if<FactHandle>(&v)) erase(Fact{memory_[h->slot].fact});
          else if (auto e = std::get_if<EntityRef>(&v)) erase(Fact{*e});
          break;
        }
        case CAction::Type::collect: {
          const auto& args = action.par_args;
          EntityId principal = id_of(eval(args[0], act.bindings, nullptr));
          EntityId from = id_of(eval(args[1], act.bindings, nullptr));
          EntityId to = id_of(eval(args[2], act.bindings, nullptr));
          Permission perm = std::get<Permission>(eval(args[3], act.bindings, nullptr));
          auto chain = action.chain == rules::ChainFunction::permission
                           ? hierarchy_.permission_chain(from, to)
                           : hierarchy_.prohibition_chain(from, to);
          Sign sign = action.chain == rules::ChainFunction::permission ? Sign::grant : Sign::deny;
          sink_.add(Par{std::move(principal), std::move(chain), std::move(perm), sign});
          break;
        }
      }
    }
  }

  void check_references(const Fact& fact) const {
    struct Visitor {
      const Registry& reg;
      void operator()(const EntityRef& e) const { reg.require(e.kind, e.id); }
      void operator()(const Pca& p) const {
        reg.require(EntityKind::principal, p.principal);
        reg.require(EntityKind::category, p.category);
      }
      void perm(const EntityId& cat, const Permission& p) const {
        reg.require(EntityKind::category, cat);
        reg.require(EntityKind::action, p.action);
        reg.require(EntityKind::resource, p.resource);
      }
      void operator()(const Arca& a) const { perm(a.category, a.permission); }
      void operator()(const Barca& b) const { perm(b.category, b.permission); }
      void operator()(const CustomFactInstance& c) const {
        for (const auto& p : c.parameters)
          if (auto e = std::get_if<EntityRef>(&p)) reg.require(e->kind, e->id);
      }
    };
    std::visit(Visitor{registry_}, fact);
  }

  // ---- agenda ordering ---------------------------------------------------

  struct AgendaOrder {
    const Session* session;
    bool operator()(const Activation& a, const Activation& b) const {
      const auto& ra = session->rules_[a.rule];
      const auto& rb = session->rules_[b.rule];
      if (ra.salience != rb.salience) return ra.salience > rb.salience;
      if (a.rule != b.rule) return a.rule < b.rule;
      auto recency = [](std::vector<std::size_t> t) {
        std::sort(t.begin(), t.end(), std::greater<>());
        return t;
      };
      auto ka = recency(a.tuple), kb = recency(b.tuple);
      if (ka != kb) return ka > kb;
      return a.tuple < b.tuple;
    }
  };

  struct Slot {
    Fact fact;
    bool alive = true;
  };

  std::vector<rules::RuleAst> rules_;
  std::vector<CRule> compiled_;
  const FactSchema& schema_;
  const Registry& registry_;
  const CategoryHierarchy& hierarchy_;
  SessionOptions options_;

  std::vector<Slot> memory_;
  std::map<Fact, std::size_t> alive_;
  std::map<std::string, std::vector<std::size_t>> by_kind_;
  std::set<Activation, AgendaOrder> agenda_{AgendaOrder{this}};
  std::set<std::pair<std::size_t, std::vector<std::size_t>>> fired_;
  std::deque<std::string> recent_;
  FiringReport report_;
  ParSink sink_;
};

// ---------------------------------------------------------------------------
// Bundled rule corpus

enum class CorpusScope { always, permission_priority, prohibition_priority };

struct CorpusFile {
  std::string_view name;
  std::string_view source;
  std::vector<std::string_view> required_facts;  // custom facts the rules match on
  CorpusScope scope = CorpusScope::always;
};

/// The bundled files in load order.
inline const std::vector<CorpusFile>& bundled_corpus() {
  static const std::vector<CorpusFile> files{
      {"add-custom-pcas", corpus::add_custom_pcas, {"SET_PCA"}, CorpusScope::always},
      {"critical-state-read-all", corpus::critical_state_read_all, {"CRITICAL_STATE"},
       CorpusScope::always},
      {"critical-state-remove-read-prohibitions", corpus::critical_state_remove_read_prohibitions,
       {"CRITICAL_STATE"}, CorpusScope::prohibition_priority},
      {"sealed-and-locked", corpus::sealed_and_locked, {"SEALED_RESOURCE"}, CorpusScope::always},
      {"sealed-break-the-glass", corpus::sealed_break_the_glass,
       {"SEALED_RESOURCE", "BREAK_THE_GLASS"}, CorpusScope::always},
      {"responsible-physician", corpus::responsible_physician, {"RESPONSIBLE_PHYSICIAN"},
       CorpusScope::always},
      {"conflicts-remove-barca", corpus::conflicts_remove_barca, {},
       CorpusScope::permission_priority},
      {"conflicts-remove-arca", corpus::conflicts_remove_arca, {},
       CorpusScope::prohibition_priority},
      {"pars-permissions", corpus::pars_permissions, {}, CorpusScope::always},
      {"pars-prohibitions", corpus::pars_prohibitions, {}, CorpusScope::always},
  };
  return files;
}

struct CorpusOptions {
  Priority priority = Priority::permissions;
  bool conflict_rule = true;  // false drops the conflict-resolution file (fault injection)
};

class CorpusError : public std::runtime_error {
 public:
  CorpusError(std::string file, const rules::RuleParseError& e)
      : std::runtime_error(file + ".drl:" + e.what()), file_(std::move(file)) {}
  const std::string& file() const noexcept { return file_; }

 private:
  std::string file_;
};

/// Rules that apply to a policy declaring `decls`. Files matching custom
/// facts the policy does not declare are left out, since they could never
/// fire.
inline std::vector<rules::RuleAst> load_corpus(const FactSchema& schema,
                                               const std::vector<CustomFactDecl>& decls,
                                               CorpusOptions options = {}) {
  std::vector<rules::RuleAst> out;
  for (const auto& file : bundled_corpus()) {
    if (file.scope == CorpusScope::permission_priority && options.priority != Priority::permissions)
      continue;
    if (file.scope == CorpusScope::prohibition_priority && options.priority != Priority::prohibitions)
      continue;
    if (!options.conflict_rule &&
        (file.name == "conflicts-remove-barca" || file.name == "conflicts-remove-arca"))
      continue;
    bool declared = std::all_of(file.required_facts.begin(), file.required_facts.end(),
                                [&](std::string_view id) {
                                  return std::any_of(decls.begin(), decls.end(),
                                                     [&](const CustomFactDecl& d) { return d.fact == id; });
                                });
    if (!declared) continue;
    try {
      auto parsed = rules::parse_rules(file.source, schema);
      out.insert(out.end(), std::make_move_iterator(parsed.begin()),
                 std::make_move_iterator(parsed.end()));
    } catch (const rules::RuleParseError& e) {
      throw CorpusError(std::string(file.name), e);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation

struct EvaluateOptions {
  std::size_t budget = 100000;
  bool conflict_rule = true;
  bool naive_matching = false;
};

struct Evaluation {
  ParSet pars;
  Relations relations;  // Pca/Arca/Barca left in working memory at quiescence
  FiringReport report;
};

/// Runs one fresh session: entities, relations and the scenario's custom
/// facts are inserted, the corpus fires to quiescence and the collected
/// Pars are returned.
inline Evaluation evaluate(const PolicyConfig& policy, const std::vector<CustomFactInstance>& facts,
                           Priority priority, EvaluateOptions options = {}) {
  const FactSchema schema = FactSchema::with_custom(policy.custom_facts);
  auto corpus = load_corpus(schema, policy.custom_facts, {priority, options.conflict_rule});
  Session session(std::move(corpus), schema, policy.registry, policy.hierarchy,
                  SessionOptions{options.budget, options.naive_matching});

  std::set<std::string> singles;
  for (const auto& f : facts) {
    const CustomFactDecl* decl = policy.find_fact(f.fact_id);
    if (!decl)
      throw CustomFactError({{0, FactErrorCode::unknown_fact, "unknown fact '" + f.fact_id + "'"}});
    if (decl->single && !singles.insert(f.fact_id).second)
      throw CustomFactError({{0, FactErrorCode::duplicate_single,
                              f.fact_id + " may appear at most once per scenario"}});
  }

  for (const auto& [id, _] : policy.registry.principals)
    session.insert(EntityRef{EntityKind::principal, id});
  for (const auto& [id, _] : policy.registry.categories)
    session.insert(EntityRef{EntityKind::category, id});
  for (const auto& [id, _] : policy.registry.actions) session.insert(EntityRef{EntityKind::action, id});
  for (const auto& [id, _] : policy.registry.resources)
    session.insert(EntityRef{EntityKind::resource, id});
  for (const auto& p : policy.relations.pcas) session.insert(p);
  for (const auto& a : policy.relations.arcas) session.insert(a);
  for (const auto& b : policy.relations.barcas) session.insert(b);
  for (const auto& f : facts) session.insert(f);

  FiringReport report = session.fire_until_quiescent();
  return Evaluation{session.pars().pars(), session.relations(), report};
}

}  // namespace gacm
