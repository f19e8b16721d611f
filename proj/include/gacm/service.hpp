#pragma once

// REST facade. `Service::handle` maps (method, path, body) to a response
// and is what the tests drive; `serve` binds it to cpp-httplib.
//
//   GET  /sites /principals /categories /actions /resources   (and /{id})
//   GET  /customFacts
//   GET  /customFacts/{factId}/params/{rank}/options
//   POST /pars
//
// Each /pars request runs its own session against the policy snapshot that
// was current when the request arrived.

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "gacm/config.hpp"
#include "gacm/engine.hpp"
#include "gacm/graph.hpp"
#include "gacm/model.hpp"

namespace gacm {

using ojson = nlohmann::ordered_json;

struct HttpResponse {
  int status = 200;
  std::string body;
  std::map<std::string, std::string> headers;
};

// ---- serialization --------------------------------------------------------

inline ojson to_json(const Principal& p) { return {{"id", p.id}, {"name", p.name}, {"title", p.title}}; }

template <EntityKind K>
ojson to_json(const NamedEntity<K>& e) {
  return {{"id", e.id}, {"name", e.name}};
}

inline ojson to_json(const CustomFactDecl& d) {
  ojson params = ojson::array();
  for (const auto& p : d.parameters) {
    ojson j{{"type", std::string(to_string(p.type))}, {"rank", p.rank}, {"label", p.label},
            {"description", p.description}};
    if (p.option_type) j["optionType"] = std::string(option_type_name(*p.option_type));
    params.push_back(std::move(j));
  }
  return {{"fact", d.fact}, {"description", d.description}, {"label", d.label},
          {"single", d.single}, {"parameters", std::move(params)}};
}

inline ojson to_json(const Par& p) {
  return {{"principal", p.principal}, {"chain", p.chain},
          {"permission", {{"action", p.permission.action}, {"resource", p.permission.resource}}},
          {"sign", std::string(to_string(p.sign))}};
}

inline ojson error_body(std::string_view code, std::string_view message, ojson details = nullptr) {
  return {{"code", code}, {"message", message}, {"details", std::move(details)}};
}

inline HttpResponse json_response(int status, const ojson& body) {
  return {status, body.dump(), {{"Content-Type", "application/json"}}};
}

inline HttpResponse error_response(int status, std::string_view code, std::string_view message,
                                   ojson details = nullptr) {
  return json_response(status, error_body(code, message, std::move(details)));
}

/// Parses a /pars body: either a bare array of {fact, parameters} entries or
/// {"customFacts": [...], "priority": "permissions" | "prohibitions"}.
struct ParsRequest {
  std::vector<FactRequest> custom_facts;
  Priority priority = Priority::permissions;
};

class RequestError : public std::runtime_error {
 public:
  RequestError(std::string msg, ojson details)
      : std::runtime_error(std::move(msg)), details_(std::move(details)) {}
  const ojson& details() const noexcept { return details_; }

 private:
  ojson details_;
};

inline ParsRequest parse_pars_request(std::string_view body) {
  nlohmann::json doc;
  if (body.find_first_not_of(" \t\r\n") == std::string_view::npos) {
    doc = nlohmann::json::array();
  } else {
    try {
      doc = nlohmann::json::parse(body);
    } catch (const nlohmann::json::parse_error& e) {
      throw RequestError("malformed JSON body", {{"error", e.what()}});
    }
  }
  ParsRequest req;
  const nlohmann::json* entries = &doc;
  if (doc.is_object()) {
    for (const auto& [key, _] : doc.items())
      if (key != "customFacts" && key != "priority")
        throw RequestError("unknown field '" + key + "'", nullptr);
    if (auto it = doc.find("priority"); it != doc.end()) {
      auto p = it->is_string() ? parse_priority(it->get<std::string>()) : std::nullopt;
      if (!p) throw RequestError("priority must be \"permissions\" or \"prohibitions\"", nullptr);
      req.priority = *p;
    }
    static const nlohmann::json empty = nlohmann::json::array();
    auto it = doc.find("customFacts");
    entries = it == doc.end() ? &empty : &*it;
  }
  if (!entries->is_array()) throw RequestError("expected an array of custom facts", nullptr);

  ojson errors = ojson::array();
  for (std::size_t i = 0; i < entries->size(); ++i) {
    const auto& e = (*entries)[i];
    auto bad = [&](std::string msg) {
      errors.push_back({{"index", i}, {"code", "invalid_entry"}, {"message", std::move(msg)}});
    };
    if (!e.is_object() || !e.contains("fact") || !e["fact"].is_string()) {
      bad("entry must be an object with a string 'fact'");
      continue;
    }
    FactRequest fr{e["fact"].get<std::string>(), {}};
    bool ok = true;
    if (auto params = e.find("parameters"); params != e.end()) {
      if (!params->is_array()) {
        bad("'parameters' must be an array");
        continue;
      }
      for (const auto& v : *params) {
        if (v.is_boolean()) fr.parameters.emplace_back(v.get<bool>());
        else if (v.is_string()) fr.parameters.emplace_back(v.get<std::string>());
        else {
          bad("parameter values must be strings or booleans");
          ok = false;
          break;
        }
      }
    }
    for (const auto& [key, _] : e.items())
      if (key != "fact" && key != "parameters") {
        bad("unknown field '" + key + "'");
        ok = false;
      }
    if (ok) req.custom_facts.push_back(std::move(fr));
  }
  if (!errors.empty()) throw RequestError("invalid custom fact entries", errors);
  return req;
}

// ---- service ----------------------------------------------------------------

struct ServiceOptions {
  std::size_t budget = 100000;
};

class Service {
 public:
  explicit Service(PolicyConfig policy, ServiceOptions options = {})
      : snapshot_(std::make_shared<const PolicyConfig>(std::move(policy))), options_(options) {}

  /// Loads `dir` and serves it; reload() re-reads the same directory.
  static std::unique_ptr<Service> from_directory(const std::filesystem::path& dir,
                                                 ServiceOptions options = {}) {
    auto svc = std::make_unique<Service>(load_policy(dir), options);
    svc->dir_ = dir;
    return svc;
  }

  std::shared_ptr<const PolicyConfig> snapshot() const {
    std::lock_guard lock(mutex_);
    return snapshot_;
  }

  /// Swaps in a new policy; requests already running keep the old one.
  void replace(PolicyConfig policy) {
    auto next = std::make_shared<const PolicyConfig>(std::move(policy));
    std::lock_guard lock(mutex_);
    snapshot_ = std::move(next);
  }

  /// Re-reads the policy directory. Throws PolicyLoadError and keeps the
  /// current snapshot when the directory no longer validates.
  void reload() {
    if (!dir_) throw std::logic_error("service was not loaded from a directory");
    replace(load_policy(*dir_));
  }

  HttpResponse handle(std::string_view method, std::string_view target, std::string_view body = {}) const {
    const auto policy = snapshot();
    std::string_view path = target.substr(0, target.find('?'));
    std::vector<std::string> seg;
    for (std::size_t pos = 0; pos < path.size();) {
      std::size_t next = path.find('/', pos);
      if (next == std::string_view::npos) next = path.size();
      if (next > pos) seg.emplace_back(path.substr(pos, next - pos));
      pos = next + 1;
    }

    if (seg.size() == 1 && seg[0] == "pars") {
      if (method != "POST") return not_allowed("POST");
      return compute_pars(*policy, body);
    }
    if (method != "GET") {
      if (route_exists(seg)) return not_allowed("GET");
      return not_found(path);
    }
    if (seg.empty()) return not_found(path);

    if (auto kind = collection_kind(seg[0])) {
      if (seg.size() == 1) return json_response(200, list_entities(*policy, *kind));
      if (seg.size() == 2) {
        auto one = find_entity(*policy, *kind, seg[1]);
        if (!one)
          return error_response(404, "not_found",
                                "no " + std::string(entity_kind_name(*kind)) + " '" + seg[1] + "'");
        return json_response(200, *one);
      }
      return not_found(path);
    }
    if (seg[0] == "customFacts") {
      if (seg.size() == 1) {
        ojson out = ojson::array();
        for (const auto& d : policy->custom_facts) out.push_back(to_json(d));
        return json_response(200, out);
      }
      if (seg.size() == 5 && seg[2] == "params" && seg[4] == "options")
        return param_options(*policy, seg[1], seg[3]);
    }
    return not_found(path);
  }

  static ojson list_entities(const PolicyConfig& policy, EntityKind kind) {
    ojson out = ojson::array();
    auto add = [&](const auto& table) {
      for (const auto& [_, e] : table) out.push_back(to_json(e));
    };
    switch (kind) {
      case EntityKind::principal: add(policy.registry.principals); break;
      case EntityKind::category: add(policy.registry.categories); break;
      case EntityKind::action: add(policy.registry.actions); break;
      case EntityKind::resource: add(policy.registry.resources); break;
      case EntityKind::site: add(policy.registry.sites); break;
    }
    return out;
  }

 private:
  static std::optional<EntityKind> collection_kind(std::string_view s) {
    if (s == "sites") return EntityKind::site;
    if (s == "principals") return EntityKind::principal;
    if (s == "categories") return EntityKind::category;
    if (s == "actions") return EntityKind::action;
    if (s == "resources") return EntityKind::resource;
    return std::nullopt;
  }

  static bool route_exists(const std::vector<std::string>& seg) {
    if (seg.empty()) return false;
    if (collection_kind(seg[0])) return seg.size() <= 2;
    if (seg[0] == "customFacts")
      return seg.size() == 1 || (seg.size() == 5 && seg[2] == "params" && seg[4] == "options");
    return false;
  }

  static std::optional<ojson> find_entity(const PolicyConfig& policy, EntityKind kind,
                                          const std::string& id) {
    auto pick = [&](const auto& table) -> std::optional<ojson> {
      auto it = table.find(id);
      if (it == table.end()) return std::nullopt;
      return to_json(it->second);
    };
    switch (kind) {
      case EntityKind::principal: return pick(policy.registry.principals);
      case EntityKind::category: return pick(policy.registry.categories);
      case EntityKind::action: return pick(policy.registry.actions);
      case EntityKind::resource: return pick(policy.registry.resources);
      case EntityKind::site: return pick(policy.registry.sites);
    }
    return std::nullopt;
  }

  static HttpResponse param_options(const PolicyConfig& policy, const std::string& fact,
                                    const std::string& rank_text) {
    const CustomFactDecl* decl = policy.find_fact(fact);
    if (!decl) return error_response(404, "not_found", "no custom fact '" + fact + "'");
    std::size_t rank = 0;
    if (rank_text.empty() || rank_text.find_first_not_of("0123456789") != std::string::npos ||
        rank_text.size() > 9 || (rank = std::stoul(rank_text)) >= decl->parameters.size())
      return error_response(404, "not_found", fact + " has no parameter of rank " + rank_text);
    const ParameterDecl& p = decl->parameters[rank];
    if (p.type != ParameterType::selection)
      return error_response(400, "invalid_parameter",
                            fact + " parameter " + rank_text + " is " +
                                std::string(to_string(p.type)) + ", not SELECTION");
    ojson out = ojson::array();
    for (const auto& id : policy.registry.ids(*p.option_type))
      out.push_back({{"id", id}, {"label", policy.registry.display_name(*p.option_type, id)}});
    return json_response(200, out);
  }

  HttpResponse compute_pars(const PolicyConfig& policy, std::string_view body) const {
    const auto start = std::chrono::steady_clock::now();
    ParsRequest req;
    std::vector<CustomFactInstance> facts;
    try {
      req = parse_pars_request(body);
      facts = validate_scenario(policy, req.custom_facts);
    } catch (const RequestError& e) {
      return error_response(400, "invalid_request", e.what(), e.details());
    } catch (const CustomFactError& e) {
      ojson details = ojson::array();
      for (const auto& d : e.diagnostics())
        details.push_back({{"index", d.index}, {"code", std::string(to_string(d.code))},
                           {"message", d.message}});
      return error_response(400, "invalid_custom_facts", e.what(), details);
    }

    Evaluation result;
    try {
      result = evaluate(policy, facts, req.priority, {options_.budget, true, false});
    } catch (const BudgetExhausted& e) {
      return error_response(500, "budget_exhausted", e.what(), {{"lastRules", e.last_rules()}});
    } catch (const std::exception& e) {
      return error_response(500, "evaluation_failed", e.what());
    }

    ojson pars = ojson::array();
    for (const auto& p : result.pars) pars.push_back(to_json(p));
    ojson out{{"pars", std::move(pars)},
              {"graph", to_node_link(build_graph(result.pars, &policy.registry))},
              {"stats", {{"firedCount", result.report.fired_count}}}};
    auto response = json_response(200, out);
    const auto ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start);
    response.headers["X-Elapsed-Ms"] = std::to_string(ms.count());
    return response;
  }

  static HttpResponse not_found(std::string_view path) {
    return error_response(404, "not_found", "no route for '" + std::string(path) + "'");
  }

  static HttpResponse not_allowed(std::string_view allow) {
    auto r = error_response(405, "method_not_allowed", "use " + std::string(allow));
    r.headers["Allow"] = std::string(allow);
    return r;
  }

  mutable std::mutex mutex_;
  std::shared_ptr<const PolicyConfig> snapshot_;
  ServiceOptions options_;
  std::optional<std::filesystem::path> dir_;
};

}  // namespace gacm
