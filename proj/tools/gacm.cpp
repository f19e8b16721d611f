// gacm: validate, evaluate, export and serve category-based policies.
//
// Exit codes: 0 ok, 1 invalid input (policy, facts, failed check),
// 2 runtime failure.

#include <atomic>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "gacm/gacm.hpp"
#include "gacm/http_server.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kInvalid = 1;
constexpr int kRuntime = 2;

std::atomic<bool> g_reload{false};
std::atomic<bool> g_stop{false};
gacm::HttpServer* g_server = nullptr;

extern "C" void on_hup(int) { g_reload = true; }
extern "C" void on_term(int) {
  g_stop = true;
  if (g_server) g_server->stop();
}

struct ScenarioFlags {
  std::vector<std::string> facts;
  std::string priority = "permissions";
};

void add_scenario_flags(CLI::App* cmd, ScenarioFlags& flags) {
  cmd->add_option("--fact", flags.facts, "Custom fact FACT_ID=v1,v2 (repeatable)");
  cmd->add_option("--priority", flags.priority, "Conflict priority")
      ->check(CLI::IsMember({"permissions", "prohibitions"}));
}

/// "FACT_ID=v1,v2" -> request; values stay text, the validator reads
/// true/false for BOOLEAN parameters.
gacm::FactRequest parse_fact_flag(const std::string& text) {
  gacm::FactRequest req;
  auto eq = text.find('=');
  req.fact = text.substr(0, eq);
  if (eq == std::string::npos || eq + 1 == text.size()) return req;
  std::stringstream rest(text.substr(eq + 1));
  std::string item;
  while (std::getline(rest, item, ',')) req.parameters.emplace_back(item);
  if (text.back() == ',') req.parameters.emplace_back(std::string{});
  return req;
}

std::vector<gacm::CustomFactInstance> scenario(const gacm::PolicyConfig& policy,
                                               const ScenarioFlags& flags) {
  std::vector<gacm::FactRequest> reqs;
  for (const auto& f : flags.facts) reqs.push_back(parse_fact_flag(f));
  return gacm::validate_scenario(policy, reqs);
}

std::string chain_text(const std::vector<gacm::EntityId>& chain) {
  std::string out = "[";
  for (std::size_t i = 0; i < chain.size(); ++i) out += (i ? ", " : "") + chain[i];
  return out + "]";
}

void print_table(const gacm::ParSet& pars, std::ostream& os) {
  std::vector<std::vector<std::string>> rows{{"PRINCIPAL", "RESOURCE", "ACTION", "SIGN", "CHAIN"}};
  for (const auto& p : pars)
    rows.push_back({p.principal, p.permission.resource, p.permission.action,
                    std::string(gacm::to_string(p.sign)), chain_text(p.chain)});
  std::vector<std::size_t> width(rows[0].size(), 0);
  for (const auto& r : rows)
    for (std::size_t i = 0; i < r.size(); ++i) width[i] = std::max(width[i], r[i].size());
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (i + 1 == r.size()) os << r[i];
      else os << std::left << std::setw(static_cast<int>(width[i] + 2)) << r[i];
    }
    os << '\n';
  }
}

int cmd_validate(const std::string& dir, bool lenient) {
  auto policy = gacm::load_policy(dir, {lenient});
  std::cout << "ok: " << policy.registry.principals.size() << " principals, "
            << policy.registry.categories.size() << " categories, "
            << policy.registry.actions.size() << " actions, " << policy.registry.resources.size()
            << " resources, " << policy.relations.pcas.size() << " pcas, "
            << policy.relations.arcas.size() << " arcas, " << policy.relations.barcas.size()
            << " barcas, " << policy.custom_facts.size() << " custom facts\n";
  return kOk;
}

int cmd_eval(const std::string& dir, const ScenarioFlags& flags, const std::string& format) {
  auto policy = gacm::load_policy(dir);
  auto facts = scenario(policy, flags);
  auto result = gacm::evaluate(policy, facts, *gacm::parse_priority(flags.priority));
  if (format == "json") {
    gacm::ojson pars = gacm::ojson::array();
    for (const auto& p : result.pars) pars.push_back(gacm::to_json(p));
    gacm::ojson out{{"pars", pars}, {"stats", {{"firedCount", result.report.fired_count}}}};
    std::cout << out.dump(2) << '\n';
  } else {
    print_table(result.pars, std::cout);
  }
  return kOk;
}

int cmd_graph(const std::string& dir, const ScenarioFlags& flags, const std::string& format,
              const std::string& output) {
  auto policy = gacm::load_policy(dir);
  auto facts = scenario(policy, flags);
  auto result = gacm::evaluate(policy, facts, *gacm::parse_priority(flags.priority));
  auto graph = gacm::build_graph(result.pars, &policy.registry);
  const auto text = gacm::export_graph(graph, *gacm::parse_graph_format(format));
  if (output.empty() || output == "-") {
    std::cout << text;
  } else {
    std::ofstream out(output, std::ios::binary);
    if (!(out << text)) {
      std::cerr << "error: cannot write " << output << '\n';
      return kRuntime;
    }
  }
  return kOk;
}

int cmd_check(const std::string& dir, const ScenarioFlags& flags, std::size_t random_count,
              std::uint64_t seed) {
  bool ok = true;
  if (!dir.empty()) {
    auto policy = gacm::load_policy(dir);
    auto facts = scenario(policy, flags);
    for (auto priority : {gacm::Priority::permissions, gacm::Priority::prohibitions}) {
      auto report = gacm::check_equivalence(policy, facts, priority);
      std::cout << dir << " [" << gacm::to_string(priority) << "]: " << report.describe() << '\n';
      ok = ok && report.ok();
    }
  }
  if (random_count > 0) {
    std::mt19937_64 rng(seed);
    std::size_t failures = 0;
    for (std::size_t i = 0; i < random_count; ++i) {
      auto policy = gacm::random_policy(rng);
      for (auto priority : {gacm::Priority::permissions, gacm::Priority::prohibitions}) {
        auto report = gacm::check_equivalence(policy, {}, priority);
        if (!report.ok()) {
          if (failures++ < 5)
            std::cout << "random policy " << i << " [" << gacm::to_string(priority)
                      << "]: " << report.describe() << '\n';
        }
      }
    }
    std::cout << "random: " << random_count << " policies x 2 priorities, " << failures
              << " mismatches (seed " << seed << ")\n";
    ok = ok && failures == 0;
  }
  return ok ? kOk : kInvalid;
}

int cmd_serve(std::string dir, std::string addr, const std::string& cors_origin) {
  if (dir.empty())
    if (const char* env = std::getenv("GACM_POLICY_DIR")) dir = env;
  if (dir.empty()) {
    std::cerr << "error: no policy directory (argument or GACM_POLICY_DIR)\n";
    return kInvalid;
  }
  if (addr.empty()) {
    const char* env = std::getenv("GACM_ADDR");
    addr = env ? env : "127.0.0.1:8080";
  }
  auto [host, port] = gacm::parse_address(addr);
  auto service = gacm::Service::from_directory(dir);
  gacm::HttpOptions opts{host, port, std::nullopt};
  if (!cors_origin.empty()) opts.cors_origin = cors_origin;
  gacm::HttpServer server(*service, opts);
  const int bound = server.bind();

  g_server = &server;
  std::signal(SIGHUP, on_hup);
  std::signal(SIGINT, on_term);
  std::signal(SIGTERM, on_term);

  std::thread reloader([&] {
    while (!g_stop) {
      if (g_reload.exchange(false)) {
        try {
          service->reload();
          std::cerr << "reloaded " << dir << '\n';
        } catch (const std::exception& e) {
          std::cerr << "reload failed, keeping previous policy: " << e.what() << '\n';
        }
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(200));
    }
  });
  std::cerr << "serving " << dir << " on " << host << ':' << bound << '\n';
  server.listen();
  g_stop = true;
  reloader.join();
  g_server = nullptr;
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Category-based access control engine"};
  app.require_subcommand(1);

  std::string dir;
  bool lenient = false;
  auto* validate = app.add_subcommand("validate", "Load a policy directory and report every error");
  validate->add_option("dir", dir, "Policy directory")->required();
  validate->add_flag("--lenient", lenient, "Accept unknown fields");

  ScenarioFlags eval_flags;
  std::string eval_format = "table";
  auto* eval = app.add_subcommand("eval", "Evaluate a scenario and print its Pars");
  eval->add_option("dir", dir, "Policy directory")->required();
  add_scenario_flags(eval, eval_flags);
  eval->add_option("--format", eval_format, "Output format")
      ->check(CLI::IsMember({"table", "json"}));

  ScenarioFlags graph_flags;
  std::string graph_format = "node-link";
  std::string graph_out;
  auto* graph = app.add_subcommand("graph", "Export the policy graph of a scenario");
  graph->add_option("dir", dir, "Policy directory")->required();
  add_scenario_flags(graph, graph_flags);
  graph->add_option("--format", graph_format, "Export format")
      ->check(CLI::IsMember({"node-link", "dot"}));
  graph->add_option("-o,--output", graph_out, "Output file (default stdout)");

  ScenarioFlags check_flags;
  std::size_t random_count = 0;
  std::uint64_t seed = 1;
  auto* check = app.add_subcommand("check", "Cross-check the rule engine against the axiom");
  check->add_option("dir", dir, "Policy directory");
  add_scenario_flags(check, check_flags);
  check->add_option("--random", random_count, "Also check N random policies");
  check->add_option("--seed", seed, "Random policy seed");

  std::string addr;
  std::string cors_origin;
  auto* serve = app.add_subcommand("serve", "Serve the REST API");
  serve->add_option("dir", dir, "Policy directory (default $GACM_POLICY_DIR)");
  serve->add_option("--addr", addr, "host:port (default $GACM_ADDR or 127.0.0.1:8080)");
  serve->add_option("--cors-origin", cors_origin, "Allowed cross-origin caller");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kInvalid;
  }

  try {
    if (*validate) return cmd_validate(dir, lenient);
    if (*eval) return cmd_eval(dir, eval_flags, eval_format);
    if (*graph) return cmd_graph(dir, graph_flags, graph_format, graph_out);
    if (*check) {
      if (dir.empty() && random_count == 0) {
        std::cerr << "error: give a policy directory, --random N, or both\n";
        return kInvalid;
      }
      return cmd_check(dir, check_flags, random_count, seed);
    }
    if (*serve) return cmd_serve(dir, addr, cors_origin);
  } catch (const gacm::PolicyLoadError& e) {
    for (const auto& d : e.diagnostics()) std::cerr << d.to_string() << '\n';
    std::cerr << e.diagnostics().size() << " error(s)\n";
    return kInvalid;
  } catch (const gacm::CustomFactError& e) {
    for (const auto& d : e.diagnostics())
      std::cerr << "--fact #" << d.index << ": " << d.message << '\n';
    return kInvalid;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntime;
  }
  return kRuntime;
}
