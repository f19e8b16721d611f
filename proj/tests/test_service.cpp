#include <gtest/gtest.h>

#include <future>
#include <thread>

#include "gacm/http_server.hpp"
#include "test_support.hpp"

using namespace gacm;
using json = nlohmann::ordered_json;
using testing_support::brute_axiom;

namespace {

class ServiceTest : public ::testing::Test {
 protected:
  Service svc{testing_support::load_fixture("hospital")};

  json get(const std::string& path, int expect = 200) {
    auto r = svc.handle("GET", path);
    EXPECT_EQ(r.status, expect) << path << ": " << r.body;
    EXPECT_EQ(r.headers["Content-Type"], "application/json");
    return json::parse(r.body);
  }

  HttpResponse post(const std::string& body) { return svc.handle("POST", "/pars", body); }
};

std::set<testing_support::Triple> triples_of(const json& pars) {
  std::set<testing_support::Triple> out;
  for (const auto& p : pars)
    out.insert({p["principal"], p["permission"]["action"], p["permission"]["resource"],
                p["sign"] == "grant" ? Sign::grant : Sign::deny});
  return out;
}

}  // namespace

TEST_F(ServiceTest, EntityCollections) {
  auto principals = get("/principals");
  ASSERT_EQ(principals.size(), 7u);
  EXPECT_EQ(principals[0], (json{{"id", "000001"}, {"name", "P. Cox"}, {"title", "MD"}}));
  EXPECT_EQ(get("/categories").size(), 11u);
  EXPECT_EQ(get("/actions").size(), 3u);
  EXPECT_EQ(get("/resources").size(), 3u);
  EXPECT_EQ(get("/sites").size(), 1u);
  EXPECT_EQ(get("/principals/000001")["name"], "P. Cox");
  EXPECT_EQ(get("/categories/read_all")["id"], "read_all");
  EXPECT_EQ(get("/principals/zzz", 404)["code"], "not_found");
  EXPECT_EQ(get("/resources/record?x=1")["id"], "record");
}

TEST_F(ServiceTest, CollectionsAreOrderedById) {
  for (const char* path : {"/principals", "/categories", "/actions", "/resources"}) {
    auto items = get(path);
    for (std::size_t i = 1; i < items.size(); ++i)
      EXPECT_LT(items[i - 1]["id"].get<std::string>(), items[i]["id"].get<std::string>());
  }
}

TEST(Service, EmptyPolicy) {
  Service svc(testing_support::load_fixture("empty"));
  EXPECT_EQ(svc.handle("GET", "/actions").body, "[]");
  EXPECT_EQ(svc.handle("GET", "/customFacts").body, "[]");
  auto r = svc.handle("POST", "/pars", "[]");
  EXPECT_EQ(r.status, 200);
  auto body = json::parse(r.body);
  EXPECT_TRUE(body["pars"].empty());
  EXPECT_TRUE(body["graph"]["nodes"].empty());
}

TEST_F(ServiceTest, CustomFacts) {
  auto facts = get("/customFacts");
  ASSERT_EQ(facts.size(), 5u);
  std::vector<std::string> ids;
  for (const auto& f : facts) ids.push_back(f["fact"]);
  EXPECT_TRUE(std::is_sorted(ids.begin(), ids.end()));
  const auto& rp = *std::find_if(facts.begin(), facts.end(),
                                 [](const json& f) { return f["fact"] == "RESPONSIBLE_PHYSICIAN"; });
  ASSERT_EQ(rp["parameters"].size(), 1u);
  EXPECT_EQ(rp["parameters"][0]["type"], "SELECTION");
  EXPECT_EQ(rp["parameters"][0]["rank"], 0);
  EXPECT_EQ(rp["parameters"][0]["optionType"], "PRINCIPAL");
  EXPECT_EQ(rp["single"], false);
}

TEST_F(ServiceTest, ParameterOptions) {
  auto opts = get("/customFacts/RESPONSIBLE_PHYSICIAN/params/0/options");
  ASSERT_EQ(opts.size(), 7u);
  EXPECT_EQ(opts[0], (json{{"id", "000001"}, {"label", "P. Cox"}}));
  EXPECT_EQ(get("/customFacts/SEALED_RESOURCE/params/0/options").size(), 3u);
  EXPECT_EQ(get("/customFacts/NOPE/params/0/options", 404)["code"], "not_found");
  EXPECT_EQ(get("/customFacts/SEALED_RESOURCE/params/7/options", 404)["code"], "not_found");
  EXPECT_EQ(get("/customFacts/SEALED_RESOURCE/params/x/options", 404)["code"], "not_found");
  EXPECT_EQ(get("/customFacts/SEALED_RESOURCE/params/1/options", 400)["code"], "invalid_parameter");
}

TEST_F(ServiceTest, UnknownRoutesAndMethods) {
  EXPECT_EQ(get("/nothing", 404)["code"], "not_found");
  EXPECT_EQ(get("/", 404)["code"], "not_found");
  auto r = svc.handle("GET", "/pars");
  EXPECT_EQ(r.status, 405);
  EXPECT_EQ(r.headers["Allow"], "POST");
  EXPECT_EQ(svc.handle("POST", "/principals").status, 405);
}

TEST_F(ServiceTest, StaticParsMatchTheAxiom) {
  auto policy = svc.snapshot();
  for (const char* body : {"[]", "", "{}", R"({"customFacts": []})"}) {
    auto r = post(body);
    ASSERT_EQ(r.status, 200) << r.body;
    auto doc = json::parse(r.body);
    EXPECT_EQ(triples_of(doc["pars"]),
              brute_axiom(policy->relations, policy->hierarchy, Priority::permissions));
    EXPECT_TRUE(r.headers.contains("X-Elapsed-Ms"));
    EXPECT_TRUE(doc["stats"]["firedCount"].is_number_unsigned());
  }
}

TEST_F(ServiceTest, ParsShape) {
  auto doc = json::parse(post("[]").body);
  std::vector<std::string> keys;
  for (const auto& [k, _] : doc.items()) keys.push_back(k);
  EXPECT_EQ(keys, (std::vector<std::string>{"pars", "graph", "stats"}));
  const auto& first = doc["pars"][0];
  EXPECT_TRUE(first["principal"].is_string());
  EXPECT_TRUE(first["chain"].is_array());
  EXPECT_TRUE(first["permission"]["action"].is_string());
  EXPECT_TRUE(first["permission"]["resource"].is_string());
  EXPECT_TRUE(first["sign"] == "grant" || first["sign"] == "deny");
  EXPECT_TRUE(doc["graph"]["nodes"][0].contains("nodeType"));
  EXPECT_TRUE(doc["graph"]["links"][0].contains("edgeType"));
}

TEST_F(ServiceTest, ResponseGraphIsTheGraphOfThePars) {
  auto policy = svc.snapshot();
  auto result = evaluate(*policy, {}, Priority::permissions);
  auto doc = json::parse(post("[]").body);
  EXPECT_EQ(doc["graph"].dump(), to_node_link(build_graph(result.pars, &policy->registry)).dump());
}

TEST_F(ServiceTest, CriticalStateIsASuperset) {
  auto base = triples_of(json::parse(post("[]").body)["pars"]);
  auto r = post(R"([{"fact": "CRITICAL_STATE", "parameters": [true]}])");
  ASSERT_EQ(r.status, 200) << r.body;
  auto doc = json::parse(r.body);
  auto with = triples_of(doc["pars"]);
  EXPECT_TRUE(std::includes(with.begin(), with.end(), base.begin(), base.end()));
  auto policy = svc.snapshot();
  for (const auto& p : doc["pars"]) {
    if (p["chain"] != json::array({"read_all"})) continue;
    EXPECT_EQ(p["permission"]["action"], "read");
    auto pid = p["principal"].get<std::string>();
    bool clinician = false;
    for (const auto& pca : policy->relations.pcas)
      if (pca.principal == pid && policy->hierarchy.contains_or_equals("clinician", pca.category))
        clinician = true;
    EXPECT_TRUE(clinician) << pid;
  }
}

TEST_F(ServiceTest, PriorityField) {
  Service conflict(testing_support::load_fixture("conflict"));
  auto perm = json::parse(conflict.handle("POST", "/pars", R"({"priority": "permissions"})").body);
  auto proh = json::parse(conflict.handle("POST", "/pars", R"({"priority": "prohibitions"})").body);
  ASSERT_EQ(perm["pars"].size(), 1u);
  ASSERT_EQ(proh["pars"].size(), 1u);
  EXPECT_EQ(perm["pars"][0]["sign"], "grant");
  EXPECT_EQ(proh["pars"][0]["sign"], "deny");
  EXPECT_EQ(conflict.handle("POST", "/pars", R"({"priority": "both"})").status, 400);
}

TEST_F(ServiceTest, ValidationErrorsCarryEntryIndexes) {
  auto r = post(R"([{"fact": "CRITICAL_STATE", "parameters": [true]}, {"fact": "NO_SUCH", "parameters": []}])");
  EXPECT_EQ(r.status, 400);
  auto doc = json::parse(r.body);
  EXPECT_EQ(doc["code"], "invalid_custom_facts");
  ASSERT_EQ(doc["details"].size(), 1u);
  EXPECT_EQ(doc["details"][0]["index"], 1);
  EXPECT_EQ(doc["details"][0]["code"], "unknown_fact");

  doc = json::parse(post(R"([{"fact": "SEALED_RESOURCE", "parameters": ["record", 3]}])").body);
  EXPECT_EQ(doc["code"], "invalid_request");
  EXPECT_EQ(doc["details"][0]["index"], 0);

  doc = json::parse(post(R"([{"fact": 12}])").body);
  EXPECT_EQ(doc["details"][0]["index"], 0);

  EXPECT_EQ(post("[{").status, 400);
  EXPECT_EQ(post(R"({"facts": []})").status, 400);
  EXPECT_EQ(post("42").status, 400);
  EXPECT_EQ(json::parse(post("[{").body)["code"], "invalid_request");
}

TEST(Service, BudgetExhaustionIsAServerError) {
  Service svc(testing_support::load_fixture("hospital"), {3});
  auto r = svc.handle("POST", "/pars", "[]");
  EXPECT_EQ(r.status, 500);
  auto doc = json::parse(r.body);
  EXPECT_EQ(doc["code"], "budget_exhausted");
  EXPECT_FALSE(doc["details"]["lastRules"].empty());
  EXPECT_LE(doc["details"]["lastRules"].size(), 10u);
}

TEST_F(ServiceTest, ConcurrentIdenticalRequestsAreByteIdentical) {
  const std::string body = R"([{"fact": "CRITICAL_STATE", "parameters": [true]},
                               {"fact": "BREAK_THE_GLASS", "parameters": ["000003"]}])";
  const std::string expected = post(body).body;
  std::vector<std::future<std::string>> futures;
  for (int i = 0; i < 8; ++i)
    futures.push_back(std::async(std::launch::async, [&, i] {
      std::string last;
      for (int k = 0; k < 5; ++k) {
        // Interleave a different request to check there is no shared state.
        if ((i + k) % 3 == 0) post(R"([{"fact": "SEALED_RESOURCE", "parameters": ["record", true]}])");
        last = post(body).body;
        if (last != expected) return last;
      }
      return last;
    }));
  for (auto& f : futures) EXPECT_EQ(f.get(), expected);
}

TEST(Service, ReplaceSwapsTheSnapshot) {
  Service svc(testing_support::load_fixture("empty"));
  auto before = svc.snapshot();
  svc.replace(testing_support::load_fixture("hospital"));
  EXPECT_TRUE(before->registry.principals.empty());
  EXPECT_EQ(json::parse(svc.handle("GET", "/principals").body).size(), 7u);
  EXPECT_THROW(svc.reload(), std::logic_error);
  auto from_dir = Service::from_directory(testing_support::fixture("nurse"));
  EXPECT_NO_THROW(from_dir->reload());
}

TEST(Http, ServesOverTheNetwork) {
  Service svc(testing_support::load_fixture("hospital"));
  HttpServer server(svc, {"127.0.0.1", 0, "http://localhost:4200"});
  const int port = server.bind();
  std::thread t([&] { server.listen(); });
  server.wait_until_ready();
  httplib::Client client("127.0.0.1", port);
  auto res = client.Get("/principals/000001");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(res->get_header_value("Access-Control-Allow-Origin"), "http://localhost:4200");
  EXPECT_EQ(json::parse(res->body)["title"], "MD");
  auto pars = client.Post("/pars", "[]", "application/json");
  ASSERT_TRUE(pars);
  EXPECT_EQ(pars->status, 200);
  EXPECT_EQ(pars->body, svc.handle("POST", "/pars", "[]").body);
  auto pre = client.Options("/pars");
  ASSERT_TRUE(pre);
  EXPECT_EQ(pre->status, 204);
  server.stop();
  t.join();
}

TEST(Http, ParseAddress) {
  EXPECT_EQ(parse_address("0.0.0.0:9000"), (std::pair<std::string, int>{"0.0.0.0", 9000}));
  EXPECT_EQ(parse_address(":81"), (std::pair<std::string, int>{"127.0.0.1", 81}));
  EXPECT_EQ(parse_address("8080"), (std::pair<std::string, int>{"127.0.0.1", 8080}));
  EXPECT_THROW(parse_address("host:"), std::invalid_argument);
  EXPECT_THROW(parse_address("host:99999"), std::invalid_argument);
}
