#include <gtest/gtest.h>

#include <fstream>

#include <unistd.h>

#include "test_support.hpp"

using namespace gacm;
namespace fs = std::filesystem;

namespace {

class TempPolicy {
 public:
  TempPolicy() {
    static int counter = 0;
    dir_ = fs::temp_directory_path() /
           ("gacm-config-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(dir_);
    fs::copy(testing_support::fixture("hospital"), dir_, fs::copy_options::recursive);
  }
  ~TempPolicy() { fs::remove_all(dir_); }

  void write(const std::string& file, const std::string& text) {
    std::ofstream(dir_ / file, std::ios::trunc) << text;
  }
  void remove(const std::string& file) { fs::remove(dir_ / file); }
  const fs::path& dir() const { return dir_; }

  std::vector<Diagnostic> errors(LoadOptions opts = {}) {
    try {
      load_policy(dir_, opts);
    } catch (const PolicyLoadError& e) {
      return e.diagnostics();
    }
    return {};
  }

 private:
  fs::path dir_;
};

bool mentions(const std::vector<Diagnostic>& d, const std::string& file, const std::string& text) {
  for (const auto& x : d)
    if (x.file == file && x.to_string().find(text) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST(Config, LoadsHospitalFixture) {
  auto p = testing_support::load_fixture("hospital");
  EXPECT_EQ(p.registry.principals.size(), 7u);
  EXPECT_EQ(p.registry.principals.at("000001").name, "P. Cox");
  EXPECT_EQ(p.registry.principals.at("000001").title, "MD");
  EXPECT_TRUE(p.relations.pcas.contains(Pca{"000001", "physician_specialist"}));
  EXPECT_TRUE(p.hierarchy.contains_or_equals("physician_intern", "physician_specialist"));
  ASSERT_EQ(p.custom_facts.size(), 5u);
  EXPECT_TRUE(std::is_sorted(p.custom_facts.begin(), p.custom_facts.end(),
                             [](const auto& a, const auto& b) { return a.fact < b.fact; }));
  const auto* rp = p.find_fact("RESPONSIBLE_PHYSICIAN");
  ASSERT_NE(rp, nullptr);
  ASSERT_EQ(rp->parameters.size(), 1u);
  EXPECT_EQ(rp->parameters[0].type, ParameterType::selection);
  EXPECT_EQ(rp->parameters[0].option_type, EntityKind::principal);
  EXPECT_FALSE(rp->single);
}

TEST(Config, LoadingIsDeterministic) {
  EXPECT_EQ(testing_support::load_fixture("hospital"), testing_support::load_fixture("hospital"));
}

TEST(Config, EmptyPolicyLoads) {
  auto p = testing_support::load_fixture("empty");
  EXPECT_TRUE(p.registry.principals.empty());
  EXPECT_TRUE(p.custom_facts.empty());
}

TEST(Config, MissingDirectory) {
  EXPECT_THROW(load_policy("/nonexistent/policy"), PolicyLoadError);
}

TEST(Config, ReportsEveryErrorWithItsFile) {
  TempPolicy t;
  t.write("pca.json", R"([{"principal": "999999", "category": "clinician"},
                          {"principal": "000001", "category": "ghost"}])");
  t.write("arca.json", R"([{"category": "clinician", "action": "fly", "resource": "record"}])");
  t.remove("barca.json");
  auto errors = t.errors();
  EXPECT_TRUE(mentions(errors, "pca.json", "999999"));
  EXPECT_TRUE(mentions(errors, "pca.json", "ghost"));
  EXPECT_TRUE(mentions(errors, "arca.json", "fly"));
  EXPECT_TRUE(mentions(errors, "barca.json", "missing"));
  EXPECT_GE(errors.size(), 4u);
}

TEST(Config, MalformedJson) {
  TempPolicy t;
  t.write("action.json", "[{\"id\": \"read\",");
  EXPECT_TRUE(mentions(t.errors(), "action.json", "malformed"));
  t.write("action.json", "{\"id\": \"read\"}");
  EXPECT_TRUE(mentions(t.errors(), "action.json", "array"));
}

TEST(Config, DuplicateIds) {
  TempPolicy t;
  t.write("action.json", R"([{"id": "read"}, {"id": "read"}, {"id": "create"}, {"id": "update"}])");
  EXPECT_TRUE(mentions(t.errors(), "action.json", "duplicate id 'read'"));
}

TEST(Config, UnknownFieldsStrictAndLenient) {
  TempPolicy t;
  t.write("site.json", R"([{"id": "central", "name": "Central", "beds": 300}])");
  EXPECT_TRUE(mentions(t.errors(), "site.json", "unknown field 'beds'"));
  EXPECT_TRUE(t.errors({true}).empty());
}

TEST(Config, HierarchyProblems) {
  TempPolicy t;
  t.write("hierarchy.json", R"([{"child": "clinician", "parent": "physician_specialist"},
                                {"child": "physician_specialist", "parent": "clinician"}])");
  EXPECT_TRUE(mentions(t.errors(), "hierarchy.json", "cycle"));
  t.write("hierarchy.json", R"([{"child": "clinician", "parent": "clinician"}])");
  EXPECT_TRUE(mentions(t.errors(), "hierarchy.json", "cannot contain itself"));
}

TEST(Config, OptionalFiles) {
  TempPolicy t;
  t.remove("site.json");
  t.remove("hierarchy.json");
  EXPECT_TRUE(t.errors().empty());
}

TEST(Config, CustomFactDeclarationChecks) {
  TempPolicy t;
  t.write("customfacts.json", R"([
    {"fact": "A", "parameters": [{"type": "SELECTION", "rank": 0, "label": "Who"}]},
    {"fact": "B", "parameters": [{"type": "BOOLEAN", "rank": 1, "label": "Flag"}]},
    {"fact": "C", "parameters": [{"type": "COLOUR", "rank": 0, "label": "Hue"}]},
    {"fact": "D", "parameters": [{"type": "TEXT", "rank": 0, "label": "x y"},
                                 {"type": "TEXT", "rank": 1, "label": "X-Y"}]},
    {"fact": "E", "parameters": [{"type": "SELECTION", "rank": 0, "label": "Who", "optionType": "PLANET"}]},
    {"fact": "E", "parameters": []}
  ])");
  auto errors = t.errors();
  EXPECT_TRUE(mentions(errors, "customfacts.json", "optionType"));
  EXPECT_TRUE(mentions(errors, "customfacts.json", "ranks"));
  EXPECT_TRUE(mentions(errors, "customfacts.json", "COLOUR") ||
              mentions(errors, "customfacts.json", "SELECTION, BOOLEAN or TEXT"));
  EXPECT_TRUE(mentions(errors, "customfacts.json", "xY"));
  EXPECT_TRUE(mentions(errors, "customfacts.json", "PLANET"));
}

TEST(CustomFactValues, Validation) {
  auto p = testing_support::load_fixture("hospital");
  const auto& sealed = *p.find_fact("SEALED_RESOURCE");
  auto ok = validate_custom_fact_values(sealed, {std::string("record"), true}, p.registry);
  EXPECT_EQ(ok.parameters[0], ParamValue(EntityRef{EntityKind::resource, "record"}));
  EXPECT_EQ(ok.parameters[1], ParamValue(true));
  auto text_bool = validate_custom_fact_values(sealed, {std::string("record"), std::string("false")},
                                               p.registry);
  EXPECT_EQ(text_bool.parameters[1], ParamValue(false));

  auto code = [&](std::vector<RawValue> v) {
    try {
      validate_custom_fact_values(sealed, v, p.registry, 3);
    } catch (const CustomFactError& e) {
      EXPECT_EQ(e.diagnostics().at(0).index, 3u);
      return e.diagnostics().at(0).code;
    }
    ADD_FAILURE() << "accepted";
    return FactErrorCode::unknown_fact;
  };
  EXPECT_EQ(code({std::string("record")}), FactErrorCode::arity);
  EXPECT_EQ(code({std::string("record"), std::string("maybe")}), FactErrorCode::type_mismatch);
  EXPECT_EQ(code({true, true}), FactErrorCode::type_mismatch);
  EXPECT_EQ(code({std::string("x-ray"), true}), FactErrorCode::unknown_option);
}

TEST(CustomFactValues, ScenarioChecksEveryEntry) {
  auto p = testing_support::load_fixture("hospital");
  std::vector<FactRequest> reqs{{"CRITICAL_STATE", {true}},
                                {"NO_SUCH_FACT", {}},
                                {"CRITICAL_STATE", {false}},
                                {"BREAK_THE_GLASS", {std::string("000001")}}};
  try {
    validate_scenario(p, reqs);
    FAIL() << "accepted";
  } catch (const CustomFactError& e) {
    ASSERT_EQ(e.diagnostics().size(), 2u);
    EXPECT_EQ(e.diagnostics()[0].index, 1u);
    EXPECT_EQ(e.diagnostics()[0].code, FactErrorCode::unknown_fact);
    EXPECT_EQ(e.diagnostics()[1].index, 2u);
    EXPECT_EQ(e.diagnostics()[1].code, FactErrorCode::duplicate_single);
  }
  // RESPONSIBLE_PHYSICIAN is not single.
  EXPECT_EQ(validate_scenario(p, {{"RESPONSIBLE_PHYSICIAN", {std::string("000001")}},
                                  {"RESPONSIBLE_PHYSICIAN", {std::string("000002")}}})
                .size(),
            2u);
}
