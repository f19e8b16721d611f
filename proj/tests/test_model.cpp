#include <gtest/gtest.h>

#include "gacm/model.hpp"

using namespace gacm;

TEST(Model, KindNamesFromFactIds) {
  EXPECT_EQ(custom_kind_name("SEALED_RESOURCE"), "SealedResource");
  EXPECT_EQ(custom_kind_name("CRITICAL_STATE"), "CriticalState");
  EXPECT_EQ(custom_kind_name("SET_PCA"), "SetPca");
  EXPECT_EQ(custom_kind_name("BREAK_THE_GLASS"), "BreakTheGlass");
}

TEST(Model, FieldNamesFromLabels) {
  EXPECT_EQ(parameter_field_name("Critical state"), "criticalState");
  EXPECT_EQ(parameter_field_name("Responsible physician"), "responsiblePhysician");
  EXPECT_EQ(parameter_field_name("Locked"), "locked");
  EXPECT_EQ(parameter_field_name("Resource"), "resource");
  EXPECT_EQ(parameter_field_name("  --  "), "");
}

TEST(Model, FactEqualityIsStructural) {
  Fact a = Pca{"p1", "c1"};
  Fact b = Pca{"p1", "c1"};
  Fact c = Pca{"p1", "c2"};
  EXPECT_TRUE(fact_equals(a, b));
  EXPECT_FALSE(fact_equals(a, c));
  EXPECT_FALSE(fact_equals(Fact{Arca{"c1", {"read", "r"}}}, Fact{Barca{"c1", {"read", "r"}}}));
  Fact x = CustomFactInstance{"CRITICAL_STATE", {true}};
  Fact y = CustomFactInstance{"CRITICAL_STATE", {false}};
  EXPECT_FALSE(fact_equals(x, y));
}

TEST(Model, FactKinds) {
  EXPECT_EQ(fact_kind(Fact{EntityRef{EntityKind::principal, "p"}}), "Principal");
  EXPECT_EQ(fact_kind(Fact{Pca{"p", "c"}}), "Pca");
  EXPECT_EQ(fact_kind(Fact{CustomFactInstance{"SEALED_RESOURCE", {}}}), "SealedResource");
}

TEST(Model, RegistryLookups) {
  Registry reg;
  reg.principals["000001"] = {"000001", "P. Cox", "MD"};
  reg.actions["read"] = {"read", ""};
  reg.resources["record"] = {"record", "Clinical Record"};
  EXPECT_TRUE(reg.contains(EntityKind::principal, "000001"));
  EXPECT_FALSE(reg.contains(EntityKind::category, "000001"));
  EXPECT_EQ(reg.display_name(EntityKind::principal, "000001"), "P. Cox");
  EXPECT_EQ(reg.display_name(EntityKind::action, "read"), "read");
  EXPECT_THROW(reg.require(EntityKind::resource, "nope"), UnknownIdError);
  EXPECT_EQ(make_permission("read", "record", reg), (Permission{"read", "record"}));
  EXPECT_THROW(make_permission("write", "record", reg), UnknownIdError);
}

TEST(Model, ParOrderingIsPrincipalResourceActionSign) {
  ParSet s;
  s.insert({"p2", {"c"}, {"read", "a"}, Sign::grant});
  s.insert({"p1", {"c"}, {"write", "b"}, Sign::grant});
  s.insert({"p1", {"c"}, {"read", "b"}, Sign::deny});
  s.insert({"p1", {"c"}, {"read", "b"}, Sign::grant});
  std::vector<std::string> order;
  for (const auto& p : s)
    order.push_back(p.principal + p.permission.resource + p.permission.action +
                    std::string(to_string(p.sign)));
  EXPECT_EQ(order, (std::vector<std::string>{"p1breadgrant", "p1breaddeny", "p1bwritegrant",
                                             "p2areadgrant"}));
}

TEST(Model, ParSetDeduplicates) {
  ParSet s;
  s.insert({"p", {"c"}, {"read", "r"}, Sign::grant});
  s.insert({"p", {"c"}, {"read", "r"}, Sign::grant});
  EXPECT_EQ(s.size(), 1u);
}

TEST(Model, OptionTypeRoundTrip) {
  for (EntityKind k : kAllEntityKinds) EXPECT_EQ(parse_option_type(option_type_name(k)), k);
  EXPECT_FALSE(parse_option_type("PRINCIPALS"));
}
