#include <gtest/gtest.h>

#include "evsynth/config.hpp"

using namespace evsynth;

TEST(KeyValue, SectionsKeysAndComments) {
  const auto doc = KeyValueDocument::parse(
      "# leading comment\n"
      "[data]\n"
      "dataset = trials.csv\n"
      "; another comment\n"
      "\n"
      "[model]\n"
      "variant=power\n"
      "alpha =  0.25 \n"
      "expr = a=b\n");
  EXPECT_TRUE(doc.has_section("data"));
  EXPECT_FALSE(doc.has_section("sampler"));
  EXPECT_EQ(doc.get("data", "dataset"), "trials.csv");
  EXPECT_EQ(doc.get("model", "alpha"), "0.25");
  EXPECT_EQ(doc.get("model", "expr"), "a=b");
  EXPECT_EQ(doc.get("model", "missing"), std::nullopt);
  EXPECT_EQ(doc.get("nowhere", "x"), std::nullopt);
}

TEST(KeyValue, ItemsKeepDocumentOrder) {
  auto doc = KeyValueDocument::parse("[layout]\nz, a = rct:1\nb, c = rwe:2\n");
  doc.set("layout", "a, b", "rct:3");
  doc.set("layout", "z, a", "rct:4");
  const auto items = doc.items("layout");
  ASSERT_EQ(items.size(), 3u);
  EXPECT_EQ(items[0].first, "z, a");
  EXPECT_EQ(items[0].second, "rct:4");
  EXPECT_EQ(items[2].first, "a, b");
}

TEST(KeyValue, MalformedLinesRejected) {
  EXPECT_THROW(KeyValueDocument::parse("key = 1\n"), InputError);
  EXPECT_THROW(KeyValueDocument::parse("[data\n"), InputError);
  EXPECT_THROW(KeyValueDocument::parse("[]\n"), InputError);
  EXPECT_THROW(KeyValueDocument::parse("[data]\njust words\n"), InputError);
  EXPECT_THROW(KeyValueDocument::parse("[data]\n= 3\n"), InputError);
  EXPECT_THROW(KeyValueDocument::parse("[data]\na = 1\na = 2\n"), InputError);
}

TEST(KeyValue, ErrorNamesLine) {
  try {
    KeyValueDocument::parse("[data]\n\nnot a pair\n");
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
}

TEST(KeyValue, RequireKnown) {
  const std::map<std::string, std::set<std::string>> allowed = {{"data", {"dataset"}}, {"layout", {}}};
  EXPECT_NO_THROW(KeyValueDocument::parse("[data]\ndataset = x\n[layout]\nanything = 1\n").require_known(allowed));
  EXPECT_THROW(KeyValueDocument::parse("[data]\ndatset = x\n").require_known(allowed), InputError);
  EXPECT_THROW(KeyValueDocument::parse("[extra]\n").require_known(allowed), InputError);
}

TEST(Converters, Numbers) {
  EXPECT_EQ(config::to_double("1e-3", "x"), 1e-3);
  EXPECT_EQ(config::to_double(" -2.5 ", "x"), -2.5);
  EXPECT_THROW(config::to_double("2.5abc", "x"), InputError);
  EXPECT_THROW(config::to_double("", "x"), InputError);
  EXPECT_EQ(config::to_long("42", "n"), 42);
  EXPECT_THROW(config::to_long("4.2", "n"), InputError);
  EXPECT_EQ(config::to_count("3", "n"), 3u);
  EXPECT_THROW(config::to_count("0", "n"), InputError);
  EXPECT_THROW(config::to_count("-1", "n"), InputError);
}

TEST(Converters, BoolsAndLists) {
  EXPECT_TRUE(config::to_bool("Yes", "b"));
  EXPECT_FALSE(config::to_bool("off", "b"));
  EXPECT_THROW(config::to_bool("maybe", "b"), InputError);
  EXPECT_EQ(config::to_doubles("0, 0.5,1", "a"), (std::vector<double>{0.0, 0.5, 1.0}));
  EXPECT_THROW(config::to_doubles("0,,1", "a"), InputError);
  EXPECT_EQ(config::to_labels(" A , B "), (std::vector<std::string>{"A", "B"}));
}

TEST(Converters, ErrorMentionsKey) {
  try {
    config::to_double("abc", "model.alpha");
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("model.alpha"), std::string::npos);
  }
}
