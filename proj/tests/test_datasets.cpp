#include <gtest/gtest.h>

#include "ibe_eval/datasets.hpp"

namespace ibe {
namespace {

std::string fixture(const std::string& name) { return std::string(IBE_FIXTURE_DIR) + "/datasets/" + name; }

TEST(Copa, LoadsItems) {
  auto ex = load_copa(fixture("copa_sample.xml"));
  ASSERT_EQ(ex.size(), 3u);
  EXPECT_EQ(ex[0].id, "copa-1");
  EXPECT_EQ(ex[0].direction, Direction::cause);
  EXPECT_EQ(ex[0].gold_index, 0u);
  EXPECT_EQ(ex[0].context, "My body cast a shadow over the grass.");
  EXPECT_EQ(ex[0].candidates[1], "The grass was cut.");
  EXPECT_EQ(ex[2].direction, Direction::effect);
  EXPECT_EQ(ex[2].gold_index, 1u);
  EXPECT_EQ(ex[2].source, Source::copa);
}

TEST(Copa, Errors) {
  auto item = [](const std::string& attrs, const std::string& body) {
    return "<copa-corpus><item id=\"9\" " + attrs + ">" + body + "</item></copa-corpus>";
  };
  const std::string body = "<p>x</p><a1>y</a1><a2>z</a2>";
  try {
    parse_copa(item("asks-for=\"reason\" most-plausible-alternative=\"1\"", body));
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("\"reason\""), std::string::npos);
  }
  EXPECT_THROW(parse_copa(item("asks-for=\"cause\" most-plausible-alternative=\"3\"", body)), DataError);
  EXPECT_THROW(parse_copa(item("asks-for=\"cause\" most-plausible-alternative=\"1\"", "<p>x</p><a1>y</a1>")), DataError);
  EXPECT_THROW(parse_copa(""), DataError);
  EXPECT_THROW(parse_copa("<copa-corpus><item>"), DataError);
  EXPECT_THROW(parse_copa("<other/>"), DataError);
}

TEST(Ecare, LoadsAndMapsLabel) {
  auto ex = load_ecare(fixture("ecare_sample.jsonl"));
  ASSERT_EQ(ex.size(), 8u);
  EXPECT_EQ(ex[1].id, "ecare-dev-1");
  EXPECT_EQ(ex[1].gold_index, 1u);
  EXPECT_EQ(ex[2].direction, Direction::cause);
  EXPECT_EQ(ex[0].source, Source::ecare);
}

TEST(Ecare, Errors) {
  const std::string ok = R"({"premise": "p", "ask-for": "cause", "hypothesis1": "a", "hypothesis2": "b", "label": 0})";
  EXPECT_NO_THROW(parse_ecare(ok));
  EXPECT_THROW(parse_ecare(R"({"premise": "p", "ask-for": "cause", "hypothesis1": "a", "hypothesis2": "b", "label": 3})"),
               DataError);
  EXPECT_THROW(parse_ecare(R"({"premise": "p", "ask-for": "cause", "hypothesis1": "a", "label": 0})"), DataError);
  EXPECT_THROW(parse_ecare(R"({"premise": "p", "ask-for": "why", "hypothesis1": "a", "hypothesis2": "b", "label": 0})"),
               DataError);
  EXPECT_THROW(parse_ecare("{not json"), DataError);
  EXPECT_THROW(parse_ecare(""), DataError);
}

TEST(Ecare, SeededSampling) {
  auto a = load_ecare(fixture("ecare_sample.jsonl"), 5, 7);
  auto b = load_ecare(fixture("ecare_sample.jsonl"), 5, 7);
  ASSERT_EQ(a.size(), 5u);
  EXPECT_EQ(a, b);
  std::set<std::string> ids;
  for (const auto& e : a) ids.insert(e.id);
  EXPECT_EQ(ids.size(), 5u);
  EXPECT_THROW(load_ecare(fixture("ecare_sample.jsonl"), 9, 7), UsageError);
}

TEST(Sampling, DistinctSortedAndSeedDependent) {
  auto s = sample_indices(1000, 50, 1);
  EXPECT_TRUE(std::is_sorted(s.begin(), s.end()));
  EXPECT_EQ(std::set<std::size_t>(s.begin(), s.end()).size(), 50u);
  EXPECT_NE(s, sample_indices(1000, 50, 2));
  EXPECT_EQ(sample_indices(10, 10, 3).size(), 10u);
}

TEST(Canonical, RoundTrip) {
  for (auto ex : {load_copa(fixture("copa_sample.xml")), load_ecare(fixture("ecare_sample.jsonl")),
                  load_examples(std::string(IBE_FIXTURE_DIR) + "/corpus/train.jsonl")}) {
    auto dumped = dump_examples(ex);
    EXPECT_EQ(parse_examples(dumped), ex);
    EXPECT_EQ(dump_examples(parse_examples(dumped)), dumped);
  }
}

TEST(Canonical, RejectsDuplicatesAndInvalid) {
  auto ex = load_copa(fixture("copa_sample.xml"));
  ex[1].id = ex[0].id;
  EXPECT_THROW(parse_examples(dump_examples(ex)), DataError);
  EXPECT_THROW(parse_examples(R"({"id":"a","context":"","direction":"cause","candidates":["x","y"],"gold_index":0,"source":"custom"})"),
               DataError);
  EXPECT_THROW(load_dataset("csv", fixture("copa_sample.xml")), UsageError);
  EXPECT_EQ(load_dataset("copa", fixture("copa_sample.xml"), 2, 1).size(), 2u);
}

}  // namespace
}  // namespace ibe
