#include <gtest/gtest.h>

#include <random>

#include "ibe_eval/metrics.hpp"
#include "support/mocks.hpp"

namespace ibe {
namespace {

using testing::fallback_suite;
using testing::MockCertainty;
using testing::MockEntailment;

EntailmentHypothesis balloon_hyp() { return {"e01", 0, "Someone pricked the balloon.", "The balloon deflated."}; }

StructuredExplanation make_expl(std::vector<ExplanationStep> steps, std::string summary = "") {
  StructuredExplanation e;
  e.hypothesis = balloon_hyp();
  for (std::size_t i = 0; i < steps.size(); ++i) steps[i].index = i + 1;
  e.steps = std::move(steps);
  e.summary = std::move(summary);
  return e;
}

TEST(Drift, CountsNovelNouns) {
  auto e = make_expl({{1, "the balloon is pricked with a needle", "air escapes", "Pressure pushes air out."},
                      {2, "air escapes", "the balloon deflated", "A balloon without air deflates."}});
  EXPECT_EQ(concept_drift(e.hypothesis, e, *fallback_suite().pos), 3u);  // needle, air, pressure
  EXPECT_EQ(concept_drift(e.hypothesis, e, *fallback_suite().pos, NounScope::clauses), 2u);
}

TEST(Drift, SubsetAndEmpty) {
  auto e = make_expl({{1, "the balloon", "the balloons deflated", ""}});
  EXPECT_EQ(concept_drift(e.hypothesis, e, *fallback_suite().pos), 0u);
  StructuredExplanation empty;
  EXPECT_EQ(concept_drift(balloon_hyp(), empty, *fallback_suite().pos), 0u);
}

TEST(Drift, SummaryOnlyCountsInAllScope) {
  auto e = make_expl({{1, "the balloon was pricked", "the balloon deflated", ""}}, "A needle did it.");
  EXPECT_EQ(concept_drift(e.hypothesis, e, *fallback_suite().pos), 0u);
  EXPECT_EQ(concept_drift(e.hypothesis, e, *fallback_suite().pos, NounScope::all), 1u);
}

TEST(Drift, DuplicateNounsCountOnce) {
  auto once = make_expl({{1, "a needle", "a hole", ""}});
  auto many = make_expl({{1, "a needle and a needle", "needles make holes", "Needle holes."}});
  const auto& pos = *fallback_suite().pos;
  EXPECT_EQ(concept_drift(once.hypothesis, once, pos), concept_drift(many.hypothesis, many, pos));
}

TEST(Coherence, MockArithmetic) {
  auto e = make_expl({{1, "a", "b", ""}, {2, "b", "c", ""}, {3, "c", "d", ""}, {4, "d", "e", ""}});
  EXPECT_NEAR(stepwise_entailment(e, MockEntailment({0.9, 0.05, 0.05})), 0.85, 1e-12);
  EXPECT_NEAR(stepwise_entailment(e, MockEntailment({1.0 / 3, 1.0 / 3, 1.0 / 3})), 0.0, 1e-12);
  MockEntailment alternating([](const std::string& p, const std::string&) {
    return p == "a" || p == "c" ? EntailmentProbs{1.0, 0.0, 0.0} : EntailmentProbs{0.0, 0.0, 1.0};
  });
  EXPECT_DOUBLE_EQ(stepwise_entailment(e, alternating), 0.0);
}

TEST(Coherence, ErrorNamesStep) {
  auto e = make_expl({{1, "a", "b", ""}, {2, "b", "c", ""}});
  MockEntailment failing([](const std::string& p, const std::string&) -> EntailmentProbs {
    if (p == "b") throw ScorerError("model crashed");
    return {1, 0, 0};
  });
  try {
    stepwise_entailment(e, failing);
    FAIL();
  } catch (const ScorerError& err) {
    EXPECT_NE(std::string(err.what()).find("step 2"), std::string::npos);
  }
  MockEntailment bad_sum({0.5, 0.5, 0.5});
  EXPECT_THROW(stepwise_entailment(e, bad_sum), ScorerError);
  EXPECT_THROW(stepwise_entailment(StructuredExplanation{}, bad_sum), ValidationError);
}

TEST(Coherence, AlwaysInRange) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<ExplanationStep> steps(1 + trial % 6);
    for (auto& s : steps) s = {0, "x", "y", ""};
    auto e = make_expl(steps);
    MockEntailment random([&](const std::string&, const std::string&) {
      double a = u(rng), b = u(rng), c = u(rng);
      double t = a + b + c;
      return EntailmentProbs{a / t, b / t, c / t};
    });
    double v = stepwise_entailment(e, random);
    EXPECT_GE(v, -1.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(Uncertainty, Arithmetic) {
  auto all6 = make_expl({{1, "a", "b", "A1"}, {2, "b", "c", "A2"}}, "S");
  EXPECT_DOUBLE_EQ(linguistic_uncertainty(all6, MockCertainty([](const std::string&) { return 6.0; })), 2.0);

  MockCertainty table(std::map<std::string, double>{{"A1", 5.0}, {"A2", 3.0}, {"S", 4.0}});
  EXPECT_DOUBLE_EQ(linguistic_uncertainty(all6, table), 6.0);
  EXPECT_DOUBLE_EQ(linguistic_uncertainty(all6, table, UncertaintyMode::sum), 2.0 + 4.0 + 3.0);

  auto single = make_expl({{1, "a", "b", "A1"}});
  EXPECT_DOUBLE_EQ(linguistic_uncertainty(single, MockCertainty([](const std::string&) { return 1.0; })), 6.0);
}

TEST(Uncertainty, EmptyPartsSkipped) {
  MockCertainty c(std::map<std::string, double>{{"A2", 2.0}, {"S", 6.0}});
  auto e = make_expl({{1, "a", "b", ""}, {2, "b", "c", "A2"}, {3, "c", "d", "  "}}, "S");
  EXPECT_DOUBLE_EQ(linguistic_uncertainty(e, c), 5.0 + 1.0);
  auto none = make_expl({{1, "a", "b", ""}});
  EXPECT_DOUBLE_EQ(linguistic_uncertainty(none, c), 0.0);
}

TEST(Uncertainty, MonotoneInCertainty) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(1.0, 6.0);
  auto e = make_expl({{1, "a", "b", "A1"}, {2, "b", "c", "A2"}, {3, "c", "d", "A3"}}, "S");
  for (int trial = 0; trial < 200; ++trial) {
    std::map<std::string, double> base{{"A1", u(rng)}, {"A2", u(rng)}, {"A3", u(rng)}, {"S", u(rng)}};
    auto lowered = base;
    auto it = std::next(lowered.begin(), trial % 4);
    it->second = 1.0 + (it->second - 1.0) * 0.5;
    for (auto mode : {UncertaintyMode::average, UncertaintyMode::sum}) {
      double before = linguistic_uncertainty(e, MockCertainty(base), mode);
      double after = linguistic_uncertainty(e, MockCertainty(lowered), mode);
      EXPECT_GE(after, before);
      EXPECT_GE(before, 0.0);
    }
  }
}

TEST(Uncertainty, RejectsOutOfRangeCertainty) {
  auto e = make_expl({{1, "a", "b", "A1"}});
  EXPECT_THROW(linguistic_uncertainty(e, MockCertainty([](const std::string&) { return 7.0; })), ScorerError);
}

TEST(Hedges, PaperExamples) {
  const auto& tagger = *fallback_suite().hedge;
  auto c1 = classify_hedges("the blocks may fall", tagger);
  EXPECT_GE(c1.epistemic, 1u);
  EXPECT_EQ(c1.tokens, 4u);
  auto c2 = classify_hedges("if the balloon is pricked it may deflate", tagger);
  EXPECT_GE(c2.conditional, 1u);
  EXPECT_GE(c2.epistemic, 1u);
  auto c3 = classify_hedges("the child believed the blocks would fall", tagger);
  EXPECT_EQ(c3.doxatic, 2u);
  auto c4 = classify_hedges("the balloon deflated", tagger);
  EXPECT_EQ(c4.cues(), 0u);
}

TEST(Hedges, ExplanationTotalsAndRatio) {
  auto e = make_expl({{1, "it may rain", "the street floods", "Rain might flood streets."}}, "Perhaps.");
  auto c = classify_hedges(e, *fallback_suite().hedge);
  EXPECT_EQ(c.epistemic, 3u);
  EXPECT_EQ(c.tokens, 3u + 3u + 4u + 1u);
  EXPECT_DOUBLE_EQ(hedge_ratio(c), 3.0 / 11.0);
  EXPECT_DOUBLE_EQ(hedge_ratio({1, 1, 0, 20}), 0.1);
  EXPECT_DOUBLE_EQ(hedge_ratio({0, 0, 0, 5}), 0.0);
  EXPECT_DOUBLE_EQ(hedge_ratio({2, 1, 1, 4}), 1.0);
  EXPECT_THROW(hedge_ratio({}), ValidationError);
}

TEST(SelfEvident, Definition) {
  IbeFeatureVector f{1, 1, 0, 0.5, 2.0};
  EXPECT_TRUE(is_self_evident(f));
  f.depth = 2;
  EXPECT_FALSE(is_self_evident(f));
  f.depth = 1;
  f.drift = 3;
  EXPECT_FALSE(is_self_evident(f));
}

TEST(ComputeFeatures, Assembly) {
  auto e = make_expl({{1, "the balloon is pricked with a needle", "the balloon deflated", "Needles make holes."},
                      {2, "x", "y", "Air escapes."}},
                     "S");
  ScorerSuite s = fallback_suite();
  s.entailment = std::make_shared<MockEntailment>(EntailmentProbs{0.85, 0.1, 0.05});
  s.certainty = std::make_shared<MockCertainty>([](const std::string&) { return 5.5; });
  auto proof = ProofResult::accepted(0.5, {{ClauseRef::Kind::rule, 0}, {ClauseRef::Kind::rule, 1}}, 0.13);
  auto f = compute_features(e.hypothesis, e, proof, s);
  EXPECT_EQ(f.consistency, 1);
  EXPECT_EQ(f.depth, 2u);
  EXPECT_EQ(f.drift, 3u);  // needle, hole, air
  EXPECT_NEAR(f.coherence, 0.8, 1e-12);
  EXPECT_DOUBLE_EQ(f.uncertainty, 3.0);

  auto g = compute_features(e.hypothesis, e, ProofResult::unsatisfied(), s);
  EXPECT_EQ(g.consistency, 0);
  EXPECT_EQ(g.depth, 0u);
  EXPECT_EQ(g.drift, f.drift);
  EXPECT_EQ(g.coherence, f.coherence);
}

TEST(ComputeFeatures, ErrorsCarryFeatureName) {
  auto e = make_expl({{1, "a", "b", "A"}}, "S");
  ScorerSuite s = fallback_suite();
  s.certainty = std::make_shared<MockCertainty>([](const std::string&) -> double { throw ScorerError("down"); });
  try {
    compute_features(e.hypothesis, e, ProofResult::unsatisfied(), s);
    FAIL();
  } catch (const ScorerError& err) {
    EXPECT_EQ(std::string(err.what()).rfind("uncertainty: ", 0), 0u);
  }
  s.certainty = nullptr;
  EXPECT_THROW(compute_features(e.hypothesis, e, ProofResult::unsatisfied(), s), UsageError);
}

}  // namespace
}  // namespace ibe
