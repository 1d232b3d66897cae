#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>

#include "ibe_eval/scorers.hpp"

namespace ibe::testing {

class MockEntailment : public EntailmentScorer {
 public:
  using Fn = std::function<EntailmentProbs(const std::string&, const std::string&)>;
  explicit MockEntailment(Fn fn) : fn_(std::move(fn)) {}
  explicit MockEntailment(EntailmentProbs fixed) : fn_([fixed](const std::string&, const std::string&) { return fixed; }) {}
  EntailmentProbs score(const std::string& p, const std::string& h) const override { return fn_(p, h); }
  std::string name() const override { return "mock-entail"; }

 private:
  Fn fn_;
};

class MockCertainty : public CertaintyScorer {
 public:
  using Fn = std::function<double(const std::string&)>;
  explicit MockCertainty(Fn fn) : fn_(std::move(fn)) {}
  explicit MockCertainty(std::map<std::string, double> table)
      : fn_([t = std::move(table)](const std::string& s) { return t.at(s); }) {}
  double certainty(const std::string& s) const override { return fn_(s); }
  std::string name() const override { return "mock-certainty"; }

 private:
  Fn fn_;
};

inline const EmbeddingTable& toy_embeddings() {
  static const EmbeddingTable table = EmbeddingTable::load(std::string(IBE_DATA_DIR) + "/embeddings/toy.txt");
  return table;
}

inline const ScorerSuite& fallback_suite() {
  static const ScorerSuite suite =
      make_fallback_suite(FallbackResources::in_dir(std::string(IBE_DATA_DIR) + "/lexicon"), toy_embeddings());
  return suite;
}

}  // namespace ibe::testing
