#pragma once

// Parsimony, coherence and uncertainty metrics over a structured explanation.

#include <set>
#include <string>
#include <vector>

#include "ibe_eval/core.hpp"
#include "ibe_eval/prover.hpp"
#include "ibe_eval/scorers.hpp"

namespace ibe {

// Which parts of an explanation count as explanation nouns for drift.
enum class NounScope { clauses, clauses_assumptions, all };

inline std::string_view to_string(NounScope s) {
  switch (s) {
    case NounScope::clauses: return "clauses";
    case NounScope::all: return "all";
    default: return "clauses+assumptions";
  }
}

inline NounScope parse_noun_scope(std::string_view s) {
  if (s == "clauses") return NounScope::clauses;
  if (s == "clauses+assumptions" || s == "clauses_assumptions") return NounScope::clauses_assumptions;
  if (s == "all") return NounScope::all;
  throw UsageError("bad noun scope \"" + std::string(s) + "\" (expected clauses|clauses+assumptions|all)");
}

enum class UncertaintyMode { average, sum };

inline std::string_view to_string(UncertaintyMode m) { return m == UncertaintyMode::sum ? "sum" : "average"; }

inline UncertaintyMode parse_uncertainty_mode(std::string_view s) {
  if (s == "average") return UncertaintyMode::average;
  if (s == "sum") return UncertaintyMode::sum;
  throw UsageError("bad uncertainty mode \"" + std::string(s) + "\" (expected average|sum)");
}

struct MetricsOptions {
  NounScope noun_scope = NounScope::clauses_assumptions;
  UncertaintyMode uncertainty_mode = UncertaintyMode::average;
};

inline std::set<std::string> extract_nouns(const std::string& text, const PosTagger& pos) {
  std::set<std::string> out;
  for (const auto& t : pos.tag(text))
    if (t.pos == "NOUN") out.insert(text::to_lower(t.lemma));
  return out;
}

inline std::vector<std::string> explanation_texts(const StructuredExplanation& e, NounScope scope) {
  std::vector<std::string> out;
  for (const auto& s : e.steps) {
    out.push_back(s.if_clause);
    out.push_back(s.then_clause);
    if (scope != NounScope::clauses) out.push_back(s.assumption);
  }
  if (scope == NounScope::all) out.push_back(e.summary);
  return out;
}

inline std::size_t concept_drift(const EntailmentHypothesis& hyp, const StructuredExplanation& expl, const PosTagger& pos,
                                 NounScope scope = NounScope::clauses_assumptions) {
  auto known = extract_nouns(hyp.premise, pos);
  known.merge(extract_nouns(hyp.conclusion, pos));
  std::set<std::string> novel;
  for (const auto& t : explanation_texts(expl, scope)) {
    for (auto& n : extract_nouns(t, pos))
      if (!known.contains(n)) novel.insert(n);
  }
  return novel.size();
}

inline double stepwise_entailment(const StructuredExplanation& expl, const EntailmentScorer& scorer) {
  if (expl.steps.empty()) throw ValidationError("coherence needs at least one step");
  double total = 0.0;
  for (std::size_t i = 0; i < expl.steps.size(); ++i) {
    const auto& s = expl.steps[i];
    EntailmentProbs p;
    try {
      p = scorer.score(s.if_clause, s.then_clause);
      validate_entailment(p);
    } catch (const ScorerError& e) {
      throw ScorerError("entailment scorer failed on step " + std::to_string(i + 1) + ": " + e.what());
    }
    total += p.entail - p.contradiction;
  }
  return total / static_cast<double>(expl.steps.size());
}

inline double sentence_uncertainty(const std::string& sentence, const CertaintyScorer& scorer, const std::string& where) {
  double c;
  try {
    c = scorer.certainty(sentence);
    validate_certainty(c);
  } catch (const ScorerError& e) {
    throw ScorerError("certainty scorer failed on " + where + ": " + e.what());
  }
  return 7.0 - c;
}

// Assumption term (mean or sum of 7 - certainty) plus the summary term.
// Empty assumptions and an empty summary contribute nothing.
inline double linguistic_uncertainty(const StructuredExplanation& expl, const CertaintyScorer& scorer,
                                     UncertaintyMode mode = UncertaintyMode::average) {
  if (expl.steps.empty()) throw ValidationError("uncertainty needs at least one step");
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < expl.steps.size(); ++i) {
    const auto& a = expl.steps[i].assumption;
    if (text::trim_view(a).empty()) continue;
    sum += sentence_uncertainty(a, scorer, "assumption " + std::to_string(i + 1));
    ++n;
  }
  double assumptions = n == 0 ? 0.0 : (mode == UncertaintyMode::average ? sum / static_cast<double>(n) : sum);
  double summary = text::trim_view(expl.summary).empty() ? 0.0 : sentence_uncertainty(expl.summary, scorer, "summary");
  return assumptions + summary;
}

struct HedgeCounts {
  std::size_t epistemic = 0;
  std::size_t doxatic = 0;
  std::size_t conditional = 0;
  std::size_t tokens = 0;

  std::size_t cues() const { return epistemic + doxatic + conditional; }

  HedgeCounts& operator+=(const HedgeCounts& o) {
    epistemic += o.epistemic;
    doxatic += o.doxatic;
    conditional += o.conditional;
    tokens += o.tokens;
    return *this;
  }

  friend bool operator==(const HedgeCounts&, const HedgeCounts&) = default;
};

inline void to_json(json& j, const HedgeCounts& c) {
  j = json{{"epistemic", c.epistemic}, {"doxatic", c.doxatic}, {"conditional", c.conditional}, {"tokens", c.tokens}};
}

inline void from_json(const json& j, HedgeCounts& c) {
  j.at("epistemic").get_to(c.epistemic);
  j.at("doxatic").get_to(c.doxatic);
  j.at("conditional").get_to(c.conditional);
  j.at("tokens").get_to(c.tokens);
}

inline HedgeCounts classify_hedges(const std::string& sentence, const HedgeTagger& tagger) {
  HedgeCounts c;
  for (const auto& t : tagger.tag(sentence)) {
    ++c.tokens;
    switch (t.label) {
      case HedgeLabel::epistemic: ++c.epistemic; break;
      case HedgeLabel::doxatic: ++c.doxatic; break;
      case HedgeLabel::conditional: ++c.conditional; break;
      default: break;
    }
  }
  return c;
}

// Over step clauses, assumptions and the summary.
inline HedgeCounts classify_hedges(const StructuredExplanation& expl, const HedgeTagger& tagger) {
  HedgeCounts c;
  for (const auto& t : explanation_texts(expl, NounScope::all)) {
    if (!text::trim_view(t).empty()) c += classify_hedges(t, tagger);
  }
  return c;
}

inline double hedge_ratio(const HedgeCounts& c) {
  if (c.tokens == 0) throw ValidationError("hedge ratio undefined for zero tokens");
  return static_cast<double>(c.cues()) / static_cast<double>(c.tokens);
}

inline bool is_self_evident(const IbeFeatureVector& f) { return f.depth == 1 && f.drift == 0; }

namespace detail {

template <class F>
auto feature_step(const char* name, F&& f) {
  try {
    return f();
  } catch (const ScorerError& e) {
    throw ScorerError(std::string(name) + ": " + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError(std::string(name) + ": " + e.what());
  }
}

}  // namespace detail

inline IbeFeatureVector compute_features(const EntailmentHypothesis& hyp, const StructuredExplanation& expl,
                                         const ProofResult& proof, const ScorerSuite& scorers,
                                         const MetricsOptions& opts = {}) {
  if (!scorers.entailment || !scorers.certainty || !scorers.pos) throw UsageError("scorer suite is incomplete");
  IbeFeatureVector f;
  f.consistency = consistency(proof);
  f.depth = proof.depth();
  f.drift = detail::feature_step("drift", [&] { return concept_drift(hyp, expl, *scorers.pos, opts.noun_scope); });
  f.coherence = detail::feature_step("coherence", [&] { return stepwise_entailment(expl, *scorers.entailment); });
  f.uncertainty = detail::feature_step(
      "uncertainty", [&] { return linguistic_uncertainty(expl, *scorers.certainty, opts.uncertainty_mode); });
  return f;
}

}  // namespace ibe
