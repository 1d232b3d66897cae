#pragma once

// Domain types shared across the pipeline plus their JSON encodings.

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ibe_eval/error.hpp"
#include "ibe_eval/text.hpp"

namespace ibe {

using json = nlohmann::json;

enum class Direction { cause, effect };
enum class Source { copa, ecare, custom };

inline std::string_view to_string(Direction d) { return d == Direction::cause ? "cause" : "effect"; }

inline Direction parse_direction(std::string_view s) {
  if (s == "cause") return Direction::cause;
  if (s == "effect") return Direction::effect;
  throw ValidationError("bad direction \"" + std::string(s) + "\" (expected cause|effect)");
}

inline std::string_view to_string(Source s) {
  switch (s) {
    case Source::copa: return "copa";
    case Source::ecare: return "ecare";
    case Source::custom: return "custom";
  }
  return "custom";
}

inline Source parse_source(std::string_view s) {
  if (s == "copa") return Source::copa;
  if (s == "ecare") return Source::ecare;
  if (s == "custom") return Source::custom;
  throw ValidationError("bad source \"" + std::string(s) + "\" (expected copa|ecare|custom)");
}

struct CqaExample {
  std::string id;
  std::string context;
  Direction direction = Direction::cause;
  std::vector<std::string> candidates;
  std::size_t gold_index = 0;
  Source source = Source::custom;

  friend bool operator==(const CqaExample&, const CqaExample&) = default;
};

// Checks every CqaExample invariant and reports the first violation.
inline const CqaExample& validate_example(const CqaExample& ex) {
  if (text::trim_view(ex.context).empty()) throw ValidationError("example " + ex.id + ": empty context");
  if (ex.candidates.size() < 2) throw ValidationError("example " + ex.id + ": fewer than 2 candidates");
  for (const auto& c : ex.candidates) {
    if (text::trim_view(c).empty()) throw ValidationError("example " + ex.id + ": empty candidate");
  }
  if (ex.gold_index >= ex.candidates.size()) throw ValidationError("example " + ex.id + ": gold index out of range");
  return ex;
}

struct EntailmentHypothesis {
  std::string example_id;
  std::size_t candidate_index = 0;
  std::string premise;
  std::string conclusion;

  friend bool operator==(const EntailmentHypothesis&, const EntailmentHypothesis&) = default;
};

struct ExplanationStep {
  std::size_t index = 1;
  std::string if_clause;
  std::string then_clause;
  std::string assumption;

  friend bool operator==(const ExplanationStep&, const ExplanationStep&) = default;
};

struct StructuredExplanation {
  EntailmentHypothesis hypothesis;
  std::vector<ExplanationStep> steps;
  std::string summary;
  std::string raw_response;
  std::vector<std::string> warnings;

  friend bool operator==(const StructuredExplanation&, const StructuredExplanation&) = default;
};

inline void validate_explanation(const StructuredExplanation& e) {
  if (e.steps.empty()) throw ValidationError("explanation has no steps");
  for (std::size_t i = 0; i < e.steps.size(); ++i) {
    const auto& s = e.steps[i];
    if (s.index != i + 1) throw ValidationError("explanation step indices must be consecutive from 1");
    if (text::trim_view(s.if_clause).empty() || text::trim_view(s.then_clause).empty()) {
      throw ValidationError("explanation step " + std::to_string(s.index) + " has an empty clause");
    }
  }
}

// ---------------------------------------------------------------------------
// Logic programs

struct Term {
  enum class Kind { constant, variable };
  Kind kind = Kind::constant;
  std::string name;

  static Term constant(std::string n) { return {Kind::constant, std::move(n)}; }
  static Term variable(std::string n) { return {Kind::variable, std::move(n)}; }
  bool is_variable() const { return kind == Kind::variable; }

  friend bool operator==(const Term&, const Term&) = default;
  friend auto operator<=>(const Term&, const Term&) = default;
};

struct Atom {
  std::string predicate;
  std::vector<Term> args;

  std::size_t arity() const { return args.size(); }
  bool is_ground() const {
    for (const auto& t : args)
      if (t.is_variable()) return false;
    return true;
  }

  friend bool operator==(const Atom&, const Atom&) = default;
  friend auto operator<=>(const Atom&, const Atom&) = default;
};

struct Rule {
  Atom head;
  std::vector<Atom> body;

  friend bool operator==(const Rule&, const Rule&) = default;
};

struct LogicProgram {
  std::vector<Rule> rules;
  std::vector<Atom> facts;
  Atom query;

  friend bool operator==(const LogicProgram&, const LogicProgram&) = default;
};

// Throws on invariant violations; returns non-fatal warnings.
inline std::vector<std::string> validate_program(const LogicProgram& p) {
  if (p.facts.empty()) throw NoFacts();
  if (p.query.predicate.empty()) throw MissingQuery();
  for (const auto& f : p.facts) {
    if (!f.is_ground()) throw ValidationError("fact " + f.predicate + " is not ground");
  }
  for (const auto& r : p.rules) {
    if (r.body.empty()) throw ValidationError("rule " + r.head.predicate + " has an empty body");
  }
  std::vector<std::string> warnings;
  for (const auto& f : p.facts) {
    if (f == p.query) {
      warnings.push_back("query " + p.query.predicate + " appears verbatim as a fact");
      break;
    }
  }
  for (std::size_t i = 0; i < p.rules.size(); ++i) {
    for (const auto& b : p.rules[i].body) {
      if (b == p.rules[i].head) warnings.push_back("rule " + std::to_string(i) + " is a self-loop");
    }
  }
  return warnings;
}

// ---------------------------------------------------------------------------
// Proofs

struct ClauseRef {
  enum class Kind { rule, fact };
  Kind kind = Kind::rule;
  std::size_t index = 0;

  friend bool operator==(const ClauseRef&, const ClauseRef&) = default;
};

struct ProofDiagnostics {
  std::size_t rules_used = 0;  // rule count before the parsimony floor
  double best_score = 0.0;     // best proof score found, accepted or not
  bool cutoff = false;         // max_depth pruned part of the search
  std::size_t expansions = 0;

  friend bool operator==(const ProofDiagnostics&, const ProofDiagnostics&) = default;
};

class ProofResult {
 public:
  ProofResult() = default;

  static ProofResult unsatisfied(ProofDiagnostics diag = {}) {
    ProofResult r;
    r.diagnostics_ = diag;
    return r;
  }

  // Enforces: satisfied => depth == |chain| >= 1 and score > threshold.
  static ProofResult accepted(double score, std::vector<ClauseRef> chain, double threshold,
                              ProofDiagnostics diag = {}) {
    if (chain.empty()) throw ValidationError("satisfied proof requires a nonempty chain");
    if (!(score > threshold) || score > 1.0) throw ValidationError("satisfied proof score out of range");
    ProofResult r;
    r.satisfied_ = true;
    r.score_ = score;
    r.depth_ = chain.size();
    r.chain_ = std::move(chain);
    r.diagnostics_ = diag;
    return r;
  }

  // General constructor used by decoders; rejects inconsistent combinations.
  static ProofResult make(bool satisfied, double score, std::size_t depth, std::vector<ClauseRef> chain,
                          ProofDiagnostics diag = {}) {
    if (satisfied) {
      if (depth == 0 || depth != chain.size()) throw ValidationError("satisfied proof requires depth = |chain| >= 1");
      if (!(score > 0.0) || score > 1.0) throw ValidationError("satisfied proof score out of range");
    } else if (depth != 0 || !chain.empty() || score != 0.0) {
      throw ValidationError("unsatisfied proof must have depth 0, empty chain and score 0");
    }
    ProofResult r;
    r.satisfied_ = satisfied;
    r.score_ = score;
    r.depth_ = depth;
    r.chain_ = std::move(chain);
    r.diagnostics_ = diag;
    return r;
  }

  bool satisfied() const { return satisfied_; }
  double proof_score() const { return score_; }
  std::size_t depth() const { return depth_; }
  const std::vector<ClauseRef>& chain() const { return chain_; }
  const ProofDiagnostics& diagnostics() const { return diagnostics_; }

  friend bool operator==(const ProofResult&, const ProofResult&) = default;

 private:
  bool satisfied_ = false;
  double score_ = 0.0;
  std::size_t depth_ = 0;
  std::vector<ClauseRef> chain_;
  ProofDiagnostics diagnostics_;
};

// ---------------------------------------------------------------------------
// Features and scoring

inline constexpr std::array<std::string_view, 5> kFeatureNames = {"consistency", "depth", "drift", "coherence",
                                                                   "uncertainty"};

inline bool is_feature_name(std::string_view name) {
  for (auto f : kFeatureNames)
    if (f == name) return true;
  return false;
}

struct IbeFeatureVector {
  int consistency = 0;
  std::size_t depth = 0;
  std::size_t drift = 0;
  double coherence = 0.0;
  double uncertainty = 0.0;

  double value(std::string_view name) const {
    if (name == "consistency") return consistency;
    if (name == "depth") return static_cast<double>(depth);
    if (name == "drift") return static_cast<double>(drift);
    if (name == "coherence") return coherence;
    if (name == "uncertainty") return uncertainty;
    throw UsageError("unknown feature \"" + std::string(name) + "\"");
  }

  friend bool operator==(const IbeFeatureVector&, const IbeFeatureVector&) = default;
};

inline void validate_features(const IbeFeatureVector& f) {
  if (f.consistency != 0 && f.consistency != 1) throw ValidationError("consistency must be 0 or 1");
  if (f.consistency == 0 && f.depth != 0) throw ValidationError("inconsistent explanation must have depth 0");
  if (f.coherence < -1.0 || f.coherence > 1.0) throw ValidationError("coherence outside [-1, 1]");
  if (f.uncertainty < 0.0) throw ValidationError("negative uncertainty");
}

struct ScoredCandidate {
  std::size_t candidate_index = 0;
  IbeFeatureVector features;
  double plausibility = 0.0;
  bool selected = false;
};

struct Standardization {
  std::map<std::string, double> mean;
  std::map<std::string, double> stddev;
};

struct LinearModel {
  std::vector<std::string> feature_order;
  std::map<std::string, double> weights;
  double intercept = 0.0;
  std::optional<Standardization> standardization;
  std::string training_fingerprint;
  bool rank_deficient = false;
  bool constant_labels = false;
};

inline void validate_model(const LinearModel& m) {
  if (m.feature_order.size() != m.weights.size()) throw ValidationError("model feature_order/weights mismatch");
  for (const auto& f : m.feature_order) {
    if (!m.weights.contains(f)) throw ValidationError("model has no weight for feature " + f);
  }
}

inline std::string significance_marker(double p) {
  if (p < 0.001) return "***";
  if (p < 0.01) return "**";
  if (p < 0.05) return "*";
  return "";
}

struct RegressionEntry {
  std::string feature;
  std::size_t n = 0;
  double coefficient = 0.0;
  double std_error = 0.0;
  double t_statistic = 0.0;
  double p_value = 1.0;
  std::string marker;
};

// ---------------------------------------------------------------------------
// JSON encodings

inline void to_json(json& j, const CqaExample& e) {
  j = json{{"id", e.id},
           {"context", e.context},
           {"direction", to_string(e.direction)},
           {"candidates", e.candidates},
           {"gold_index", e.gold_index},
           {"source", to_string(e.source)}};
}

inline void from_json(const json& j, CqaExample& e) {
  try {
    e.id = j.at("id").get<std::string>();
    e.context = j.at("context").get<std::string>();
    e.direction = parse_direction(j.at("direction").get<std::string>());
    e.candidates = j.at("candidates").get<std::vector<std::string>>();
    auto gold = j.at("gold_index").get<long long>();
    if (gold < 0) throw ValidationError("example " + e.id + ": gold index out of range");
    e.gold_index = static_cast<std::size_t>(gold);
    e.source = j.contains("source") ? parse_source(j.at("source").get<std::string>()) : Source::custom;
  } catch (const json::exception& ex) {
    throw DataError(std::string("bad example record: ") + ex.what());
  }
}

inline void to_json(json& j, const EntailmentHypothesis& h) {
  j = json{{"example_id", h.example_id},
           {"candidate_index", h.candidate_index},
           {"premise", h.premise},
           {"conclusion", h.conclusion}};
}

inline void from_json(const json& j, EntailmentHypothesis& h) {
  j.at("example_id").get_to(h.example_id);
  j.at("candidate_index").get_to(h.candidate_index);
  j.at("premise").get_to(h.premise);
  j.at("conclusion").get_to(h.conclusion);
}

inline void to_json(json& j, const ExplanationStep& s) {
  j = json{{"index", s.index}, {"if", s.if_clause}, {"then", s.then_clause}, {"assumption", s.assumption}};
}

inline void from_json(const json& j, ExplanationStep& s) {
  j.at("index").get_to(s.index);
  j.at("if").get_to(s.if_clause);
  j.at("then").get_to(s.then_clause);
  j.at("assumption").get_to(s.assumption);
}

inline void to_json(json& j, const StructuredExplanation& e) {
  j = json{{"hypothesis", e.hypothesis},
           {"steps", e.steps},
           {"summary", e.summary},
           {"raw_response", e.raw_response},
           {"warnings", e.warnings}};
}

inline void from_json(const json& j, StructuredExplanation& e) {
  j.at("hypothesis").get_to(e.hypothesis);
  j.at("steps").get_to(e.steps);
  j.at("summary").get_to(e.summary);
  j.at("raw_response").get_to(e.raw_response);
  e.warnings = j.value("warnings", std::vector<std::string>{});
}

inline void to_json(json& j, const Term& t) {
  j = json{{"kind", t.is_variable() ? "variable" : "constant"}, {"name", t.name}};
}

inline void from_json(const json& j, Term& t) {
  auto kind = j.at("kind").get<std::string>();
  if (kind != "variable" && kind != "constant") throw DataError("bad term kind " + kind);
  t.kind = kind == "variable" ? Term::Kind::variable : Term::Kind::constant;
  j.at("name").get_to(t.name);
}

inline void to_json(json& j, const Atom& a) { j = json{{"predicate", a.predicate}, {"args", a.args}}; }

inline void from_json(const json& j, Atom& a) {
  j.at("predicate").get_to(a.predicate);
  j.at("args").get_to(a.args);
}

inline void to_json(json& j, const Rule& r) { j = json{{"head", r.head}, {"body", r.body}}; }

inline void from_json(const json& j, Rule& r) {
  j.at("head").get_to(r.head);
  j.at("body").get_to(r.body);
}

inline void to_json(json& j, const LogicProgram& p) {
  j = json{{"rules", p.rules}, {"facts", p.facts}, {"query", p.query}};
}

inline void from_json(const json& j, LogicProgram& p) {
  j.at("rules").get_to(p.rules);
  j.at("facts").get_to(p.facts);
  j.at("query").get_to(p.query);
}

inline void to_json(json& j, const ClauseRef& c) {
  j = json{{"kind", c.kind == ClauseRef::Kind::rule ? "rule" : "fact"}, {"index", c.index}};
}

inline void from_json(const json& j, ClauseRef& c) {
  c.kind = j.at("kind").get<std::string>() == "fact" ? ClauseRef::Kind::fact : ClauseRef::Kind::rule;
  j.at("index").get_to(c.index);
}

inline void to_json(json& j, const ProofResult& r) {
  j = json{{"satisfied", r.satisfied()},
           {"proof_score", r.proof_score()},
           {"depth", r.depth()},
           {"chain", r.chain()},
           {"diagnostics",
            {{"rules_used", r.diagnostics().rules_used},
             {"best_score", r.diagnostics().best_score},
             {"cutoff", r.diagnostics().cutoff},
             {"expansions", r.diagnostics().expansions}}}};
}

inline void from_json(const json& j, ProofResult& r) {
  ProofDiagnostics d;
  if (j.contains("diagnostics")) {
    const auto& dj = j.at("diagnostics");
    d.rules_used = dj.value("rules_used", std::size_t{0});
    d.best_score = dj.value("best_score", 0.0);
    d.cutoff = dj.value("cutoff", false);
    d.expansions = dj.value("expansions", std::size_t{0});
  }
  r = ProofResult::make(j.at("satisfied").get<bool>(), j.at("proof_score").get<double>(),
                        j.at("depth").get<std::size_t>(), j.at("chain").get<std::vector<ClauseRef>>(), d);
}

inline void to_json(json& j, const IbeFeatureVector& f) {
  j = json{{"consistency", f.consistency},
           {"depth", f.depth},
           {"drift", f.drift},
           {"coherence", f.coherence},
           {"uncertainty", f.uncertainty}};
}

inline void from_json(const json& j, IbeFeatureVector& f) {
  j.at("consistency").get_to(f.consistency);
  j.at("depth").get_to(f.depth);
  j.at("drift").get_to(f.drift);
  j.at("coherence").get_to(f.coherence);
  j.at("uncertainty").get_to(f.uncertainty);
  validate_features(f);
}

inline void to_json(json& j, const ScoredCandidate& c) {
  j = json{{"candidate_index", c.candidate_index},
           {"features", c.features},
           {"plausibility", c.plausibility},
           {"selected", c.selected}};
}

inline void from_json(const json& j, ScoredCandidate& c) {
  j.at("candidate_index").get_to(c.candidate_index);
  j.at("features").get_to(c.features);
  j.at("plausibility").get_to(c.plausibility);
  j.at("selected").get_to(c.selected);
}

inline void to_json(json& j, const LinearModel& m) {
  j = json{{"feature_order", m.feature_order},
           {"weights", m.weights},
           {"intercept", m.intercept},
           {"training_fingerprint", m.training_fingerprint},
           {"rank_deficient", m.rank_deficient},
           {"constant_labels", m.constant_labels}};
  if (m.standardization) {
    j["standardization"] = {{"mean", m.standardization->mean}, {"stddev", m.standardization->stddev}};
  } else {
    j["standardization"] = nullptr;
  }
}

inline void from_json(const json& j, LinearModel& m) {
  j.at("feature_order").get_to(m.feature_order);
  j.at("weights").get_to(m.weights);
  j.at("intercept").get_to(m.intercept);
  m.training_fingerprint = j.value("training_fingerprint", std::string{});
  m.rank_deficient = j.value("rank_deficient", false);
  m.constant_labels = j.value("constant_labels", false);
  if (j.contains("standardization") && !j.at("standardization").is_null()) {
    Standardization s;
    j.at("standardization").at("mean").get_to(s.mean);
    j.at("standardization").at("stddev").get_to(s.stddev);
    m.standardization = std::move(s);
  }
  validate_model(m);
}

inline void to_json(json& j, const RegressionEntry& e) {
  j = json{{"feature", e.feature},     {"n", e.n},
           {"coefficient", e.coefficient}, {"std_error", e.std_error},
           {"t_statistic", e.t_statistic}, {"p_value", e.p_value},
           {"significance", e.marker}};
}

inline void from_json(const json& j, RegressionEntry& e) {
  j.at("feature").get_to(e.feature);
  j.at("n").get_to(e.n);
  j.at("coefficient").get_to(e.coefficient);
  j.at("std_error").get_to(e.std_error);
  j.at("t_statistic").get_to(e.t_statistic);
  j.at("p_value").get_to(e.p_value);
  j.at("significance").get_to(e.marker);
}

}  // namespace ibe
