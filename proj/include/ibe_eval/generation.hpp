#pragma once

// Explanation generation: entailment-form conversion, prompt construction,
// response parsing, and the LLM-as-a-judge baseline.

#include <cctype>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ibe_eval/core.hpp"
#include "ibe_eval/transcript.hpp"

namespace ibe {

inline EntailmentHypothesis to_eev(const CqaExample& ex, std::size_t candidate_index) {
  if (candidate_index >= ex.candidates.size()) {
    throw UsageError("candidate index " + std::to_string(candidate_index) + " out of range for example " + ex.id);
  }
  const auto& cand = ex.candidates[candidate_index];
  if (ex.direction == Direction::cause) return {ex.id, candidate_index, cand, ex.context};
  return {ex.id, candidate_index, ex.context, cand};
}

struct GenerationOptions {
  std::string model = "gpt-3.5-turbo";
  double temperature = 0.0;
  int max_tokens = 1024;
};

namespace prompts {

inline constexpr std::string_view kExplanationInstructions =
    R"(You are given a causal question and one answer option. Explain how the option could be the correct answer.

Instructions:
1. Convert the question and the option into an entailment form with a Premise and a Conclusion.
   - If the question asks for the CAUSE, the option is the premise and the context is the conclusion.
   - If the question asks for the EFFECT, the context is the premise and the option is the conclusion.
2. Write a step-by-step explanation showing how the premise leads to the conclusion.
   - Enumerate the steps with the header "Step N:" (Step 1:, Step 2:, ...).
   - Each step is a single "IF ..., THEN ..." statement.
   - Under each step, state the causal or commonsense assumption it relies on, on a line starting with "Assumption:".
3. End with a line starting with "Summary:" that summarizes the explanation.
)";

// Fixed in-context example (cause direction).
inline constexpr std::string_view kExplanationExample =
    R"(Example:
Context: The man's clothes were soaking wet.
Question: What was the cause?
Option: He walked home in the rain.

Premise: He walked home in the rain.
Conclusion: The man's clothes were soaking wet.
Step 1: IF a man walks home in the rain, THEN rain falls on his clothes.
Assumption: Walking outdoors during rain exposes clothing to falling water.
Step 2: IF rain falls on his clothes, THEN his clothes absorb the water.
Assumption: Fabric absorbs water that lands on it.
Step 3: IF his clothes absorb the water, THEN the man's clothes are soaking wet.
Assumption: Clothing that has absorbed a lot of water is soaking wet.
Summary: Walking home in the rain exposed the man's clothes to water, which the fabric absorbed until the clothes were soaking wet.
)";

}  // namespace prompts

inline std::string question_text(Direction d) {
  return d == Direction::cause ? "What was the cause?" : "What happened as a result?";
}

inline std::string build_explanation_prompt(const CqaExample& ex, std::size_t candidate_index) {
  validate_example(ex);
  if (candidate_index >= ex.candidates.size()) throw UsageError("candidate index out of range");
  std::string p;
  p += prompts::kExplanationInstructions;
  p += "\n";
  p += prompts::kExplanationExample;
  p += "\nNow write the explanation for the following.\n";
  p += "Context: " + text::trim(ex.context) + "\n";
  p += "Question: " + question_text(ex.direction) + "\n";
  p += "Option: " + text::trim(ex.candidates[candidate_index]) + "\n";
  return p;
}

namespace detail {

inline bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

// Case-insensitive search for `word` as a whole word at or after `from`.
inline std::size_t find_word(std::string_view s, std::string_view word, std::size_t from = 0) {
  for (std::size_t i = from; i + word.size() <= s.size(); ++i) {
    if (!text::starts_with_ci(s.substr(i), word)) continue;
    if (i > 0 && is_word_char(s[i - 1])) continue;
    if (i + word.size() < s.size() && is_word_char(s[i + word.size()])) continue;
    return i;
  }
  return std::string_view::npos;
}

// `label` (whole word, optional plural 's') followed by optional spaces/markup
// and a colon. Returns [start, end-after-colon) or npos.
inline std::pair<std::size_t, std::size_t> find_label(std::string_view s, std::string_view label, std::size_t from = 0) {
  for (std::size_t i = from; i + label.size() <= s.size(); ++i) {
    if (!text::starts_with_ci(s.substr(i), label)) continue;
    if (i > 0 && std::isalpha(static_cast<unsigned char>(s[i - 1]))) continue;
    std::size_t j = i + label.size();
    if (j < s.size() && (s[j] == 's' || s[j] == 'S')) ++j;
    while (j < s.size() && (s[j] == ' ' || s[j] == '*' || s[j] == '\t')) ++j;
    if (j < s.size() && s[j] == ':') return {i, j + 1};
  }
  return {std::string_view::npos, std::string_view::npos};
}

struct StepHeader {
  std::size_t start;
  std::size_t body;
  int number;
};

inline std::vector<StepHeader> find_step_headers(std::string_view s) {
  std::vector<StepHeader> out;
  std::size_t i = 0;
  while ((i = find_word(s, "step", i)) != std::string_view::npos) {
    std::size_t j = i + 4;
    while (j < s.size() && (s[j] == ' ' || s[j] == '#' || s[j] == '\t')) ++j;
    std::size_t digits = j;
    while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
    if (j > digits && j - digits < 6) {
      int n = std::stoi(std::string(s.substr(digits, j - digits)));
      std::size_t k = j;
      while (k < s.size() && (s[k] == ' ' || s[k] == '*')) ++k;
      if (k < s.size() && (s[k] == ':' || s[k] == '.' || s[k] == ')' || s[k] == '-')) {
        out.push_back({i, k + 1, n});
        i = k + 1;
        continue;
      }
    }
    i += 4;
  }
  return out;
}

// Collapse whitespace, strip markup and edge punctuation.
inline std::string clean_clause(std::string_view s) {
  std::string out;
  bool space = false;
  for (char c : s) {
    if (c == '*' || c == '#') continue;
    if (text::is_space(c)) {
      space = !out.empty();
      continue;
    }
    if (space) out.push_back(' ');
    space = false;
    out.push_back(c);
  }
  auto edge = [](char c) { return c == ',' || c == '.' || c == ';' || c == ':' || c == ' ' || c == '-'; };
  while (!out.empty() && edge(out.back())) out.pop_back();
  std::size_t b = 0;
  while (b < out.size() && edge(out[b])) ++b;
  return out.substr(b);
}

}  // namespace detail

// Extracts "Step N:" If-Then statements, their assumptions, and the summary.
// Steps lacking an IF or THEN marker are dropped with a warning; the kept
// steps are renumbered from 1.
inline StructuredExplanation parse_explanation_response(std::string_view raw, const EntailmentHypothesis& hypothesis) {
  if (text::trim_view(raw).empty()) throw NoStepsFound();
  StructuredExplanation out;
  out.hypothesis = hypothesis;
  out.raw_response = std::string(raw);

  auto headers = detail::find_step_headers(raw);
  if (headers.empty()) throw NoStepsFound();

  auto [sum_start, sum_body] = detail::find_label(raw, "summary", headers.back().body);
  std::size_t tail_end = sum_start == std::string_view::npos ? raw.size() : sum_start;
  if (sum_start != std::string_view::npos) {
    out.summary = detail::clean_clause(raw.substr(sum_body));
  } else {
    out.warnings.push_back("no summary section");
  }

  std::size_t kept = 0;
  for (std::size_t h = 0; h < headers.size(); ++h) {
    std::size_t end = h + 1 < headers.size() ? headers[h + 1].start : tail_end;
    std::string_view seg = raw.substr(headers[h].body, end - headers[h].body);
    std::string label = "step " + std::to_string(headers[h].number);

    auto if_pos = detail::find_word(seg, "if");
    auto then_pos = if_pos == std::string_view::npos ? std::string_view::npos : detail::find_word(seg, "then", if_pos + 2);
    if (if_pos == std::string_view::npos || then_pos == std::string_view::npos) {
      out.warnings.push_back(label + ": missing IF/THEN markers, dropped");
      continue;
    }
    auto [as_start, as_body] = detail::find_label(seg, "assumption", then_pos + 4);
    std::size_t then_end = as_start == std::string_view::npos ? seg.size() : as_start;

    ExplanationStep step;
    step.if_clause = detail::clean_clause(seg.substr(if_pos + 2, then_pos - (if_pos + 2)));
    step.then_clause = detail::clean_clause(seg.substr(then_pos + 4, then_end - (then_pos + 4)));
    if (as_start != std::string_view::npos) step.assumption = detail::clean_clause(seg.substr(as_body));
    if (step.if_clause.empty() || step.then_clause.empty()) {
      out.warnings.push_back(label + ": empty IF or THEN clause, dropped");
      continue;
    }
    if (step.assumption.empty()) out.warnings.push_back(label + ": no assumption");
    step.index = ++kept;
    out.steps.push_back(std::move(step));
  }
  if (out.steps.empty()) {
    throw MalformedStep("none of the " + std::to_string(headers.size()) + " steps has IF and THEN markers");
  }
  return out;
}

// One explanation per candidate, in candidate order.
inline std::vector<StructuredExplanation> generate_explanations(const CqaExample& ex, LlmClient* client,
                                                                TranscriptStore& store,
                                                                const GenerationOptions& opts = {}) {
  validate_example(ex);
  std::vector<StructuredExplanation> out;
  out.reserve(ex.candidates.size());
  for (std::size_t i = 0; i < ex.candidates.size(); ++i) {
    LlmRequest req{opts.model, build_explanation_prompt(ex, i), opts.temperature, opts.max_tokens};
    std::string what = "explanation of example " + ex.id + " candidate " + std::to_string(i);
    std::string raw = store.complete(req, client, what);
    out.push_back(parse_explanation_response(raw, to_eev(ex, i)));
  }
  return out;
}

// Deterministic plain-text rendering of a parsed explanation.
inline std::string render_explanation(const StructuredExplanation& e) {
  std::string out;
  for (const auto& s : e.steps) {
    out += "Step " + std::to_string(s.index) + ": IF " + s.if_clause + ", THEN " + s.then_clause + ".\n";
    if (!s.assumption.empty()) out += "Assumption: " + s.assumption + ".\n";
  }
  if (!e.summary.empty()) out += "Summary: " + e.summary + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// LLM-as-a-judge baseline

inline std::string build_judge_prompt(const CqaExample& ex, const StructuredExplanation& first,
                                      const StructuredExplanation& second) {
  validate_example(ex);
  std::string p =
      "You are given a causal question and two competing explanations, one for each answer option.\n"
      "Identify which explanation is the best and most plausible.\n\n";
  p += "Context: " + text::trim(ex.context) + "\n";
  p += "Question: " + question_text(ex.direction) + "\n\n";
  const StructuredExplanation* pair[2] = {&first, &second};
  for (int k = 0; k < 2; ++k) {
    const auto& e = *pair[k];
    p += "Explanation " + std::to_string(k + 1) + " (Option: " + text::trim(ex.candidates.at(e.hypothesis.candidate_index)) +
         ")\n";
    p += render_explanation(e) + "\n";
  }
  p += "Which explanation is more plausible? Answer with \"Explanation 1\" or \"Explanation 2\".\n";
  return p;
}

// Maps a judge response to 0 (first) or 1 (second).
inline std::size_t parse_judge_verdict(std::string_view raw) {
  auto s = text::trim_view(raw);
  if (s.empty()) throw UnparseableVerdict(std::string(raw));
  for (std::string_view label : {"explanation", "option"}) {
    std::size_t i = 0;
    while ((i = detail::find_word(s, label, i)) != std::string_view::npos) {
      std::size_t j = i + label.size();
      while (j < s.size() && (s[j] == ' ' || s[j] == '#' || s[j] == '*')) ++j;
      if (j < s.size() && (s[j] == '1' || s[j] == '2') && (j + 1 == s.size() || !std::isdigit(static_cast<unsigned char>(s[j + 1])))) {
        return s[j] == '1' ? 0 : 1;
      }
      i = j;
    }
  }
  std::size_t k = 0;
  while (k < s.size() && (s[k] == '*' || s[k] == '(' || s[k] == '[')) ++k;
  if (k < s.size() && (s[k] == '1' || s[k] == '2') &&
      (k + 1 == s.size() || !std::isalnum(static_cast<unsigned char>(s[k + 1])))) {
    return s[k] == '1' ? 0 : 1;
  }
  throw UnparseableVerdict(std::string(raw));
}

inline std::size_t judge_baseline(const CqaExample& ex, const std::vector<StructuredExplanation>& explanations,
                                  LlmClient* client, TranscriptStore& store, const GenerationOptions& opts = {}) {
  if (explanations.size() != 2) throw UsageError("judge baseline needs exactly two explanations");
  LlmRequest req{opts.model, build_judge_prompt(ex, explanations[0], explanations[1]), opts.temperature, opts.max_tokens};
  return parse_judge_verdict(store.complete(req, client, "judge verdict for example " + ex.id));
}

}  // namespace ibe
