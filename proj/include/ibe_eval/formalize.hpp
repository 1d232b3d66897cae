#pragma once

// Explanation -> logic program, via LLM autoformalization or a deterministic
// textual encoder.

#include <string>
#include <string_view>
#include <vector>

#include "ibe_eval/generation.hpp"
#include "ibe_eval/logic.hpp"

namespace ibe {

inline std::string build_formalization_prompt(const EntailmentHypothesis& hyp, const StructuredExplanation& expl) {
  if (expl.steps.empty()) throw ValidationError("cannot formalize an explanation with no steps");
  std::string p =
      "Translate the explanation below into a Prolog program that checks whether the premise entails the "
      "conclusion.\n"
      "- Convert each IF-THEN step into one implication rule of the form \"then_atom :- if_atom.\"\n"
      "- Convert the premise into grounding facts of the form \"atom.\"\n"
      "- Convert the conclusion into a single query of the form \"?- atom.\"\n"
      "- Use lowercase snake_case names for predicates and constants; variables start with an uppercase letter.\n"
      "- Reuse the same predicate names wherever the same concept appears.\n"
      "Write the program in three labeled sections, exactly in this layout:\n"
      "RULES:\n<one rule per line>\nFACTS:\n<one fact per line>\nQUERY:\n?- <atom>.\n\n";
  p += "Premise: " + text::trim(hyp.premise) + "\n";
  p += "Conclusion: " + text::trim(hyp.conclusion) + "\n";
  p += "Explanation:\n";
  for (const auto& s : expl.steps) {
    p += "Step " + std::to_string(s.index) + ": IF " + s.if_clause + ", THEN " + s.then_clause + ".\n";
  }
  return p;
}

// Pulls the RULES/FACTS/QUERY sections out of an LLM response and parses
// them. Code fences and prose outside the sections are ignored.
inline LogicProgram parse_formalization_response(std::string_view raw) {
  std::string body;
  bool any_section = false;
  bool in_section = false;
  std::istringstream in{std::string(raw)};
  for (std::string line; std::getline(in, line);) {
    auto t = text::trim_view(line);
    std::string_view stripped = t;
    while (!stripped.empty() && (stripped.front() == '#' || stripped.front() == '*')) stripped.remove_prefix(1);
    stripped = text::trim_view(stripped);
    bool label = false;
    for (std::string_view name : {"RULES", "FACTS", "QUERY"}) {
      if (text::starts_with_ci(stripped, name)) {
        auto rest = text::trim_view(stripped.substr(name.size()));
        while (!rest.empty() && rest.front() == '*') rest.remove_prefix(1);
        if (!rest.empty() && rest.front() == ':') {
          label = true;
          any_section = in_section = true;
          rest.remove_prefix(1);
          while (!rest.empty() && rest.front() == '*') rest.remove_prefix(1);
          if (!text::trim_view(rest).empty()) body += std::string(rest) + "\n";
        }
        break;
      }
    }
    if (label) continue;
    if (t.rfind("```", 0) == 0) continue;
    if (in_section) body += std::string(t) + "\n";
  }
  if (!any_section) {
    SyntaxError err("response has no RULES/FACTS/QUERY sections", 1, 1);
    err.attach_raw(std::string(raw));
    throw err;
  }
  try {
    return logic::parse_logic_text(body);
  } catch (SyntaxError& e) {
    e.attach_raw(std::string(raw));
    throw;
  }
}

inline LogicProgram autoformalize(const EntailmentHypothesis& hyp, const StructuredExplanation& expl,
                                  LlmClient* client, TranscriptStore& store, const GenerationOptions& opts = {}) {
  LlmRequest req{opts.model, build_formalization_prompt(hyp, expl), opts.temperature, opts.max_tokens};
  std::string what = "formalization of example " + hyp.example_id + " candidate " + std::to_string(hyp.candidate_index);
  auto program = parse_formalization_response(store.complete(req, client, what));
  validate_program(program);
  return program;
}

// Lowercase, non-alphanumerics to '_', runs collapsed, edges trimmed,
// at most 64 characters. A leading digit gets a "p_" prefix.
inline std::string normalize_predicate(std::string_view s) {
  std::string out;
  for (char ch : s) {
    auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c) && c < 0x80) {
      out.push_back(static_cast<char>(std::tolower(c)));
    } else if (!out.empty() && out.back() != '_') {
      out.push_back('_');
    }
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  if (out.empty()) return "empty";
  if (std::isdigit(static_cast<unsigned char>(out.front()))) out = "p_" + out;
  if (out.size() > 64) out.resize(64);
  while (out.back() == '_') out.pop_back();
  return out;
}

// Premise -> one 0-ary fact; step i -> then_i :- if_i; conclusion -> query.
// Lexical gaps between clause predicates are left to weak unification.
inline LogicProgram fallback_formalize(const EntailmentHypothesis& hyp, const StructuredExplanation& expl) {
  if (expl.steps.empty()) throw ValidationError("cannot formalize an explanation with no steps");
  LogicProgram p;
  p.facts.push_back({normalize_predicate(hyp.premise), {}});
  for (const auto& s : expl.steps) {
    p.rules.push_back({{normalize_predicate(s.then_clause), {}}, {{normalize_predicate(s.if_clause), {}}}});
  }
  p.query = {normalize_predicate(hyp.conclusion), {}};
  return p;
}

}  // namespace ibe
