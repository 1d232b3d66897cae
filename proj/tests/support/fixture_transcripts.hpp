#pragma once

// Builds the replay transcript store for the bundled corpus from canned
// responses, so the committed store can be regenerated and checked.

#include <string>

#include "ibe_eval/datasets.hpp"
#include "ibe_eval/generation.hpp"
#include "ibe_eval/transcript.hpp"

namespace ibe::testing {

inline constexpr const char* kFixtureTimestamp = "2024-01-01T00:00:00Z";

inline std::string build_fixture_transcripts(const std::string& corpus_dir, const GenerationOptions& opts = {}) {
  auto responses = json::parse(text::read_file(corpus_dir + "/responses.json"));
  TranscriptStore store(StoreMode::record);
  store.set_clock([] { return std::string(kFixtureTimestamp); });
  for (const char* split : {"train.jsonl", "test.jsonl"}) {
    for (const auto& ex : load_examples(corpus_dir + "/" + split)) {
      const auto& canned = responses.at("explanations").at(ex.id);
      std::vector<StructuredExplanation> parsed;
      for (std::size_t c = 0; c < ex.candidates.size(); ++c) {
        LlmRequest req{opts.model, build_explanation_prompt(ex, c), opts.temperature, opts.max_tokens};
        auto raw = canned.at(c).get<std::string>();
        store.put(req, raw);
        parsed.push_back(parse_explanation_response(raw, to_eev(ex, c)));
      }
      if (responses.at("judge").contains(ex.id)) {
        LlmRequest req{opts.model, build_judge_prompt(ex, parsed[0], parsed[1]), opts.temperature, opts.max_tokens};
        store.put(req, responses["judge"][ex.id].get<std::string>());
      }
    }
  }
  return store.dump();
}

}  // namespace ibe::testing
