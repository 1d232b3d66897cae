#pragma once

// Scorer boundaries used by the metrics, with lexicon-based fallbacks that
// need no ML models.

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "ibe_eval/embedding.hpp"
#include "ibe_eval/error.hpp"
#include "ibe_eval/text.hpp"

namespace ibe {

struct EntailmentProbs {
  double entail = 0.0;
  double neutral = 0.0;
  double contradiction = 0.0;
};

inline void validate_entailment(const EntailmentProbs& p) {
  for (double x : {p.entail, p.neutral, p.contradiction}) {
    if (!(x >= 0.0 && x <= 1.0)) throw ScorerError("entailment probability outside [0, 1]");
  }
  if (std::abs(p.entail + p.neutral + p.contradiction - 1.0) > 1e-6) {
    throw ScorerError("entailment probabilities do not sum to 1");
  }
}

inline void validate_certainty(double c) {
  if (!(c >= 1.0 && c <= 6.0)) throw ScorerError("certainty " + std::to_string(c) + " outside [1, 6]");
}

enum class HedgeLabel { none, epistemic, doxatic, conditional };

inline std::string_view to_string(HedgeLabel l) {
  switch (l) {
    case HedgeLabel::epistemic: return "epistemic";
    case HedgeLabel::doxatic: return "doxatic";
    case HedgeLabel::conditional: return "conditional";
    default: return "none";
  }
}

inline HedgeLabel parse_hedge_label(std::string_view s) {
  if (s == "none") return HedgeLabel::none;
  if (s == "epistemic") return HedgeLabel::epistemic;
  if (s == "doxatic") return HedgeLabel::doxatic;
  if (s == "conditional") return HedgeLabel::conditional;
  throw ScorerError("unknown hedge label \"" + std::string(s) + "\"");
}

struct HedgeToken {
  std::string token;
  HedgeLabel label = HedgeLabel::none;
};

struct PosToken {
  std::string token;
  std::string pos;  // NOUN, FUNC or OTHER
  std::string lemma;
};

class EntailmentScorer {
 public:
  virtual ~EntailmentScorer() = default;
  virtual EntailmentProbs score(const std::string& premise, const std::string& hypothesis) const = 0;
  virtual std::string name() const = 0;
};

class CertaintyScorer {
 public:
  virtual ~CertaintyScorer() = default;
  // In [1, 6]; 6 is most certain.
  virtual double certainty(const std::string& sentence) const = 0;
  virtual std::string name() const = 0;
};

class HedgeTagger {
 public:
  virtual ~HedgeTagger() = default;
  virtual std::vector<HedgeToken> tag(const std::string& sentence) const = 0;
  virtual std::string name() const = 0;
};

class PosTagger {
 public:
  virtual ~PosTagger() = default;
  virtual std::vector<PosToken> tag(const std::string& sentence) const = 0;
  virtual std::string name() const = 0;
};

struct ScorerSuite {
  std::shared_ptr<const EntailmentScorer> entailment;
  std::shared_ptr<const CertaintyScorer> certainty;
  std::shared_ptr<const HedgeTagger> hedge;
  std::shared_ptr<const PosTagger> pos;
};

namespace detail {

inline std::vector<std::string> lexicon_lines(const std::string& content) {
  std::vector<std::string> out;
  std::istringstream in(content);
  for (std::string line; std::getline(in, line);) {
    auto t = text::trim_view(line);
    if (t.empty() || t.front() == '#') continue;
    out.emplace_back(t);
  }
  return out;
}

inline std::string strip_possessive(std::string w) {
  if (w.size() > 2 && w.ends_with("'s")) w.resize(w.size() - 2);
  while (!w.empty() && w.back() == '\'') w.pop_back();
  return w;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Hedge lexicon

class HedgeLexicon {
 public:
  // One `token<TAB>category` per line; '#' starts a comment line.
  static HedgeLexicon parse(const std::string& content) {
    HedgeLexicon lex;
    std::size_t n = 0;
    for (const auto& line : detail::lexicon_lines(content)) {
      ++n;
      auto tab = line.find('\t');
      if (tab == std::string::npos) throw DataError("hedge lexicon entry " + std::to_string(n) + " has no tab");
      auto token = text::to_lower(text::trim_view(std::string_view(line).substr(0, tab)));
      auto cat = text::trim(std::string_view(line).substr(tab + 1));
      HedgeLabel label;
      try {
        label = parse_hedge_label(cat);
      } catch (const ScorerError&) {
        throw DataError("hedge lexicon entry " + std::to_string(n) + ": unknown category \"" + cat + "\"");
      }
      if (label == HedgeLabel::none) continue;
      lex.cues_[token] = label;
    }
    return lex;
  }

  static HedgeLexicon load(const std::string& path) { return parse(text::read_file(path)); }

  HedgeLabel label(const std::string& token) const {
    auto it = cues_.find(token);
    return it == cues_.end() ? HedgeLabel::none : it->second;
  }

  std::size_t size() const { return cues_.size(); }

 private:
  std::unordered_map<std::string, HedgeLabel> cues_;
};

class LexiconHedgeTagger final : public HedgeTagger {
 public:
  explicit LexiconHedgeTagger(HedgeLexicon lex) : lex_(std::move(lex)) {}

  std::vector<HedgeToken> tag(const std::string& sentence) const override {
    std::vector<HedgeToken> out;
    for (auto& w : text::words(sentence)) {
      auto label = lex_.label(w);
      out.push_back({std::move(w), label});
    }
    return out;
  }

  std::string name() const override { return "fallback-hedge-lexicon"; }

 private:
  HedgeLexicon lex_;
};

// Certainty falls linearly from 6 to 1 as cue density rises from 0 to 0.2.
class LexiconCertaintyScorer final : public CertaintyScorer {
 public:
  explicit LexiconCertaintyScorer(HedgeLexicon lex) : tagger_(std::move(lex)) {}

  double certainty(const std::string& sentence) const override {
    auto tokens = tagger_.tag(sentence);
    if (tokens.empty()) throw ScorerError("empty sentence");
    std::size_t cues = 0;
    for (const auto& t : tokens)
      if (t.label != HedgeLabel::none) ++cues;
    double density = static_cast<double>(cues) / static_cast<double>(tokens.size());
    return 6.0 - 5.0 * std::min(density, 0.2) / 0.2;
  }

  std::string name() const override { return "fallback-hedge-density"; }

 private:
  LexiconHedgeTagger tagger_;
};

// ---------------------------------------------------------------------------
// Noun lexicon POS tagger

class NounLexicon {
 public:
  // Lemmas, one per line, or `form<TAB>lemma` for irregular plurals.
  static NounLexicon parse(const std::string& content) {
    NounLexicon lex;
    for (const auto& line : detail::lexicon_lines(content)) {
      auto tab = line.find('\t');
      if (tab == std::string::npos) {
        lex.lemmas_.insert(text::to_lower(line));
      } else {
        auto lemma = text::to_lower(text::trim_view(std::string_view(line).substr(tab + 1)));
        lex.irregular_[text::to_lower(text::trim_view(std::string_view(line).substr(0, tab)))] = lemma;
        lex.lemmas_.insert(lemma);
      }
    }
    return lex;
  }

  static NounLexicon load(const std::string& path) { return parse(text::read_file(path)); }

  // Lemma if `word` is a known noun or a regular plural of one.
  std::optional<std::string> lookup(const std::string& word) const {
    if (auto it = irregular_.find(word); it != irregular_.end()) return it->second;
    if (lemmas_.contains(word)) return word;
    auto n = word.size();
    if (n > 3 && word.ends_with("ies")) {
      auto stem = word.substr(0, n - 3) + "y";
      if (lemmas_.contains(stem)) return stem;
    }
    if (n > 2 && word.ends_with("es")) {
      auto stem = word.substr(0, n - 2);
      if (lemmas_.contains(stem)) return stem;
    }
    if (n > 1 && word.ends_with('s') && !word.ends_with("ss")) {
      auto stem = word.substr(0, n - 1);
      if (lemmas_.contains(stem)) return stem;
    }
    return std::nullopt;
  }

  std::size_t size() const { return lemmas_.size(); }

 private:
  std::unordered_set<std::string> lemmas_;
  std::unordered_map<std::string, std::string> irregular_;
};

inline std::unordered_set<std::string> parse_word_list(const std::string& content) {
  std::unordered_set<std::string> out;
  for (const auto& line : detail::lexicon_lines(content)) {
    std::istringstream in(line);
    for (std::string w; in >> w;) out.insert(text::to_lower(w));
  }
  return out;
}

// Nominal suffixes that mark a noun outside the lexicon, with their plurals.
inline std::optional<std::string> suffix_noun_lemma(const std::string& w) {
  if (w.size() < 6) return std::nullopt;
  if (w.ends_with("ities")) return w.substr(0, w.size() - 3) + "y";
  static const char* kSuffixes[] = {"tion", "sion", "ment", "ness", "ity", "ance", "ence", "ism", "ship", "hood"};
  for (const char* s : kSuffixes) {
    std::string suf = s;
    if (w.ends_with(suf)) return w;
    if (suf != "ness" && w.ends_with(suf + "s")) return w.substr(0, w.size() - 1);
    if (suf == "ness" && w.ends_with("nesses")) return w.substr(0, w.size() - 2);
  }
  return std::nullopt;
}

class LexiconPosTagger final : public PosTagger {
 public:
  LexiconPosTagger(NounLexicon nouns, std::unordered_set<std::string> function_words)
      : nouns_(std::move(nouns)), function_words_(std::move(function_words)) {}

  std::vector<PosToken> tag(const std::string& sentence) const override {
    std::vector<PosToken> out;
    for (auto& raw : text::words(sentence)) {
      auto w = detail::strip_possessive(raw);
      if (w.empty()) continue;
      if (function_words_.contains(w)) {
        out.push_back({std::move(raw), "FUNC", w});
      } else if (auto lemma = nouns_.lookup(w)) {
        out.push_back({std::move(raw), "NOUN", *lemma});
      } else if (auto lemma = suffix_noun_lemma(w)) {
        out.push_back({std::move(raw), "NOUN", *lemma});
      } else {
        out.push_back({std::move(raw), "OTHER", w});
      }
    }
    return out;
  }

  std::string name() const override { return "fallback-noun-lexicon"; }

 private:
  NounLexicon nouns_;
  std::unordered_set<std::string> function_words_;
};

// ---------------------------------------------------------------------------
// Overlap + embedding entailment heuristic

inline bool has_negation(const std::vector<std::string>& words) {
  for (const auto& w : words) {
    if (w == "not" || w == "no" || w == "never" || w == "nothing" || w == "nobody" || w == "none" || w.ends_with("n't")) {
      return true;
    }
  }
  return false;
}

// sim = mean of hypothesis-token coverage and content-vector cosine.
// entail = sim, contradiction = (1 - sim) / 4, neutral takes the rest; a
// negation mismatch swaps entail and contradiction.
class OverlapEntailmentScorer final : public EntailmentScorer {
 public:
  OverlapEntailmentScorer(const EmbeddingTable& table, std::unordered_set<std::string> stopwords)
      : table_(&table), stopwords_(std::move(stopwords)) {}

  double similarity(const std::string& premise, const std::string& hypothesis) const {
    auto pw = content(text::words(premise));
    auto hw = content(text::words(hypothesis));
    if (pw.empty() || hw.empty()) return 0.0;
    std::set<std::string> ps(pw.begin(), pw.end());
    std::set<std::string> hs(hw.begin(), hw.end());
    std::size_t covered = 0;
    for (const auto& w : hs)
      if (ps.contains(w)) ++covered;
    double overlap = static_cast<double>(covered) / static_cast<double>(hs.size());
    double cos = std::clamp(cosine(table_->mean_vector(pw), table_->mean_vector(hw)), 0.0, 1.0);
    return 0.5 * overlap + 0.5 * cos;
  }

  EntailmentProbs score(const std::string& premise, const std::string& hypothesis) const override {
    double sim = similarity(premise, hypothesis);
    EntailmentProbs p;
    p.entail = sim;
    p.contradiction = 0.25 * (1.0 - sim);
    p.neutral = 1.0 - p.entail - p.contradiction;
    if (has_negation(text::words(premise)) != has_negation(text::words(hypothesis))) {
      std::swap(p.entail, p.contradiction);
    }
    return p;
  }

  std::string name() const override { return "fallback-overlap-embedding"; }

 private:
  std::vector<std::string> content(std::vector<std::string> words) const {
    std::vector<std::string> out;
    for (auto& w : words) {
      auto s = detail::strip_possessive(w);
      if (!s.empty() && !stopwords_.contains(s) && !has_negation({s})) out.push_back(std::move(s));
    }
    return out;
  }

  const EmbeddingTable* table_;
  std::unordered_set<std::string> stopwords_;
};

// Paths to the committed lexicons for the fallback suite.
struct FallbackResources {
  std::string hedge_lexicon;
  std::string noun_lexicon;
  std::string function_words;
  std::string stopwords;

  static FallbackResources in_dir(const std::string& lexicon_dir) {
    return {lexicon_dir + "/hedge_cues.tsv", lexicon_dir + "/nouns.txt", lexicon_dir + "/function_words.txt",
            lexicon_dir + "/stopwords.txt"};
  }
};

// `table` must outlive the suite.
inline ScorerSuite make_fallback_suite(const FallbackResources& res, const EmbeddingTable& table) {
  auto hedges = HedgeLexicon::load(res.hedge_lexicon);
  ScorerSuite s;
  s.entailment = std::make_shared<OverlapEntailmentScorer>(table, parse_word_list(text::read_file(res.stopwords)));
  s.certainty = std::make_shared<LexiconCertaintyScorer>(hedges);
  s.hedge = std::make_shared<LexiconHedgeTagger>(hedges);
  s.pos = std::make_shared<LexiconPosTagger>(NounLexicon::load(res.noun_lexicon),
                                             parse_word_list(text::read_file(res.function_words)));
  return s;
}

}  // namespace ibe
