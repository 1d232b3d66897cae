#pragma once

// Pipeline configuration: sectioned key = value file, paths relative to it.

#include <cstdlib>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "ibe_eval/core.hpp"
#include "ibe_eval/metrics.hpp"
#include "ibe_eval/prover.hpp"
#include "ibe_eval/stats.hpp"
#include "ibe_eval/transcript.hpp"

namespace ibe {

struct DatasetSpec {
  std::string path;
  std::string format = "jsonl";  // copa | ecare | jsonl
  std::optional<std::size_t> sample;
};

enum class ScorerBackend { fallback, sidecar_stdio, sidecar_http };

inline std::string_view to_string(ScorerBackend b) {
  switch (b) {
    case ScorerBackend::sidecar_stdio: return "sidecar-stdio";
    case ScorerBackend::sidecar_http: return "sidecar-http";
    default: return "fallback";
  }
}

inline ScorerBackend parse_scorer_backend(std::string_view s) {
  if (s == "fallback") return ScorerBackend::fallback;
  if (s == "sidecar-stdio") return ScorerBackend::sidecar_stdio;
  if (s == "sidecar-http") return ScorerBackend::sidecar_http;
  throw UsageError("bad scorer backend \"" + std::string(s) + "\" (expected fallback|sidecar-stdio|sidecar-http)");
}

struct PipelineConfig {
  std::string config_path;

  std::vector<DatasetSpec> train;
  std::vector<DatasetSpec> test;
  std::uint64_t seed = 0;

  std::string model = "gpt-3.5-turbo";
  double temperature = 0.0;
  int max_tokens = 1024;
  std::string llm_base_url = "https://api.openai.com";
  std::string api_key_env = "OPENAI_API_KEY";

  std::string transcripts_path;
  StoreMode transcripts_mode = StoreMode::replay;

  std::string formalizer = "fallback";  // fallback | llm

  ScorerBackend scorer_backend = ScorerBackend::fallback;
  std::string sidecar_command;
  std::string sidecar_url;
  std::string lexicon_dir;
  std::string embeddings_path;

  ProverOptions prover;
  MetricsOptions metrics;

  std::vector<std::string> features{kFeatureNames.begin(), kFeatureNames.end()};
  std::string fit_scope = "joint";  // joint | per-source
  bool standardize_report = true;
  bool judge = false;

  std::string output_dir = "runs";
  std::size_t parallelism = 1;
  std::vector<std::string> example_filter;
};

inline void validate_config(const PipelineConfig& c) {
  if (!(c.prover.threshold > 0.0 && c.prover.threshold < 1.0)) throw UsageError("prover threshold must be in (0, 1)");
  if (c.prover.max_depth == 0) throw UsageError("prover max_depth must be positive");
  if (c.parallelism < 1) throw UsageError("parallelism must be >= 1");
  if (c.test.empty()) throw UsageError("config has no [data] test dataset");
  if (c.transcripts_path.empty()) throw UsageError("config has no [transcripts] path");
  if (c.formalizer != "fallback" && c.formalizer != "llm") throw UsageError("formalizer must be fallback or llm");
  if (c.fit_scope != "joint" && c.fit_scope != "per-source") throw UsageError("fit_scope must be joint or per-source");
  if (c.scorer_backend == ScorerBackend::sidecar_stdio && c.sidecar_command.empty()) {
    throw UsageError("sidecar-stdio backend needs [scorers] command");
  }
  if (c.scorer_backend == ScorerBackend::sidecar_http && c.sidecar_url.empty()) {
    throw UsageError("sidecar-http backend needs [scorers] url");
  }
  validate_subset(c.features);
}

namespace detail {

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  for (auto& part : text::split(s, ',')) {
    auto t = text::trim(part);
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  auto l = text::to_lower(text::trim_view(v));
  if (l == "true" || l == "yes" || l == "1" || l == "on") return true;
  if (l == "false" || l == "no" || l == "0" || l == "off") return false;
  throw UsageError("config " + key + ": expected a boolean, got \"" + v + "\"");
}

template <class T>
T parse_number(const std::string& key, const std::string& v) {
  std::istringstream in(text::trim(v));
  T x{};
  in >> x;
  if (in.fail() || !in.eof()) throw UsageError("config " + key + ": bad number \"" + v + "\"");
  return x;
}

}  // namespace detail

inline PipelineConfig parse_config(const std::string& content, const std::string& config_path) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(content);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw UsageError(config_path + ": " + e.message() + " at line " + std::to_string(e.line()));
  }

  namespace fs = std::filesystem;
  fs::path base = fs::absolute(fs::path(config_path)).parent_path();
  auto resolve = [&](const std::string& p) -> std::string {
    if (p.empty()) return p;
    fs::path q(p);
    return (q.is_absolute() ? q : base / q).lexically_normal().string();
  };
  auto get = [&](const std::string& key) -> std::optional<std::string> {
    auto v = tree.get_optional<std::string>(pt::ptree::path_type(key, '.'));
    if (!v) return std::nullopt;
    return text::trim(*v);
  };

  static const std::vector<std::string> kKnown = {
      "data.train",        "data.train_format",   "data.train_sample", "data.test",
      "data.test_format",  "data.test_sample",    "data.seed",         "llm.model",
      "llm.temperature",   "llm.max_tokens",      "llm.base_url",      "llm.api_key_env",
      "transcripts.path",  "transcripts.mode",    "formalize.method",  "scorers.backend",
      "scorers.command",   "scorers.url",         "scorers.lexicon_dir", "scorers.embeddings",
      "prover.threshold",  "prover.max_depth",    "prover.max_expansions", "metrics.uncertainty",
      "metrics.noun_scope", "model.features",     "model.fit_scope",   "model.standardize_report",
      "evaluate.judge",    "run.output_dir",      "run.parallelism"};
  for (const auto& [section, kids] : tree) {
    for (const auto& [key, _] : kids) {
      std::string full = section + "." + key;
      if (std::find(kKnown.begin(), kKnown.end(), full) == kKnown.end()) {
        throw UsageError(config_path + ": unknown key [" + section + "] " + key);
      }
    }
  }

  PipelineConfig c;
  c.config_path = fs::absolute(fs::path(config_path)).lexically_normal().string();
  for (const char* split : {"train", "test"}) {
    std::string s(split);
    auto paths = get("data." + s);
    if (!paths) continue;
    auto formats = detail::split_list(get("data." + s + "_format").value_or("jsonl"));
    auto samples = detail::split_list(get("data." + s + "_sample").value_or(""));
    auto list = detail::split_list(*paths);
    auto& dst = s == "train" ? c.train : c.test;
    for (std::size_t i = 0; i < list.size(); ++i) {
      DatasetSpec d;
      d.path = resolve(list[i]);
      d.format = formats.empty() ? "jsonl" : formats[std::min(i, formats.size() - 1)];
      if (i < samples.size() && samples[i] != "all") {
        d.sample = detail::parse_number<std::size_t>("data." + s + "_sample", samples[i]);
      }
      dst.push_back(d);
    }
  }
  if (auto v = get("data.seed")) c.seed = detail::parse_number<std::uint64_t>("data.seed", *v);
  if (auto v = get("llm.model")) c.model = *v;
  if (auto v = get("llm.temperature")) c.temperature = detail::parse_number<double>("llm.temperature", *v);
  if (auto v = get("llm.max_tokens")) c.max_tokens = detail::parse_number<int>("llm.max_tokens", *v);
  if (auto v = get("llm.base_url")) c.llm_base_url = *v;
  if (auto v = get("llm.api_key_env")) c.api_key_env = *v;
  if (auto v = get("transcripts.path")) c.transcripts_path = resolve(*v);
  if (auto v = get("transcripts.mode")) c.transcripts_mode = parse_store_mode(*v);
  if (auto v = get("formalize.method")) c.formalizer = *v;
  if (auto v = get("scorers.backend")) c.scorer_backend = parse_scorer_backend(*v);
  if (auto v = get("scorers.command")) c.sidecar_command = *v;
  if (auto v = get("scorers.url")) c.sidecar_url = *v;
  c.lexicon_dir = resolve(get("scorers.lexicon_dir").value_or("data/lexicon"));
  c.embeddings_path = resolve(get("scorers.embeddings").value_or("data/embeddings/toy.txt"));
  if (auto v = get("prover.threshold")) c.prover.threshold = detail::parse_number<double>("prover.threshold", *v);
  if (auto v = get("prover.max_depth")) c.prover.max_depth = detail::parse_number<std::size_t>("prover.max_depth", *v);
  if (auto v = get("prover.max_expansions")) {
    c.prover.max_expansions = detail::parse_number<std::size_t>("prover.max_expansions", *v);
  }
  if (auto v = get("metrics.uncertainty")) c.metrics.uncertainty_mode = parse_uncertainty_mode(*v);
  if (auto v = get("metrics.noun_scope")) c.metrics.noun_scope = parse_noun_scope(*v);
  if (auto v = get("model.features")) c.features = detail::split_list(*v);
  if (auto v = get("model.fit_scope")) c.fit_scope = *v;
  if (auto v = get("model.standardize_report")) c.standardize_report = detail::parse_bool("model.standardize_report", *v);
  if (auto v = get("evaluate.judge")) c.judge = detail::parse_bool("evaluate.judge", *v);
  if (auto v = get("run.output_dir")) c.output_dir = resolve(*v);
  else c.output_dir = resolve("runs");
  if (auto v = get("run.parallelism")) {
    auto p = detail::parse_number<long long>("run.parallelism", *v);
    if (p < 1) throw UsageError("parallelism must be >= 1");
    c.parallelism = static_cast<std::size_t>(p);
  }
  if (const char* dir = std::getenv("IBE_EVAL_CACHE_DIR"); dir && *dir) c.output_dir = dir;
  validate_config(c);
  return c;
}

inline PipelineConfig load_config(const std::string& path) {
  std::string content;
  try {
    content = text::read_file(path);
  } catch (const Error&) {
    throw UsageError("cannot read config file " + path);
  }
  return parse_config(content, path);
}

// Hash of everything that can change stage outputs. Paths enter only through
// the content of the files they name, so moved checkouts share run dirs.
inline std::string config_fingerprint(const PipelineConfig& c) {
  auto file_hash = [](const std::string& p) {
    try {
      return text::sha256_hex(text::read_file(p));
    } catch (const Error&) {
      return std::string("missing");
    }
  };
  json j;
  for (const char* split : {"train", "test"}) {
    json arr = json::array();
    for (const auto& d : std::string(split) == "train" ? c.train : c.test) {
      arr.push_back({{"content", file_hash(d.path)},
                     {"format", d.format},
                     {"sample", d.sample ? json(*d.sample) : json(nullptr)}});
    }
    j[split] = arr;
  }
  j["seed"] = c.seed;
  j["llm"] = {{"model", c.model}, {"temperature", text::fixed(c.temperature)}, {"max_tokens", c.max_tokens}};
  j["formalizer"] = c.formalizer;
  j["scorers"] = {{"backend", to_string(c.scorer_backend)},
                  {"lexicons", text::sha256_hex(file_hash(c.lexicon_dir + "/hedge_cues.tsv") +
                                                file_hash(c.lexicon_dir + "/nouns.txt") +
                                                file_hash(c.lexicon_dir + "/function_words.txt") +
                                                file_hash(c.lexicon_dir + "/stopwords.txt"))},
                  {"embeddings", file_hash(c.embeddings_path)}};
  j["prover"] = {{"threshold", text::fixed(c.prover.threshold, 12)},
                 {"max_depth", c.prover.max_depth},
                 {"max_expansions", c.prover.max_expansions}};
  j["metrics"] = {{"uncertainty", to_string(c.metrics.uncertainty_mode)}, {"noun_scope", to_string(c.metrics.noun_scope)}};
  j["model"] = {{"features", c.features}, {"fit_scope", c.fit_scope}, {"standardize_report", c.standardize_report}};
  j["judge"] = c.judge;
  j["examples"] = c.example_filter;
  return text::sha256_hex(j.dump());
}

}  // namespace ibe
