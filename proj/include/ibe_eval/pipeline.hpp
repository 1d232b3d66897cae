#pragma once

// Stage orchestration over a run directory of JSONL artifacts.

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "ibe_eval/config.hpp"
#include "ibe_eval/core.hpp"
#include "ibe_eval/datasets.hpp"
#include "ibe_eval/embedding.hpp"
#include "ibe_eval/formalize.hpp"
#include "ibe_eval/generation.hpp"
#include "ibe_eval/llm_http.hpp"
#include "ibe_eval/metrics.hpp"
#include "ibe_eval/prover.hpp"
#include "ibe_eval/scorers.hpp"
#include "ibe_eval/sidecar.hpp"
#include "ibe_eval/stats.hpp"
#include "ibe_eval/transcript.hpp"

namespace ibe {

enum class Stage { generate, formalize, prove, features, fit, evaluate, report };

inline constexpr std::array<Stage, 7> kStages = {Stage::generate, Stage::formalize, Stage::prove,  Stage::features,
                                                 Stage::fit,      Stage::evaluate,  Stage::report};

inline std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::generate: return "generate";
    case Stage::formalize: return "formalize";
    case Stage::prove: return "prove";
    case Stage::features: return "features";
    case Stage::fit: return "fit";
    case Stage::evaluate: return "evaluate";
    case Stage::report: return "report";
  }
  return "report";
}

inline Stage parse_stage(std::string_view s) {
  for (auto st : kStages)
    if (to_string(st) == s) return st;
  throw UsageError("unknown stage \"" + std::string(s) + "\"");
}

// Runs fn(i) for i in [0, n) on up to `workers` threads. Every index runs;
// the error of the lowest failing index is rethrown.
template <class F>
void parallel_for(std::size_t n, std::size_t workers, F&& fn) {
  if (n == 0) return;
  workers = std::max<std::size_t>(1, std::min(workers, n));
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

namespace detail {

// Reports keep numbers numeric but pinned to a fixed number of decimals.
inline json num(double v, int decimals = 6) { return std::strtod(text::fixed(v, decimals).c_str(), nullptr); }

inline std::vector<json> read_jsonl(const std::string& path) {
  std::vector<json> out;
  std::istringstream in(text::read_file(path));
  std::size_t lineno = 0;
  for (std::string line; std::getline(in, line);) {
    ++lineno;
    if (text::trim_view(line).empty()) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::exception& e) {
      throw DataError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

inline std::string dump_jsonl(const std::vector<json>& rows) {
  std::string out;
  for (const auto& r : rows) out += r.dump() + "\n";
  return out;
}

inline std::string pretty(const json& j) { return j.dump(2) + "\n"; }

inline std::string candidate_key(const std::string& id, std::size_t c) { return id + "#" + std::to_string(c); }

inline std::vector<std::string> split_command(const std::string& cmd) {
  std::istringstream in(cmd);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

}  // namespace detail

struct StageOptions {
  bool force = false;
  std::function<void(const std::string&)> log = [](const std::string& m) { std::cerr << "ibe-eval: " << m << "\n"; };
};

struct StageResult {
  Stage stage = Stage::generate;
  bool cache_hit = false;
  std::vector<std::string> outputs;
};

struct SplitExample {
  std::string split;
  CqaExample example;
};

class Pipeline {
 public:
  explicit Pipeline(PipelineConfig cfg, StageOptions opts = {}) : cfg_(std::move(cfg)), opts_(std::move(opts)) {
    validate_config(cfg_);
    if (!opts_.log) opts_.log = [](const std::string&) {};
    fingerprint_ = config_fingerprint(cfg_);
    run_dir_ = (std::filesystem::path(cfg_.output_dir) / fingerprint_.substr(0, 16)).string();
  }

  const PipelineConfig& config() const { return cfg_; }
  const std::string& run_dir() const { return run_dir_; }
  const std::string& fingerprint() const { return fingerprint_; }
  std::string path(const std::string& artifact) const { return (std::filesystem::path(run_dir_) / artifact).string(); }

  StageResult run(Stage s) {
    std::filesystem::create_directories(run_dir_);
    switch (s) {
      case Stage::generate: return generate();
      case Stage::formalize: return formalize();
      case Stage::prove: return prove_stage();
      case Stage::features: return features();
      case Stage::fit: return fit();
      case Stage::evaluate: return evaluate();
      case Stage::report: return report();
    }
    throw UsageError("unknown stage");
  }

  std::vector<StageResult> run_all() {
    std::vector<StageResult> out;
    for (auto s : kStages) out.push_back(run(s));
    return out;
  }

  static constexpr const char* kReportFiles[] = {"report/ablation.csv",    "report/regression.json",
                                                 "report/directionality.csv", "report/self_evident.json",
                                                 "report/hedges.csv",      "report/plot_features.csv",
                                                 "report/summary.json"};

 private:
  // ------------------------------------------------------------------
  // Manifests and caching

  std::string manifest_path(Stage s) const { return path(std::string(to_string(s)) + ".manifest.json"); }

  std::optional<json> read_manifest(Stage s) const {
    auto p = manifest_path(s);
    if (!std::filesystem::exists(p)) return std::nullopt;
    try {
      return json::parse(text::read_file(p));
    } catch (const json::exception&) {
      return std::nullopt;
    }
  }

  static std::string file_hash(const std::string& p) {
    if (!std::filesystem::exists(p)) return "absent";
    return text::sha256_hex(text::read_file(p));
  }

  // Hash of an upstream artifact, checked against what its producer recorded.
  std::string upstream(const std::string& artifact, Stage producer) const {
    auto p = path(artifact);
    if (!std::filesystem::exists(p)) {
      throw UsageError("missing upstream artifact " + artifact + "; run `ibe-eval " + std::string(to_string(producer)) +
                       "` first");
    }
    auto h = file_hash(p);
    auto m = read_manifest(producer);
    std::string recorded = m && (*m)["outputs"].contains(artifact) ? (*m)["outputs"][artifact].get<std::string>() : "";
    if (recorded != h) {
      std::string msg = "artifact " + artifact + " does not match the fingerprint recorded by stage " +
                        std::string(to_string(producer));
      if (!opts_.force) throw DataError(msg + "; rerun that stage or pass --force");
      opts_.log("warning: " + msg + "; continuing because of --force");
    }
    return h;
  }

  bool cache_hit(Stage s, const json& inputs, const std::vector<std::string>& outputs) const {
    if (opts_.force) return false;
    auto m = read_manifest(s);
    if (!m) return false;
    if ((*m)["inputs"] != inputs) {
      opts_.log(std::string(to_string(s)) + ": inputs changed, recomputing");
      return false;
    }
    for (const auto& o : outputs) {
      if (!(*m)["outputs"].contains(o) || (*m)["outputs"][o] != file_hash(path(o))) {
        opts_.log(std::string(to_string(s)) + ": " + o + " missing or modified, recomputing");
        return false;
      }
    }
    return true;
  }

  void write_artifact(const std::string& artifact, const std::string& content) const {
    auto p = std::filesystem::path(path(artifact));
    std::filesystem::create_directories(p.parent_path());
    auto tmp = p;
    tmp += ".tmp";
    text::write_file(tmp.string(), content);
    std::filesystem::rename(tmp, p);
  }

  StageResult finish(Stage s, const json& inputs, const std::vector<std::string>& outputs, json extra = json::object()) {
    json m = {{"stage", to_string(s)}, {"config_fingerprint", fingerprint_}, {"inputs", inputs}};
    json outs = json::object();
    for (const auto& o : outputs) outs[o] = file_hash(path(o));
    m["outputs"] = outs;
    for (auto& [k, v] : extra.items()) m[k] = v;
    write_artifact(std::string(to_string(s)) + ".manifest.json", detail::pretty(m));
    opts_.log(std::string(to_string(s)) + ": wrote " + std::to_string(outputs.size()) + " artifact(s) to " + run_dir_);
    return {s, false, outputs};
  }

  StageResult hit(Stage s, const std::vector<std::string>& outputs) const {
    opts_.log(std::string(to_string(s)) + ": cache hit");
    return {s, true, outputs};
  }

  // ------------------------------------------------------------------
  // Shared services

  std::vector<SplitExample> load_examples_from_config() const {
    std::vector<SplitExample> out;
    std::set<std::string> ids;
    for (const char* split : {"train", "test"}) {
      const auto& specs = std::string(split) == "train" ? cfg_.train : cfg_.test;
      for (const auto& d : specs) {
        for (auto& ex : load_dataset(d.format, d.path, d.sample, cfg_.seed)) {
          if (!ids.insert(ex.id).second) throw DataError("duplicate example id " + ex.id + " across datasets");
          out.push_back({split, std::move(ex)});
        }
      }
    }
    if (!cfg_.example_filter.empty()) {
      std::set<std::string> want(cfg_.example_filter.begin(), cfg_.example_filter.end());
      for (const auto& w : want)
        if (!ids.contains(w)) throw UsageError("--examples names unknown example " + w);
      std::erase_if(out, [&](const SplitExample& e) { return !want.contains(e.example.id); });
    }
    return out;
  }

  std::vector<SplitExample> run_examples() const {
    std::vector<SplitExample> out;
    for (const auto& j : detail::read_jsonl(path("examples.jsonl"))) {
      out.push_back({j.at("split").get<std::string>(), j.at("example").get<CqaExample>()});
    }
    return out;
  }

  TranscriptStore& store() {
    if (!store_) {
      bool exists = std::filesystem::exists(cfg_.transcripts_path);
      if (!exists && cfg_.transcripts_mode == StoreMode::replay) {
        throw UsageError("transcript store " + cfg_.transcripts_path + " does not exist (replay mode)");
      }
      store_ = std::make_unique<TranscriptStore>(exists ? TranscriptStore::load(cfg_.transcripts_path, cfg_.transcripts_mode)
                                                        : TranscriptStore(cfg_.transcripts_mode));
      if (cfg_.transcripts_mode != StoreMode::replay) {
        HttpLlmConfig hc;
        hc.base_url = cfg_.llm_base_url;
        hc.api_key_env = cfg_.api_key_env;
        client_ = std::make_unique<HttpLlmClient>(hc);
      }
    }
    return *store_;
  }

  void save_store() {
    if (store_ && cfg_.transcripts_mode == StoreMode::record) store_->save(cfg_.transcripts_path);
  }

  GenerationOptions gen_options() const { return {cfg_.model, cfg_.temperature, cfg_.max_tokens}; }

  const EmbeddingTable& table() {
    if (!table_) table_ = std::make_unique<EmbeddingTable>(EmbeddingTable::load(cfg_.embeddings_path));
    return *table_;
  }

  const ScorerSuite& suite() {
    if (suite_) return *suite_;
    auto fallback = make_fallback_suite(FallbackResources::in_dir(cfg_.lexicon_dir), table());
    substitutions_ = std::make_shared<SubstitutionLog>();
    if (cfg_.scorer_backend == ScorerBackend::fallback) {
      suite_ = fallback;
      return *suite_;
    }
    std::shared_ptr<SidecarTransport> transport;
    if (cfg_.scorer_backend == ScorerBackend::sidecar_stdio) {
      transport = std::make_shared<StdioTransport>(detail::split_command(cfg_.sidecar_command));
    } else {
      transport = std::make_shared<HttpTransport>(cfg_.sidecar_url);
    }
    auto health = SidecarClient(transport).health();
    if (health.value("protocol", 0) != kSidecarProtocolVersion) {
      throw ScorerError("sidecar speaks protocol " + health.value("protocol", json(nullptr)).dump() + ", expected " +
                        std::to_string(kSidecarProtocolVersion));
    }
    sidecar_models_ = health.value("models", json::object());
    suite_ = make_sidecar_suite(transport, fallback, substitutions_);
    return *suite_;
  }

  json scorer_manifest() const {
    json j = {{"backend", to_string(cfg_.scorer_backend)},
              {"entailment", suite_->entailment->name()},
              {"certainty", suite_->certainty->name()},
              {"hedge", suite_->hedge->name()},
              {"pos", suite_->pos->name()}};
    if (!sidecar_models_.is_null()) j["sidecar_models"] = sidecar_models_;
    j["substitutions"] = substitutions_ ? substitutions_->notes() : std::vector<std::string>{};
    return j;
  }

  // ------------------------------------------------------------------
  // Stages

  StageResult generate() {
    const std::vector<std::string> outputs = {"examples.jsonl", "explanations.jsonl"};
    auto examples = load_examples_from_config();
    std::string examples_dump;
    for (const auto& e : examples) examples_dump += json{{"split", e.split}, {"example", e.example}}.dump() + "\n";
    json inputs = {{"examples", text::sha256_hex(examples_dump)}, {"transcripts", file_hash(cfg_.transcripts_path)}};
    if (cache_hit(Stage::generate, inputs, outputs)) return hit(Stage::generate, outputs);
    if (examples.empty()) throw UsageError("no examples selected");

    auto& st = store();
    auto opts = gen_options();
    std::vector<std::vector<json>> rows(examples.size());
    parallel_for(examples.size(), cfg_.parallelism, [&](std::size_t i) {
      const auto& ex = examples[i].example;
      for (std::size_t c = 0; c < ex.candidates.size(); ++c) {
        json row = {{"split", examples[i].split}, {"example_id", ex.id}, {"candidate_index", c}};
        LlmRequest req{opts.model, build_explanation_prompt(ex, c), opts.temperature, opts.max_tokens};
        std::string raw = st.complete(req, client_.get(), "explanation of example " + ex.id + " candidate " + std::to_string(c));
        try {
          row["explanation"] = parse_explanation_response(raw, to_eev(ex, c));
        } catch (const DataError& e) {
          row["error"] = std::string("generate: ") + e.what();
        }
        rows[i].push_back(std::move(row));
      }
    });
    save_store();
    std::vector<json> flat;
    for (auto& r : rows)
      for (auto& x : r) flat.push_back(std::move(x));
    write_artifact("examples.jsonl", examples_dump);
    write_artifact("explanations.jsonl", detail::dump_jsonl(flat));
    return finish(Stage::generate, inputs, outputs);
  }

  StageResult formalize() {
    const std::vector<std::string> outputs = {"programs.jsonl"};
    json inputs = {{"examples.jsonl", upstream("examples.jsonl", Stage::generate)},
                   {"explanations.jsonl", upstream("explanations.jsonl", Stage::generate)},
                   {"method", cfg_.formalizer}};
    if (cfg_.formalizer == "llm") inputs["transcripts"] = file_hash(cfg_.transcripts_path);
    if (cache_hit(Stage::formalize, inputs, outputs)) return hit(Stage::formalize, outputs);

    auto examples = index_examples();
    auto expl = detail::read_jsonl(path("explanations.jsonl"));
    TranscriptStore* st = cfg_.formalizer == "llm" ? &store() : nullptr;
    auto opts = gen_options();
    std::vector<json> rows(expl.size());
    parallel_for(expl.size(), cfg_.parallelism, [&](std::size_t i) {
      const auto& in = expl[i];
      json row = {{"example_id", in["example_id"]}, {"candidate_index", in["candidate_index"]}};
      if (in.contains("error")) {
        row["error"] = in["error"];
      } else {
        auto e = in["explanation"].get<StructuredExplanation>();
        const auto& ex = examples.at(in["example_id"].get<std::string>());
        auto hyp = to_eev(ex, in["candidate_index"].get<std::size_t>());
        try {
          row["program"] = st ? autoformalize(hyp, e, client_.get(), *st, opts) : fallback_formalize(hyp, e);
        } catch (const DataError& err) {
          row["error"] = std::string("formalize: ") + err.what();
        }
      }
      rows[i] = std::move(row);
    });
    if (st) save_store();
    write_artifact("programs.jsonl", detail::dump_jsonl(rows));
    return finish(Stage::formalize, inputs, outputs);
  }

  StageResult prove_stage() {
    const std::vector<std::string> outputs = {"proofs.jsonl"};
    json inputs = {{"programs.jsonl", upstream("programs.jsonl", Stage::formalize)},
                   {"embeddings", file_hash(cfg_.embeddings_path)},
                   {"threshold", text::fixed(cfg_.prover.threshold, 12)},
                   {"max_depth", cfg_.prover.max_depth},
                   {"max_expansions", cfg_.prover.max_expansions}};
    if (cache_hit(Stage::prove, inputs, outputs)) return hit(Stage::prove, outputs);

    auto programs = detail::read_jsonl(path("programs.jsonl"));
    EmbeddingSimilarity sim(table());
    std::vector<json> rows(programs.size());
    parallel_for(programs.size(), cfg_.parallelism, [&](std::size_t i) {
      const auto& in = programs[i];
      json row = {{"example_id", in["example_id"]}, {"candidate_index", in["candidate_index"]}};
      if (in.contains("error")) {
        row["error"] = in["error"];
      } else {
        row["proof"] = prove(in["program"].get<LogicProgram>(), sim, cfg_.prover);
      }
      rows[i] = std::move(row);
    });
    write_artifact("proofs.jsonl", detail::dump_jsonl(rows));
    return finish(Stage::prove, inputs, outputs);
  }

  StageResult features() {
    const std::vector<std::string> outputs = {"features.jsonl"};
    json inputs = {{"examples.jsonl", upstream("examples.jsonl", Stage::generate)},
                   {"explanations.jsonl", upstream("explanations.jsonl", Stage::generate)},
                   {"proofs.jsonl", upstream("proofs.jsonl", Stage::prove)},
                   {"backend", to_string(cfg_.scorer_backend)},
                   {"embeddings", file_hash(cfg_.embeddings_path)},
                   {"lexicons", json::array()},
                   {"uncertainty", to_string(cfg_.metrics.uncertainty_mode)},
                   {"noun_scope", to_string(cfg_.metrics.noun_scope)}};
    for (const char* f : {"hedge_cues.tsv", "nouns.txt", "function_words.txt", "stopwords.txt"}) {
      inputs["lexicons"].push_back(file_hash(cfg_.lexicon_dir + "/" + f));
    }
    if (cache_hit(Stage::features, inputs, outputs)) return hit(Stage::features, outputs);

    auto examples = index_examples();
    auto expl = detail::read_jsonl(path("explanations.jsonl"));
    auto proofs = detail::read_jsonl(path("proofs.jsonl"));
    if (expl.size() != proofs.size()) throw DataError("explanations.jsonl and proofs.jsonl disagree in length");
    const auto& scorers = suite();
    std::vector<json> rows(expl.size());
    parallel_for(expl.size(), cfg_.parallelism, [&](std::size_t i) {
      const auto& e = expl[i];
      const auto& p = proofs[i];
      if (e["example_id"] != p["example_id"] || e["candidate_index"] != p["candidate_index"]) {
        throw DataError("explanations.jsonl and proofs.jsonl are out of step at line " + std::to_string(i + 1));
      }
      const auto& ex = examples.at(e["example_id"].get<std::string>());
      auto c = e["candidate_index"].get<std::size_t>();
      json row = {{"split", e["split"]},
                  {"example_id", ex.id},
                  {"candidate_index", c},
                  {"direction", to_string(ex.direction)},
                  {"source", to_string(ex.source)},
                  {"label", c == ex.gold_index ? 1 : 0}};
      if (p.contains("error")) {
        row["error"] = p["error"];
      } else {
        auto explanation = e["explanation"].get<StructuredExplanation>();
        try {
          auto f = compute_features(to_eev(ex, c), explanation, p["proof"].get<ProofResult>(), scorers, cfg_.metrics);
          auto h = classify_hedges(explanation, *scorers.hedge);
          row["features"] = f;
          row["self_evident"] = is_self_evident(f);
          row["hedges"] = h;
          row["hedge_ratio"] = h.tokens ? detail::num(hedge_ratio(h), 12) : json(0.0);
        } catch (const ValidationError& err) {
          row["error"] = std::string("features: ") + err.what();
        }
      }
      rows[i] = std::move(row);
    });
    write_artifact("features.jsonl", detail::dump_jsonl(rows));
    return finish(Stage::features, inputs, outputs, {{"scorers", scorer_manifest()}});
  }

  std::map<std::string, CqaExample> index_examples() const {
    std::map<std::string, CqaExample> out;
    for (auto& e : run_examples()) out[e.example.id] = e.example;
    return out;
  }

  struct FeatureTable {
    std::vector<IbeFeatureVector> train_rows;
    std::vector<int> train_labels;
    std::vector<Source> train_sources;
    std::vector<EvalExample> test;
    std::vector<Source> test_sources;
    std::vector<std::string> skipped;
    std::vector<json> rows;
  };

  // Examples with any failed candidate are dropped whole.
  FeatureTable feature_table() const {
    FeatureTable t;
    t.rows = detail::read_jsonl(path("features.jsonl"));
    std::vector<std::string> order;
    std::map<std::string, std::vector<const json*>> by_example;
    for (const auto& r : t.rows) {
      auto id = r["example_id"].get<std::string>();
      if (!by_example.contains(id)) order.push_back(id);
      by_example[id].push_back(&r);
    }
    for (const auto& id : order) {
      const auto& cands = by_example[id];
      bool ok = std::none_of(cands.begin(), cands.end(), [](const json* r) { return r->contains("error"); });
      if (!ok) {
        t.skipped.push_back(id);
        continue;
      }
      const json& first = *cands.front();
      auto source = parse_source(first["source"].get<std::string>());
      if (first["split"] == "train") {
        for (const json* r : cands) {
          t.train_rows.push_back((*r)["features"].get<IbeFeatureVector>());
          t.train_labels.push_back((*r)["label"].get<int>());
          t.train_sources.push_back(source);
        }
      } else {
        EvalExample ex;
        ex.id = id;
        ex.direction = parse_direction(first["direction"].get<std::string>());
        for (const json* r : cands) {
          ex.candidates.push_back((*r)["features"].get<IbeFeatureVector>());
          if ((*r)["label"] == 1) ex.gold_index = (*r)["candidate_index"].get<std::size_t>();
        }
        t.test.push_back(std::move(ex));
        t.test_sources.push_back(source);
      }
    }
    return t;
  }

  StageResult fit() {
    const std::vector<std::string> outputs = {"model.json"};
    json inputs = {{"features.jsonl", upstream("features.jsonl", Stage::features)},
                   {"features", cfg_.features},
                   {"fit_scope", cfg_.fit_scope}};
    if (cache_hit(Stage::fit, inputs, outputs)) return hit(Stage::fit, outputs);

    auto t = feature_table();
    if (t.train_rows.empty()) throw DataError("no usable training rows in features.jsonl");
    json models = json::object();
    models["joint"] = fit_linear(t.train_rows, t.train_labels, cfg_.features);
    if (cfg_.fit_scope == "per-source") {
      std::map<std::string, std::pair<std::vector<IbeFeatureVector>, std::vector<int>>> groups;
      for (std::size_t i = 0; i < t.train_rows.size(); ++i) {
        auto& g = groups[std::string(to_string(t.train_sources[i]))];
        g.first.push_back(t.train_rows[i]);
        g.second.push_back(t.train_labels[i]);
      }
      for (auto& [src, g] : groups) models[src] = fit_linear(g.first, g.second, cfg_.features);
    }
    json out = {{"fit_scope", cfg_.fit_scope}, {"models", models}, {"skipped", t.skipped}};
    write_artifact("model.json", detail::pretty(out));
    return finish(Stage::fit, inputs, outputs);
  }

  static const LinearModel& model_for(const std::map<std::string, LinearModel>& models, Source s) {
    if (auto it = models.find(std::string(to_string(s))); it != models.end()) return it->second;
    return models.at("joint");
  }

  std::map<std::string, LinearModel> load_models() const {
    auto j = json::parse(text::read_file(path("model.json")));
    std::map<std::string, LinearModel> out;
    for (auto& [k, v] : j.at("models").items()) out[k] = v.get<LinearModel>();
    return out;
  }

  StageResult evaluate() {
    const std::vector<std::string> outputs = {"predictions.jsonl", "evaluation.json"};
    json inputs = {{"features.jsonl", upstream("features.jsonl", Stage::features)},
                   {"model.json", upstream("model.json", Stage::fit)},
                   {"judge", cfg_.judge}};
    if (cfg_.judge) {
      inputs["explanations.jsonl"] = upstream("explanations.jsonl", Stage::generate);
      inputs["transcripts"] = file_hash(cfg_.transcripts_path);
    }
    if (cache_hit(Stage::evaluate, inputs, outputs)) return hit(Stage::evaluate, outputs);

    auto t = feature_table();
    if (t.test.empty()) throw DataError("no usable evaluation examples in features.jsonl");
    auto models = load_models();

    std::vector<std::size_t> judge_sel;
    if (cfg_.judge) judge_sel = judge_verdicts(t.test);

    std::vector<json> rows;
    std::vector<std::size_t> sel, gold;
    for (std::size_t i = 0; i < t.test.size(); ++i) {
      const auto& ex = t.test[i];
      const auto& m = model_for(models, t.test_sources[i]);
      json scores = json::array();
      std::vector<double> raw;
      for (const auto& c : ex.candidates) {
        raw.push_back(score(m, c));
        scores.push_back(detail::num(raw.back(), 12));
      }
      auto s = argmax_first(raw);
      sel.push_back(s);
      gold.push_back(ex.gold_index);
      json row = {{"example_id", ex.id},     {"direction", to_string(ex.direction)}, {"gold_index", ex.gold_index},
                  {"scores", scores},        {"selected", s},                         {"correct", s == ex.gold_index}};
      if (cfg_.judge) row["judge_selected"] = judge_sel[i];
      rows.push_back(std::move(row));
    }
    auto dir = directionality_breakdown(t.test, sel);
    json per_dir = json::object();
    for (const auto& [k, v] : dir.accuracy) per_dir[k] = {{"accuracy", detail::num(v)}, {"n", dir.count.at(k)}};
    json ev = {{"accuracy", detail::num(accuracy(sel, gold))},
               {"n", sel.size()},
               {"correct", std::count_if(rows.begin(), rows.end(), [](const json& r) { return r["correct"].get<bool>(); })},
               {"per_direction", per_dir},
               {"notes", dir.notes},
               {"skipped", t.skipped}};
    if (cfg_.judge) ev["judge_accuracy"] = detail::num(accuracy(judge_sel, gold));
    write_artifact("predictions.jsonl", detail::dump_jsonl(rows));
    write_artifact("evaluation.json", detail::pretty(ev));
    return finish(Stage::evaluate, inputs, outputs);
  }

  std::vector<std::size_t> judge_verdicts(const std::vector<EvalExample>& test) {
    auto examples = index_examples();
    std::map<std::string, std::vector<StructuredExplanation>> expl;
    for (const auto& r : detail::read_jsonl(path("explanations.jsonl"))) {
      if (r.contains("explanation")) expl[r["example_id"].get<std::string>()].push_back(r["explanation"].get<StructuredExplanation>());
    }
    auto& st = store();
    auto opts = gen_options();
    std::vector<std::size_t> out(test.size());
    parallel_for(test.size(), cfg_.parallelism, [&](std::size_t i) {
      const auto& ex = examples.at(test[i].id);
      out[i] = judge_baseline(ex, expl.at(ex.id), client_.get(), st, opts);
    });
    save_store();
    return out;
  }

  StageResult report() {
    const std::vector<std::string> outputs(std::begin(kReportFiles), std::end(kReportFiles));
    json inputs = {{"features.jsonl", upstream("features.jsonl", Stage::features)},
                   {"model.json", upstream("model.json", Stage::fit)},
                   {"predictions.jsonl", upstream("predictions.jsonl", Stage::evaluate)},
                   {"evaluation.json", upstream("evaluation.json", Stage::evaluate)},
                   {"standardize_report", cfg_.standardize_report}};
    if (cache_hit(Stage::report, inputs, outputs)) return hit(Stage::report, outputs);

    auto t = feature_table();
    if (t.test.empty()) throw DataError("report: evaluation is empty");
    auto ev = json::parse(text::read_file(path("evaluation.json")));
    auto predictions = detail::read_jsonl(path("predictions.jsonl"));

    std::string csv = "group,row,features,accuracy\n";
    for (const auto& r : ablation(t.train_rows, t.train_labels, t.test)) {
      std::string feats;
      for (const auto& f : r.features) feats += (feats.empty() ? "" : "+") + f;
      csv += r.group + "," + r.label + "," + feats + "," + text::fixed(r.accuracy) + "\n";
    }
    write_artifact("report/ablation.csv", csv);
    write_artifact("report/regression.json", detail::pretty(regression_report(t)));

    std::string dcsv = "direction,n,accuracy\n";
    for (const auto& [k, v] : ev["per_direction"].items()) {
      dcsv += k + "," + std::to_string(v["n"].get<std::size_t>()) + "," + text::fixed(v["accuracy"].get<double>()) + "\n";
    }
    write_artifact("report/directionality.csv", dcsv);

    write_artifact("report/self_evident.json", detail::pretty(self_evident_report(t)));
    write_artifact("report/hedges.csv", hedge_report(t));
    write_artifact("report/plot_features.csv", plot_series(t, predictions));

    json summary = {{"accuracy", ev["accuracy"]},
                    {"n", ev["n"]},
                    {"per_direction", ev["per_direction"]},
                    {"skipped", ev["skipped"]},
                    {"features", cfg_.features}};
    if (ev.contains("judge_accuracy")) summary["judge_accuracy"] = ev["judge_accuracy"];
    if (auto m = read_manifest(Stage::features); m && m->contains("scorers")) summary["scorers"] = (*m)["scorers"];
    write_artifact("report/summary.json", detail::pretty(summary));
    return finish(Stage::report, inputs, outputs);
  }

  json regression_report(const FeatureTable& t) const {
    std::vector<const json*> eval_rows;
    std::set<std::string> usable;
    for (const auto& ex : t.test) usable.insert(ex.id);
    for (const auto& r : t.rows)
      if (r["split"] == "test" && usable.contains(r["example_id"].get<std::string>())) eval_rows.push_back(&r);

    json entries = json::array();
    for (auto name : kFeatureNames) {
      std::string f(name);
      double mean = 0.0, sd = 1.0;
      if (cfg_.standardize_report && !t.train_rows.empty()) {
        for (const auto& r : t.train_rows) mean += r.value(f);
        mean /= static_cast<double>(t.train_rows.size());
        double ss = 0.0;
        for (const auto& r : t.train_rows) ss += (r.value(f) - mean) * (r.value(f) - mean);
        sd = t.train_rows.size() > 1 ? std::sqrt(ss / static_cast<double>(t.train_rows.size() - 1)) : 0.0;
        if (!(sd > 0.0)) sd = 1.0;
      }
      std::vector<double> x, y;
      for (const json* r : eval_rows) {
        x.push_back(((*r)["features"].get<IbeFeatureVector>().value(f) - mean) / sd);
        y.push_back((*r)["label"].get<double>());
      }
      try {
        auto e = univariate_regression(f, x, y);
        entries.push_back({{"feature", f},
                           {"n", e.n},
                           {"coefficient", detail::num(e.coefficient)},
                           {"std_error", detail::num(e.std_error)},
                           {"t_statistic", detail::num(e.t_statistic)},
                           {"p_value", detail::num(e.p_value, 12)},
                           {"marker", e.marker}});
      } catch (const ValidationError& err) {
        entries.push_back({{"feature", f}, {"n", x.size()}, {"error", err.what()}});
      }
    }
    return {{"split", "test"}, {"standardized", cfg_.standardize_report}, {"entries", entries}};
  }

  static json self_evident_report(const FeatureTable& t) {
    json out = json::object();
    for (const char* split : {"train", "test"}) {
      std::size_t total = 0, flagged = 0, correct = 0;
      json items = json::array();
      for (const auto& r : t.rows) {
        if (r["split"] != split || r.contains("error")) continue;
        ++total;
        if (!r["self_evident"].get<bool>()) continue;
        ++flagged;
        if (r["label"] == 1) ++correct;
        items.push_back(detail::candidate_key(r["example_id"].get<std::string>(), r["candidate_index"].get<std::size_t>()));
      }
      out[split] = {{"explanations", total},
                    {"self_evident", flagged},
                    {"correct_option", correct},
                    {"incorrect_option", flagged - correct},
                    {"rate", detail::num(total ? static_cast<double>(flagged) / static_cast<double>(total) : 0.0)},
                    {"items", items}};
    }
    return out;
  }

  static std::string hedge_report(const FeatureTable& t) {
    std::string csv = "option,explanations,epistemic,doxatic,conditional,cues,tokens,cue_rate\n";
    for (int label : {1, 0}) {
      HedgeCounts sum;
      std::size_t n = 0;
      for (const auto& r : t.rows) {
        if (r.contains("error") || r["label"] != label) continue;
        sum += r["hedges"].get<HedgeCounts>();
        ++n;
      }
      double rate = sum.tokens ? static_cast<double>(sum.cues()) / static_cast<double>(sum.tokens) : 0.0;
      csv += std::string(label ? "correct" : "incorrect") + "," + std::to_string(n) + "," + std::to_string(sum.epistemic) +
             "," + std::to_string(sum.doxatic) + "," + std::to_string(sum.conditional) + "," + std::to_string(sum.cues()) +
             "," + std::to_string(sum.tokens) + "," + text::fixed(rate) + "\n";
    }
    return csv;
  }

  static std::string plot_series(const FeatureTable& t, const std::vector<json>& predictions) {
    std::map<std::string, double> scores;
    for (const auto& p : predictions) {
      auto id = p["example_id"].get<std::string>();
      for (std::size_t c = 0; c < p["scores"].size(); ++c) scores[detail::candidate_key(id, c)] = p["scores"][c].get<double>();
    }
    std::string csv =
        "split,example_id,candidate_index,label,consistency,depth,drift,coherence,uncertainty,hedge_ratio,self_evident,"
        "score\n";
    for (const auto& r : t.rows) {
      if (r.contains("error")) continue;
      auto id = r["example_id"].get<std::string>();
      auto c = r["candidate_index"].get<std::size_t>();
      auto f = r["features"].get<IbeFeatureVector>();
      auto key = detail::candidate_key(id, c);
      csv += r["split"].get<std::string>() + "," + id + "," + std::to_string(c) + "," +
             std::to_string(r["label"].get<int>()) + "," + std::to_string(f.consistency) + "," + std::to_string(f.depth) +
             "," + std::to_string(f.drift) + "," + text::fixed(f.coherence) + "," + text::fixed(f.uncertainty) + "," +
             text::fixed(r["hedge_ratio"].get<double>()) + "," + (r["self_evident"].get<bool>() ? "1" : "0") + "," +
             (scores.contains(key) ? text::fixed(scores[key]) : std::string()) + "\n";
    }
    return csv;
  }

  PipelineConfig cfg_;
  StageOptions opts_;
  std::string fingerprint_;
  std::string run_dir_;
  std::unique_ptr<TranscriptStore> store_;
  std::unique_ptr<LlmClient> client_;
  std::unique_ptr<EmbeddingTable> table_;
  std::optional<ScorerSuite> suite_;
  std::shared_ptr<SubstitutionLog> substitutions_;
  json sidecar_models_;
};

}  // namespace ibe
