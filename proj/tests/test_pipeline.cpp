#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <sys/wait.h>

#include "ibe_eval/pipeline.hpp"
#include "support/fixture_transcripts.hpp"

namespace ibe {
namespace {

namespace fs = std::filesystem;

const std::string kCorpus = std::string(IBE_FIXTURE_DIR) + "/corpus";

class TempDir {
 public:
  TempDir() {
    std::string tmpl = (fs::temp_directory_path() / "ibe-test-XXXXXX").string();
    if (!mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

PipelineConfig fixture_config(const std::string& out) {
  auto c = load_config(kCorpus + "/ibe-eval.ini");
  c.output_dir = out;
  return c;
}

StageOptions quiet(bool force = false) { return {force, [](const std::string&) {}}; }

std::map<std::string, std::string> snapshot(const std::string& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = text::read_file(e.path().string());
  }
  return out;
}

TEST(Config, ParsesAndResolvesPaths) {
  auto c = load_config(kCorpus + "/ibe-eval.ini");
  ASSERT_EQ(c.train.size(), 1u);
  EXPECT_EQ(c.train[0].path, fs::path(kCorpus + "/train.jsonl").lexically_normal().string());
  EXPECT_EQ(c.transcripts_mode, StoreMode::replay);
  EXPECT_DOUBLE_EQ(c.prover.threshold, 0.13);
  EXPECT_EQ(c.parallelism, 4u);
  EXPECT_TRUE(c.judge);
  EXPECT_EQ(c.features.size(), 5u);
  EXPECT_TRUE(fs::exists(c.lexicon_dir + "/hedge_cues.tsv"));
}

TEST(Config, RejectsBadValues) {
  const std::string base = "[data]\ntest = t.jsonl\n[transcripts]\npath = x.jsonl\n";
  EXPECT_NO_THROW(parse_config(base, "/tmp/c.ini"));
  EXPECT_THROW(parse_config(base + "[prover]\nthreshold = 1.5\n", "/tmp/c.ini"), UsageError);
  EXPECT_THROW(parse_config(base + "[prover]\nthreshold = 0\n", "/tmp/c.ini"), UsageError);
  EXPECT_THROW(parse_config(base + "[run]\nparallelism = 0\n", "/tmp/c.ini"), UsageError);
  EXPECT_THROW(parse_config(base + "[run]\nparalelism = 2\n", "/tmp/c.ini"), UsageError);
  EXPECT_THROW(parse_config(base + "[model]\nfeatures = depth,length\n", "/tmp/c.ini"), UsageError);
  EXPECT_THROW(parse_config(base + "[scorers]\nbackend = sidecar-http\n", "/tmp/c.ini"), UsageError);
  EXPECT_THROW(parse_config("[transcripts]\npath = x.jsonl\n", "/tmp/c.ini"), UsageError);
  EXPECT_THROW(parse_config("[data\n", "/tmp/c.ini"), UsageError);
}

TEST(Config, CacheDirFromEnvironment) {
  const std::string base = "[data]\ntest = t.jsonl\n[transcripts]\npath = x.jsonl\n";
  setenv("IBE_EVAL_CACHE_DIR", "/tmp/elsewhere", 1);
  auto c = parse_config(base, "/tmp/c.ini");
  unsetenv("IBE_EVAL_CACHE_DIR");
  EXPECT_EQ(c.output_dir, "/tmp/elsewhere");
  EXPECT_EQ(parse_config(base, "/tmp/c.ini").output_dir, "/tmp/runs");
}

TEST(Config, FingerprintIgnoresParallelismButNotParameters) {
  auto a = load_config(kCorpus + "/ibe-eval.ini");
  auto b = a;
  b.parallelism = 1;
  b.output_dir = "/somewhere/else";
  EXPECT_EQ(config_fingerprint(a), config_fingerprint(b));
  b.prover.threshold = 0.2;
  EXPECT_NE(config_fingerprint(a), config_fingerprint(b));
}

TEST(ParallelFor, RunsEveryIndexAndRethrowsLowestError) {
  std::vector<int> hits(100, 0);
  parallel_for(hits.size(), 8, [&](std::size_t i) { hits[i] += 1; });
  EXPECT_EQ(std::count(hits.begin(), hits.end(), 1), 100);
  try {
    parallel_for(50, 4, [](std::size_t i) {
      if (i == 7 || i == 30) throw DataError("fail " + std::to_string(i));
    });
    FAIL();
  } catch (const DataError& e) {
    EXPECT_STREQ(e.what(), "fail 7");
  }
}

TEST(FixtureTranscripts, CommittedStoreMatchesBuilder) {
  EXPECT_EQ(testing::build_fixture_transcripts(kCorpus), text::read_file(kCorpus + "/transcripts.jsonl"));
}

TEST(Pipeline, MissingUpstreamIsUsageError) {
  TempDir tmp;
  Pipeline p(fixture_config(tmp.path()), quiet());
  try {
    p.run(Stage::evaluate);
    FAIL();
  } catch (const UsageError& e) {
    EXPECT_NE(std::string(e.what()).find("features.jsonl"), std::string::npos);
  }
  EXPECT_THROW(p.run(Stage::formalize), UsageError);
}

TEST(Pipeline, CacheHitOnRerun) {
  TempDir tmp;
  Pipeline p(fixture_config(tmp.path()), quiet());
  for (const auto& r : p.run_all()) EXPECT_FALSE(r.cache_hit) << to_string(r.stage);
  auto before = snapshot(p.run_dir());
  Pipeline again(fixture_config(tmp.path()), quiet());
  for (const auto& r : again.run_all()) EXPECT_TRUE(r.cache_hit) << to_string(r.stage);
  EXPECT_EQ(snapshot(p.run_dir()), before);

  Pipeline forced(fixture_config(tmp.path()), quiet(true));
  EXPECT_FALSE(forced.run(Stage::fit).cache_hit);
  EXPECT_EQ(snapshot(p.run_dir()), before);
}

TEST(Pipeline, ReportRegeneratesIdenticallyFromCachedUpstream) {
  TempDir tmp;
  Pipeline p(fixture_config(tmp.path()), quiet());
  p.run_all();
  auto before = snapshot(p.run_dir());
  fs::remove_all(p.path("report"));
  fs::remove(p.path("report.manifest.json"));
  auto results = p.run_all();
  for (std::size_t i = 0; i + 1 < results.size(); ++i) EXPECT_TRUE(results[i].cache_hit);
  EXPECT_FALSE(results.back().cache_hit);
  EXPECT_EQ(snapshot(p.run_dir()), before);
}

TEST(Pipeline, DeterministicAcrossRunsAndParallelism) {
  TempDir a, b;
  auto ca = fixture_config(a.path());
  auto cb = fixture_config(b.path());
  ca.parallelism = 1;
  cb.parallelism = 8;
  Pipeline pa(ca, quiet()), pb(cb, quiet());
  pa.run_all();
  pb.run_all();
  auto sa = snapshot(pa.run_dir());
  EXPECT_EQ(sa, snapshot(pb.run_dir()));
  EXPECT_EQ(sa.size(), 8u + 7u + 7u);  // artifacts, manifests, report files
}

TEST(Pipeline, ModifiedUpstreamNeedsForce) {
  TempDir tmp;
  Pipeline p(fixture_config(tmp.path()), quiet());
  p.run_all();
  auto features = text::read_file(p.path("features.jsonl"));
  text::write_file(p.path("features.jsonl"), features + "\n");
  EXPECT_THROW(p.run(Stage::fit), DataError);
  Pipeline forced(fixture_config(tmp.path()), quiet(true));
  EXPECT_NO_THROW(forced.run(Stage::fit));
}

TEST(Pipeline, ExampleFilterAndEmptyEvaluation) {
  TempDir tmp;
  auto c = fixture_config(tmp.path());
  c.example_filter = {"t01", "t02", "t03", "t04"};
  Pipeline p(c, quiet());
  for (auto s : {Stage::generate, Stage::formalize, Stage::prove, Stage::features, Stage::fit}) p.run(s);
  EXPECT_EQ(detail::read_jsonl(p.path("features.jsonl")).size(), 8u);
  EXPECT_THROW(p.run(Stage::evaluate), DataError);

  auto bad = fixture_config(tmp.path());
  bad.example_filter = {"nope"};
  EXPECT_THROW(Pipeline(bad, quiet()).run(Stage::generate), UsageError);
}

TEST(Pipeline, FeatureSubsetChangesModel) {
  TempDir tmp;
  auto c = fixture_config(tmp.path());
  c.features = {"uncertainty"};
  Pipeline p(c, quiet());
  p.run_all();
  auto model = json::parse(text::read_file(p.path("model.json")));
  EXPECT_EQ(model["models"]["joint"]["feature_order"], json::array({"uncertainty"}));
  auto ev = json::parse(text::read_file(p.path("evaluation.json")));
  EXPECT_DOUBLE_EQ(ev["accuracy"].get<double>(), 1.0);
}

TEST(Pipeline, PerSourceFitting) {
  TempDir tmp;
  auto c = fixture_config(tmp.path());
  c.fit_scope = "per-source";
  Pipeline p(c, quiet());
  p.run_all();
  auto model = json::parse(text::read_file(p.path("model.json")));
  EXPECT_TRUE(model["models"].contains("joint"));
  EXPECT_TRUE(model["models"].contains("custom"));
  EXPECT_EQ(model["models"]["joint"], model["models"]["custom"]);
}

TEST(Pipeline, ReplayMissIsUpstreamError) {
  TempDir tmp;
  auto c = fixture_config(tmp.path());
  c.transcripts_path = tmp.path() + "/empty.jsonl";
  text::write_file(c.transcripts_path, "");
  Pipeline p(c, quiet());
  EXPECT_THROW(p.run(Stage::generate), ReplayMiss);
}

TEST(Pipeline, SidecarCapabilityFallbackRecordedInManifest) {
  TempDir tmp;
  auto c = fixture_config(tmp.path());
  c.scorer_backend = ScorerBackend::sidecar_stdio;
  c.sidecar_command = std::string(IBE_PYTHON) + " " + IBE_FIXTURE_DIR + "/sidecar/fake_sidecar.py --disable certainty";
  Pipeline p(c, quiet());
  p.run_all();
  auto m = json::parse(text::read_file(p.path("features.manifest.json")));
  ASSERT_EQ(m["scorers"]["substitutions"].size(), 1u);
  EXPECT_NE(m["scorers"]["substitutions"][0].get<std::string>().find("certainty"), std::string::npos);
  EXPECT_EQ(m["scorers"]["backend"], "sidecar-stdio");
  EXPECT_TRUE(m["scorers"].contains("sidecar_models"));

  // Certainty fell back to the lexicon scorer, so uncertainty matches the fallback run.
  TempDir ref;
  Pipeline fb(fixture_config(ref.path()), quiet());
  fb.run_all();
  auto rows = detail::read_jsonl(p.path("features.jsonl"));
  auto ref_rows = detail::read_jsonl(fb.path("features.jsonl"));
  ASSERT_EQ(rows.size(), ref_rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i]["features"]["uncertainty"], ref_rows[i]["features"]["uncertainty"]);
  }
}

int run_cli(const std::string& args) {
  int rc = std::system((std::string(IBE_CLI) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

TEST(Cli, ExitCodes) {
  TempDir tmp;
  std::string env = "IBE_EVAL_CACHE_DIR=" + tmp.path() + " ";
  std::string cfg = " --config " + kCorpus + "/ibe-eval.ini";
  EXPECT_EQ(run_cli("bogus" + cfg), 1);
  EXPECT_EQ(run_cli("generate --config /nonexistent.ini"), 1);
  EXPECT_EQ(std::system((env + IBE_CLI + " evaluate" + cfg + " >/dev/null 2>&1").c_str()) >> 8, 1);
  EXPECT_EQ(std::system((env + IBE_CLI + " all" + cfg + " >/dev/null 2>&1").c_str()) >> 8, 0);
  EXPECT_EQ(std::system((env + IBE_CLI + " report" + cfg + " --features depth,length >/dev/null 2>&1").c_str()) >> 8, 1);

  auto bad_data = tmp.path() + "/bad.ini";
  text::write_file(tmp.path() + "/bad.jsonl", "{not json\n");
  text::write_file(tmp.path() + "/t.jsonl", "");
  text::write_file(bad_data, "[data]\ntest = bad.jsonl\n[transcripts]\npath = t.jsonl\n");
  EXPECT_EQ(run_cli("generate --config " + bad_data), 2);

  auto miss = tmp.path() + "/miss.ini";
  text::write_file(miss, "[data]\ntest = " + kCorpus + "/test.jsonl\n[transcripts]\npath = t.jsonl\n");
  EXPECT_EQ(std::system((env + IBE_CLI + " generate --config " + miss + " >/dev/null 2>&1").c_str()) >> 8, 3);
}

TEST(Cli, Agreement) {
  TempDir tmp;
  text::write_file(tmp.path() + "/a.txt", "1\n2\n3\n4\n");
  text::write_file(tmp.path() + "/b.txt", "1\n2\n3\n4\n");
  EXPECT_EQ(run_cli("agreement " + tmp.path() + "/a.txt " + tmp.path() + "/b.txt"), 0);
  EXPECT_EQ(run_cli("agreement " + tmp.path() + "/a.txt"), 1);
}

}  // namespace
}  // namespace ibe
