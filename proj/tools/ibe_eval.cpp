#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ibe_eval/pipeline.hpp"

namespace {

int exit_code(ibe::ErrorKind k) {
  switch (k) {
    case ibe::ErrorKind::usage: return 1;
    case ibe::ErrorKind::data: return 2;
    case ibe::ErrorKind::upstream: return 3;
  }
  return 2;
}

std::vector<double> read_column(const std::string& path) {
  std::vector<double> out;
  std::istringstream in(ibe::text::read_file(path));
  std::size_t lineno = 0;
  for (std::string line; std::getline(in, line);) {
    ++lineno;
    auto t = ibe::text::trim(line);
    if (t.empty()) continue;
    char* end = nullptr;
    double v = std::strtod(t.c_str(), &end);
    if (end == t.c_str() || *end != '\0') throw ibe::DataError(path + ":" + std::to_string(lineno) + ": not a number");
    out.push_back(v);
  }
  return out;
}

int agreement(const std::vector<std::string>& files) {
  if (files.size() != 2) throw ibe::UsageError("agreement takes two annotation files");
  auto a = read_column(files[0]);
  auto b = read_column(files[1]);
  if (a.size() != b.size()) throw ibe::DataError("annotation files differ in length");
  auto rho = ibe::spearman(a, b);
  std::vector<int> ia, ib;
  for (double v : a) ia.push_back(static_cast<int>(std::lround(v)));
  for (double v : b) ib.push_back(static_cast<int>(std::lround(v)));
  auto k = ibe::cohens_kappa(ia, ib);
  ibe::json out = {{"n", a.size()},
                   {"spearman_rho", ibe::detail::num(rho.rho, 9)},
                   {"spearman_p", ibe::detail::num(rho.p_value, 9)},
                   {"cohens_kappa", ibe::detail::num(k.kappa, 9)},
                   {"kappa_degenerate", k.degenerate}};
  std::cout << out.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scores competing explanations for causal questions and selects the most plausible one."};
  std::string stage;
  std::string config;
  bool force = false;
  std::string examples;
  std::string features;
  std::vector<std::string> files;
  app.add_option("stage", stage, "generate|formalize|prove|features|fit|evaluate|report|all|agreement")->required();
  app.add_option("files", files, "annotation files (agreement only)");
  app.add_option("--config", config, "pipeline configuration file");
  app.add_flag("--force", force, "recompute even on a cache hit and accept modified upstream artifacts");
  app.add_option("--examples", examples, "comma-separated example ids to restrict the run to");
  app.add_option("--features", features, "comma-separated feature subset for fit/evaluate");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (stage == "agreement") return agreement(files);
    if (config.empty()) throw ibe::UsageError("--config is required");
    auto cfg = ibe::load_config(config);
    if (!examples.empty()) cfg.example_filter = ibe::detail::split_list(examples);
    if (!features.empty()) cfg.features = ibe::detail::split_list(features);
    ibe::validate_config(cfg);
    ibe::Pipeline pipeline(cfg, {force});
    if (stage == "all") {
      pipeline.run_all();
    } else {
      pipeline.run(ibe::parse_stage(stage));
    }
    std::cout << pipeline.run_dir() << "\n";
    return 0;
  } catch (const ibe::Error& e) {
    std::cerr << "ibe-eval: error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "ibe-eval: error: " << e.what() << "\n";
    return 2;
  }
}
