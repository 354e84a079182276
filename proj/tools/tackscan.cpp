// tackscan: GPR tack-coat survey simulation, SVM training and mapping.

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "tackscan/error.hpp"
#include "tackscan/pipeline.hpp"

namespace fs = std::filesystem;
using namespace tackscan;

namespace {

enum Exit { kOk = 0, kValidation = 1, kRuntime = 2, kThreshold = 3 };

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "tackscan-out";
  bool allow_train_eval = false;
};

void add_globals(CLI::App* app, Globals& g) {
  app->add_option("--config", g.config, "Run configuration (flat key = value file)");
  app->add_option("--seed", g.seed, "Master seed, overrides the config");
  app->add_option("--out", g.out, "Output directory")->capture_default_str();
  app->add_flag("--allow-train-eval", g.allow_train_eval, "Permit evaluation on training traces");
}

Pipeline make_pipeline(const Globals& g, const std::optional<std::string>& preset) {
  KeyValues kv;
  const fs::path saved = fs::path(g.out) / files::kRunConfig;
  if (!g.config.empty())
    kv = KeyValues::read(g.config);
  else if (!preset && fs::exists(saved))
    kv = KeyValues::read(saved);  // later stages follow the config simulate recorded
  if (preset) {
    if (auto named = kv.find("preset"); named && *named != *preset)
      throw ValidationError("config names preset '" + *named + "' but '" + *preset + "' was requested");
    kv.set("preset", *preset);
  }
  RunConfig config = parse_run_config(kv);
  if (g.seed) config.seed = *g.seed;
  return Pipeline{std::move(config), fs::path(g.out), g.allow_train_eval, &std::cout};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GPR tack-coat survey simulation, SVM classification and mapping"};
  app.require_subcommand(1);
  Globals g;

  auto* simulate = app.add_subcommand("simulate", "Simulate a survey: trace table, metadata, ground-truth maps");
  auto* ingest = app.add_subcommand("ingest", "Validate an external trace table and write a dataset manifest");
  auto* features = app.add_subcommand("features", "Extract feature vectors from the dataset");
  auto* train = app.add_subcommand("train", "Split, grid-search and fit the configured SVM tasks");
  auto* predict = app.add_subcommand("predict", "Predict every trace with the trained models");
  auto* evaluate = app.add_subcommand("evaluate", "Confusion matrix, Dice and RMSE on held-out traces");
  auto* map = app.add_subcommand("map", "Assemble predictions into CSV and PGM maps");
  auto* repro = app.add_subcommand("reproduce", "Run the whole pipeline for a study preset");

  std::string traces_path, meta_path, study;
  ingest->add_option("traces", traces_path, "Trace table CSV")->required();
  ingest->add_option("metadata", meta_path, "Metadata sidecar (key=value, needs dt)")->required();
  repro->add_option("study", study, "numerical-study, carousel or vendee")
      ->required()
      ->check(CLI::IsMember(run_preset_names()));

  for (auto* sub : {simulate, ingest, features, train, predict, evaluate, map, repro}) add_globals(sub, g);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  try {
    if (repro->parsed()) {
      const Pipeline p = make_pipeline(g, study);
      const ReproduceResult r = reproduce(p);
      std::cout << r.summary.to_string();
      std::cout << (r.passed ? "all thresholds met\n" : "threshold failure\n");
      return r.passed ? kOk : kThreshold;
    }
    const Pipeline p = make_pipeline(g, std::nullopt);
    if (simulate->parsed()) {
      const SimulateResult r = stage_simulate(p);
      std::cout << "traces=" << r.traces << " seed=" << r.seed << "\n";
    } else if (ingest->parsed()) {
      stage_ingest(p, traces_path, meta_path);
    } else if (features->parsed()) {
      stage_features(p);
    } else if (train->parsed()) {
      stage_train(p);
    } else if (predict->parsed()) {
      stage_predict(p);
    } else if (evaluate->parsed()) {
      stage_evaluate(p);
    } else if (map->parsed()) {
      stage_map(p);
    }
    return kOk;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
}
