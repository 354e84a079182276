#include "doctest.h"

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "tackscan/dataset.hpp"
#include "tackscan/error.hpp"
#include "tackscan/pipeline.hpp"
#include "tackscan/svm.hpp"

using namespace tackscan;
namespace fs = std::filesystem;

namespace {

const char* const kTinyConfig = R"(preset=vendee
seed=7
scene.length=12
scene.width=1
scene.step=0.25
scene.survey.mode=grid
scene.section.0.name=Q450
scene.section.0.length=4
scene.section.0.quantity=450
scene.section.1.name=Q250
scene.section.1.length=4
scene.section.1.quantity=250
scene.section.2.name=Q300
scene.section.2.length=4
scene.section.2.quantity=300
tasks=mcsvm,svr
grid.C=1,16
grid.gamma=0.25,1
grid.epsilon=10
grid.folds=3
accept.mcsvm.macro_dice=0.5
accept.svr.rmse=200
)";

fs::path fresh_dir(const std::string& name) {
  const auto d = fs::temp_directory_path() / "tackscan-unit-pipeline" / name;
  fs::remove_all(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

Pipeline tiny(const fs::path& out) {
  return Pipeline{parse_run_config(KeyValues::parse(kTinyConfig, "tiny")), out, false, nullptr};
}

int cli(const std::string& args) {
  const std::string cmd = std::string(TACKSCAN_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("config parsing") {
  SUBCASE("unknown keys are named") {
    try {
      parse_run_config(KeyValues::parse("scene.lenght=3\n", "cfg"));
      FAIL("expected an error");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("scene.lenght") != std::string::npos);
    }
  }
  SUBCASE("round-trip through key-values") {
    const RunConfig c = parse_run_config(KeyValues::parse(kTinyConfig, "tiny"));
    const RunConfig d = parse_run_config(to_kv(c));
    CHECK(to_kv(d).to_string() == to_kv(c).to_string());
    CHECK(d.scene.sections.size() == 3);
    CHECK(d.grid.C == std::vector<double>{1.0, 16.0});
  }
  SUBCASE("presets validate") {
    for (const auto& name : run_preset_names()) CHECK_NOTHROW(validate(run_preset(name)));
  }
  SUBCASE("mcsvm needs a multi-class scheme") {
    CHECK_THROWS_AS(parse_run_config(KeyValues::parse("preset=carousel\ntasks=mcsvm\n", "cfg")), ValidationError);
  }
  SUBCASE("train fraction must lie in (0, 1)") {
    CHECK_THROWS_AS(parse_run_config(KeyValues::parse("split.train_fraction=1\n", "cfg")), ValidationError);
  }
  SUBCASE("seeds are derived, not shared") {
    const RunConfig c = run_preset("vendee");
    CHECK(noise_seed(c) == c.seed);
    CHECK(split_seed(c) != cv_seed(c));
    CHECK(split_seed(c) != noise_seed(c));
  }
}

TEST_CASE("staged run on a tiny scene") {
  const fs::path out = fresh_dir("staged");
  const Pipeline p = tiny(out);
  const SimulateResult s = stage_simulate(p);
  CHECK(s.traces == 49 * 5);
  CHECK(fs::exists(out / files::kTruthClassPgm));
  CHECK(stage_features(p) == s.traces);
  stage_train(p);

  const auto mc = load_model(out / files::model(TaskKind::mcsvm));
  CHECK(std::get<MultiClassModel>(mc.model).models.size() == 3);
  CHECK(std::holds_alternative<SvrModel>(load_model(out / files::model(TaskKind::svr)).model));

  stage_predict(p);
  stage_evaluate(p);
  stage_map(p);
  const auto report = KeyValues::read(out / files::report_kv(TaskKind::svr));
  CHECK(report.has("svr.rmse"));
  CHECK(KeyValues::read(out / files::report_kv(TaskKind::mcsvm)).has("mcsvm.confusion.450.450"));

  SUBCASE("leakage guard") {
    Pipeline q = p;
    q.config.eval_subset = EvalSubset::train;
    CHECK_THROWS_AS(stage_evaluate(q), ValidationError);
    q.allow_train_eval = true;
    CHECK_NOTHROW(stage_evaluate(q));
  }
  SUBCASE("reproduce matches the individual stages byte for byte") {
    const fs::path other = fresh_dir("reproduced");
    const ReproduceResult r = reproduce(tiny(other));
    CHECK(r.passed);
    for (TaskKind t : {TaskKind::mcsvm, TaskKind::svr}) {
      CHECK(slurp(other / files::report_kv(t)) == slurp(out / files::report_kv(t)));
      CHECK(slurp(other / files::predictions(t)) == slurp(out / files::predictions(t)));
    }
  }
  SUBCASE("dimension mismatch is reported with both sizes") {
    Pipeline q = p;
    q.config.features.families = kWindowEnergy;
    stage_features(q);
    try {
      stage_predict(q);
      FAIL("expected an error");
    } catch (const ValidationError& e) {
      const std::string what = e.what();
      CHECK(what.find("feature-dimension mismatch") != std::string::npos);
      CHECK(what.find("expects 88") != std::string::npos);
      CHECK(what.find("has 8") != std::string::npos);
    }
  }
}

TEST_CASE("training refuses prediction-only data") {
  const fs::path src = fresh_dir("unlabelled-src");
  fs::create_directories(src);
  std::vector<AScan> traces;
  for (int i = 0; i < 6; ++i) {
    AScan a;
    a.dt = 20e-9 / 2048;
    a.x = 0.25 * i;
    a.samples.assign(2048, 0.0);
    a.samples[200 + i] = 1.0;
    traces.push_back(a);
  }
  write_trace_table(src / "t.csv", traces);
  std::ofstream(src / "t.meta") << "dt=" << 20e-9 / 2048 << "\n";
  const fs::path out = fresh_dir("unlabelled");
  Pipeline p = tiny(out);
  const auto m = stage_ingest(p, src / "t.csv", src / "t.meta");
  CHECK(m.prediction_only);
  stage_features(p);
  try {
    stage_train(p);
    FAIL("expected an error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("prediction-only") != std::string::npos);
  }
}

TEST_CASE("command line") {
  const fs::path base = fresh_dir("cli");
  fs::create_directories(base);
  std::ofstream(base / "tiny.cfg") << kTinyConfig;
  const std::string cfg = "--config " + (base / "tiny.cfg").string();
  const fs::path out = base / "nested" / "out";

  CHECK(cli("simulate " + cfg + " --out " + out.string()) == 0);
  CHECK(fs::exists(out / files::kTraces));
  CHECK(cli("features --out " + out.string()) == 0);
  CHECK(cli("train --out " + out.string()) == 0);
  CHECK(cli("predict --out " + out.string()) == 0);
  CHECK(cli("evaluate --out " + out.string()) == 0);
  CHECK(cli("map --out " + out.string()) == 0);

  std::ofstream(base / "leak.cfg") << kTinyConfig << "eval.subset=train\n";
  const std::string leak = "--config " + (base / "leak.cfg").string() + " --out " + out.string();
  CHECK(cli("evaluate " + leak) == 1);
  CHECK(cli("evaluate " + leak + " --allow-train-eval") == 0);

  std::ofstream(base / "bad.cfg") << "no.such.key=1\n";
  CHECK(cli("simulate --config " + (base / "bad.cfg").string() + " --out " + (base / "bad").string()) == 1);
  CHECK(cli("reproduce moon") == 1);
  CHECK(cli("") == 1);

  std::string strict = kTinyConfig;
  strict.replace(strict.find("accept.svr.rmse=200"), 19, "accept.svr.rmse=0.001");
  std::ofstream(base / "strict.cfg") << strict;
  CHECK(cli("reproduce vendee --config " + (base / "strict.cfg").string() + " --out " + (base / "strict").string()) == 3);
}
