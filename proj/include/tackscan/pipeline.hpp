#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tackscan/dataset.hpp"
#include "tackscan/em_forward.hpp"
#include "tackscan/features.hpp"
#include "tackscan/scene.hpp"
#include "tackscan/svm.hpp"

namespace tackscan {

enum class TaskKind { tcsvm, mcsvm, svr };
std::string to_string(TaskKind task);
TaskKind parse_task(const std::string& text);

enum class SplitMode { random, block };

struct SplitSpec {
  double train_fraction = 0.7;
  SplitMode mode = SplitMode::random;
  double block_length = 5.0;  // m along x, block mode
};

struct GridSpec {
  KernelSpec kernel;
  std::vector<double> C;
  std::vector<double> gamma;
  bool gamma_per_dimension = true;  // gamma values are divided by D
  std::vector<double> epsilon;
  std::size_t folds = 5;
};

/// Acceptance targets checked by `reproduce`; unset entries are reported only.
struct Thresholds {
  std::optional<double> tcsvm_macro_dice;
  std::optional<double> mcsvm_macro_dice;
  std::optional<double> svr_rmse;
};

enum class EvalSubset { test, train, all };

struct RunConfig {
  std::string preset;
  SceneConfig scene;
  PulseSpec pulse;
  AcquisitionSpec acq;
  FeatureConfig features;
  std::vector<TaskKind> tasks;
  GridSpec grid;
  SolverOptions solver;
  SplitSpec split;
  std::size_t max_train_samples = 0;  // 0: no cap
  double exclusion_margin = 0.0;      // m around internal section boundaries
  EvalSubset eval_subset = EvalSubset::test;
  std::uint64_t seed = 0;
  Thresholds accept;
};

std::vector<std::string> run_preset_names();
RunConfig run_preset(const std::string& name);

/// Applies `kv` on top of the preset it names (key `preset`, default
/// numerical-study). Unknown keys throw ValidationError naming the key.
RunConfig parse_run_config(const KeyValues& kv);
RunConfig read_run_config(const std::filesystem::path& path);
/// Full key set describing `config`; parse_run_config(to_kv(c)) == c.
KeyValues to_kv(const RunConfig& config);

/// Seeds derived from RunConfig::seed for each consumer.
std::uint64_t noise_seed(const RunConfig& config);
std::uint64_t split_seed(const RunConfig& config);
std::uint64_t cv_seed(const RunConfig& config);

/// Checks cross-field rules: task vs class scheme, fractions, grids.
void validate(const RunConfig& config);

/// Stage files inside the output directory.
namespace files {
inline constexpr const char* kTraces = "traces.csv";
inline constexpr const char* kTraceMeta = "traces.meta";
inline constexpr const char* kManifest = "dataset.manifest";
inline constexpr const char* kTruthQuantity = "truth_quantity.csv";
inline constexpr const char* kTruthClass = "truth_class.csv";
inline constexpr const char* kTruthClassPgm = "truth_class.pgm";
inline constexpr const char* kFeatures = "features.csv";
inline constexpr const char* kSplit = "split.csv";
inline constexpr const char* kRunConfig = "run.cfg";
inline constexpr const char* kSummary = "summary.kv";
std::string model(TaskKind task);
std::string search(TaskKind task);
std::string predictions(TaskKind task);
std::string report_txt(TaskKind task);
std::string report_kv(TaskKind task);
std::string map_csv(TaskKind task);
std::string map_pgm(TaskKind task);
}  // namespace files

struct Pipeline {
  RunConfig config;
  std::filesystem::path out;
  bool allow_train_eval = false;
  std::ostream* log = nullptr;  // progress lines; null is silent
};

struct SimulateResult {
  std::size_t traces = 0;
  std::uint64_t seed = 0;
};

SimulateResult stage_simulate(const Pipeline& p);
DatasetManifest stage_ingest(const Pipeline& p, const std::filesystem::path& traces,
                             const std::filesystem::path& metadata);
/// Reads the manifest in the output directory and writes the feature table.
std::size_t stage_features(const Pipeline& p);
/// Split, grid search and final fit for every configured task.
void stage_train(const Pipeline& p);
void stage_predict(const Pipeline& p);
void stage_evaluate(const Pipeline& p);
void stage_map(const Pipeline& p);

struct ReproduceResult {
  bool passed = true;
  KeyValues summary;
};

/// Writes summary.kv from the report files already in the output directory.
ReproduceResult stage_summarize(const Pipeline& p);

/// simulate -> features -> train -> predict -> evaluate -> map -> summarize.
/// A failing stage is rethrown with its name prefixed.
ReproduceResult reproduce(const Pipeline& p);

}  // namespace tackscan
