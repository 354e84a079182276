#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "tackscan/features.hpp"
#include "tackscan/scene.hpp"

namespace tackscan {

enum class KernelKind { linear, rbf, polynomial };

struct KernelSpec {
  KernelKind kind = KernelKind::rbf;
  double gamma = 1.0;  // rbf and polynomial scale
  int degree = 3;      // polynomial
  double coef0 = 0.0;  // polynomial

  bool operator==(const KernelSpec&) const = default;
};

void validate(const KernelSpec& kernel);
std::string to_string(KernelKind kind);
KernelKind parse_kernel_kind(const std::string& text);

/// linear: u.v; rbf: exp(-gamma |u-v|^2); polynomial: (gamma u.v + coef0)^degree.
double kernel_eval(const KernelSpec& kernel, std::span<const double> u, std::span<const double> v);

/// Feature vectors with one target each: +-1 for binary problems, a class
/// label for multi-class ones, g/m^2 for regression.
struct TrainingSet {
  std::vector<FeatureVector> x;
  std::vector<double> y;

  std::size_t size() const { return x.size(); }
  std::size_t dimension() const { return x.empty() ? 0 : x.front().size(); }
};

struct SolverOptions {
  double tol = 1e-3;
  std::size_t max_iterations = 1'000'000;
  std::size_t cache_bytes = std::size_t{256} << 20;
};

/// min 1/2 a'Qa + p'a  s.t.  y'a = 0, 0 <= a <= C, with Q_st = y_s y_t K(x_s, x_t).
/// Variables may share points (regression uses each point twice).
struct DualProblem {
  std::span<const FeatureVector> points;
  KernelSpec kernel;
  std::vector<std::size_t> point_of;  // variable -> point
  std::vector<double> y;              // +-1 per variable
  std::vector<double> p;              // linear term per variable
  double C = 1.0;
};

/// What the solver reports besides the model. `kkt_residual` is measured on
/// each variable against the returned bias.
struct DualSolution {
  std::vector<double> alpha;
  double bias = 0.0;
  double objective = 0.0;
  double max_violation = 0.0;  // m(a) - M(a) at exit
  std::size_t iterations = 0;
  std::vector<double> kkt_residual;
};

/// Sequential minimal optimization with maximal-violating-pair selection.
/// Throws ConvergenceError after `max_iterations` pair updates.
DualSolution solve_smo(const DualProblem& problem, const SolverOptions& options);

struct BinarySvmModel {
  KernelSpec kernel;
  double C = 1.0;
  std::vector<FeatureVector> support_vectors;
  std::vector<double> coefficients;  // alpha_i * y_i
  double bias = 0.0;
  Normalizer normalizer;
  /// Training points strictly inside the margin or misclassified (slack > 0).
  std::size_t margin_violations = 0;
};

struct BinaryTraining {
  BinarySvmModel model;
  DualSolution solution;
};

/// Labels must be -1 or +1 with both present. The returned model works on
/// the same space as `set`; attach a normalizer to accept raw features.
BinaryTraining train_binary(const TrainingSet& set, double C, const KernelSpec& kernel,
                            const SolverOptions& options = {});

struct BinaryPrediction {
  int label;  // sign of the decision value, 0 maps to +1
  double decision;
};

double decision_value(const BinarySvmModel& model, std::span<const double> x);
BinaryPrediction predict_binary(const BinarySvmModel& model, std::span<const double> x);

/// One-vs-one. Sub-model k covers class pair (labels[a], labels[b]) with
/// a < b; labels[a] is its +1 side.
struct MultiClassModel {
  std::vector<ClassLabel> labels;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::vector<BinarySvmModel> models;
  Normalizer normalizer;
  std::string tie_break = "votes,sum_abs_decision,lowest_label";
};

MultiClassModel train_multiclass(const TrainingSet& set, double C, const KernelSpec& kernel,
                                 const SolverOptions& options = {});

struct MultiClassPrediction {
  ClassLabel label;
  std::vector<int> votes;               // per class, labels order
  std::vector<double> decision_sums;    // summed |decision| of won duels
  std::vector<double> pair_decisions;   // per sub-model
};

/// Majority vote; ties go to the largest summed |decision value| among the
/// tied classes, then to the lowest label.
MultiClassPrediction predict_multiclass(const MultiClassModel& model, std::span<const double> x);

struct SvrModel {
  KernelSpec kernel;
  double C = 1.0;
  double epsilon = 0.0;
  std::vector<FeatureVector> support_vectors;
  std::vector<double> coefficients;  // alpha_i - alpha_i*
  double bias = 0.0;
  Normalizer normalizer;
};

struct SvrTraining {
  SvrModel model;
  DualSolution solution;  // 2M variables: alpha then alpha*
};

SvrTraining train_svr(const TrainingSet& set, double C, double epsilon, const KernelSpec& kernel,
                      const SolverOptions& options = {});
double predict_svr(const SvrModel& model, std::span<const double> x);

// ---------------------------------------------------------------------------
// Hyperparameter search

enum class SvmTask { binary, multiclass, regression };
std::string to_string(SvmTask task);

enum class Metric { accuracy, macro_dice, neg_rmse };
std::string to_string(Metric metric);
Metric parse_metric(const std::string& text);

struct ParamGrid {
  KernelSpec kernel;              // kind, degree, coef0; gamma is swept
  std::vector<double> C;
  std::vector<double> gamma;      // ignored for the linear kernel
  std::vector<double> epsilon;    // regression only
};

/// C in {2^-3 .. 2^7}, gamma in {2^-7 .. 2^3} / D, epsilon in {1, 5, 10, 25}.
ParamGrid default_param_grid(std::size_t dimension);

struct CvOptions {
  std::size_t folds = 5;
  std::uint64_t seed = 0;
  Metric metric = Metric::macro_dice;
  SolverOptions solver;
};

struct CellScore {
  double C = 0.0;
  double gamma = 0.0;
  double epsilon = 0.0;
  std::vector<double> fold_scores;
  double mean = 0.0;
  bool failed = false;
  std::string error;
};

struct SearchResult {
  CellScore best;
  std::vector<CellScore> cells;
  std::vector<std::size_t> fold_of;
};

/// Stratified folds for classification, plain folds for regression; both
/// drawn from `seed`. The normalizer is refitted on each training fold.
std::vector<std::size_t> assign_folds(const TrainingSet& set, SvmTask task, std::size_t folds, std::uint64_t seed);

/// Highest mean validation score wins; ties go to the smaller C, then the
/// smaller gamma, then the smaller epsilon. Neg-RMSE is maximized.
SearchResult grid_search_cv(const TrainingSet& set, SvmTask task, const ParamGrid& grid, const CvOptions& options);

// ---------------------------------------------------------------------------
// Persistence

using AnyModel = std::variant<BinarySvmModel, MultiClassModel, SvrModel>;

inline constexpr int kModelFormatVersion = 1;

nlohmann::json model_to_json(const AnyModel& model);
AnyModel model_from_json(const nlohmann::json& j);

/// Writes the model plus free-form `meta` (feature config, scheme, ...).
void save_model(const std::filesystem::path& path, const AnyModel& model, const nlohmann::json& meta = {});
struct LoadedModel {
  AnyModel model;
  nlohmann::json meta;
};
LoadedModel load_model(const std::filesystem::path& path);

nlohmann::json normalizer_to_json(const Normalizer& n);
Normalizer normalizer_from_json(const nlohmann::json& j);

}  // namespace tackscan
