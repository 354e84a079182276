#include "tackscan/svm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <list>
#include <map>
#include <optional>
#include <set>

#include "tackscan/error.hpp"
#include "tackscan/eval.hpp"
#include "tackscan/random.hpp"

namespace tackscan {

void validate(const KernelSpec& k) {
  switch (k.kind) {
    case KernelKind::linear:
      return;
    case KernelKind::rbf:
      if (!(k.gamma > 0.0)) throw ValidationError("rbf gamma must be positive");
      return;
    case KernelKind::polynomial:
      if (!(k.gamma > 0.0)) throw ValidationError("polynomial gamma must be positive");
      if (k.degree < 1) throw ValidationError("polynomial degree must be >= 1");
      if (!std::isfinite(k.coef0)) throw ValidationError("polynomial coef0 must be finite");
      return;
  }
}

std::string to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::linear:
      return "linear";
    case KernelKind::rbf:
      return "rbf";
    case KernelKind::polynomial:
      return "polynomial";
  }
  return "?";
}

KernelKind parse_kernel_kind(const std::string& text) {
  if (text == "linear") return KernelKind::linear;
  if (text == "rbf") return KernelKind::rbf;
  if (text == "polynomial") return KernelKind::polynomial;
  throw ValidationError("unknown kernel '" + text + "'");
}

double kernel_eval(const KernelSpec& k, std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size())
    throw ValidationError("kernel dimension mismatch: " + std::to_string(u.size()) + " vs " + std::to_string(v.size()));
  switch (k.kind) {
    case KernelKind::linear: {
      double s = 0.0;
      for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
      return s;
    }
    case KernelKind::rbf: {
      double s = 0.0;
      for (std::size_t i = 0; i < u.size(); ++i) {
        const double d = u[i] - v[i];
        s += d * d;
      }
      return std::exp(-k.gamma * s);
    }
    case KernelKind::polynomial: {
      double s = 0.0;
      for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
      return std::pow(k.gamma * s + k.coef0, k.degree);
    }
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// SMO

namespace {

/// LRU cache of kernel rows K(p, .) over the training points.
class KernelRows {
 public:
  KernelRows(std::span<const FeatureVector> points, const KernelSpec& kernel, std::size_t budget_bytes)
      : points_(points), kernel_(kernel), slot_(points.size()) {
    const std::size_t row_bytes = std::max<std::size_t>(1, points.size() * sizeof(double));
    capacity_ = std::max<std::size_t>(2, budget_bytes / row_bytes);
    diag_.resize(points.size());
    for (std::size_t p = 0; p < points.size(); ++p) diag_[p] = kernel_eval(kernel_, points_[p], points_[p]);
  }

  double diag(std::size_t p) const { return diag_[p]; }

  /// Valid until two further distinct rows have been requested.
  const std::vector<double>& row(std::size_t p) {
    if (auto& it = slot_[p]) {
      lru_.splice(lru_.begin(), lru_, *it);
      return (*it)->second;
    }
    if (lru_.size() >= capacity_) {
      slot_[lru_.back().first].reset();
      lru_.pop_back();
    }
    std::vector<double> r(points_.size());
    for (std::size_t q = 0; q < points_.size(); ++q) r[q] = q == p ? diag_[p] : kernel_eval(kernel_, points_[p], points_[q]);
    lru_.emplace_front(p, std::move(r));
    slot_[p] = lru_.begin();
    return lru_.front().second;
  }

 private:
  using Entry = std::pair<std::size_t, std::vector<double>>;
  std::span<const FeatureVector> points_;
  KernelSpec kernel_;
  std::size_t capacity_ = 2;
  std::list<Entry> lru_;
  std::vector<std::optional<std::list<Entry>::iterator>> slot_;
  std::vector<double> diag_;
};

}  // namespace

DualSolution solve_smo(const DualProblem& prob, const SolverOptions& opt) {
  const std::size_t n = prob.y.size();
  if (prob.point_of.size() != n || prob.p.size() != n) throw ValidationError("dual problem vectors differ in length");
  if (n == 0) throw ValidationError("dual problem has no variables");
  if (!(prob.C > 0.0)) throw ValidationError("C must be positive");
  if (!(opt.tol > 0.0)) throw ValidationError("solver tolerance must be positive");
  validate(prob.kernel);
  for (std::size_t t = 0; t < n; ++t) {
    if (prob.y[t] != 1.0 && prob.y[t] != -1.0) throw ValidationError("dual problem signs must be +-1");
    if (prob.point_of[t] >= prob.points.size()) throw ValidationError("dual problem references a missing point");
  }

  const double C = prob.C;
  const auto& y = prob.y;
  KernelRows rows(prob.points, prob.kernel, opt.cache_bytes);

  DualSolution sol;
  sol.alpha.assign(n, 0.0);
  std::vector<double> grad = prob.p;  // Q a + p at a = 0
  auto& alpha = sol.alpha;

  auto in_up = [&](std::size_t t) { return y[t] > 0 ? alpha[t] < C : alpha[t] > 0.0; };
  auto in_low = [&](std::size_t t) { return y[t] > 0 ? alpha[t] > 0.0 : alpha[t] < C; };

  double m = 0.0, big_m = 0.0;
  std::size_t iter = 0;
  while (true) {
    // F_t = -y_t G_t. Optimal iff max over I_up <= min over I_low.
    m = -std::numeric_limits<double>::infinity();
    big_m = std::numeric_limits<double>::infinity();
    std::size_t i = n, j = n;
    for (std::size_t t = 0; t < n; ++t) {
      const double f = -y[t] * grad[t];
      if (in_up(t) && f > m) {
        m = f;
        i = t;
      }
      if (in_low(t) && f < big_m) {
        big_m = f;
        j = t;
      }
    }
    if (i == n || j == n || m - big_m <= opt.tol) break;
    if (iter >= opt.max_iterations) {
      throw ConvergenceError("SMO did not converge within " + std::to_string(opt.max_iterations) +
                                 " pair updates (max KKT violation " + std::to_string(m - big_m) + ")",
                             m - big_m);
    }
    ++iter;

    // Move a_i += y_i d, a_j -= y_j d; keeps y'a fixed and lowers the
    // objective at rate (m - M) with curvature K_ii + K_jj - 2 K_ij.
    const std::size_t pi = prob.point_of[i], pj = prob.point_of[j];
    const std::vector<double>& ki = rows.row(pi);
    const std::vector<double>& kj = rows.row(pj);
    double eta = rows.diag(pi) + rows.diag(pj) - 2.0 * ki[pj];
    if (eta <= 0.0) eta = 1e-12;
    double d = (m - big_m) / eta;
    const double room_i = y[i] > 0 ? C - alpha[i] : alpha[i];
    const double room_j = y[j] > 0 ? alpha[j] : C - alpha[j];
    bool clip_i = false, clip_j = false;
    if (d >= room_i) {
      d = room_i;
      clip_i = true;
    }
    if (d >= room_j) {
      d = room_j;
      clip_j = true;
      clip_i = clip_i && room_i == room_j;
    }
    alpha[i] += y[i] * d;
    alpha[j] -= y[j] * d;
    if (clip_i) alpha[i] = y[i] > 0 ? C : 0.0;
    if (clip_j) alpha[j] = y[j] > 0 ? 0.0 : C;

    for (std::size_t s = 0; s < n; ++s) {
      const std::size_t ps = prob.point_of[s];
      grad[s] += y[s] * d * (ki[ps] - kj[ps]);
    }
  }

  sol.iterations = iter;
  sol.max_violation = std::max(0.0, m - big_m);

  double free_sum = 0.0;
  std::size_t free_count = 0;
  for (std::size_t t = 0; t < n; ++t) {
    if (alpha[t] > 0.0 && alpha[t] < C) {
      free_sum += -y[t] * grad[t];
      ++free_count;
    }
  }
  if (free_count > 0) {
    sol.bias = free_sum / static_cast<double>(free_count);
  } else if (std::isfinite(m) && std::isfinite(big_m)) {
    sol.bias = 0.5 * (m + big_m);
  } else {
    sol.bias = std::isfinite(m) ? m : big_m;
  }

  double obj = 0.0;
  for (std::size_t t = 0; t < n; ++t) obj += alpha[t] * (grad[t] + prob.p[t]);
  sol.objective = 0.5 * obj;

  sol.kkt_residual.resize(n);
  for (std::size_t t = 0; t < n; ++t) {
    const double f = -y[t] * grad[t];
    const bool up = in_up(t), low = in_low(t);
    double r = 0.0;
    if (up && low) {
      r = std::abs(f - sol.bias);
    } else if (up) {
      r = std::max(0.0, f - sol.bias);
    } else if (low) {
      r = std::max(0.0, sol.bias - f);
    }
    sol.kkt_residual[t] = r;
  }
  return sol;
}

// ---------------------------------------------------------------------------
// Binary

namespace {

void check_set(const TrainingSet& set) {
  if (set.x.size() != set.y.size()) throw ValidationError("training set has mismatched vectors and targets");
  if (set.x.empty()) throw ValidationError("training set is empty");
  const std::size_t d = set.dimension();
  for (const auto& v : set.x) {
    if (v.size() != d) throw ValidationError("training vectors have inconsistent dimensions");
    for (double e : v)
      if (!std::isfinite(e)) throw ValidationError("training vectors contain non-finite values");
  }
  for (double t : set.y)
    if (!std::isfinite(t)) throw ValidationError("training targets contain non-finite values");
}

}  // namespace

BinaryTraining train_binary(const TrainingSet& set, double C, const KernelSpec& kernel, const SolverOptions& options) {
  check_set(set);
  if (!(C > 0.0)) throw ValidationError("C must be positive");
  validate(kernel);
  bool pos = false, neg = false;
  for (double l : set.y) {
    if (l == 1.0)
      pos = true;
    else if (l == -1.0)
      neg = true;
    else
      throw ValidationError("binary labels must be -1 or +1");
  }
  if (!pos || !neg) throw ValidationError("binary training needs both classes (single-class set)");

  DualProblem prob;
  prob.points = set.x;
  prob.kernel = kernel;
  prob.C = C;
  prob.point_of.resize(set.size());
  for (std::size_t i = 0; i < set.size(); ++i) prob.point_of[i] = i;
  prob.y = set.y;
  prob.p.assign(set.size(), -1.0);

  BinaryTraining out;
  out.solution = solve_smo(prob, options);
  BinarySvmModel& model = out.model;
  model.kernel = kernel;
  model.C = C;
  model.bias = out.solution.bias;
  for (std::size_t i = 0; i < set.size(); ++i) {
    const double a = out.solution.alpha[i];
    if (a > 0.0) {
      model.support_vectors.push_back(set.x[i]);
      model.coefficients.push_back(a * set.y[i]);
    }
  }
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (set.y[i] * decision_value(model, set.x[i]) < 1.0 - options.tol) ++model.margin_violations;
  }
  return out;
}

double decision_value(const BinarySvmModel& model, std::span<const double> x) {
  const FeatureVector z = apply_normalizer(model.normalizer, x);
  double s = model.bias;
  for (std::size_t k = 0; k < model.support_vectors.size(); ++k)
    s += model.coefficients[k] * kernel_eval(model.kernel, model.support_vectors[k], z);
  return s;
}

BinaryPrediction predict_binary(const BinarySvmModel& model, std::span<const double> x) {
  const double d = decision_value(model, x);
  return {d >= 0.0 ? 1 : -1, d};
}

// ---------------------------------------------------------------------------
// One-vs-one

MultiClassModel train_multiclass(const TrainingSet& set, double C, const KernelSpec& kernel,
                                 const SolverOptions& options) {
  check_set(set);
  std::set<ClassLabel> distinct;
  for (double l : set.y) {
    if (l != std::round(l)) throw ValidationError("class labels must be integers");
    distinct.insert(static_cast<ClassLabel>(l));
  }
  if (distinct.size() < 2) throw ValidationError("multi-class training needs at least 2 classes");

  MultiClassModel model;
  model.labels.assign(distinct.begin(), distinct.end());
  const std::size_t k = model.labels.size();
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a + 1; b < k; ++b) {
      TrainingSet sub;
      for (std::size_t i = 0; i < set.size(); ++i) {
        const auto l = static_cast<ClassLabel>(set.y[i]);
        if (l == model.labels[a] || l == model.labels[b]) {
          sub.x.push_back(set.x[i]);
          sub.y.push_back(l == model.labels[a] ? 1.0 : -1.0);
        }
      }
      model.pairs.emplace_back(a, b);
      model.models.push_back(train_binary(sub, C, kernel, options).model);
    }
  }
  return model;
}

MultiClassPrediction predict_multiclass(const MultiClassModel& model, std::span<const double> x) {
  const std::size_t k = model.labels.size();
  if (k < 2 || model.pairs.size() != model.models.size()) throw ValidationError("malformed multi-class model");
  const FeatureVector z = apply_normalizer(model.normalizer, x);
  MultiClassPrediction out;
  out.votes.assign(k, 0);
  out.decision_sums.assign(k, 0.0);
  for (std::size_t m = 0; m < model.models.size(); ++m) {
    const auto [a, b] = model.pairs[m];
    const BinaryPrediction p = predict_binary(model.models[m], z);
    const std::size_t winner = p.label > 0 ? a : b;
    out.votes[winner]++;
    out.decision_sums[winner] += std::abs(p.decision);
    out.pair_decisions.push_back(p.decision);
  }
  // labels are sorted ascending, so the first best index is the lowest label.
  std::size_t best = 0;
  for (std::size_t c = 1; c < k; ++c) {
    if (out.votes[c] > out.votes[best] ||
        (out.votes[c] == out.votes[best] && out.decision_sums[c] > out.decision_sums[best])) {
      best = c;
    }
  }
  out.label = model.labels[best];
  return out;
}

// ---------------------------------------------------------------------------
// Regression

SvrTraining train_svr(const TrainingSet& set, double C, double epsilon, const KernelSpec& kernel,
                      const SolverOptions& options) {
  check_set(set);
  if (set.size() < 2) throw ValidationError("regression needs at least 2 examples");
  if (!(C > 0.0)) throw ValidationError("C must be positive");
  if (!(epsilon >= 0.0)) throw ValidationError("epsilon must be >= 0");
  validate(kernel);

  const std::size_t m = set.size();
  DualProblem prob;
  prob.points = set.x;
  prob.kernel = kernel;
  prob.C = C;
  prob.point_of.resize(2 * m);
  prob.y.resize(2 * m);
  prob.p.resize(2 * m);
  for (std::size_t i = 0; i < m; ++i) {
    prob.point_of[i] = prob.point_of[m + i] = i;
    prob.y[i] = 1.0;
    prob.y[m + i] = -1.0;
    prob.p[i] = epsilon - set.y[i];
    prob.p[m + i] = epsilon + set.y[i];
  }

  SvrTraining out;
  out.solution = solve_smo(prob, options);
  SvrModel& model = out.model;
  model.kernel = kernel;
  model.C = C;
  model.epsilon = epsilon;
  model.bias = out.solution.bias;
  for (std::size_t i = 0; i < m; ++i) {
    const double beta = out.solution.alpha[i] - out.solution.alpha[m + i];
    if (beta != 0.0) {
      model.support_vectors.push_back(set.x[i]);
      model.coefficients.push_back(beta);
    }
  }
  return out;
}

double predict_svr(const SvrModel& model, std::span<const double> x) {
  const FeatureVector z = apply_normalizer(model.normalizer, x);
  double s = model.bias;
  for (std::size_t k = 0; k < model.support_vectors.size(); ++k)
    s += model.coefficients[k] * kernel_eval(model.kernel, model.support_vectors[k], z);
  return s;
}

// ---------------------------------------------------------------------------
// Grid search

std::string to_string(SvmTask task) {
  switch (task) {
    case SvmTask::binary:
      return "binary";
    case SvmTask::multiclass:
      return "multiclass";
    case SvmTask::regression:
      return "regression";
  }
  return "?";
}

std::string to_string(Metric metric) {
  switch (metric) {
    case Metric::accuracy:
      return "accuracy";
    case Metric::macro_dice:
      return "macro_dice";
    case Metric::neg_rmse:
      return "neg_rmse";
  }
  return "?";
}

Metric parse_metric(const std::string& text) {
  if (text == "accuracy") return Metric::accuracy;
  if (text == "macro_dice") return Metric::macro_dice;
  if (text == "neg_rmse") return Metric::neg_rmse;
  throw ValidationError("unknown metric '" + text + "'");
}

ParamGrid default_param_grid(std::size_t dimension) {
  if (dimension == 0) throw ValidationError("feature dimension must be positive");
  ParamGrid g;
  for (int e = -3; e <= 7; ++e) g.C.push_back(std::ldexp(1.0, e));
  for (int e = -7; e <= 3; ++e) g.gamma.push_back(std::ldexp(1.0, e) / static_cast<double>(dimension));
  g.epsilon = {1.0, 5.0, 10.0, 25.0};
  return g;
}

std::vector<std::size_t> assign_folds(const TrainingSet& set, SvmTask task, std::size_t folds, std::uint64_t seed) {
  if (folds < 2) throw ValidationError("cross-validation needs at least 2 folds");
  if (set.size() < folds) throw ValidationError("fewer examples than folds");
  std::vector<std::size_t> fold_of(set.size(), 0);
  auto rng = stream_rng(seed, 0xF01D);
  if (task == SvmTask::regression) {
    std::vector<std::size_t> order(set.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t k = 0; k < order.size(); ++k) fold_of[order[k]] = k % folds;
    return fold_of;
  }
  std::map<double, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < set.size(); ++i) by_class[set.y[i]].push_back(i);
  std::size_t running = 0;
  for (auto& [label, members] : by_class) {
    if (members.size() < folds)
      throw ValidationError("infeasible stratification: class " + std::to_string(static_cast<long long>(label)) +
                            " has " + std::to_string(members.size()) + " examples for " + std::to_string(folds) +
                            " folds");
    std::shuffle(members.begin(), members.end(), rng);
    for (std::size_t i : members) fold_of[i] = running++ % folds;
  }
  return fold_of;
}

namespace {

double score_fold(const TrainingSet& train, const TrainingSet& valid, SvmTask task, Metric metric, double C,
                  const KernelSpec& kernel, double epsilon, const SolverOptions& solver) {
  std::vector<double> pred(valid.size());
  switch (task) {
    case SvmTask::binary: {
      const auto model = train_binary(train, C, kernel, solver).model;
      for (std::size_t i = 0; i < valid.size(); ++i) pred[i] = predict_binary(model, valid.x[i]).label;
      break;
    }
    case SvmTask::multiclass: {
      const auto model = train_multiclass(train, C, kernel, solver);
      for (std::size_t i = 0; i < valid.size(); ++i) pred[i] = predict_multiclass(model, valid.x[i]).label;
      break;
    }
    case SvmTask::regression: {
      const auto model = train_svr(train, C, epsilon, kernel, solver).model;
      for (std::size_t i = 0; i < valid.size(); ++i) pred[i] = predict_svr(model, valid.x[i]);
      break;
    }
  }
  if (task == SvmTask::regression) {
    if (metric != Metric::neg_rmse) throw ValidationError("regression search must use neg_rmse");
    return -rmse(valid.y, pred);
  }
  if (metric == Metric::neg_rmse) throw ValidationError("classification search cannot use neg_rmse");
  std::set<ClassLabel> labels;
  std::vector<ClassLabel> truth(valid.size()), guess(valid.size());
  for (std::size_t i = 0; i < valid.size(); ++i) {
    truth[i] = static_cast<ClassLabel>(valid.y[i]);
    guess[i] = static_cast<ClassLabel>(pred[i]);
    labels.insert(truth[i]);
    labels.insert(guess[i]);
  }
  const auto cm = confusion_matrix(truth, guess, std::vector<ClassLabel>(labels.begin(), labels.end()));
  if (metric == Metric::accuracy) return classification_report(cm).accuracy;
  return dice_scores(cm).macro;
}

std::vector<double> sorted_unique(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

}  // namespace

SearchResult grid_search_cv(const TrainingSet& set, SvmTask task, const ParamGrid& grid, const CvOptions& options) {
  check_set(set);
  const auto Cs = sorted_unique(grid.C);
  auto gammas = sorted_unique(grid.gamma);
  auto epsilons = sorted_unique(grid.epsilon);
  if (Cs.empty()) throw ValidationError("parameter grid has no C values");
  if (grid.kernel.kind == KernelKind::linear || gammas.empty()) gammas = {grid.kernel.gamma};
  if (task != SvmTask::regression) epsilons = {0.0};
  if (epsilons.empty()) throw ValidationError("regression grid has no epsilon values");

  SearchResult result;
  result.fold_of = assign_folds(set, task, options.folds, options.seed);

  // Per-fold normalized splits, shared by every cell.
  struct Split {
    TrainingSet train, valid;
  };
  std::vector<Split> splits(options.folds);
  for (std::size_t f = 0; f < options.folds; ++f) {
    TrainingSet raw_train;
    for (std::size_t i = 0; i < set.size(); ++i) {
      if (result.fold_of[i] != f) {
        raw_train.x.push_back(set.x[i]);
        raw_train.y.push_back(set.y[i]);
      }
    }
    const Normalizer norm = fit_normalizer(raw_train.x);
    for (std::size_t i = 0; i < set.size(); ++i) {
      Split& s = splits[f];
      TrainingSet& dst = result.fold_of[i] == f ? s.valid : s.train;
      dst.x.push_back(apply_normalizer(norm, set.x[i]));
      dst.y.push_back(set.y[i]);
    }
  }

  bool have_best = false;
  for (double C : Cs) {
    for (double gamma : gammas) {
      for (double eps : epsilons) {
        CellScore cell;
        cell.C = C;
        cell.gamma = gamma;
        cell.epsilon = eps;
        KernelSpec kernel = grid.kernel;
        kernel.gamma = gamma;
        try {
          double sum = 0.0;
          for (const Split& s : splits) {
            const double v = score_fold(s.train, s.valid, task, options.metric, C, kernel, eps, options.solver);
            cell.fold_scores.push_back(v);
            sum += v;
          }
          cell.mean = sum / static_cast<double>(splits.size());
        } catch (const ConvergenceError& e) {
          cell.failed = true;
          cell.error = e.what();
          cell.mean = -std::numeric_limits<double>::infinity();
        }
        if (!cell.failed && (!have_best || cell.mean > result.best.mean)) {
          result.best = cell;
          have_best = true;
        }
        result.cells.push_back(std::move(cell));
      }
    }
  }
  if (!have_best) throw RuntimeFailure("every grid cell failed to converge");
  return result;
}

// ---------------------------------------------------------------------------
// Persistence

using nlohmann::json;

json normalizer_to_json(const Normalizer& n) {
  return json{{"mean", n.mean}, {"stddev", n.stddev}, {"degenerate", n.degenerate}};
}

Normalizer normalizer_from_json(const json& j) {
  Normalizer n;
  n.mean = j.at("mean").get<std::vector<double>>();
  n.stddev = j.at("stddev").get<std::vector<double>>();
  n.degenerate = j.at("degenerate").get<std::vector<bool>>();
  if (n.stddev.size() != n.mean.size() || n.degenerate.size() != n.mean.size())
    throw ValidationError("normalizer columns differ in length");
  return n;
}

namespace {

json kernel_to_json(const KernelSpec& k) {
  return json{{"kind", to_string(k.kind)}, {"gamma", k.gamma}, {"degree", k.degree}, {"coef0", k.coef0}};
}

KernelSpec kernel_from_json(const json& j) {
  KernelSpec k;
  k.kind = parse_kernel_kind(j.at("kind").get<std::string>());
  k.gamma = j.at("gamma").get<double>();
  k.degree = j.at("degree").get<int>();
  k.coef0 = j.at("coef0").get<double>();
  validate(k);
  return k;
}

json binary_to_json(const BinarySvmModel& m) {
  return json{{"kernel", kernel_to_json(m.kernel)},   {"C", m.C},
              {"bias", m.bias},                       {"coefficients", m.coefficients},
              {"support_vectors", m.support_vectors}, {"normalizer", normalizer_to_json(m.normalizer)},
              {"margin_violations", m.margin_violations}};
}

BinarySvmModel binary_from_json(const json& j) {
  BinarySvmModel m;
  m.kernel = kernel_from_json(j.at("kernel"));
  m.C = j.at("C").get<double>();
  m.bias = j.at("bias").get<double>();
  m.coefficients = j.at("coefficients").get<std::vector<double>>();
  m.support_vectors = j.at("support_vectors").get<std::vector<FeatureVector>>();
  m.normalizer = normalizer_from_json(j.at("normalizer"));
  m.margin_violations = j.value("margin_violations", std::size_t{0});
  if (m.coefficients.size() != m.support_vectors.size())
    throw ValidationError("model has mismatched support vectors and coefficients");
  return m;
}

}  // namespace

json model_to_json(const AnyModel& model) {
  json j;
  j["format"] = "tackscan-svm";
  j["version"] = kModelFormatVersion;
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, BinarySvmModel>) {
          j["type"] = "binary";
          j["model"] = binary_to_json(m);
        } else if constexpr (std::is_same_v<T, MultiClassModel>) {
          j["type"] = "multiclass";
          json pairs = json::array();
          for (std::size_t k = 0; k < m.models.size(); ++k) {
            pairs.push_back(json{{"positive", m.pairs[k].first}, {"negative", m.pairs[k].second},
                                 {"model", binary_to_json(m.models[k])}});
          }
          j["model"] = json{{"labels", m.labels},
                            {"tie_break", m.tie_break},
                            {"normalizer", normalizer_to_json(m.normalizer)},
                            {"pairs", pairs}};
        } else {
          j["type"] = "regression";
          j["model"] = json{{"kernel", kernel_to_json(m.kernel)},
                            {"C", m.C},
                            {"epsilon", m.epsilon},
                            {"bias", m.bias},
                            {"coefficients", m.coefficients},
                            {"support_vectors", m.support_vectors},
                            {"normalizer", normalizer_to_json(m.normalizer)}};
        }
      },
      model);
  return j;
}

AnyModel model_from_json(const json& j) {
  try {
    if (j.at("format").get<std::string>() != "tackscan-svm") throw ValidationError("not a tackscan model file");
    const int version = j.at("version").get<int>();
    if (version != kModelFormatVersion)
      throw ValidationError("unsupported model format version " + std::to_string(version));
    const std::string type = j.at("type").get<std::string>();
    const json& m = j.at("model");
    if (type == "binary") return binary_from_json(m);
    if (type == "multiclass") {
      MultiClassModel mc;
      mc.labels = m.at("labels").get<std::vector<ClassLabel>>();
      mc.tie_break = m.at("tie_break").get<std::string>();
      mc.normalizer = normalizer_from_json(m.at("normalizer"));
      for (const json& p : m.at("pairs")) {
        const auto a = p.at("positive").get<std::size_t>(), b = p.at("negative").get<std::size_t>();
        if (a >= mc.labels.size() || b >= mc.labels.size()) throw ValidationError("pair references an unknown class");
        mc.pairs.emplace_back(a, b);
        mc.models.push_back(binary_from_json(p.at("model")));
      }
      const std::size_t k = mc.labels.size();
      if (mc.models.size() != k * (k - 1) / 2) throw ValidationError("multi-class model has the wrong number of pairs");
      return mc;
    }
    if (type == "regression") {
      SvrModel s;
      s.kernel = kernel_from_json(m.at("kernel"));
      s.C = m.at("C").get<double>();
      s.epsilon = m.at("epsilon").get<double>();
      s.bias = m.at("bias").get<double>();
      s.coefficients = m.at("coefficients").get<std::vector<double>>();
      s.support_vectors = m.at("support_vectors").get<std::vector<FeatureVector>>();
      s.normalizer = normalizer_from_json(m.at("normalizer"));
      if (s.coefficients.size() != s.support_vectors.size())
        throw ValidationError("model has mismatched support vectors and coefficients");
      return s;
    }
    throw ValidationError("unknown model type '" + type + "'");
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed model file: ") + e.what());
  }
}

void save_model(const std::filesystem::path& path, const AnyModel& model, const json& meta) {
  json j = model_to_json(model);
  if (!meta.is_null()) j["meta"] = meta;
  std::ofstream os(path);
  if (!os) throw RuntimeFailure("cannot write model file " + path.string());
  os << j.dump(1) << '\n';
  if (!os) throw RuntimeFailure("failed writing model file " + path.string());
}

LoadedModel load_model(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ValidationError("cannot open model file " + path.string());
  json j;
  try {
    j = json::parse(is);
  } catch (const json::exception& e) {
    throw ValidationError("model file " + path.string() + " is not valid JSON: " + e.what());
  }
  LoadedModel out{model_from_json(j), j.value("meta", json{})};
  return out;
}

}  // namespace tackscan
