#include "tackscan/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "tackscan/error.hpp"
#include "tackscan/eval.hpp"
#include "tackscan/random.hpp"
#include "tackscan/text.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace tackscan {

namespace files {
std::string model(TaskKind t) { return "model_" + to_string(t) + ".json"; }
std::string search(TaskKind t) { return "search_" + to_string(t) + ".csv"; }
std::string predictions(TaskKind t) { return "predictions_" + to_string(t) + ".csv"; }
std::string report_txt(TaskKind t) { return "report_" + to_string(t) + ".txt"; }
std::string report_kv(TaskKind t) { return "report_" + to_string(t) + ".kv"; }
std::string map_csv(TaskKind t) { return "map_" + to_string(t) + ".csv"; }
std::string map_pgm(TaskKind t) { return "map_" + to_string(t) + ".pgm"; }
}  // namespace files

namespace {

void note(const Pipeline& p, const std::string& line) {
  if (p.log) *p.log << line << '\n';
}

void write_text(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeFailure("cannot write " + path.string());
  out << content;
  if (!out) throw RuntimeFailure("failed writing " + path.string());
}

void require_file(const fs::path& path, const std::string& producer) {
  if (!fs::exists(path)) throw ValidationError(path.string() + " not found; run `" + producer + "` first");
}

// Small CSV table with a header row; cells kept as text.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name, const fs::path& path) const {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ValidationError(path.string() + ": missing column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  }
};

Table read_table(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw RuntimeFailure("cannot open " + path.string());
  Table t;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    for (auto c : text::split(line, ',')) cells.emplace_back(text::trim(c));
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    if (cells.size() != t.header.size())
      throw ValidationError(path.string() + ": row " + std::to_string(row) + ": ragged row");
    t.rows.push_back(std::move(cells));
  }
  if (t.header.empty()) throw ValidationError(path.string() + ": empty file");
  return t;
}

// Class a quantity maps to under each task.
double task_target(TaskKind task, double quantity, const ClassScheme& scheme) {
  switch (task) {
    case TaskKind::tcsvm: return quantity > 0.0 ? 1.0 : -1.0;
    case TaskKind::mcsvm: return static_cast<double>(scheme.classify(quantity));
    case TaskKind::svr: return quantity;
  }
  return 0.0;
}

std::vector<ClassLabel> task_labels(TaskKind task, const ClassScheme& scheme) {
  if (task == TaskKind::tcsvm) return {-1, 1};
  return scheme.labels();
}

SvmTask svm_task(TaskKind task) {
  switch (task) {
    case TaskKind::tcsvm: return SvmTask::binary;
    case TaskKind::mcsvm: return SvmTask::multiclass;
    case TaskKind::svr: return SvmTask::regression;
  }
  return SvmTask::binary;
}

std::vector<FeatureRow> labelled_rows(const fs::path& path) {
  auto rows = read_feature_table(path);
  for (const auto& r : rows) {
    if (!r.label)
      throw ValidationError(path.string() + ": dataset is prediction-only (no quantity labels); training needs labels");
  }
  return rows;
}

// true = training row.
std::vector<bool> make_split(const RunConfig& c, const std::vector<FeatureRow>& rows) {
  const std::size_t n = rows.size();
  std::vector<bool> train(n, false);
  auto rng = stream_rng(split_seed(c), 0);
  if (c.split.mode == SplitMode::random) {
    std::map<ClassLabel, std::vector<std::size_t>> strata;
    for (std::size_t i = 0; i < n; ++i) strata[c.scene.scheme.classify(*rows[i].label)].push_back(i);
    for (auto& [label, idx] : strata) {
      std::shuffle(idx.begin(), idx.end(), rng);
      const auto take = static_cast<std::size_t>(std::llround(c.split.train_fraction * static_cast<double>(idx.size())));
      for (std::size_t k = 0; k < take; ++k) train[idx[k]] = true;
    }
  } else {
    std::map<long long, std::vector<std::size_t>> blocks;
    for (std::size_t i = 0; i < n; ++i)
      blocks[static_cast<long long>(std::floor(rows[i].x / c.split.block_length))].push_back(i);
    std::vector<long long> keys;
    for (const auto& [k, v] : blocks) keys.push_back(k);
    std::shuffle(keys.begin(), keys.end(), rng);
    const double want_test = (1.0 - c.split.train_fraction) * static_cast<double>(n);
    std::size_t test = 0;
    std::fill(train.begin(), train.end(), true);
    for (long long k : keys) {
      if (static_cast<double>(test) >= want_test) break;
      for (std::size_t i : blocks[k]) train[i] = false;
      test += blocks[k].size();
    }
  }
  const auto n_train = static_cast<std::size_t>(std::count(train.begin(), train.end(), true));
  if (n_train < 2 || n_train == n) throw ValidationError("degenerate split: " + std::to_string(n_train) + " of " +
                                                         std::to_string(n) + " traces in the training set");
  return train;
}

// Keeps at most `cap` rows, stratified by target for classification tasks.
std::vector<std::size_t> cap_rows(std::vector<std::size_t> idx, const std::vector<double>& target, TaskKind task,
                                  std::size_t cap, std::uint64_t seed) {
  if (cap == 0 || idx.size() <= cap) return idx;
  auto rng = stream_rng(seed, 0xCA9 + static_cast<std::uint64_t>(task));
  std::vector<std::size_t> kept;
  if (task == TaskKind::svr) {
    std::shuffle(idx.begin(), idx.end(), rng);
    kept.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(cap));
  } else {
    std::map<double, std::vector<std::size_t>> strata;
    for (std::size_t i : idx) strata[target[i]].push_back(i);
    const double frac = static_cast<double>(cap) / static_cast<double>(idx.size());
    for (auto& [label, members] : strata) {
      std::shuffle(members.begin(), members.end(), rng);
      auto take = static_cast<std::size_t>(std::llround(frac * static_cast<double>(members.size())));
      take = std::clamp<std::size_t>(take, 1, members.size());
      kept.insert(kept.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(take));
    }
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

json feature_meta(const FeatureConfig& f) {
  return {{"gate", f.gate.automatic ? "auto" : "manual"},
          {"gate_t_start", f.gate.t_start},
          {"gate_t_end", f.gate.t_end},
          {"gate_offset", f.gate.offset},
          {"gate_width", f.gate.width},
          {"windows", f.window_count},
          {"families", families_to_string(f.families)},
          {"band_reference", f.band_reference},
          {"raw_count", f.raw_count}};
}

void write_search_log(const fs::path& path, const SearchResult& result, std::size_t folds) {
  std::string out = "C,gamma,epsilon,mean";
  for (std::size_t k = 0; k < folds; ++k) out += ",fold" + std::to_string(k);
  out += ",status\n";
  for (const CellScore& cell : result.cells) {
    out += text::format_double(cell.C) + "," + text::format_double(cell.gamma) + "," +
           text::format_double(cell.epsilon) + ",";
    out += cell.failed ? "" : text::format_double(cell.mean);
    for (std::size_t k = 0; k < folds; ++k)
      out += "," + (k < cell.fold_scores.size() ? text::format_double(cell.fold_scores[k]) : std::string());
    out += cell.failed ? ",failed: " + cell.error : ",ok";
    out += '\n';
  }
  write_text(path, out);
}

std::vector<bool> read_split(const fs::path& path, std::size_t expected) {
  const Table t = read_table(path);
  const std::size_t col = t.column("split", path);
  if (t.rows.size() != expected)
    throw ValidationError(path.string() + ": split covers " + std::to_string(t.rows.size()) + " traces, features have " +
                          std::to_string(expected));
  std::vector<bool> train;
  for (const auto& r : t.rows) {
    if (r[col] != "train" && r[col] != "test") throw ValidationError(path.string() + ": bad split value '" + r[col] + "'");
    train.push_back(r[col] == "train");
  }
  return train;
}

template <class F>
auto run_stage(const std::string& name, F&& f) {
  try {
    return f();
  } catch (const ConvergenceError& e) {
    throw ConvergenceError("stage " + name + ": " + e.what(), e.max_violation());
  } catch (const ValidationError& e) {
    throw ValidationError("stage " + name + ": " + e.what());
  } catch (const RuntimeFailure& e) {
    throw RuntimeFailure("stage " + name + ": " + e.what());
  } catch (const std::exception& e) {
    throw RuntimeFailure("stage " + name + ": " + e.what());
  }
}

}  // namespace

SimulateResult stage_simulate(const Pipeline& p) {
  const RunConfig& c = p.config;
  validate(c);
  const PavementScene scene(c.scene);
  AcquisitionSpec acq = c.acq;
  acq.seed = noise_seed(c);
  fs::create_directories(p.out);

  const Survey survey = simulate_survey(scene, c.pulse, acq);
  write_trace_table(p.out / files::kTraces, survey.traces);

  KeyValues meta = trace_metadata(c.pulse, acq);
  meta.set("scene.preset", c.preset.empty() ? "custom" : c.preset);
  meta.set("scene.length", c.scene.length);
  meta.set("scene.width", c.scene.width);
  meta.set("scene.step", c.scene.step);
  meta.set("scene.scheme", c.scene.scheme.to_string());
  meta.set("scene.profiles", std::to_string(survey.profiles.size()));
  meta.write(p.out / files::kTraceMeta);

  DatasetManifest m = ingest_dataset(p.out / files::kTraces, p.out / files::kTraceMeta, "simulated");
  m.traces = files::kTraces;
  m.metadata = files::kTraceMeta;
  m.to_kv().write(p.out / files::kManifest);

  const GridGeometry& g = scene.geometry();
  ClassMap q = ClassMap::empty(g, true);
  ClassMap cls = ClassMap::empty(g, false);
  for (std::size_t i = 0; i < g.size(); ++i) {
    q.values.values()[i] = scene.quantity().values()[i];
    cls.values.values()[i] = static_cast<double>(scene.ground_truth_class().values()[i]);
  }
  export_map_csv(q, p.out / files::kTruthQuantity);
  export_map_csv(cls, p.out / files::kTruthClass);
  export_map_pgm(cls, p.out / files::kTruthClassPgm, c.scene.scheme.labels());
  to_kv(c).write(p.out / files::kRunConfig);

  note(p, "simulate: " + std::to_string(survey.traces.size()) + " traces on " + std::to_string(survey.profiles.size()) +
              " profiles, seed " + std::to_string(acq.seed));
  return {survey.traces.size(), acq.seed};
}

DatasetManifest stage_ingest(const Pipeline& p, const fs::path& traces, const fs::path& metadata) {
  DatasetManifest m = ingest_dataset(fs::absolute(traces), fs::absolute(metadata), "ingested");
  fs::create_directories(p.out);
  m.to_kv().write(p.out / files::kManifest);
  note(p, "ingest: " + std::to_string(m.trace_count) + " traces x " + std::to_string(m.samples_per_trace) +
              " samples" + (m.prediction_only ? ", prediction-only" : ""));
  return m;
}

std::size_t stage_features(const Pipeline& p) {
  const fs::path manifest_path = p.out / files::kManifest;
  require_file(manifest_path, "simulate` or `ingest");
  validate(p.config.features);
  const auto manifest = DatasetManifest::from_kv(KeyValues::read(manifest_path), p.out);
  const auto scans = load_dataset(manifest);
  std::vector<FeatureRow> rows;
  rows.reserve(scans.size());
  for (std::size_t i = 0; i < scans.size(); ++i) {
    const AScan& s = scans[i];
    try {
      rows.push_back({s.x, s.y, s.truth_quantity, extract_features(s, p.config.features)});
    } catch (const ValidationError& e) {
      throw ValidationError("trace " + std::to_string(i) + " at x=" + text::format_double(s.x) +
                            ", y=" + text::format_double(s.y) + ": " + e.what());
    }
  }
  write_feature_table(p.out / files::kFeatures, rows);
  note(p, "features: " + std::to_string(rows.size()) + " vectors of dimension " +
              std::to_string(feature_dimension(p.config.features)));
  return rows.size();
}

void stage_train(const Pipeline& p) {
  const RunConfig& c = p.config;
  validate(c);
  require_file(p.out / files::kFeatures, "features");
  const auto rows = labelled_rows(p.out / files::kFeatures);
  const std::vector<bool> is_train = make_split(c, rows);
  {
    std::string out = "x,y,split\n";
    for (std::size_t i = 0; i < rows.size(); ++i)
      out += text::format_double(rows[i].x) + "," + text::format_double(rows[i].y) + "," +
             (is_train[i] ? "train" : "test") + "\n";
    write_text(p.out / files::kSplit, out);
  }
  const std::size_t dim = rows.front().values.size();

  for (TaskKind task : c.tasks) {
    std::vector<double> target(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) target[i] = task_target(task, *rows[i].label, c.scene.scheme);
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < rows.size(); ++i)
      if (is_train[i]) idx.push_back(i);
    idx = cap_rows(std::move(idx), target, task, c.max_train_samples, split_seed(c));

    TrainingSet set;
    for (std::size_t i : idx) {
      set.x.push_back(rows[i].values);
      set.y.push_back(target[i]);
    }
    if (task != TaskKind::svr) {
      std::vector<double> distinct = set.y;
      std::sort(distinct.begin(), distinct.end());
      distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
      if (distinct.size() < 2)
        throw ValidationError("task " + to_string(task) + ": training labels cover a single class");
    }

    ParamGrid grid;
    grid.kernel = c.grid.kernel;
    grid.C = c.grid.C;
    for (double g : c.grid.gamma) grid.gamma.push_back(c.grid.gamma_per_dimension ? g / static_cast<double>(dim) : g);
    if (grid.kernel.kind == KernelKind::linear) grid.gamma = {1.0};
    grid.epsilon = task == TaskKind::svr ? c.grid.epsilon : std::vector<double>{0.0};

    CvOptions cv;
    cv.folds = c.grid.folds;
    cv.seed = cv_seed(c);
    cv.metric = task == TaskKind::svr ? Metric::neg_rmse : Metric::macro_dice;
    cv.solver = c.solver;
    const SearchResult search = grid_search_cv(set, svm_task(task), grid, cv);
    write_search_log(p.out / files::search(task), search, cv.folds);
    if (search.best.failed) throw RuntimeFailure("task " + to_string(task) + ": every grid cell failed to converge");

    const Normalizer norm = fit_normalizer(set.x);
    TrainingSet z;
    z.y = set.y;
    for (const auto& v : set.x) z.x.push_back(apply_normalizer(norm, v));
    KernelSpec kernel = grid.kernel;
    kernel.gamma = search.best.gamma;

    AnyModel model;
    if (task == TaskKind::tcsvm) {
      auto trained = train_binary(z, search.best.C, kernel, c.solver);
      trained.model.normalizer = norm;
      model = std::move(trained.model);
    } else if (task == TaskKind::mcsvm) {
      auto trained = train_multiclass(z, search.best.C, kernel, c.solver);
      trained.normalizer = norm;
      model = std::move(trained);
    } else {
      auto trained = train_svr(z, search.best.C, search.best.epsilon, kernel, c.solver);
      trained.model.normalizer = norm;
      model = std::move(trained.model);
    }
    json meta = {{"task", to_string(task)},
                 {"scheme", c.scene.scheme.to_string()},
                 {"dimension", dim},
                 {"feature_names", feature_names(c.features)},
                 {"features", feature_meta(c.features)},
                 {"train_count", set.size()},
                 {"cv_metric", to_string(cv.metric)},
                 {"cv_score", search.best.mean},
                 {"C", search.best.C},
                 {"gamma", search.best.gamma},
                 {"epsilon", search.best.epsilon}};
    save_model(p.out / files::model(task), model, meta);
    note(p, "train " + to_string(task) + ": " + std::to_string(set.size()) + " traces, C=" +
                text::format_double(search.best.C) + " gamma=" + text::format_double(search.best.gamma) +
                (task == TaskKind::svr ? " epsilon=" + text::format_double(search.best.epsilon) : "") + ", cv " +
                to_string(cv.metric) + "=" + text::format_fixed(search.best.mean, 4));
  }
}

void stage_predict(const Pipeline& p) {
  const RunConfig& c = p.config;
  require_file(p.out / files::kFeatures, "features");
  const auto rows = read_feature_table(p.out / files::kFeatures);
  const fs::path split_path = p.out / files::kSplit;
  std::vector<bool> is_train;
  const bool have_split = fs::exists(split_path);
  if (have_split) is_train = read_split(split_path, rows.size());

  for (TaskKind task : c.tasks) {
    require_file(p.out / files::model(task), "train");
    const LoadedModel loaded = load_model(p.out / files::model(task));
    const std::size_t model_dim = std::visit([](const auto& m) { return m.normalizer.dimension(); }, loaded.model);
    if (model_dim != rows.front().values.size())
      throw ValidationError("feature-dimension mismatch: model expects " + std::to_string(model_dim) +
                            ", dataset has " + std::to_string(rows.front().values.size()));

    std::string out = "x,y,truth,predicted,split";
    if (const auto* mc = std::get_if<MultiClassModel>(&loaded.model)) {
      for (const auto& [a, b] : mc->pairs)
        out += ",d_" + std::to_string(mc->labels[a]) + "_" + std::to_string(mc->labels[b]);
    } else if (std::holds_alternative<BinarySvmModel>(loaded.model)) {
      out += ",decision";
    }
    out += '\n';
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const FeatureRow& r = rows[i];
      out += text::format_double(r.x) + "," + text::format_double(r.y) + ",";
      if (r.label) {
        const double t = task_target(task, *r.label, c.scene.scheme);
        out += task == TaskKind::svr ? text::format_double(t) : std::to_string(static_cast<ClassLabel>(t));
      }
      out += ",";
      const std::string split = have_split ? (is_train[i] ? "train" : "test") : "none";
      if (const auto* bin = std::get_if<BinarySvmModel>(&loaded.model)) {
        const auto pr = predict_binary(*bin, r.values);
        out += std::to_string(pr.label) + "," + split + "," + text::format_double(pr.decision);
      } else if (const auto* mc = std::get_if<MultiClassModel>(&loaded.model)) {
        const auto pr = predict_multiclass(*mc, r.values);
        out += std::to_string(pr.label) + "," + split;
        for (double d : pr.pair_decisions) out += "," + text::format_double(d);
      } else {
        out += text::format_double(predict_svr(std::get<SvrModel>(loaded.model), r.values)) + "," + split;
      }
      out += '\n';
    }
    write_text(p.out / files::predictions(task), out);
    note(p, "predict " + to_string(task) + ": " + std::to_string(rows.size()) + " traces");
  }
}

void stage_evaluate(const Pipeline& p) {
  const RunConfig& c = p.config;
  if (c.eval_subset != EvalSubset::test && !p.allow_train_eval)
    throw ValidationError("evaluating on training traces (eval.subset=" +
                          std::string(c.eval_subset == EvalSubset::train ? "train" : "all") +
                          ") requires --allow-train-eval");
  std::vector<double> boundaries;
  {
    double x = 0.0;
    for (std::size_t i = 0; i + 1 < c.scene.sections.size(); ++i) boundaries.push_back(x += c.scene.sections[i].length);
  }
  for (TaskKind task : c.tasks) {
    const fs::path path = p.out / files::predictions(task);
    require_file(path, "predict");
    const Table t = read_table(path);
    const std::size_t cx = t.column("x", path), ct = t.column("truth", path), cp = t.column("predicted", path),
                      cs = t.column("split", path);
    std::vector<double> truth, pred;
    std::size_t excluded = 0;
    for (const auto& r : t.rows) {
      const std::string& s = r[cs];
      const bool take = c.eval_subset == EvalSubset::all || (c.eval_subset == EvalSubset::test && s == "test") ||
                        (c.eval_subset == EvalSubset::train && s == "train");
      if (!take) continue;
      if (r[ct].empty()) throw ValidationError(path.string() + ": traces carry no truth labels, nothing to evaluate");
      const double x = text::parse_double(r[cx], "x");
      if (std::any_of(boundaries.begin(), boundaries.end(),
                      [&](double b) { return std::abs(x - b) < c.exclusion_margin; })) {
        ++excluded;
        continue;
      }
      truth.push_back(text::parse_double(r[ct], "truth"));
      pred.push_back(text::parse_double(r[cp], "predicted"));
    }
    if (truth.empty()) throw ValidationError(path.string() + ": no traces selected for evaluation");

    EvalReport report;
    const ClassScheme* scheme = nullptr;
    if (task == TaskKind::svr) {
      report = regression_report(truth, pred);
    } else {
      std::vector<ClassLabel> ti, pi;
      for (double v : truth) ti.push_back(static_cast<ClassLabel>(v));
      for (double v : pred) pi.push_back(static_cast<ClassLabel>(v));
      report = classification_report(confusion_matrix(ti, pi, task_labels(task, c.scene.scheme)));
      if (task == TaskKind::mcsvm) scheme = &c.scene.scheme;
    }
    std::string title = to_string(task) + " on " + std::to_string(truth.size()) + " traces";
    if (excluded) title += " (" + std::to_string(excluded) + " excluded near section boundaries)";
    write_text(p.out / files::report_txt(task), format_report(report, title, scheme));
    write_text(p.out / files::report_kv(task), format_report_kv(report, to_string(task)));
    if (report.rmse) note(p, "evaluate " + to_string(task) + ": rmse=" + text::format_fixed(*report.rmse, 3));
    else note(p, "evaluate " + to_string(task) + ": macro dice=" + text::format_fixed(report.dice.macro, 4));
  }
}

void stage_map(const Pipeline& p) {
  const RunConfig& c = p.config;
  const GridGeometry g = GridGeometry::make(c.scene.length, c.scene.width, c.scene.step);
  for (TaskKind task : c.tasks) {
    const fs::path path = p.out / files::predictions(task);
    require_file(path, "predict");
    const Table t = read_table(path);
    const std::size_t cx = t.column("x", path), cy = t.column("y", path), cp = t.column("predicted", path);
    std::vector<std::pair<double, double>> pos;
    std::vector<double> values;
    for (const auto& r : t.rows) {
      pos.emplace_back(text::parse_double(r[cx], "x"), text::parse_double(r[cy], "y"));
      values.push_back(text::parse_double(r[cp], "predicted"));
    }
    const bool quantities = task == TaskKind::svr;
    const MapAssembly m = assemble_map(g, pos, values, quantities);
    for (const auto& w : m.warnings) note(p, "map " + to_string(task) + ": warning: " + w);
    export_map_csv(m.map, p.out / files::map_csv(task));
    export_map_pgm(m.map, p.out / files::map_pgm(task),
                   quantities ? std::vector<ClassLabel>{} : task_labels(task, c.scene.scheme));
    note(p, "map " + to_string(task) + ": " + std::to_string(m.map.filled()) + " of " + std::to_string(g.size()) +
                " nodes filled");
  }
}

ReproduceResult stage_summarize(const Pipeline& p) {
  const RunConfig& c = p.config;
  ReproduceResult r;
  r.summary.set("study", c.preset.empty() ? "custom" : c.preset);
  r.summary.set("seed", std::to_string(c.seed));
  auto check = [&](const std::string& key, const KeyValues& report, const std::optional<double>& limit,
                   bool at_least) {
    if (!report.has(key)) return;
    const double v = report.get_double(key);
    if (!limit) return;
    const bool ok = at_least ? v >= *limit : v <= *limit;
    r.summary.set(key + ".threshold", (at_least ? ">=" : "<=") + text::format_fixed(*limit, 6));
    r.summary.set(key + ".pass", ok ? "true" : "false");
    r.passed = r.passed && ok;
  };
  for (TaskKind task : c.tasks) {
    const fs::path path = p.out / files::report_kv(task);
    require_file(path, "evaluate");
    const KeyValues report = KeyValues::read(path);
    for (const auto& [k, v] : report.entries()) r.summary.set(k, v);
    const std::string t = to_string(task);
    if (task == TaskKind::tcsvm) check(t + ".macro_dice", report, c.accept.tcsvm_macro_dice, true);
    if (task == TaskKind::mcsvm) check(t + ".macro_dice", report, c.accept.mcsvm_macro_dice, true);
    if (task == TaskKind::svr) check(t + ".rmse", report, c.accept.svr_rmse, false);
  }
  r.summary.set("passed", r.passed ? "true" : "false");
  r.summary.write(p.out / files::kSummary);
  return r;
}

ReproduceResult reproduce(const Pipeline& p) {
  run_stage("simulate", [&] { return stage_simulate(p); });
  run_stage("features", [&] { return stage_features(p); });
  run_stage("train", [&] { stage_train(p); return 0; });
  run_stage("predict", [&] { stage_predict(p); return 0; });
  run_stage("evaluate", [&] { stage_evaluate(p); return 0; });
  run_stage("map", [&] { stage_map(p); return 0; });
  return run_stage("summarize", [&] { return stage_summarize(p); });
}

}  // namespace tackscan
