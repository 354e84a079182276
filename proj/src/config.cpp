#include <functional>
#include <map>
#include <set>

#include "tackscan/error.hpp"
#include "tackscan/pipeline.hpp"
#include "tackscan/random.hpp"
#include "tackscan/text.hpp"

namespace tackscan {

std::string to_string(TaskKind task) {
  switch (task) {
    case TaskKind::tcsvm: return "tcsvm";
    case TaskKind::mcsvm: return "mcsvm";
    case TaskKind::svr: return "svr";
  }
  return "?";
}

TaskKind parse_task(const std::string& text) {
  if (text == "tcsvm") return TaskKind::tcsvm;
  if (text == "mcsvm") return TaskKind::mcsvm;
  if (text == "svr") return TaskKind::svr;
  throw ValidationError("unknown task '" + text + "' (expected tcsvm, mcsvm or svr)");
}

std::vector<std::string> run_preset_names() { return scene_preset_names(); }

RunConfig run_preset(const std::string& name) {
  RunConfig c;
  c.preset = name;
  c.scene = scene_preset(name);
  c.acq.noise_snr_db = 20.0;
  c.grid.kernel.kind = KernelKind::rbf;
  c.grid.C = {1.0, 4.0, 16.0, 64.0, 256.0};
  c.grid.gamma = {0.0625, 0.25, 1.0};
  c.grid.epsilon = {5.0, 10.0, 25.0};
  c.features.gate.automatic = false;
  c.features.gate.t_start = 2.3e-9;
  c.features.gate.t_end = 5.0e-9;
  c.features.families = kDefaultFamilies | kRawDecimated;
  c.features.raw_count = 64;
  c.seed = 20240611;
  if (name == "numerical-study") {
    c.tasks = {TaskKind::tcsvm, TaskKind::mcsvm, TaskKind::svr};
    c.accept.tcsvm_macro_dice = 0.90;
    c.accept.mcsvm_macro_dice = 0.80;
  } else if (name == "carousel") {
    c.scene.step = 0.05;
    c.features.gate.t_start = 2.2e-9;
    c.tasks = {TaskKind::tcsvm};
    c.accept.tcsvm_macro_dice = 0.90;
  } else if (name == "vendee") {
    c.acq.noise_snr_db = 30.0;
    c.tasks = {TaskKind::mcsvm, TaskKind::svr};
    c.accept.mcsvm_macro_dice = 0.90;
    c.accept.svr_rmse = 43.0;
  }
  return c;
}

std::uint64_t noise_seed(const RunConfig& c) { return c.seed; }
std::uint64_t split_seed(const RunConfig& c) { return mix_seed(c.seed ^ 0x5EEDu); }
std::uint64_t cv_seed(const RunConfig& c) { return mix_seed(c.seed ^ 0xC0FFEEu); }

namespace {

using text::format_double;

std::string fmt_list(const std::vector<double>& v) {
  std::string out;
  for (double x : v) out += (out.empty() ? "" : ",") + format_double(x);
  return out;
}

std::string fmt_opt(const std::optional<double>& v) { return v ? format_double(*v) : "none"; }

double num(const std::string& s, const std::string& key) { return text::parse_double(s, key); }

std::optional<double> opt_num(const std::string& s, const std::string& key) {
  if (s == "none") return std::nullopt;
  return num(s, key);
}

std::size_t count(const std::string& s, const std::string& key) {
  const long long v = text::parse_int(s, key);
  if (v < 0) throw ValidationError(key + " must be >= 0");
  return static_cast<std::size_t>(v);
}

struct Field {
  std::string key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

#define NUM_FIELD(KEY, MEMBER)                                                        \
  Field {                                                                             \
    KEY, [](const RunConfig& c) { return format_double(c.MEMBER); },                  \
        [](RunConfig& c, const std::string& v) { c.MEMBER = num(v, KEY); }            \
  }
#define OPT_FIELD(KEY, MEMBER)                                                        \
  Field {                                                                             \
    KEY, [](const RunConfig& c) { return fmt_opt(c.MEMBER); },                        \
        [](RunConfig& c, const std::string& v) { c.MEMBER = opt_num(v, KEY); }        \
  }
#define LIST_FIELD(KEY, MEMBER)                                                             \
  Field {                                                                                   \
    KEY, [](const RunConfig& c) { return fmt_list(c.MEMBER); },                             \
        [](RunConfig& c, const std::string& v) { c.MEMBER = text::parse_double_list(v, KEY); } \
  }
#define COUNT_FIELD(KEY, MEMBER)                                                      \
  Field {                                                                             \
    KEY, [](const RunConfig& c) { return std::to_string(c.MEMBER); },                 \
        [](RunConfig& c, const std::string& v) { c.MEMBER = count(v, KEY); }          \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      Field{"seed", [](const RunConfig& c) { return std::to_string(c.seed); },
            [](RunConfig& c, const std::string& v) {
              c.seed = static_cast<std::uint64_t>(text::parse_int(v, "seed"));
            }},
      NUM_FIELD("scene.length", scene.length),
      NUM_FIELD("scene.width", scene.width),
      NUM_FIELD("scene.step", scene.step),
      Field{"scene.scheme", [](const RunConfig& c) { return c.scene.scheme.to_string(); },
            [](RunConfig& c, const std::string& v) { c.scene.scheme = ClassScheme::parse(v); }},
      Field{"scene.field.mode",
            [](const RunConfig& c) {
              return std::string(c.scene.field.mode == FieldMode::constant ? "constant" : "bivariate_normal");
            },
            [](RunConfig& c, const std::string& v) {
              if (v == "constant") c.scene.field.mode = FieldMode::constant;
              else if (v == "bivariate_normal") c.scene.field.mode = FieldMode::bivariate_normal_surface;
              else throw ValidationError("scene.field.mode must be constant or bivariate_normal");
            }},
      NUM_FIELD("scene.field.mean_x", scene.field.mean[0]),
      NUM_FIELD("scene.field.mean_y", scene.field.mean[1]),
      NUM_FIELD("scene.field.cov_xx", scene.field.covariance[0]),
      NUM_FIELD("scene.field.cov_xy", scene.field.covariance[1]),
      NUM_FIELD("scene.field.cov_yy", scene.field.covariance[2]),
      NUM_FIELD("scene.field.d_min", scene.field.d_min),
      NUM_FIELD("scene.field.d_max", scene.field.d_max),
      Field{"scene.field.seed", [](const RunConfig& c) { return std::to_string(c.scene.field.seed); },
            [](RunConfig& c, const std::string& v) {
              c.scene.field.seed = static_cast<unsigned long long>(text::parse_int(v, "scene.field.seed"));
            }},
      NUM_FIELD("scene.tack.film_per_gsm", scene.tack.film_per_gsm),
      NUM_FIELD("scene.tack.eps_base", scene.tack.eps_base),
      NUM_FIELD("scene.tack.eps_per_gsm", scene.tack.eps_per_gsm),
      NUM_FIELD("scene.tack.conductivity", scene.tack.conductivity),
      Field{"scene.survey.mode",
            [](const RunConfig& c) {
              return std::string(c.scene.survey.mode == SurveyMode::grid ? "grid" : "profiles");
            },
            [](RunConfig& c, const std::string& v) {
              if (v == "grid") c.scene.survey.mode = SurveyMode::grid;
              else if (v == "profiles") c.scene.survey.mode = SurveyMode::profiles;
              else throw ValidationError("scene.survey.mode must be grid or profiles");
            }},
      LIST_FIELD("scene.survey.longitudinal", scene.survey.longitudinal),
      OPT_FIELD("scene.survey.transverse_offset", scene.survey.transverse_offset),
      NUM_FIELD("pulse.center_frequency", pulse.center_frequency),
      NUM_FIELD("pulse.amplitude", pulse.amplitude),
      NUM_FIELD("pulse.delay", pulse.delay),
      NUM_FIELD("acq.time_window", acq.time_window),
      COUNT_FIELD("acq.samples_per_trace", acq.samples_per_trace),
      NUM_FIELD("acq.traces_per_meter", acq.traces_per_meter),
      OPT_FIELD("acq.noise_snr_db", acq.noise_snr_db),
      NUM_FIELD("acq.direct_wave_amplitude", acq.direct_wave_amplitude),
      NUM_FIELD("acq.direct_wave_lead", acq.direct_wave_lead),
      Field{"features.gate", [](const RunConfig& c) { return std::string(c.features.gate.automatic ? "auto" : "manual"); },
            [](RunConfig& c, const std::string& v) {
              if (v == "auto") c.features.gate.automatic = true;
              else if (v == "manual") c.features.gate.automatic = false;
              else throw ValidationError("features.gate must be auto or manual");
            }},
      NUM_FIELD("features.gate.t_start", features.gate.t_start),
      NUM_FIELD("features.gate.t_end", features.gate.t_end),
      NUM_FIELD("features.gate.offset", features.gate.offset),
      NUM_FIELD("features.gate.width", features.gate.width),
      COUNT_FIELD("features.windows", features.window_count),
      Field{"features.families", [](const RunConfig& c) { return families_to_string(c.features.families); },
            [](RunConfig& c, const std::string& v) { c.features.families = parse_families(v); }},
      NUM_FIELD("features.band_reference", features.band_reference),
      COUNT_FIELD("features.raw_count", features.raw_count),
      Field{"tasks",
            [](const RunConfig& c) {
              std::string out;
              for (TaskKind t : c.tasks) out += (out.empty() ? "" : ",") + to_string(t);
              return out;
            },
            [](RunConfig& c, const std::string& v) {
              c.tasks.clear();
              for (auto item : text::split(v, ',')) {
                item = text::trim(item);
                if (!item.empty()) c.tasks.push_back(parse_task(std::string(item)));
              }
            }},
      Field{"grid.kernel", [](const RunConfig& c) { return to_string(c.grid.kernel.kind); },
            [](RunConfig& c, const std::string& v) { c.grid.kernel.kind = parse_kernel_kind(v); }},
      Field{"grid.degree", [](const RunConfig& c) { return std::to_string(c.grid.kernel.degree); },
            [](RunConfig& c, const std::string& v) {
              c.grid.kernel.degree = static_cast<int>(text::parse_int(v, "grid.degree"));
            }},
      NUM_FIELD("grid.coef0", grid.kernel.coef0),
      LIST_FIELD("grid.C", grid.C),
      LIST_FIELD("grid.gamma", grid.gamma),
      Field{"grid.gamma_scale",
            [](const RunConfig& c) { return std::string(c.grid.gamma_per_dimension ? "per_dimension" : "absolute"); },
            [](RunConfig& c, const std::string& v) {
              if (v == "per_dimension") c.grid.gamma_per_dimension = true;
              else if (v == "absolute") c.grid.gamma_per_dimension = false;
              else throw ValidationError("grid.gamma_scale must be per_dimension or absolute");
            }},
      LIST_FIELD("grid.epsilon", grid.epsilon),
      COUNT_FIELD("grid.folds", grid.folds),
      NUM_FIELD("svm.tol", solver.tol),
      COUNT_FIELD("svm.max_iterations", solver.max_iterations),
      Field{"svm.cache_mb", [](const RunConfig& c) { return std::to_string(c.solver.cache_bytes >> 20); },
            [](RunConfig& c, const std::string& v) { c.solver.cache_bytes = count(v, "svm.cache_mb") << 20; }},
      NUM_FIELD("split.train_fraction", split.train_fraction),
      Field{"split.mode", [](const RunConfig& c) { return std::string(c.split.mode == SplitMode::random ? "random" : "block"); },
            [](RunConfig& c, const std::string& v) {
              if (v == "random") c.split.mode = SplitMode::random;
              else if (v == "block") c.split.mode = SplitMode::block;
              else throw ValidationError("split.mode must be random or block");
            }},
      NUM_FIELD("split.block_length", split.block_length),
      COUNT_FIELD("train.max_samples", max_train_samples),
      NUM_FIELD("eval.exclusion_margin", exclusion_margin),
      Field{"eval.subset",
            [](const RunConfig& c) {
              switch (c.eval_subset) {
                case EvalSubset::test: return std::string("test");
                case EvalSubset::train: return std::string("train");
                case EvalSubset::all: return std::string("all");
              }
              return std::string("test");
            },
            [](RunConfig& c, const std::string& v) {
              if (v == "test") c.eval_subset = EvalSubset::test;
              else if (v == "train") c.eval_subset = EvalSubset::train;
              else if (v == "all") c.eval_subset = EvalSubset::all;
              else throw ValidationError("eval.subset must be test, train or all");
            }},
      OPT_FIELD("accept.tcsvm.macro_dice", accept.tcsvm_macro_dice),
      OPT_FIELD("accept.mcsvm.macro_dice", accept.mcsvm_macro_dice),
      OPT_FIELD("accept.svr.rmse", accept.svr_rmse),
  };
  return table;
}

#undef NUM_FIELD
#undef OPT_FIELD
#undef LIST_FIELD
#undef COUNT_FIELD

// scene.section.<i>.<field>
bool apply_section_keys(RunConfig& c, const KeyValues& kv) {
  std::map<std::size_t, std::map<std::string, std::string>> by_index;
  for (const auto& [key, value] : kv.entries()) {
    if (key.rfind("scene.section.", 0) != 0) continue;
    const std::string rest = key.substr(14);
    const auto dot = rest.find('.');
    if (dot == std::string::npos) throw ValidationError("unknown config key '" + key + "'");
    const std::size_t index = count(rest.substr(0, dot), key);
    const std::string field = rest.substr(dot + 1);
    if (field != "name" && field != "length" && field != "quantity" && field != "wearing_thickness") {
      throw ValidationError("unknown config key '" + key + "'");
    }
    by_index[index][field] = value;
  }
  if (by_index.empty()) return false;
  std::vector<SectionSpec> sections;
  for (const auto& [index, f] : by_index) {
    const std::string prefix = "scene.section." + std::to_string(index) + ".";
    if (index != sections.size()) throw ValidationError("scene sections must be numbered 0, 1, 2, ... without gaps");
    if (!f.count("name") || !f.count("length")) throw ValidationError(prefix + "name and " + prefix + "length are required");
    SectionSpec s;
    s.name = f.at("name");
    s.length = num(f.at("length"), prefix + "length");
    if (f.count("quantity") && f.at("quantity") != "field") s.quantity = num(f.at("quantity"), prefix + "quantity");
    if (f.count("wearing_thickness") && f.at("wearing_thickness") != "default")
      s.wearing_thickness = num(f.at("wearing_thickness"), prefix + "wearing_thickness");
    sections.push_back(std::move(s));
  }
  c.scene.sections = std::move(sections);
  return true;
}

// scene.layer.<name>.<thickness|permittivity|conductivity>
void apply_layer_key(RunConfig& c, const std::string& key, const std::string& value) {
  const std::string rest = key.substr(12);
  const auto dot = rest.rfind('.');
  if (dot == std::string::npos) throw ValidationError("unknown config key '" + key + "'");
  const std::string name = rest.substr(0, dot);
  const std::string field = rest.substr(dot + 1);
  for (Layer& l : c.scene.base_stack) {
    if (l.name != name) continue;
    if (field == "thickness" && !l.half_space) l.thickness = num(value, key);
    else if (field == "permittivity") l.rel_permittivity = num(value, key);
    else if (field == "conductivity") l.conductivity = num(value, key);
    else throw ValidationError("unknown config key '" + key + "'");
    return;
  }
  throw ValidationError("unknown config key '" + key + "' (no layer named '" + name + "')");
}

}  // namespace

RunConfig parse_run_config(const KeyValues& kv) {
  RunConfig c = run_preset(kv.find("preset").value_or("numerical-study"));
  std::map<std::string, const Field*> index;
  for (const Field& f : fields()) index[f.key] = &f;
  for (const auto& [key, value] : kv.entries()) {
    if (key == "preset" || key.rfind("scene.section.", 0) == 0) continue;
    if (key.rfind("scene.layer.", 0) == 0) {
      apply_layer_key(c, key, value);
      continue;
    }
    auto it = index.find(key);
    if (it == index.end()) throw ValidationError("unknown config key '" + key + "'");
    it->second->set(c, value);
  }
  apply_section_keys(c, kv);
  validate(c);
  return c;
}

RunConfig read_run_config(const std::filesystem::path& path) { return parse_run_config(KeyValues::read(path)); }

KeyValues to_kv(const RunConfig& c) {
  KeyValues kv;
  kv.set("preset", c.preset);
  for (const Field& f : fields()) kv.set(f.key, f.get(c));
  for (const Layer& l : c.scene.base_stack) {
    const std::string p = "scene.layer." + l.name + ".";
    if (!l.half_space) kv.set(p + "thickness", l.thickness);
    kv.set(p + "permittivity", l.rel_permittivity);
    kv.set(p + "conductivity", l.conductivity);
  }
  for (std::size_t i = 0; i < c.scene.sections.size(); ++i) {
    const SectionSpec& s = c.scene.sections[i];
    const std::string p = "scene.section." + std::to_string(i) + ".";
    kv.set(p + "name", s.name);
    kv.set(p + "length", s.length);
    kv.set(p + "quantity", s.quantity ? format_double(*s.quantity) : "field");
    kv.set(p + "wearing_thickness", s.wearing_thickness ? format_double(*s.wearing_thickness) : "default");
  }
  return kv;
}

void validate(const RunConfig& c) {
  validate(c.pulse);
  validate(c.acq);
  validate(c.features);
  validate(c.grid.kernel);
  if (!(c.split.train_fraction > 0.0 && c.split.train_fraction < 1.0))
    throw ValidationError("split.train_fraction must lie in (0, 1)");
  if (!(c.split.block_length > 0.0)) throw ValidationError("split.block_length must be positive");
  if (!(c.exclusion_margin >= 0.0)) throw ValidationError("eval.exclusion_margin must be >= 0");
  if (c.grid.folds < 2) throw ValidationError("grid.folds must be at least 2");
  if (c.grid.C.empty()) throw ValidationError("grid.C must list at least one value");
  if (c.grid.kernel.kind != KernelKind::linear && c.grid.gamma.empty())
    throw ValidationError("grid.gamma must list at least one value");
  for (double v : c.grid.C)
    if (!(v > 0.0)) throw ValidationError("grid.C values must be positive");
  for (double v : c.grid.gamma)
    if (!(v > 0.0)) throw ValidationError("grid.gamma values must be positive");
  for (double v : c.grid.epsilon)
    if (!(v >= 0.0)) throw ValidationError("grid.epsilon values must be >= 0");
  if (!(c.solver.tol > 0.0)) throw ValidationError("svm.tol must be positive");
  if (c.solver.max_iterations == 0) throw ValidationError("svm.max_iterations must be positive");
  if (c.tasks.empty()) throw ValidationError("tasks must name at least one of tcsvm, mcsvm, svr");
  std::set<TaskKind> seen;
  for (TaskKind t : c.tasks) {
    if (!seen.insert(t).second) throw ValidationError("task '" + to_string(t) + "' listed twice");
    if (t == TaskKind::mcsvm && c.scene.scheme.kind() == SchemeKind::binary)
      throw ValidationError("task mcsvm needs a multi-class scheme, scene.scheme is binary");
    if (t == TaskKind::svr && c.grid.epsilon.empty()) throw ValidationError("task svr needs grid.epsilon values");
  }
}

}  // namespace tackscan
