#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "tackscan/dataset.hpp"
#include "tackscan/em_forward.hpp"
#include "tackscan/error.hpp"
#include "tackscan/eval.hpp"
#include "tackscan/features.hpp"
#include "tackscan/pipeline.hpp"
#include "tackscan/scene.hpp"
#include "tackscan/svm.hpp"

namespace py = pybind11;
using namespace tackscan;

namespace {

using Matrix = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<FeatureVector> rows_of(const Matrix& x) {
  if (x.ndim() != 2) throw ValidationError("expected a 2-D array of feature vectors");
  const auto r = x.unchecked<2>();
  std::vector<FeatureVector> out(static_cast<std::size_t>(r.shape(0)));
  for (py::ssize_t i = 0; i < r.shape(0); ++i) {
    out[static_cast<std::size_t>(i)].resize(static_cast<std::size_t>(r.shape(1)));
    for (py::ssize_t j = 0; j < r.shape(1); ++j) out[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = r(i, j);
  }
  return out;
}

TrainingSet training_set(const Matrix& x, const std::vector<double>& y) {
  return TrainingSet{rows_of(x), y};
}

template <typename T>
py::array_t<T> to_array(const std::vector<T>& v) {
  return py::array_t<T>(static_cast<py::ssize_t>(v.size()), v.data());
}

template <typename T>
py::array_t<T> grid_array(const Grid<T>& g) {
  py::array_t<T> a({static_cast<py::ssize_t>(g.ny()), static_cast<py::ssize_t>(g.nx())});
  std::copy(g.values().begin(), g.values().end(), a.mutable_data());
  return a;
}

py::array_t<double> matrix(const std::vector<std::vector<double>>& rows) {
  const std::size_t n = rows.size(), d = rows.empty() ? 0 : rows.front().size();
  py::array_t<double> a({static_cast<py::ssize_t>(n), static_cast<py::ssize_t>(d)});
  double* p = a.mutable_data();
  for (const auto& r : rows) p = std::copy(r.begin(), r.end(), p);
  return a;
}

KernelSpec kernel(const std::string& kind, double gamma, int degree, double coef0) {
  KernelSpec k{parse_kernel_kind(kind), gamma, degree, coef0};
  validate(k);
  return k;
}

SolverOptions solver(double tol, std::size_t max_iterations) {
  SolverOptions o;
  o.tol = tol;
  o.max_iterations = max_iterations;
  return o;
}

py::dict survey_dict(const Survey& s) {
  std::vector<std::vector<double>> samples;
  std::vector<double> xs, ys, q;
  for (const AScan& a : s.traces) {
    samples.push_back(a.samples);
    xs.push_back(a.x);
    ys.push_back(a.y);
    q.push_back(a.truth_quantity.value_or(std::nan("")));
  }
  py::dict d;
  d["samples"] = matrix(samples);
  d["x"] = to_array(xs);
  d["y"] = to_array(ys);
  d["quantity"] = to_array(q);
  d["dt"] = s.traces.empty() ? 0.0 : s.traces.front().dt;
  return d;
}

py::dict kv_dict(const KeyValues& kv) {
  py::dict d;
  for (const auto& [k, v] : kv.entries()) d[py::str(k)] = v;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "GPR tack-coat simulation, SVM classification and evaluation";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<ConvergenceError>(m, "ConvergenceError", PyExc_RuntimeError);

  // -- scene -----------------------------------------------------------------
  py::class_<Layer>(m, "Layer")
      .def(py::init([](std::string name, double thickness, double eps, double sigma, bool half_space) {
             return Layer{std::move(name), thickness, eps, sigma, half_space};
           }),
           py::arg("name"), py::arg("thickness"), py::arg("rel_permittivity"), py::arg("conductivity") = 0.0,
           py::arg("half_space") = false)
      .def_readwrite("name", &Layer::name)
      .def_readwrite("thickness", &Layer::thickness)
      .def_readwrite("rel_permittivity", &Layer::rel_permittivity)
      .def_readwrite("conductivity", &Layer::conductivity)
      .def_readwrite("half_space", &Layer::half_space)
      .def("__repr__", [](const Layer& l) {
        return "Layer('" + l.name + "', d=" + std::to_string(l.thickness) + ", eps=" + std::to_string(l.rel_permittivity) + ")";
      });

  m.def("air_layer", &air_layer);
  m.def("default_pavement_stack", &default_pavement_stack);
  m.def("scene_preset_names", &scene_preset_names);
  m.def("quantity_to_class", [](double q, const std::string& scheme) { return quantity_to_class(q, ClassScheme::parse(scheme)); },
        py::arg("quantity"), py::arg("scheme") = "four_class");
  m.def("quantity_to_layer", [](double q) {
    const TackLayer t = quantity_to_layer(q);
    return py::make_tuple(t.thickness, t.rel_permittivity);
  });

  py::class_<PavementScene>(m, "Scene")
      .def(py::init([](const std::string& preset) { return PavementScene(scene_preset(preset)); }), py::arg("preset"))
      .def_property_readonly("shape", [](const PavementScene& s) { return py::make_tuple(s.geometry().nx, s.geometry().ny); })
      .def_property_readonly("step", [](const PavementScene& s) { return s.geometry().step; })
      .def_property_readonly("scheme", [](const PavementScene& s) { return s.scheme().to_string(); })
      .def_property_readonly("class_labels", [](const PavementScene& s) { return s.scheme().labels(); })
      .def_property_readonly("quantity", [](const PavementScene& s) { return grid_array(s.quantity()); },
                             "Emulsion quantity (g/m^2), rows = y")
      .def_property_readonly("truth", [](const PavementScene& s) { return grid_array(s.ground_truth_class()); })
      .def_property_readonly("sections", [](const PavementScene& s) {
        py::list out;
        for (const Section& sec : s.sections())
          out.append(py::make_tuple(sec.spec.name, sec.start, sec.end, sec.spec.quantity));
        return out;
      })
      .def("local_stack", [](const PavementScene& s, std::size_t ix, std::size_t iy) { return s.local_stack({ix, iy}); })
      .def("survey_size", [](const PavementScene& s) { return s.survey_nodes().size(); });

  // -- forward model -----------------------------------------------------------
  py::class_<PulseSpec>(m, "PulseSpec")
      .def(py::init<>())
      .def_readwrite("center_frequency", &PulseSpec::center_frequency)
      .def_readwrite("amplitude", &PulseSpec::amplitude)
      .def_readwrite("delay", &PulseSpec::delay);

  py::class_<AcquisitionSpec>(m, "AcquisitionSpec")
      .def(py::init<>())
      .def_readwrite("time_window", &AcquisitionSpec::time_window)
      .def_readwrite("samples_per_trace", &AcquisitionSpec::samples_per_trace)
      .def_readwrite("traces_per_meter", &AcquisitionSpec::traces_per_meter)
      .def_readwrite("noise_snr_db", &AcquisitionSpec::noise_snr_db)
      .def_readwrite("seed", &AcquisitionSpec::seed)
      .def_readwrite("direct_wave_amplitude", &AcquisitionSpec::direct_wave_amplitude)
      .def_readwrite("direct_wave_lead", &AcquisitionSpec::direct_wave_lead)
      .def_property_readonly("dt", &AcquisitionSpec::dt);

  m.def("fresnel_reflection", &fresnel_reflection, py::arg("eps1"), py::arg("eps2"));
  m.def("frequency_grid", [](const AcquisitionSpec& a) { return to_array(frequency_grid(a)); }, py::arg("acq") = AcquisitionSpec{});
  m.def("layered_reflection_response",
        [](const LayerStack& stack, const std::vector<double>& f) { return to_array(layered_reflection_response(stack, f)); },
        py::arg("stack"), py::arg("frequencies"));
  m.def("synthesize_ascan",
        [](const std::vector<std::complex<double>>& r, const PulseSpec& p, const AcquisitionSpec& a, std::uint64_t stream) {
          return to_array(synthesize_ascan(r, p, a, stream).samples);
        },
        py::arg("response"), py::arg("pulse") = PulseSpec{}, py::arg("acq") = AcquisitionSpec{}, py::arg("stream") = 0);
  m.def("simulate_survey",
        [](const PavementScene& s, const PulseSpec& p, const AcquisitionSpec& a) { return survey_dict(simulate_survey(s, p, a)); },
        py::arg("scene"), py::arg("pulse") = PulseSpec{}, py::arg("acq") = AcquisitionSpec{},
        "Returns a dict with samples (traces x samples), x, y, quantity and dt.");

  // -- features ----------------------------------------------------------------
  py::class_<FeatureConfig>(m, "FeatureConfig")
      .def(py::init<>())
      .def_property(
          "gate", [](const FeatureConfig& c) { return c.gate.automatic ? py::object(py::str("auto")) : py::object(py::make_tuple(c.gate.t_start, c.gate.t_end)); },
          [](FeatureConfig& c, py::object g) {
            if (py::isinstance<py::str>(g)) {
              if (g.cast<std::string>() != "auto") throw ValidationError("gate must be 'auto' or (t_start, t_end)");
              c.gate.automatic = true;
            } else {
              const auto t = g.cast<std::pair<double, double>>();
              c.gate.automatic = false;
              c.gate.t_start = t.first;
              c.gate.t_end = t.second;
            }
          })
      .def_property("gate_offset", [](const FeatureConfig& c) { return c.gate.offset; }, [](FeatureConfig& c, double v) { c.gate.offset = v; })
      .def_property("gate_width", [](const FeatureConfig& c) { return c.gate.width; }, [](FeatureConfig& c, double v) { c.gate.width = v; })
      .def_readwrite("window_count", &FeatureConfig::window_count)
      .def_readwrite("raw_count", &FeatureConfig::raw_count)
      .def_readwrite("band_reference", &FeatureConfig::band_reference)
      .def_property("families", [](const FeatureConfig& c) { return families_to_string(c.families); },
                    [](FeatureConfig& c, const std::string& s) { c.families = parse_families(s); })
      .def_property_readonly("dimension", [](const FeatureConfig& c) { return feature_dimension(c); })
      .def_property_readonly("names", [](const FeatureConfig& c) { return feature_names(c); });

  m.def("extract_features",
        [](const Matrix& samples, double dt, const FeatureConfig& cfg) {
          const auto rows = samples.ndim() == 1 ? std::vector<FeatureVector>{std::vector<double>(samples.data(), samples.data() + samples.size())}
                                                : rows_of(samples);
          std::vector<FeatureVector> out;
          for (const auto& r : rows) out.push_back(extract_features(AScan{r, dt, 0.0, 0.0, std::nullopt}, cfg));
          return samples.ndim() == 1 ? py::object(to_array(out.front())) : py::object(matrix(out));
        },
        py::arg("samples"), py::arg("dt"), py::arg("config") = FeatureConfig{},
        "One trace (1-D) gives one vector; a 2-D array gives one row per trace.");

  py::class_<Normalizer>(m, "Normalizer")
      .def_readonly("mean", &Normalizer::mean)
      .def_readonly("stddev", &Normalizer::stddev)
      .def_readonly("degenerate", &Normalizer::degenerate)
      .def("apply", [](const Normalizer& n, const Matrix& x) {
        std::vector<FeatureVector> out;
        for (const auto& r : rows_of(x)) out.push_back(apply_normalizer(n, r));
        return matrix(out);
      });
  m.def("fit_normalizer", [](const Matrix& x) { return fit_normalizer(rows_of(x)); });

  // -- svm ---------------------------------------------------------------------
  py::class_<BinarySvmModel>(m, "BinarySvmModel")
      .def_readonly("bias", &BinarySvmModel::bias)
      .def_readonly("C", &BinarySvmModel::C)
      .def_readonly("margin_violations", &BinarySvmModel::margin_violations)
      .def_property_readonly("support_count", [](const BinarySvmModel& b) { return b.support_vectors.size(); })
      .def_property_readonly("coefficients", [](const BinarySvmModel& b) { return to_array(b.coefficients); })
      .def("decision_function", [](const BinarySvmModel& b, const Matrix& x) {
        std::vector<double> d;
        for (const auto& r : rows_of(x)) d.push_back(decision_value(b, r));
        return to_array(d);
      })
      .def("predict", [](const BinarySvmModel& b, const Matrix& x) {
        std::vector<int> l;
        for (const auto& r : rows_of(x)) l.push_back(predict_binary(b, r).label);
        return to_array(l);
      });

  py::class_<MultiClassModel>(m, "MultiClassModel")
      .def_readonly("labels", &MultiClassModel::labels)
      .def_readonly("tie_break", &MultiClassModel::tie_break)
      .def_property_readonly("model_count", [](const MultiClassModel& mc) { return mc.models.size(); })
      .def("predict", [](const MultiClassModel& mc, const Matrix& x) {
        std::vector<int> l;
        for (const auto& r : rows_of(x)) l.push_back(predict_multiclass(mc, r).label);
        return to_array(l);
      })
      .def("votes", [](const MultiClassModel& mc, const std::vector<double>& x) { return predict_multiclass(mc, x).votes; });

  py::class_<SvrModel>(m, "SvrModel")
      .def_readonly("bias", &SvrModel::bias)
      .def_readonly("C", &SvrModel::C)
      .def_readonly("epsilon", &SvrModel::epsilon)
      .def_property_readonly("support_count", [](const SvrModel& s) { return s.support_vectors.size(); })
      .def("predict", [](const SvrModel& s, const Matrix& x) {
        std::vector<double> v;
        for (const auto& r : rows_of(x)) v.push_back(predict_svr(s, r));
        return to_array(v);
      });

  m.def("kernel_eval",
        [](const std::vector<double>& u, const std::vector<double>& v, const std::string& kind, double gamma, int degree, double coef0) {
          return kernel_eval(kernel(kind, gamma, degree, coef0), u, v);
        },
        py::arg("u"), py::arg("v"), py::arg("kernel") = "rbf", py::arg("gamma") = 1.0, py::arg("degree") = 3, py::arg("coef0") = 0.0);

  m.def("train_binary",
        [](const Matrix& x, const std::vector<double>& y, double C, const std::string& k, double gamma, double tol,
           std::size_t max_iterations) {
          return train_binary(training_set(x, y), C, kernel(k, gamma, 3, 0.0), solver(tol, max_iterations)).model;
        },
        py::arg("x"), py::arg("y"), py::arg("C") = 1.0, py::arg("kernel") = "rbf", py::arg("gamma") = 1.0,
        py::arg("tol") = 1e-3, py::arg("max_iterations") = 1'000'000);
  m.def("train_multiclass",
        [](const Matrix& x, const std::vector<double>& y, double C, const std::string& k, double gamma, double tol) {
          return train_multiclass(training_set(x, y), C, kernel(k, gamma, 3, 0.0), solver(tol, 1'000'000));
        },
        py::arg("x"), py::arg("y"), py::arg("C") = 1.0, py::arg("kernel") = "rbf", py::arg("gamma") = 1.0, py::arg("tol") = 1e-3);
  m.def("train_svr",
        [](const Matrix& x, const std::vector<double>& y, double C, double epsilon, const std::string& k, double gamma,
           double tol) { return train_svr(training_set(x, y), C, epsilon, kernel(k, gamma, 3, 0.0), solver(tol, 1'000'000)).model; },
        py::arg("x"), py::arg("y"), py::arg("C") = 1.0, py::arg("epsilon") = 0.1, py::arg("kernel") = "rbf",
        py::arg("gamma") = 1.0, py::arg("tol") = 1e-3);

  m.def("save_model", [](const std::filesystem::path& p, const BinarySvmModel& mo) { save_model(p, mo); });
  m.def("save_model", [](const std::filesystem::path& p, const MultiClassModel& mo) { save_model(p, mo); });
  m.def("save_model", [](const std::filesystem::path& p, const SvrModel& mo) { save_model(p, mo); });
  m.def("load_model", [](const std::filesystem::path& p) {
    return std::visit([](auto&& mo) { return py::cast(mo); }, load_model(p).model);
  });

  // -- eval --------------------------------------------------------------------
  m.def("confusion_matrix",
        [](const std::vector<int>& truth, const std::vector<int>& pred, std::vector<int> labels) {
          const auto cm = confusion_matrix(truth, pred, std::move(labels));
          return cm.counts();
        },
        py::arg("truth"), py::arg("predicted"), py::arg("labels"));
  m.def("dice_scores",
        [](const std::vector<std::vector<std::size_t>>& counts) {
          std::vector<ClassLabel> labels(counts.size());
          for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<ClassLabel>(i);
          const DiceScores d = dice_scores(ConfusionMatrix(labels, counts));
          return py::make_tuple(d.per_class, d.macro);
        },
        py::arg("counts"), "Per-class Dice (None when undefined) and the macro average.");
  m.def("rmse", [](const std::vector<double>& a, const std::vector<double>& b) { return rmse(a, b); });

  // -- pipeline ----------------------------------------------------------------
  m.def("run_preset_names", &run_preset_names);
  m.def("preset_config", [](const std::string& name) { return kv_dict(to_kv(run_preset(name))); });
  m.def("reproduce",
        [](const std::string& study, const std::filesystem::path& out, std::optional<std::uint64_t> seed,
           const std::map<std::string, std::string>& overrides) {
          KeyValues kv;
          kv.set("preset", study);
          for (const auto& [k, v] : overrides) kv.set(k, v);
          RunConfig c = parse_run_config(kv);
          if (seed) c.seed = *seed;
          ReproduceResult r;
          {
            py::gil_scoped_release release;
            r = reproduce(Pipeline{std::move(c), out, false, nullptr});
          }
          return py::make_tuple(r.passed, kv_dict(r.summary));
        },
        py::arg("study"), py::arg("out"), py::arg("seed") = py::none(),
        py::arg("overrides") = std::map<std::string, std::string>{},
        "Runs the whole pipeline; returns (passed, summary dict).");
}
