#include "tackscan/scene.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "tackscan/error.hpp"

namespace tackscan {

void validate_stack(const LayerStack& stack) {
  if (stack.empty()) throw ValidationError("layer stack is empty");
  for (std::size_t i = 0; i < stack.size(); ++i) {
    const Layer& l = stack[i];
    if (!(l.rel_permittivity >= 1.0))
      throw ValidationError("layer '" + l.name + "': relative permittivity must be >= 1");
    if (!(l.conductivity >= 0.0))
      throw ValidationError("layer '" + l.name + "': conductivity must be >= 0");
    if (!l.half_space && !(l.thickness >= 0.0))
      throw ValidationError("layer '" + l.name + "': thickness must be >= 0");
    if (l.half_space && i + 1 != stack.size())
      throw ValidationError("layer '" + l.name + "': only the last layer may be a half-space");
  }
  if (!stack.back().half_space) throw ValidationError("last layer of a stack must be a half-space");
}

LayerStack default_pavement_stack() {
  return {
      Layer{"wearing", 0.05, 5.0, 0.005, false},
      Layer{"binder", 0.08, 7.0, 0.01, false},
      Layer{"subgrade", 0.0, 9.0, 0.02, true},
  };
}

Layer air_layer() { return Layer{"air", 0.0, 1.0, 0.0, false}; }

// ---------------------------------------------------------------------------

ClassScheme ClassScheme::binary() {
  ClassScheme s;
  s.kind_ = SchemeKind::binary;
  s.labels_ = {-1, 1};
  return s;
}

ClassScheme ClassScheme::four_class() {
  ClassScheme s;
  s.kind_ = SchemeKind::four_class;
  s.labels_ = {0, 1, 2, 3};
  return s;
}

ClassScheme ClassScheme::labelled(std::vector<int> quantities) {
  if (quantities.empty()) throw ValidationError("labelled scheme needs at least one quantity");
  std::sort(quantities.begin(), quantities.end());
  if (std::adjacent_find(quantities.begin(), quantities.end()) != quantities.end())
    throw ValidationError("labelled scheme quantities must be distinct");
  if (quantities.front() < 0) throw ValidationError("labelled scheme quantities must be >= 0");
  ClassScheme s;
  s.kind_ = SchemeKind::labelled;
  s.labels_ = std::move(quantities);
  return s;
}

ClassScheme ClassScheme::parse(const std::string& text) {
  if (text == "binary") return binary();
  if (text == "four_class") return four_class();
  const std::string prefix = "labels:";
  if (text.rfind(prefix, 0) == 0) {
    std::vector<int> q;
    std::stringstream ss(text.substr(prefix.size()));
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        std::size_t used = 0;
        q.push_back(std::stoi(item, &used));
        if (used != item.size()) throw std::invalid_argument(item);
      } catch (const std::exception&) {
        throw ValidationError("bad class label '" + item + "' in scheme '" + text + "'");
      }
    }
    return labelled(std::move(q));
  }
  throw ValidationError("unknown class scheme '" + text + "'");
}

ClassLabel ClassScheme::classify(double q) const {
  if (!(q >= 0.0)) throw ValidationError("emulsion quantity must be >= 0");
  switch (kind_) {
    case SchemeKind::binary:
      return q == 0.0 ? -1 : 1;
    case SchemeKind::four_class:
      if (q == 0.0) return 0;
      if (q < kUnderThreshold) return 1;
      if (q <= kOverThreshold) return 2;
      return 3;
    case SchemeKind::labelled: {
      ClassLabel best = labels_.front();
      double best_d = std::abs(q - best);
      for (ClassLabel l : labels_) {
        const double d = std::abs(q - l);
        if (d < best_d) {  // strict: ties keep the lower label
          best = l;
          best_d = d;
        }
      }
      return best;
    }
  }
  return labels_.front();
}

std::string ClassScheme::name(ClassLabel label) const {
  index_of(label);
  switch (kind_) {
    case SchemeKind::binary:
      return label < 0 ? "Absent" : "Present";
    case SchemeKind::four_class: {
      static const char* names[] = {"Absent", "Under", "Correct", "Over"};
      return names[label];
    }
    case SchemeKind::labelled:
      return std::to_string(label);
  }
  return {};
}

std::string ClassScheme::to_string() const {
  switch (kind_) {
    case SchemeKind::binary:
      return "binary";
    case SchemeKind::four_class:
      return "four_class";
    case SchemeKind::labelled: {
      std::string s = "labels:";
      for (std::size_t i = 0; i < labels_.size(); ++i) s += (i ? "," : "") + std::to_string(labels_[i]);
      return s;
    }
  }
  return {};
}

std::size_t ClassScheme::index_of(ClassLabel label) const {
  auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) throw ValidationError("label " + std::to_string(label) + " not in scheme " + to_string());
  return static_cast<std::size_t>(it - labels_.begin());
}

ClassLabel quantity_to_class(double quantity, const ClassScheme& scheme) { return scheme.classify(quantity); }

TackLayer quantity_to_layer(double q, const TackCoatModel& model) {
  if (!(q >= 0.0)) throw ValidationError("emulsion quantity must be >= 0");
  if (q == 0.0) return {0.0, model.eps_base};
  return {q * model.film_per_gsm, model.eps_base + model.eps_per_gsm * q};
}

// ---------------------------------------------------------------------------

void validate_field(const ThicknessFieldSpec& spec) {
  if (!(spec.d_min >= 0.0)) throw ValidationError("thickness field: d_min must be >= 0");
  if (!(spec.d_min <= spec.d_max)) throw ValidationError("thickness field: d_min must be <= d_max");
  if (spec.mode == FieldMode::bivariate_normal_surface) {
    const auto [sxx, sxy, syy] = spec.covariance;
    // Sylvester's criterion for a symmetric 2x2 matrix.
    if (!(sxx > 0.0) || !(sxx * syy - sxy * sxy > 0.0))
      throw ValidationError("thickness field: covariance is not positive-definite");
  }
}

Grid<double> sample_thickness_map(const ThicknessFieldSpec& spec, const GridGeometry& geometry) {
  validate_field(spec);
  Grid<double> out(geometry.nx, geometry.ny, spec.d_min);
  if (spec.mode == FieldMode::constant) return out;

  const auto [sxx, sxy, syy] = spec.covariance;
  const double det = sxx * syy - sxy * sxy;
  const double ixx = syy / det, ixy = -sxy / det, iyy = sxx / det;
  const double span = spec.d_max - spec.d_min;
  for (std::size_t iy = 0; iy < geometry.ny; ++iy) {
    const double dy = geometry.y(iy) - spec.mean[1];
    for (std::size_t ix = 0; ix < geometry.nx; ++ix) {
      const double dx = geometry.x(ix) - spec.mean[0];
      const double m2 = ixx * dx * dx + 2.0 * ixy * dx * dy + iyy * dy * dy;
      out.at(ix, iy) = spec.d_min + span * std::exp(-0.5 * m2);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

SectionSpec section(std::string name, double length, std::optional<double> q,
                    std::optional<double> wearing = std::nullopt) {
  return SectionSpec{std::move(name), length, q, wearing};
}

}  // namespace

std::vector<std::string> scene_preset_names() { return {"numerical-study", "carousel", "vendee"}; }

SceneConfig scene_preset(const std::string& name) {
  SceneConfig c;
  if (name == "numerical-study") {
    // 50 m x 5 m, full-surface grid at 0.25 m. A bare strip stands in for the
    // defect zones; the rest follows a Gaussian surface spanning Under..Over.
    c.length = 50.0;
    c.width = 5.0;
    c.step = 0.25;
    c.sections = {section("bare", 10.0, 0.0), section("field", 40.0, std::nullopt)};
    c.field.mode = FieldMode::bivariate_normal_surface;
    c.field.mean = {30.0, 2.5};
    c.field.covariance = {100.0, 0.0, 6.25};
    c.field.d_min = 0.10e-3;
    c.field.d_max = 0.50e-3;
    c.scheme = ClassScheme::four_class();
    c.survey.mode = SurveyMode::grid;
    return c;
  }
  if (name == "carousel") {
    // Five sections; the thin BBM wearing course gives way to BBSG at 23 m.
    c.length = 60.0;
    c.width = 3.5;
    c.step = 0.02;
    const double bbm = 0.03, bbsg = 0.06;
    c.sections = {section("S1a", 12.0, 300.0, bbm), section("S1b", 11.0, 0.0, bbm),
                  section("S2a", 11.0, 0.0, bbsg), section("S2b", 13.0, 300.0, bbsg),
                  section("S2c", 13.0, 300.0, bbsg)};
    c.scheme = ClassScheme::binary();
    c.survey.mode = SurveyMode::profiles;
    c.survey.longitudinal = {0.8, 1.5, 1.9, 2.65};
    c.survey.transverse_offset = 3.0;
    return c;
  }
  if (name == "vendee") {
    c.length = 120.0;
    c.width = 5.0;
    c.step = 0.1;
    c.base_stack[0].thickness = 0.05;
    c.sections = {section("Q450", 40.0, 450.0), section("Q250", 40.0, 250.0), section("Q300", 40.0, 300.0)};
    c.scheme = ClassScheme::labelled({250, 300, 450});
    c.survey.mode = SurveyMode::profiles;
    c.survey.longitudinal = {1.2, 2.5, 3.8};
    c.survey.transverse_offset = 3.0;
    return c;
  }
  throw ValidationError("unknown scene preset '" + name + "'");
}

// ---------------------------------------------------------------------------

PavementScene::PavementScene(SceneConfig config) : config_(std::move(config)) {
  const SceneConfig& c = config_;
  if (c.sections.empty()) throw ValidationError("scene has no sections");
  geometry_ = GridGeometry::make(c.length, c.width, c.step);
  if (c.base_stack.size() < 2) throw ValidationError("base stack needs at least one course over a half-space");
  validate_stack(c.base_stack);
  validate_field(c.field);

  double start = 0.0;
  bool uses_field = false;
  for (const SectionSpec& s : c.sections) {
    if (!(s.length > 0.0)) throw ValidationError("section '" + s.name + "': length must be positive");
    if (s.quantity && !(*s.quantity >= 0.0)) throw ValidationError("section '" + s.name + "': quantity must be >= 0");
    if (s.wearing_thickness && !(*s.wearing_thickness >= 0.0))
      throw ValidationError("section '" + s.name + "': wearing thickness must be >= 0");
    uses_field = uses_field || !s.quantity;
    sections_.push_back(Section{s, start, start + s.length});
    start += s.length;
  }
  if (std::abs(start - c.length) > 1e-9 * std::max(1.0, c.length))
    throw ValidationError("section lengths sum to " + std::to_string(start) + " m, scene length is " +
                          std::to_string(c.length) + " m");
  sections_.back().end = c.length;

  if (c.survey.mode == SurveyMode::profiles) {
    for (double y : c.survey.longitudinal)
      if (!(y >= 0.0 && y <= c.width)) throw ValidationError("longitudinal profile offset outside the scene");
    if (c.survey.transverse_offset && !(*c.survey.transverse_offset >= 0.0))
      throw ValidationError("transverse offset must be >= 0");
    if (c.survey.longitudinal.empty() && !c.survey.transverse_offset)
      throw ValidationError("profile survey defines no profiles");
  }

  Grid<double> film;
  if (uses_field) film = sample_thickness_map(c.field, geometry_);
  quantity_ = Grid<double>(geometry_.nx, geometry_.ny, 0.0);
  truth_ = Grid<ClassLabel>(geometry_.nx, geometry_.ny, 0);
  for (std::size_t iy = 0; iy < geometry_.ny; ++iy) {
    for (std::size_t ix = 0; ix < geometry_.nx; ++ix) {
      const Section& s = section_at(geometry_.x(ix));
      const double q = s.spec.quantity ? *s.spec.quantity : film.at(ix, iy) / c.tack.film_per_gsm;
      quantity_.at(ix, iy) = q;
      truth_.at(ix, iy) = c.scheme.classify(q);
    }
  }
}

const Section& PavementScene::section_at(double x) const {
  for (const Section& s : sections_)
    if (x < s.end - 1e-9) return s;
  return sections_.back();
}

LayerStack PavementScene::local_stack(GridIndex node) const {
  const Section& s = section_at(geometry_.x(node.ix));
  LayerStack stack;
  stack.reserve(config_.base_stack.size() + 2);
  stack.push_back(air_layer());
  for (std::size_t i = 0; i < config_.base_stack.size(); ++i) {
    Layer l = config_.base_stack[i];
    if (i == 0 && s.spec.wearing_thickness) l.thickness = *s.spec.wearing_thickness;
    stack.push_back(std::move(l));
    if (i == 0) {
      const double q = quantity_[node];
      if (q > 0.0) {
        const TackLayer t = quantity_to_layer(q, config_.tack);
        stack.push_back(Layer{"tack", t.thickness, t.rel_permittivity, config_.tack.conductivity, false});
      }
    }
  }
  return stack;
}

namespace {

std::size_t nearest_index(double coordinate, double step, std::size_t count) {
  const double r = std::round(coordinate / step);
  return std::min(static_cast<std::size_t>(std::max(0.0, r)), count - 1);
}

std::string format_offset(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

std::vector<ProfilePlan> PavementScene::survey_profiles() const {
  std::vector<ProfilePlan> plans;
  const GridGeometry& g = geometry_;
  if (config_.survey.mode == SurveyMode::grid) {
    for (std::size_t iy = 0; iy < g.ny; ++iy) {
      ProfilePlan p{"row" + std::to_string(iy), true, g.y(iy), {}};
      for (std::size_t ix = 0; ix < g.nx; ++ix) p.nodes.push_back({ix, iy});
      plans.push_back(std::move(p));
    }
    return plans;
  }
  int n = 1;
  for (double y : config_.survey.longitudinal) {
    const std::size_t iy = nearest_index(y, g.step, g.ny);
    ProfilePlan p{"P" + std::to_string(n++) + "@y=" + format_offset(y), true, g.y(iy), {}};
    for (std::size_t ix = 0; ix < g.nx; ++ix) p.nodes.push_back({ix, iy});
    plans.push_back(std::move(p));
  }
  if (config_.survey.transverse_offset) {
    const double off = *config_.survey.transverse_offset;
    for (const Section& s : sections_) {
      for (double x : {s.start + off, s.end - off}) {
        if (x < s.start || x > s.end) continue;
        const std::size_t ix = nearest_index(x, g.step, g.nx);
        ProfilePlan p{s.spec.name + "@x=" + format_offset(g.x(ix)), false, g.x(ix), {}};
        for (std::size_t iy = 0; iy < g.ny; ++iy) p.nodes.push_back({ix, iy});
        plans.push_back(std::move(p));
      }
    }
  }
  return plans;
}

std::vector<GridIndex> PavementScene::survey_nodes() const {
  std::vector<GridIndex> nodes;
  std::vector<char> seen(geometry_.size(), 0);
  for (const ProfilePlan& p : survey_profiles()) {
    for (GridIndex n : p.nodes) {
      char& s = seen[geometry_.flat(n)];
      if (!s) {
        s = 1;
        nodes.push_back(n);
      }
    }
  }
  return nodes;
}

PavementScene build_scene(const SceneConfig& config) { return PavementScene(config); }

}  // namespace tackscan
