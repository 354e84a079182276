#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "tackscan/grid.hpp"

namespace tackscan {

/// One homogeneous medium in a normal-incidence layered model.
///
/// `half_space` marks the terminating medium of a stack; its thickness is
/// ignored. Thickness 0 is allowed for a degenerate (absent) film.
struct Layer {
  std::string name;
  double thickness = 0.0;         // m
  double rel_permittivity = 1.0;  // real part, >= 1
  double conductivity = 0.0;      // S/m
  bool half_space = false;
};

using LayerStack = std::vector<Layer>;

/// Throws ValidationError if any layer is non-physical or if the last layer
/// is not flagged as a half-space.
void validate_stack(const LayerStack& stack);

/// Default pavement courses: wearing, binder, subgrade half-space.
LayerStack default_pavement_stack();

/// Relative permittivity of air, used as the incident medium.
Layer air_layer();

using ClassLabel = int;

enum class SchemeKind { binary, four_class, labelled };

/// Maps applied emulsion quantity (g/m^2) onto a finite ordered class set.
///
/// binary:     Absent = -1, Present = +1
/// four_class: Absent = 0, Under = 1, Correct = 2, Over = 3
///             thresholds 0 / (0,250) / [250,350] / (350,inf)
/// labelled:   label is the nearest listed quantity; ties go to the lower one
class ClassScheme {
 public:
  static ClassScheme binary();
  static ClassScheme four_class();
  static ClassScheme labelled(std::vector<int> quantities);
  /// Parses "binary", "four_class" or "labels:250,300,450".
  static ClassScheme parse(const std::string& text);

  SchemeKind kind() const { return kind_; }
  const std::vector<ClassLabel>& labels() const { return labels_; }
  std::size_t size() const { return labels_.size(); }

  ClassLabel classify(double quantity) const;
  std::string name(ClassLabel label) const;
  std::string to_string() const;
  /// Position of `label` in labels(); throws on unknown labels.
  std::size_t index_of(ClassLabel label) const;

  bool operator==(const ClassScheme&) const = default;

 private:
  SchemeKind kind_ = SchemeKind::binary;
  std::vector<ClassLabel> labels_;
};

inline constexpr double kUnderThreshold = 250.0;   // g/m^2, start of Correct
inline constexpr double kOverThreshold = 350.0;    // g/m^2, end of Correct

/// Free-function form of ClassScheme::classify.
ClassLabel quantity_to_class(double quantity, const ClassScheme& scheme);

/// Residual-film model linking emulsion quantity to an equivalent layer.
struct TackCoatModel {
  double film_per_gsm = 1e-6;      // m of film per g/m^2
  double eps_base = 6.0;
  double eps_per_gsm = 0.01;
  double conductivity = 0.0;       // S/m

  bool operator==(const TackCoatModel&) const = default;
};

struct TackLayer {
  double thickness;        // m
  double rel_permittivity;
};

/// thickness = q * film_per_gsm, permittivity = eps_base + eps_per_gsm * q.
/// q = 0 gives zero thickness (the layer is omitted from stacks).
TackLayer quantity_to_layer(double quantity, const TackCoatModel& model = {});

enum class FieldMode { constant, bivariate_normal_surface };

/// Deterministic Gaussian-shaped thickness surface over the scene plane.
struct ThicknessFieldSpec {
  FieldMode mode = FieldMode::constant;
  std::array<double, 2> mean{0.0, 0.0};                 // m
  std::array<double, 3> covariance{1.0, 0.0, 1.0};      // xx, xy, yy (m^2)
  double d_min = 0.0;                                   // m
  double d_max = 0.0;                                   // m
  // Carried through to outputs; the surface itself has no random component.
  unsigned long long seed = 0;

  bool operator==(const ThicknessFieldSpec&) const = default;
};

void validate_field(const ThicknessFieldSpec& spec);

/// thickness(p) = d_min + (d_max - d_min) * exp(-1/2 (p-mu)^T S^-1 (p-mu)),
/// evaluated at every node of `geometry`. Constant mode returns d_min.
Grid<double> sample_thickness_map(const ThicknessFieldSpec& spec, const GridGeometry& geometry);

/// A contiguous band of the scene along its length.
///
/// `quantity` empty means the tack coat follows the thickness field.
struct SectionSpec {
  std::string name;
  double length = 0.0;  // m
  std::optional<double> quantity;
  std::optional<double> wearing_thickness;  // overrides the first course
};

enum class SurveyMode { grid, profiles };

/// Where the antenna is moved. In profile mode, longitudinal lines run at
/// fixed y offsets; transverse lines sit `transverse_offset` metres inside
/// both ends of every section.
struct SurveyLayout {
  SurveyMode mode = SurveyMode::grid;
  std::vector<double> longitudinal;  // y offsets (m)
  std::optional<double> transverse_offset;
};

struct SceneConfig {
  double length = 50.0;
  double width = 5.0;
  double step = 0.25;
  LayerStack base_stack = default_pavement_stack();
  std::vector<SectionSpec> sections;
  ThicknessFieldSpec field;
  TackCoatModel tack;
  ClassScheme scheme = ClassScheme::four_class();
  SurveyLayout survey;
};

/// Names accepted by scene_preset().
std::vector<std::string> scene_preset_names();
SceneConfig scene_preset(const std::string& name);

struct Section {
  SectionSpec spec;
  double start = 0.0;
  double end = 0.0;
};

/// A survey line: nodes in acquisition order.
struct ProfilePlan {
  std::string name;
  bool longitudinal = true;
  double offset = 0.0;  // y for longitudinal lines, x for transverse ones
  std::vector<GridIndex> nodes;
};

class PavementScene {
 public:
  explicit PavementScene(SceneConfig config);

  const SceneConfig& config() const { return config_; }
  const GridGeometry& geometry() const { return geometry_; }
  const std::vector<Section>& sections() const { return sections_; }
  const ClassScheme& scheme() const { return config_.scheme; }
  const Grid<double>& quantity() const { return quantity_; }
  const Grid<ClassLabel>& ground_truth_class() const { return truth_; }

  /// Section containing coordinate x; the last section includes its end.
  const Section& section_at(double x) const;

  /// Incident air, the local courses, and the tack film (when q > 0)
  /// inserted under the first course.
  LayerStack local_stack(GridIndex node) const;

  /// Survey lines in acquisition order (grid mode: one line per y row).
  std::vector<ProfilePlan> survey_profiles() const;
  /// Distinct surveyed nodes, in first-visit order over survey_profiles().
  std::vector<GridIndex> survey_nodes() const;

 private:
  SceneConfig config_;
  GridGeometry geometry_;
  std::vector<Section> sections_;
  Grid<double> quantity_;
  Grid<ClassLabel> truth_;
};

PavementScene build_scene(const SceneConfig& config);

}  // namespace tackscan
