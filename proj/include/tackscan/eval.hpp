#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tackscan/grid.hpp"
#include "tackscan/scene.hpp"

namespace tackscan {

/// Rows are true classes, columns predicted classes, both in `labels` order.
class ConfusionMatrix {
 public:
  ConfusionMatrix() = default;
  ConfusionMatrix(std::vector<ClassLabel> labels, std::vector<std::vector<std::size_t>> counts);

  const std::vector<ClassLabel>& labels() const { return labels_; }
  std::size_t size() const { return labels_.size(); }
  std::size_t count(std::size_t true_index, std::size_t predicted_index) const {
    return counts_[true_index][predicted_index];
  }
  const std::vector<std::vector<std::size_t>>& counts() const { return counts_; }
  std::size_t row_sum(std::size_t i) const;
  std::size_t column_sum(std::size_t j) const;
  std::size_t total() const;
  std::size_t index_of(ClassLabel label) const;

  bool operator==(const ConfusionMatrix&) const = default;

 private:
  std::vector<ClassLabel> labels_;
  std::vector<std::vector<std::size_t>> counts_;
};

ConfusionMatrix confusion_matrix(std::span<const ClassLabel> truth, std::span<const ClassLabel> predicted,
                                 std::vector<ClassLabel> labels);

/// One-vs-rest Dice per class and their unweighted mean. A class that is
/// neither present nor predicted has no Dice value and is left out of the
/// macro average.
struct DiceScores {
  std::vector<std::optional<double>> per_class;
  double macro = 0.0;
};

DiceScores dice_scores(const ConfusionMatrix& cm);

double rmse(std::span<const double> truth, std::span<const double> estimate);

struct EvalReport {
  ConfusionMatrix confusion;
  DiceScores dice;
  double accuracy = 0.0;
  std::vector<std::optional<double>> recall;     // per class
  std::vector<std::optional<double>> precision;  // per class
  std::optional<double> rmse;                    // g/m^2, regression runs
  std::size_t evaluated = 0;
};

EvalReport classification_report(const ConfusionMatrix& cm);
EvalReport regression_report(std::span<const double> truth, std::span<const double> estimate);

/// Human-readable table plus summary.
std::string format_report(const EvalReport& report, const std::string& title, const ClassScheme* scheme = nullptr);
/// `key=value` lines, one metric per line, fixed formatting.
std::string format_report_kv(const EvalReport& report, const std::string& prefix);

/// Predicted classes or quantities on the scene grid; NaN marks no data.
struct ClassMap {
  GridGeometry geometry;
  Grid<double> values;
  bool quantities = false;  // true: g/m^2 estimates, false: class labels

  static ClassMap empty(const GridGeometry& geometry, bool quantities);
  std::size_t filled() const;
};

struct MapAssembly {
  ClassMap map;
  std::vector<std::string> warnings;
};

/// Snaps each position to its grid node (within step/2) and writes the
/// prediction there. A node written twice keeps the later value and records
/// a warning.
MapAssembly assemble_map(const GridGeometry& geometry, std::span<const std::pair<double, double>> positions,
                         std::span<const double> predictions, bool quantities);

/// One line per grid row (fixed y), comma separated, no-data as empty cell.
void export_map_csv(const ClassMap& map, const std::filesystem::path& path);
ClassMap import_map_csv(const std::filesystem::path& path, const GridGeometry& geometry, bool quantities);

/// 8-bit binary PGM. Class maps use `palette` order: class i of K gets gray
/// round(255 (i+1) / K). Quantity maps scale linearly onto 1..255. No data is 0.
void export_map_pgm(const ClassMap& map, const std::filesystem::path& path,
                    const std::vector<ClassLabel>& palette = {});

/// Gray level assigned to class index i of k.
int class_gray_level(std::size_t i, std::size_t k);

}  // namespace tackscan
