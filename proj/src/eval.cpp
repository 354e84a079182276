#include "tackscan/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "tackscan/error.hpp"
#include "tackscan/text.hpp"

namespace tackscan {

ConfusionMatrix::ConfusionMatrix(std::vector<ClassLabel> labels, std::vector<std::vector<std::size_t>> counts)
    : labels_(std::move(labels)), counts_(std::move(counts)) {
  if (labels_.empty()) throw ValidationError("confusion matrix needs at least one class");
  if (counts_.size() != labels_.size()) throw ValidationError("confusion matrix must be square in the class count");
  for (const auto& row : counts_)
    if (row.size() != labels_.size()) throw ValidationError("confusion matrix must be square in the class count");
  auto sorted = labels_;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw ValidationError("confusion matrix labels must be distinct");
}

std::size_t ConfusionMatrix::row_sum(std::size_t i) const {
  std::size_t s = 0;
  for (std::size_t c : counts_[i]) s += c;
  return s;
}

std::size_t ConfusionMatrix::column_sum(std::size_t j) const {
  std::size_t s = 0;
  for (const auto& row : counts_) s += row[j];
  return s;
}

std::size_t ConfusionMatrix::total() const {
  std::size_t s = 0;
  for (std::size_t i = 0; i < size(); ++i) s += row_sum(i);
  return s;
}

std::size_t ConfusionMatrix::index_of(ClassLabel label) const {
  auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) throw ValidationError("unknown label " + std::to_string(label));
  return static_cast<std::size_t>(it - labels_.begin());
}

ConfusionMatrix confusion_matrix(std::span<const ClassLabel> truth, std::span<const ClassLabel> predicted,
                                 std::vector<ClassLabel> labels) {
  if (truth.size() != predicted.size())
    throw ValidationError("truth and prediction lengths differ (" + std::to_string(truth.size()) + " vs " +
                          std::to_string(predicted.size()) + ")");
  if (truth.empty()) throw ValidationError("confusion matrix of an empty sequence");
  const std::size_t k = labels.size();
  ConfusionMatrix shape(labels, std::vector<std::vector<std::size_t>>(k, std::vector<std::size_t>(k, 0)));
  auto counts = shape.counts();
  for (std::size_t i = 0; i < truth.size(); ++i) counts[shape.index_of(truth[i])][shape.index_of(predicted[i])]++;
  return ConfusionMatrix(std::move(labels), std::move(counts));
}

DiceScores dice_scores(const ConfusionMatrix& cm) {
  DiceScores out;
  double sum = 0.0;
  std::size_t defined = 0;
  for (std::size_t c = 0; c < cm.size(); ++c) {
    const double tp = static_cast<double>(cm.count(c, c));
    const double fn = static_cast<double>(cm.row_sum(c)) - tp;
    const double fp = static_cast<double>(cm.column_sum(c)) - tp;
    const double den = 2.0 * tp + fp + fn;
    if (den == 0.0) {
      out.per_class.push_back(std::nullopt);
      continue;
    }
    const double d = 2.0 * tp / den;
    out.per_class.push_back(d);
    sum += d;
    ++defined;
  }
  if (defined == 0) throw ValidationError("Dice undefined: confusion matrix is empty");
  out.macro = sum / static_cast<double>(defined);
  return out;
}

double rmse(std::span<const double> truth, std::span<const double> estimate) {
  if (truth.size() != estimate.size())
    throw ValidationError("truth and estimate lengths differ (" + std::to_string(truth.size()) + " vs " +
                          std::to_string(estimate.size()) + ")");
  if (truth.empty()) throw ValidationError("RMSE of an empty sequence");
  double acc = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double e = truth[i] - estimate[i];
    acc += e * e;
  }
  return std::sqrt(acc / static_cast<double>(truth.size()));
}

EvalReport classification_report(const ConfusionMatrix& cm) {
  EvalReport r;
  r.confusion = cm;
  r.dice = dice_scores(cm);
  r.evaluated = cm.total();
  std::size_t diag = 0;
  for (std::size_t c = 0; c < cm.size(); ++c) {
    diag += cm.count(c, c);
    const std::size_t rows = cm.row_sum(c), cols = cm.column_sum(c);
    r.recall.push_back(rows ? std::optional<double>(static_cast<double>(cm.count(c, c)) / rows) : std::nullopt);
    r.precision.push_back(cols ? std::optional<double>(static_cast<double>(cm.count(c, c)) / cols) : std::nullopt);
  }
  r.accuracy = r.evaluated ? static_cast<double>(diag) / static_cast<double>(r.evaluated) : 0.0;
  return r;
}

EvalReport regression_report(std::span<const double> truth, std::span<const double> estimate) {
  EvalReport r;
  r.rmse = rmse(truth, estimate);
  r.evaluated = truth.size();
  return r;
}

namespace {

std::string opt(const std::optional<double>& v, int decimals) {
  return v ? text::format_fixed(*v, decimals) : std::string("n/a");
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.insert(0, width - s.size(), ' ');
  return s;
}

}  // namespace

std::string format_report(const EvalReport& r, const std::string& title, const ClassScheme* scheme) {
  std::ostringstream os;
  os << title << "\n" << std::string(title.size(), '=') << "\n";
  os << "evaluated traces: " << r.evaluated << "\n";
  const ConfusionMatrix& cm = r.confusion;
  if (cm.size() > 0) {
    auto name = [&](ClassLabel l) { return scheme ? scheme->name(l) : std::to_string(l); };
    os << "\nconfusion matrix (rows: true class, columns: predicted class)\n";
    os << pad("", 10);
    for (ClassLabel l : cm.labels()) os << pad(name(l), 10);
    os << pad("recall", 10) << "\n";
    for (std::size_t i = 0; i < cm.size(); ++i) {
      os << pad(name(cm.labels()[i]), 10);
      for (std::size_t j = 0; j < cm.size(); ++j) os << pad(std::to_string(cm.count(i, j)), 10);
      os << pad(opt(r.recall[i], 4), 10) << "\n";
    }
    os << pad("precision", 10);
    for (std::size_t j = 0; j < cm.size(); ++j) os << pad(opt(r.precision[j], 4), 10);
    os << "\n\nper-class Dice\n";
    for (std::size_t i = 0; i < cm.size(); ++i)
      os << "  " << pad(name(cm.labels()[i]), 10) << "  " << opt(r.dice.per_class[i], 4) << "\n";
    os << "macro Dice: " << text::format_fixed(r.dice.macro, 4) << "\n";
    os << "accuracy:   " << text::format_fixed(r.accuracy, 4) << "\n";
  }
  if (r.rmse) os << "RMSE: " << text::format_fixed(*r.rmse, 3) << " g/m^2\n";
  return os.str();
}

std::string format_report_kv(const EvalReport& r, const std::string& prefix) {
  std::ostringstream os;
  const std::string p = prefix.empty() ? "" : prefix + ".";
  os << p << "evaluated=" << r.evaluated << "\n";
  const ConfusionMatrix& cm = r.confusion;
  if (cm.size() > 0) {
    os << p << "macro_dice=" << text::format_fixed(r.dice.macro, 6) << "\n";
    os << p << "accuracy=" << text::format_fixed(r.accuracy, 6) << "\n";
    for (std::size_t i = 0; i < cm.size(); ++i) {
      const std::string l = std::to_string(cm.labels()[i]);
      os << p << "dice." << l << "=" << opt(r.dice.per_class[i], 6) << "\n";
      os << p << "recall." << l << "=" << opt(r.recall[i], 6) << "\n";
      os << p << "precision." << l << "=" << opt(r.precision[i], 6) << "\n";
    }
    for (std::size_t i = 0; i < cm.size(); ++i)
      for (std::size_t j = 0; j < cm.size(); ++j)
        os << p << "confusion." << cm.labels()[i] << "." << cm.labels()[j] << "=" << cm.count(i, j) << "\n";
  }
  if (r.rmse) os << p << "rmse=" << text::format_fixed(*r.rmse, 6) << "\n";
  return os.str();
}

// ---------------------------------------------------------------------------

ClassMap ClassMap::empty(const GridGeometry& geometry, bool quantities) {
  return ClassMap{geometry, Grid<double>(geometry.nx, geometry.ny, std::numeric_limits<double>::quiet_NaN()),
                  quantities};
}

std::size_t ClassMap::filled() const {
  return static_cast<std::size_t>(
      std::count_if(values.values().begin(), values.values().end(), [](double v) { return !std::isnan(v); }));
}

MapAssembly assemble_map(const GridGeometry& geometry, std::span<const std::pair<double, double>> positions,
                         std::span<const double> predictions, bool quantities) {
  if (positions.size() != predictions.size()) throw ValidationError("positions and predictions differ in length");
  MapAssembly out{ClassMap::empty(geometry, quantities), {}};
  const double half = 0.5 * geometry.step * (1.0 + 1e-9);
  for (std::size_t i = 0; i < positions.size(); ++i) {
    const auto [x, y] = positions[i];
    const double fx = std::round(x / geometry.step), fy = std::round(y / geometry.step);
    if (!(fx >= 0.0 && fy >= 0.0 && fx < static_cast<double>(geometry.nx) && fy < static_cast<double>(geometry.ny)))
      throw ValidationError("position (" + text::format_double(x) + ", " + text::format_double(y) +
                            ") lies outside the scene");
    const auto ix = static_cast<std::size_t>(fx), iy = static_cast<std::size_t>(fy);
    if (std::abs(x - geometry.x(ix)) > half || std::abs(y - geometry.y(iy)) > half)
      throw ValidationError("position does not snap to a grid node");
    double& cell = out.map.values.at(ix, iy);
    if (!std::isnan(cell)) {
      out.warnings.push_back("node (" + std::to_string(ix) + ", " + std::to_string(iy) + ") written twice; keeping trace " +
                             std::to_string(i));
    }
    cell = predictions[i];
  }
  return out;
}

void export_map_csv(const ClassMap& map, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw RuntimeFailure("cannot write map file " + path.string());
  for (std::size_t iy = 0; iy < map.values.ny(); ++iy) {
    for (std::size_t ix = 0; ix < map.values.nx(); ++ix) {
      if (ix) os << ',';
      const double v = map.values.at(ix, iy);
      if (std::isnan(v)) continue;
      if (map.quantities)
        os << text::format_double(v);
      else
        os << static_cast<long long>(v);
    }
    os << '\n';
  }
  if (!os) throw RuntimeFailure("failed writing map file " + path.string());
}

ClassMap import_map_csv(const std::filesystem::path& path, const GridGeometry& geometry, bool quantities) {
  std::ifstream is(path);
  if (!is) throw ValidationError("cannot open map file " + path.string());
  ClassMap map = ClassMap::empty(geometry, quantities);
  std::string line;
  std::size_t iy = 0;
  while (std::getline(is, line)) {
    if (iy >= geometry.ny) throw ValidationError("map file has more rows than the grid");
    const auto cells = text::split(line, ',');
    if (cells.size() != geometry.nx)
      throw ValidationError("map row " + std::to_string(iy) + " has " + std::to_string(cells.size()) + " cells, expected " +
                            std::to_string(geometry.nx));
    for (std::size_t ix = 0; ix < cells.size(); ++ix) {
      if (!text::trim(cells[ix]).empty()) map.values.at(ix, iy) = text::parse_double(cells[ix], "map cell");
    }
    ++iy;
  }
  if (iy != geometry.ny) throw ValidationError("map file has " + std::to_string(iy) + " rows, expected " + std::to_string(geometry.ny));
  return map;
}

int class_gray_level(std::size_t i, std::size_t k) {
  return static_cast<int>(std::lround(255.0 * static_cast<double>(i + 1) / static_cast<double>(k)));
}

void export_map_pgm(const ClassMap& map, const std::filesystem::path& path, const std::vector<ClassLabel>& palette) {
  const std::size_t nx = map.values.nx(), ny = map.values.ny();
  std::vector<unsigned char> pixels(nx * ny, 0);
  if (map.quantities) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (double v : map.values.values())
      if (!std::isnan(v)) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    for (std::size_t i = 0; i < pixels.size(); ++i) {
      const double v = map.values.values()[i];
      if (std::isnan(v)) continue;
      const double u = hi > lo ? (v - lo) / (hi - lo) : 1.0;
      pixels[i] = static_cast<unsigned char>(1 + std::lround(254.0 * u));
    }
  } else {
    if (palette.empty()) throw ValidationError("class map export needs a palette");
    for (std::size_t i = 0; i < pixels.size(); ++i) {
      const double v = map.values.values()[i];
      if (std::isnan(v)) continue;
      auto it = std::find(palette.begin(), palette.end(), static_cast<ClassLabel>(v));
      if (it == palette.end()) throw ValidationError("map value " + text::format_double(v) + " not in palette");
      pixels[i] = static_cast<unsigned char>(class_gray_level(static_cast<std::size_t>(it - palette.begin()), palette.size()));
    }
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw RuntimeFailure("cannot write map file " + path.string());
  os << "P5\n" << nx << " " << ny << "\n255\n";
  os.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
  if (!os) throw RuntimeFailure("failed writing map file " + path.string());
}

}  // namespace tackscan
