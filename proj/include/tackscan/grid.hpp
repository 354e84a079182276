#pragma once

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "tackscan/error.hpp"

namespace tackscan {

struct GridIndex {
  std::size_t ix = 0;  // along the length (x)
  std::size_t iy = 0;  // across the width (y)

  bool operator==(const GridIndex&) const = default;
};

/// Regular node lattice covering a length x width rectangle at spacing step.
struct GridGeometry {
  double length = 0.0;
  double width = 0.0;
  double step = 1.0;
  std::size_t nx = 1;
  std::size_t ny = 1;

  /// (floor(length/step)+1) x (floor(width/step)+1). The 1e-9 slack makes
  /// 60 / 0.02 count as 3000 intervals despite rounding.
  static GridGeometry make(double length, double width, double step) {
    if (!(step > 0.0)) throw ValidationError("grid step must be positive");
    if (!(length >= 0.0) || !(width >= 0.0)) throw ValidationError("grid extent must be non-negative");
    GridGeometry g;
    g.length = length;
    g.width = width;
    g.step = step;
    g.nx = static_cast<std::size_t>(std::floor(length / step + 1e-9)) + 1;
    g.ny = static_cast<std::size_t>(std::floor(width / step + 1e-9)) + 1;
    return g;
  }

  std::size_t size() const { return nx * ny; }
  double x(std::size_t ix) const { return static_cast<double>(ix) * step; }
  double y(std::size_t iy) const { return static_cast<double>(iy) * step; }
  std::size_t flat(GridIndex n) const { return n.iy * nx + n.ix; }

  bool operator==(const GridGeometry& o) const {
    return nx == o.nx && ny == o.ny && step == o.step && length == o.length && width == o.width;
  }
};

/// Dense row-major grid, row = fixed y.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(std::size_t nx, std::size_t ny, T fill = T{}) : nx_(nx), ny_(ny), data_(nx * ny, fill) {}

  std::size_t nx() const { return nx_; }
  std::size_t ny() const { return ny_; }
  std::size_t size() const { return data_.size(); }

  T& at(std::size_t ix, std::size_t iy) { return data_[iy * nx_ + ix]; }
  const T& at(std::size_t ix, std::size_t iy) const { return data_[iy * nx_ + ix]; }
  T& operator[](GridIndex n) { return at(n.ix, n.iy); }
  const T& operator[](GridIndex n) const { return at(n.ix, n.iy); }

  std::vector<T>& values() { return data_; }
  const std::vector<T>& values() const { return data_; }

  bool operator==(const Grid&) const = default;

 private:
  std::size_t nx_ = 0;
  std::size_t ny_ = 0;
  std::vector<T> data_;
};

}  // namespace tackscan
