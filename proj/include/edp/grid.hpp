// Copyright 2026 The edp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef EDP_GRID_HPP_
#define EDP_GRID_HPP_

#include <Eigen/Core>

#include "edp/errors.hpp"

namespace edp {

// Uniform 1-D integration grid over [lo, hi] split into `points` equal cells.
// Densities are evaluated per cell; integrals are cell sums times step().
struct Grid1d {
  double lo = 0.0;
  double hi = 1.0;
  Eigen::Index points = 4096;

  double step() const { return (hi - lo) / static_cast<double>(points); }

  double center(Eigen::Index j) const {
    return lo + (static_cast<double>(j) + 0.5) * step();
  }

  Eigen::ArrayXd centers() const {
    const double dx = step();
    return Eigen::ArrayXd::LinSpaced(points, lo + 0.5 * dx,
                                     lo + (static_cast<double>(points) - 0.5) * dx);
  }
};

// Axis-aligned 2-D grid: x varies along rows of an (nx x ny) array, y along
// columns. Cell area is x.step() * y.step().
struct Grid2d {
  Grid1d x;
  Grid1d y;

  double cell_area() const { return x.step() * y.step(); }
};

inline Grid1d make_grid(double lo, double hi, Eigen::Index points) {
  if (!(hi > lo)) throw ComputeError("grid range is empty");
  if (points < 2) throw ConfigError("grid needs at least 2 points");
  return Grid1d{lo, hi, points};
}

}  // namespace edp

#endif  // EDP_GRID_HPP_
