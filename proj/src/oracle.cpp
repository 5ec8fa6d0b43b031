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

#include "edp/oracle.hpp"

#include <cmath>

#include "edp/errors.hpp"

namespace edp::oracle {
namespace {

double kernel_cdf(const KernelSpec& k, double x) {
  if (k.family == Kernel::kLaplace) {
    return x < 0.0 ? 0.5 * std::exp(x / k.scale)
                   : 1.0 - 0.5 * std::exp(-x / k.scale);
  }
  return 0.5 * std::erfc(-x / (k.scale * 1.4142135623730950488016887242097));
}

}  // namespace

DiscretePmf make_pmf(const Grid1d& grid, const Eigen::ArrayXd& density) {
  if (density.size() != grid.points) {
    throw ConfigError("density values do not match the grid");
  }
  if ((density < 0.0).any()) throw ConfigError("negative density value");
  DiscretePmf pmf;
  pmf.lo = grid.lo;
  pmf.hi = grid.hi;
  pmf.prob = density * grid.step();
  const double total = pmf.prob.sum();
  if (!(total > 0.0)) throw ConfigError("density has zero total mass");
  pmf.prob /= total;
  return pmf;
}

double discrete_delta(const DiscretePmf& p, const DiscretePmf& q, double eps) {
  if (p.prob.size() != q.prob.size() || p.lo != q.lo || p.hi != q.hi) {
    throw ConfigError("discrete_delta requires matching bins");
  }
  const double factor = std::exp(eps);
  const double pq = (p.prob - factor * q.prob).max(0.0).sum();
  const double qp = (q.prob - factor * p.prob).max(0.0).sum();
  return std::max(pq, qp);
}

double exhaustive_hausdorff(const Eigen::ArrayXd& a, const Eigen::ArrayXd& b) {
  if (a.size() == 0 || b.size() == 0) {
    throw ConfigError("Hausdorff distance requires non-empty sets");
  }
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    worst = std::max(worst, (b - a(i)).abs().minCoeff());
  }
  for (Eigen::Index j = 0; j < b.size(); ++j) {
    worst = std::max(worst, (a - b(j)).abs().minCoeff());
  }
  return worst;
}

Eigen::ArrayXd numeric_convolve(const Eigen::ArrayXd& density,
                                const KernelSpec& k, const Grid1d& grid) {
  if (density.size() != grid.points) {
    throw ConfigError("density values do not match the grid");
  }
  const Eigen::Index n = grid.points;
  const double dx = grid.step();

  // Kernel mass per offset cell, integrated exactly from the kernel CDF.
  Eigen::ArrayXd offset_mass(2 * n - 1);
  for (Eigen::Index d = -(n - 1); d <= n - 1; ++d) {
    const double center = static_cast<double>(d) * dx;
    offset_mass(d + n - 1) = kernel_cdf(k, center + 0.5 * dx) -
                             kernel_cdf(k, center - 0.5 * dx);
  }

  Eigen::ArrayXd out(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double acc = 0.0;
    for (Eigen::Index m = 0; m < n; ++m) {
      acc += density(m) * offset_mass(j - m + n - 1);
    }
    out(j) = acc;
  }
  return out;
}

}  // namespace edp::oracle
