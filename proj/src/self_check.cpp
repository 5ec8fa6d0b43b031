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

#include "edp/self_check.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "edp/density.hpp"
#include "edp/noise.hpp"
#include "edp/oracle.hpp"
#include "edp/privacy.hpp"
#include "edp/rng.hpp"

namespace edp {
namespace {

std::string describe(double value, double bound) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "max deviation %.3e, bound %.3e", value, bound);
  return buf;
}

QuerySampleSet sample_set(const Eigen::ArrayXd& values) {
  QuerySampleSet s;
  s.dim = 1;
  s.points.resize(values.size(), 1);
  s.points.col(0) = values;
  return s;
}

CheckResult check_oracle_equivalence(double tol_scale) {
  Rng rng(11);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index n = 30 + static_cast<Eigen::Index>(rng.next_u64() % 120);
    Eigen::ArrayXd a(n), b(n);
    const double shift = 3.0 * rng.next_double();
    for (Eigen::Index i = 0; i < n; ++i) {
      a(i) = rng.next_gaussian(1.0);
      b(i) = rng.next_gaussian(1.0) + shift;
    }
    const QuerySampleSet q = sample_set(a);
    const QuerySampleSet q_i = sample_set(b);
    const double eps = rng.next_double();

    PrivacyOptions opt;
    opt.estimator = Estimator::kEcdfDiff;
    const double fast = infer_privacy_risk(q, q_i, eps, opt);

    const DensityModel pm = ecdf_density(q);
    const DensityModel qm = ecdf_density(q_i);
    const Grid1d grid = shared_grid(pm, qm, opt.grid_points_1d);
    const auto pmf_p = oracle::make_pmf(grid, eval_on_grid(pm, grid));
    const auto pmf_q = oracle::make_pmf(grid, eval_on_grid(qm, grid));
    const double exact = oracle::discrete_delta(pmf_p, pmf_q, eps);
    worst = std::max(worst, std::abs(fast - exact));
  }
  const double bound = 1e-6 * tol_scale;
  return {"oracle-equivalence", worst <= bound, describe(worst, bound)};
}

CheckResult check_hausdorff(double tol_scale) {
  Rng rng(23);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Index na = 1 + static_cast<Eigen::Index>(rng.next_u64() % 40);
    const Eigen::Index nb = 1 + static_cast<Eigen::Index>(rng.next_u64() % 40);
    Eigen::ArrayXd a(na), b(nb);
    for (Eigen::Index i = 0; i < na; ++i) a(i) = 10.0 * rng.next_double();
    for (Eigen::Index i = 0; i < nb; ++i) b(i) = 10.0 * rng.next_double();
    worst = std::max(worst, std::abs(hausdorff(a, b) - oracle::exhaustive_hausdorff(a, b)));
  }
  const double bound = 0.0 * tol_scale;
  return {"hausdorff-oracle", worst <= bound, describe(worst, bound)};
}

CheckResult check_sup_log_ratio_bound(double tol_scale) {
  Rng rng(37);
  double worst_excess = 0.0;
  for (int trial = 0; trial < 25; ++trial) {
    const Eigen::Index n = 5 + static_cast<Eigen::Index>(rng.next_u64() % 45);
    Eigen::ArrayXd a(n), b(n);
    double x = 10.0 * rng.next_double();
    for (Eigen::Index i = 0; i < n; ++i) {
      a(i) = x;
      x += 1.0 + rng.next_double();  // spacing at least 1
    }
    if (trial % 2 == 0) {
      // Per-point displacements below half the spacing: the Hausdorff
      // distance then equals the largest displacement, the regime where
      // lambda = d_H / eps is sufficient.
      for (Eigen::Index i = 0; i < n; ++i) {
        b(i) = a(i) + 0.9 * (rng.next_double() - 0.5);
      }
    } else {
      b = a - (0.5 + 2.0 * rng.next_double());  // constant shift, d_H exact
    }
    const double eps = 0.1 + 1.9 * rng.next_double();
    const EpsilonCheck check = verify_epsilon(a, b, eps, 20000);
    worst_excess = std::max(worst_excess, check.supremum - eps);
  }
  const double bound = 1e-12 * tol_scale;
  return {"sup-log-ratio-bound", worst_excess <= bound,
          describe(worst_excess, bound)};
}

CheckResult check_deconvolution_round_trip(double tol_scale) {
  const double lambda = 1.0;
  double worst = 0.0;
  for (const double ratio : {0.1, 0.5, 0.9}) {
    const KernelSpec k{Kernel::kLaplace, ratio * lambda};
    const NoiseKernel mixture = deconvolve(k, lambda);

    // Odd grid so the point mass lands exactly on the center cell.
    const Eigen::Index m = 4096;
    const double dx = lambda / 128.0;
    const Grid1d grid{-(static_cast<double>(m) + 0.5) * dx,
                      (static_cast<double>(m) + 0.5) * dx, 2 * m + 1};
    Eigen::ArrayXd density(grid.points);
    const double w = mixture.point_mass_weight;
    for (Eigen::Index j = 0; j < grid.points; ++j) {
      const double x = grid.center(j);
      density(j) = (1.0 - w) * std::exp(-std::abs(x) / lambda) / (2.0 * lambda);
    }
    density(m) += w / dx;

    const Eigen::ArrayXd conv = oracle::numeric_convolve(density, k, grid);
    double l1 = 0.0;
    const KernelSpec ell{Kernel::kLaplace, lambda};
    for (Eigen::Index j = 0; j < grid.points; ++j) {
      const double x = grid.center(j);
      const double target =
          ell.scale > 0.0 ? std::exp(-std::abs(x) / ell.scale) / (2.0 * ell.scale) : 0.0;
      l1 += std::abs(conv(j) - target) * dx;
    }
    worst = std::max(worst, l1);

    // Tabulated path against the analytic mixture, compared as CDFs.
    DeconvolutionConfig cfg;
    cfg.force_tabulated = true;
    cfg.omega_max = 256.0 / lambda;
    const NoiseKernel tab = deconvolve(k, lambda, cfg);
    double cum = 0.0;
    double kolmogorov = 0.0;
    for (Eigen::Index j = 0; j < tab.grid_x.size(); ++j) {
      cum += tab.density(j) * tab.grid_step;
      const double edge = tab.grid_x(j) + 0.5 * tab.grid_step;
      double analytic = (1.0 - w) * (edge < 0.0
                            ? 0.5 * std::exp(edge / lambda)
                            : 1.0 - 0.5 * std::exp(-edge / lambda));
      if (edge >= 0.0) analytic += w;
      kolmogorov = std::max(kolmogorov, std::abs(cum - analytic));
    }
    worst = std::max(worst, kolmogorov);
  }
  const double bound = 1e-3 * tol_scale;
  return {"deconvolution-round-trip", worst <= bound, describe(worst, bound)};
}

}  // namespace

std::vector<CheckResult> run_self_checks(double tolerance_scale) {
  return {
      check_oracle_equivalence(tolerance_scale),
      check_hausdorff(tolerance_scale),
      check_sup_log_ratio_bound(tolerance_scale),
      check_deconvolution_round_trip(tolerance_scale),
  };
}

}  // namespace edp
