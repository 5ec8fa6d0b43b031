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

#ifndef EDP_DENSITY_HPP_
#define EDP_DENSITY_HPP_

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

#include "edp/grid.hpp"
#include "edp/query.hpp"

namespace edp {

enum class Kernel { kGaussian, kLaplace };
enum class Estimator { kKde, kEcdfDiff };

std::string kernel_name(Kernel k);
std::string estimator_name(Estimator e);

// A fitted density estimator over query responses (dim 1 or 2). KDE models
// hold the sample points plus a global scale and optional per-point factors;
// 2-D models use a product kernel with one shared scale per point. ECDF
// models hold an explicit piecewise-constant density.
struct DensityModel {
  Estimator estimator = Estimator::kKde;
  int dim = 1;
  Kernel kernel = Kernel::kLaplace;
  double global_scale = 1.0;
  Eigen::ArrayXd local_factors;  // size 0 = fixed bandwidth
  Eigen::ArrayXXd samples;       // n x dim fitted points

  // ecdf_diff representation (1-D): m pieces over m+1 ascending edges.
  Eigen::ArrayXd piece_edges;
  Eigen::ArrayXd piece_density;
  double support_pad = 0.0;  // evaluation range extension beyond the pieces

  std::vector<std::string> flags;

  bool variable_bandwidth() const { return local_factors.size() > 0; }
  double bandwidth(Eigen::Index j) const {
    return variable_bandwidth() ? global_scale * local_factors(j) : global_scale;
  }
  double max_bandwidth() const {
    return variable_bandwidth() ? global_scale * local_factors.maxCoeff()
                                : global_scale;
  }
};

// Model-selection settings shared by every fit in one analysis. An empty
// scale_grid means a data-driven log-spaced grid around Silverman's rule;
// knn = 0 means round(sqrt(n)).
struct FitConfig {
  std::vector<Kernel> kernel_candidates{Kernel::kGaussian, Kernel::kLaplace};
  Eigen::ArrayXd scale_grid;
  int knn = 0;
  int cv_folds = 5;
  double density_floor = 1e-30;
  std::uint64_t cv_seed = 0;
};

// --- Fitting ---------------------------------------------------------------

// KDE with bandwidth h_j = scale * local_factors[j] (factor 1 when absent).
// Requires at least 2 samples and scale > 0.
DensityModel fit_kde(const QuerySampleSet& s, Kernel kernel, double scale,
                     const Eigen::ArrayXd& local_factors = Eigen::ArrayXd());

// Per-point bandwidth factors proportional to the distance to the knn-th
// nearest sample, normalized to geometric mean 1. Duplicate points take the
// smallest nonzero distance; an all-duplicate sample yields all-ones.
Eigen::ArrayXd local_bandwidth_factors(const QuerySampleSet& s, int knn);

// Exhaustive search over kernel x scale x {fixed, variable} maximizing the
// mean held-out log likelihood under cv_folds-fold cross validation. Ties
// break toward the larger scale and are flagged. A degenerate sample (all
// points identical) returns a flagged fixed Laplace model.
DensityModel select_model(const QuerySampleSet& s, const FitConfig& cfg);

// Piecewise-constant density from symmetric finite differences of the ECDF
// with a window of round(sqrt(n)) order statistics (1-D, n >= 4). Density is
// zero outside the sample range; the evaluation support extends one window
// width beyond it.
DensityModel ecdf_density(const QuerySampleSet& s);

// --- Evaluation ------------------------------------------------------------

double density_at(const DensityModel& m, const Eigen::ArrayXd& x);
double density_at(const DensityModel& m, double x);  // 1-D convenience

// log density via the LogSumExp identity; never -inf for KDE models with
// finite inputs. ECDF models return log of the piece value (-inf on zeros).
double log_density_at(const DensityModel& m, const Eigen::ArrayXd& x);
double log_density_at(const DensityModel& m, double x);

// Per-cell density on a uniform grid. KDE models evaluate at cell centers;
// piecewise-constant models return exact cell mass / step, so cell sums
// reproduce the piecewise integral exactly.
Eigen::ArrayXd eval_on_grid(const DensityModel& m, const Grid1d& grid);
Eigen::ArrayXXd eval_on_grid(const DensityModel& m, const Grid2d& grid);

// Evaluation range [lo, hi] along one axis: samples extended by 10 bandwidths
// (KDE) or the pieces extended by the support pad (ECDF).
std::pair<double, double> support_interval(const DensityModel& m, int axis = 0);

// Smallest grid covering both models' supports.
Grid1d shared_grid(const DensityModel& a, const DensityModel& b, Eigen::Index points);
Grid2d shared_grid2(const DensityModel& a, const DensityModel& b,
                    Eigen::Index points_per_axis);

// --- Model selection internals (exposed for verification) ------------------

// Deterministic fold assignment: a seeded shuffle of indices dealt round-robin
// into cv_folds groups. fold_of[i] is in [0, cv_folds).
std::vector<int> cv_fold_assignment(Eigen::Index n, int folds, std::uint64_t seed);

// Mean held-out log likelihood of one candidate under cfg's folds and floor.
double cv_log_likelihood(const QuerySampleSet& s, Kernel kernel, double scale,
                         bool variable, const FitConfig& cfg);

// Data-driven candidate scales: log-spaced around Silverman's rule of thumb.
Eigen::ArrayXd default_scale_grid(const QuerySampleSet& s);

// Silverman's rule of thumb 1.06 * sigma * n^(-1/5); 2-D samples use the
// geometric mean of the per-axis deviations.
double silverman_scale(const QuerySampleSet& s);

// log(sum_i exp(x_i)) computed against the max element; tolerates -inf.
double log_sum_exp(const Eigen::ArrayXd& x);

}  // namespace edp

#endif  // EDP_DENSITY_HPP_
