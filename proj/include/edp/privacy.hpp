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

#ifndef EDP_PRIVACY_HPP_
#define EDP_PRIVACY_HPP_

#include <Eigen/Core>

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "edp/dataset.hpp"
#include "edp/density.hpp"
#include "edp/query.hpp"

namespace edp {

struct ModelSummary {
  std::string estimator;
  std::string kernel;
  double scale = 0.0;
  bool variable = false;
  std::vector<std::string> flags;
};

ModelSummary summarize(const DensityModel& m);

struct IndividualRisk {
  std::string id;
  double delta_i = 0.0;
  bool flagged = false;   // failure degraded conservatively to delta_i = 1
  std::string note;
};

struct PrivacyReport {
  double epsilon = 0.0;
  double delta = 0.0;       // max_i delta_i
  double delta_star = 0.0;  // 1 - prod_i (1 - delta_i)
  std::vector<IndividualRisk> per_individual;  // delta_i descending, then id
  ModelSummary base_model;
  ModelSummary worst_model;  // fit behind the largest delta_i
  std::vector<std::string> flags;
};

struct RiskPoint {
  double epsilon = 0.0;
  double delta = 0.0;
  double delta_star = 0.0;
};

struct RiskCurve {
  std::vector<RiskPoint> points;  // epsilon ascending
  ModelSummary base_model;
  std::vector<std::string> flags;
};

// Settings shared by the privacy operations. The density fit is configured
// by `fit`; `estimator` picks KDE model selection or ECDF differencing, and
// `fixed_fit`, when set, bypasses selection with a pinned kernel and scale
// (used to audit a noised release at the calibrated lambda).
struct PrivacyOptions {
  FitConfig fit;
  Estimator estimator = Estimator::kKde;
  std::optional<std::pair<Kernel, double>> fixed_fit;
  Eigen::Index grid_points_1d = 4096;
  Eigen::Index grid_points_2d = 256;  // per axis
  int threads = 0;                    // 0 = hardware concurrency
  int min_bucket_samples = 10;
};

// Fits the density configured by opt to one sample set.
DensityModel fit_density(const QuerySampleSet& s, const PrivacyOptions& opt);

// delta_i for one individual: fits densities to q and q_i with the same
// configuration and integrates both positive parts of p - e^eps * p_i over a
// shared grid, taking the larger direction, clamped to [0, 1]. Cells where
// both densities are below fit.density_floor contribute nothing.
double infer_privacy_risk(const QuerySampleSet& q, const QuerySampleSet& q_i,
                          double eps, const FitConfig& cfg);
double infer_privacy_risk(const QuerySampleSet& q, const QuerySampleSet& q_i,
                          double eps, const PrivacyOptions& opt);

// 1 - prod(1 - delta_i), accumulated in log space. Inputs must be in [0, 1].
double total_risk(const std::vector<double>& deltas);

// Full per-individual sweep: evaluates the query with and without each
// individual, fits both densities, and aggregates delta = max delta_i and
// delta_star. A per-individual failure is recorded as a flagged delta_i = 1
// instead of aborting the run.
PrivacyReport empirical_privacy(const DatabaseCollection& c, const QuerySpec& q,
                                double eps, const PrivacyOptions& opt = {});

// One report row per epsilon; per-individual densities are fitted once and
// reused across the grid since only the integrand depends on epsilon.
RiskCurve risk_curve(const DatabaseCollection& c, const QuerySpec& q,
                     const Eigen::ArrayXd& eps_grid,
                     const PrivacyOptions& opt = {});

struct BucketReport {
  std::string label;             // adversary-value range of the bucket
  double g_lo = 0.0, g_hi = 0.0;
  Eigen::Index database_count = 0;
  bool evaluated = false;        // false: under the sample floor, excluded
  PrivacyReport report;
};

struct ConditionalReport {
  std::vector<BucketReport> buckets;
  int worst_bucket = -1;  // index of the evaluated bucket with max delta
  std::vector<std::string> flags;
};

// Partitions databases into quantile buckets of the adversary query g and
// runs empirical_privacy within each bucket. Buckets below the sample floor
// are flagged and excluded from the worst case; if every bucket is under the
// floor the call fails.
ConditionalReport conditional_privacy(const DatabaseCollection& c,
                                      const QuerySpec& f, const QuerySpec& g,
                                      int bucket_count, double eps,
                                      const PrivacyOptions& opt = {});

// Composition analysis: empirical_privacy of joint(f1, f2) with 2-D product
// kernels and 2-D grid integration.
PrivacyReport joint_privacy(const DatabaseCollection& c, const QuerySpec& f1,
                            const QuerySpec& f2, double eps,
                            const PrivacyOptions& opt = {});

}  // namespace edp

#endif  // EDP_PRIVACY_HPP_
