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

#include "edp/density.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "edp/errors.hpp"

namespace edp {
namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014326779399460599344;
constexpr double kLogSqrt2Pi = 0.9189385332046727417803297364056;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double kernel_value(Kernel k, double u) {
  return k == Kernel::kGaussian ? kInvSqrt2Pi * std::exp(-0.5 * u * u)
                                : 0.5 * std::exp(-std::abs(u));
}

double log_kernel_value(Kernel k, double u) {
  return k == Kernel::kGaussian ? -0.5 * u * u - kLogSqrt2Pi
                                : -std::abs(u) - 0.6931471805599453094172321215;
}

double bandwidth_of(double scale, const Eigen::ArrayXd& factors, Eigen::Index j) {
  return factors.size() > 0 ? scale * factors(j) : scale;
}

// log KDE density over raw sample arrays; tolerates a single-point sample.
// Used both by the public evaluators and inside cross validation.
double log_kde_raw(const Eigen::ArrayXXd& samples, Kernel kernel, double scale,
                   const Eigen::ArrayXd& factors, const Eigen::ArrayXd& x) {
  const Eigen::Index n = samples.rows();
  const int dim = static_cast<int>(samples.cols());
  double max_term = kNegInf;
  Eigen::ArrayXd terms(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double h = bandwidth_of(scale, factors, j);
    double t = 0.0;
    for (int a = 0; a < dim; ++a) {
      t += log_kernel_value(kernel, (x(a) - samples(j, a)) / h) - std::log(h);
    }
    terms(j) = t;
    max_term = std::max(max_term, t);
  }
  if (!std::isfinite(max_term)) return kNegInf;
  const double lse = max_term + std::log((terms - max_term).exp().sum());
  return lse - std::log(static_cast<double>(n));
}

void check_kde(const DensityModel& m) {
  if (m.estimator != Estimator::kKde) {
    throw ComputeError("operation requires a KDE model");
  }
}

// Piecewise-constant CDF at x, given ascending edges and per-piece density.
double piece_cdf(const Eigen::ArrayXd& edges, const Eigen::ArrayXd& density,
                 const Eigen::ArrayXd& cum, double x) {
  const Eigen::Index m = density.size();
  if (x <= edges(0)) return 0.0;
  if (x >= edges(m)) return cum(m);
  const double* begin = edges.data();
  const double* pos = std::upper_bound(begin, begin + m + 1, x);
  const Eigen::Index k = static_cast<Eigen::Index>(pos - begin) - 1;  // piece index
  return cum(k) + density(k) * (x - edges(k));
}

struct Candidate {
  Kernel kernel = Kernel::kLaplace;
  double scale = 0.0;
  bool variable = false;
  double score = kNegInf;
};

}  // namespace

std::string kernel_name(Kernel k) {
  return k == Kernel::kGaussian ? "gaussian" : "laplace";
}

std::string estimator_name(Estimator e) {
  return e == Estimator::kKde ? "kde" : "ecdf_diff";
}

double log_sum_exp(const Eigen::ArrayXd& x) {
  if (x.size() == 0) return kNegInf;
  const double m = x.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((x - m).exp().sum());
}

DensityModel fit_kde(const QuerySampleSet& s, Kernel kernel, double scale,
                     const Eigen::ArrayXd& local_factors) {
  if (s.size() < 2) throw ConfigError("KDE requires at least 2 samples");
  if (!(scale > 0.0)) throw ConfigError("KDE scale must be positive");
  if (local_factors.size() > 0) {
    if (local_factors.size() != s.size()) {
      throw ConfigError("local bandwidth factors must match the sample count");
    }
    if (!(local_factors > 0.0).all()) {
      throw ConfigError("local bandwidth factors must be positive");
    }
  }
  DensityModel m;
  m.estimator = Estimator::kKde;
  m.dim = s.dim;
  m.kernel = kernel;
  m.global_scale = scale;
  m.local_factors = local_factors;
  m.samples = s.points;
  return m;
}

Eigen::ArrayXd local_bandwidth_factors(const QuerySampleSet& s, int knn) {
  const Eigen::Index n = s.size();
  if (knn < 1 || knn >= n) {
    throw ConfigError("knn must lie in [1, n-1], got " + std::to_string(knn));
  }
  Eigen::ArrayXd dist(n);
  std::vector<double> scratch;
  for (Eigen::Index j = 0; j < n; ++j) {
    scratch.clear();
    for (Eigen::Index i = 0; i < n; ++i) {
      if (i == j) continue;
      scratch.push_back(std::sqrt(
          (s.points.row(i) - s.points.row(j)).square().sum()));
    }
    std::nth_element(scratch.begin(), scratch.begin() + (knn - 1), scratch.end());
    dist(j) = scratch[static_cast<std::size_t>(knn - 1)];
  }

  // Duplicate points produce zero distances; substitute the smallest nonzero
  // distance so the geometric-mean normalization stays defined.
  double min_pos = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < n; ++j) {
    if (dist(j) > 0.0) min_pos = std::min(min_pos, dist(j));
  }
  if (!std::isfinite(min_pos)) {
    return Eigen::ArrayXd::Ones(n);  // every point identical
  }
  dist = dist.max(min_pos);
  const double geo_mean = std::exp(dist.log().mean());
  return dist / geo_mean;
}

std::vector<int> cv_fold_assignment(Eigen::Index n, int folds, std::uint64_t seed) {
  if (folds < 2) throw ConfigError("cv_folds must be at least 2");
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
  // Fisher-Yates with explicit draws; std::shuffle is implementation-defined.
  std::mt19937_64 engine(seed);
  for (Eigen::Index i = n - 1; i > 0; --i) {
    const auto j = static_cast<Eigen::Index>(engine() % static_cast<std::uint64_t>(i + 1));
    std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
  }
  std::vector<int> fold_of(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    fold_of[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] =
        static_cast<int>(i % folds);
  }
  return fold_of;
}

double cv_log_likelihood(const QuerySampleSet& s, Kernel kernel, double scale,
                         bool variable, const FitConfig& cfg) {
  const Eigen::Index n = s.size();
  if (n < cfg.cv_folds) {
    throw ConfigError("sample count " + std::to_string(n) +
                      " is below cv_folds " + std::to_string(cfg.cv_folds));
  }
  const std::vector<int> fold_of = cv_fold_assignment(n, cfg.cv_folds, cfg.cv_seed);
  const double log_floor = std::log(cfg.density_floor);

  double total = 0.0;
  for (int f = 0; f < cfg.cv_folds; ++f) {
    Eigen::Index train_n = 0;
    for (Eigen::Index i = 0; i < n; ++i) train_n += fold_of[static_cast<std::size_t>(i)] != f;
    if (train_n == 0) continue;
    Eigen::ArrayXXd train(train_n, s.points.cols());
    Eigen::Index t = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (fold_of[static_cast<std::size_t>(i)] != f) train.row(t++) = s.points.row(i);
    }
    Eigen::ArrayXd factors;
    if (variable) {
      if (train_n < 2) return kNegInf;  // no neighbor distances to work with
      QuerySampleSet train_set{s.dim, train};
      const int knn = std::clamp<int>(
          cfg.knn > 0 ? cfg.knn
                      : static_cast<int>(std::llround(std::sqrt(static_cast<double>(train_n)))),
          1, static_cast<int>(train_n) - 1);
      factors = local_bandwidth_factors(train_set, knn);
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      if (fold_of[static_cast<std::size_t>(i)] != f) continue;
      const Eigen::ArrayXd x = s.points.row(i).transpose();
      total += std::max(log_kde_raw(train, kernel, scale, factors, x), log_floor);
    }
  }
  return total / static_cast<double>(n);
}

double silverman_scale(const QuerySampleSet& s) {
  const auto n = static_cast<double>(s.size());
  double log_sigma_sum = 0.0;
  int positive_axes = 0;
  for (int a = 0; a < s.dim; ++a) {
    const Eigen::ArrayXd col = s.points.col(a);
    const double sd = std::sqrt((col - col.mean()).square().sum() /
                                std::max(1.0, n - 1.0));
    if (sd > 0.0) {
      log_sigma_sum += std::log(sd);
      ++positive_axes;
    }
  }
  if (positive_axes == 0) return 0.0;
  const double sigma = std::exp(log_sigma_sum / positive_axes);
  return 1.06 * sigma * std::pow(n, -0.2);
}

Eigen::ArrayXd default_scale_grid(const QuerySampleSet& s) {
  const double base = silverman_scale(s);
  if (base <= 0.0) return Eigen::ArrayXd();
  const int points = 13;
  Eigen::ArrayXd grid(points);
  for (int i = 0; i < points; ++i) {
    const double decade = -1.5 + 3.0 * static_cast<double>(i) / (points - 1);
    grid(i) = base * std::pow(10.0, decade);
  }
  return grid;
}

DensityModel select_model(const QuerySampleSet& s, const FitConfig& cfg) {
  const Eigen::Index n = s.size();
  if (cfg.cv_folds < 2) throw ConfigError("cv_folds must be at least 2");
  if (n < cfg.cv_folds) {
    throw ConfigError("sample count " + std::to_string(n) +
                      " is below cv_folds " + std::to_string(cfg.cv_folds));
  }
  if (!(cfg.density_floor > 0.0)) throw ConfigError("density_floor must be positive");

  bool degenerate = true;
  for (Eigen::Index i = 1; i < n && degenerate; ++i) {
    degenerate = (s.points.row(i) == s.points.row(0)).all();
  }
  if (degenerate) {
    const double magnitude = s.points.row(0).abs().maxCoeff();
    const double floor_scale = std::max(1e-9, 1e-9 * magnitude);
    DensityModel m = fit_kde(s, Kernel::kLaplace, floor_scale);
    m.flags.push_back("degenerate-sample");
    return m;
  }

  Eigen::ArrayXd scales = cfg.scale_grid.size() > 0 ? cfg.scale_grid : default_scale_grid(s);
  if (scales.size() == 0) throw ConfigError("empty bandwidth scale grid");
  if (!(scales > 0.0).all()) throw ConfigError("scale grid must be strictly positive");
  std::sort(scales.data(), scales.data() + scales.size());
  if (cfg.kernel_candidates.empty()) throw ConfigError("no kernel candidates");

  Candidate best;
  bool tie = false;
  for (const Kernel kernel : cfg.kernel_candidates) {
    for (Eigen::Index si = 0; si < scales.size(); ++si) {
      for (const bool variable : {false, true}) {
        const double score = cv_log_likelihood(s, kernel, scales(si), variable, cfg);
        if (score > best.score) {
          best = {kernel, scales(si), variable, score};
        } else if (score == best.score && best.score > kNegInf) {
          tie = true;
          // Smoother model wins a tie: overestimating sharpness would
          // manufacture density ratios that overstate privacy risk.
          if (scales(si) > best.scale) best = {kernel, scales(si), variable, score};
        }
      }
    }
  }
  if (!(best.score > kNegInf)) {
    throw ComputeError("cross validation failed to score any candidate");
  }

  Eigen::ArrayXd factors;
  if (best.variable) {
    const int knn = std::clamp<int>(
        cfg.knn > 0 ? cfg.knn
                    : static_cast<int>(std::llround(std::sqrt(static_cast<double>(n)))),
        1, static_cast<int>(n) - 1);
    factors = local_bandwidth_factors(s, knn);
  }
  DensityModel m = fit_kde(s, best.kernel, best.scale, factors);
  if (tie) m.flags.push_back("cv-tie-broken-toward-larger-scale");
  return m;
}

DensityModel ecdf_density(const QuerySampleSet& s) {
  if (s.dim != 1) throw ConfigError("ecdf_diff supports dimension 1 only");
  const Eigen::Index n = s.size();
  if (n < 4) throw ConfigError("ecdf_diff requires at least 4 samples");

  Eigen::ArrayXd x = s.points.col(0);
  std::sort(x.data(), x.data() + n);

  DensityModel m;
  m.estimator = Estimator::kEcdfDiff;
  m.dim = 1;
  m.samples = s.points;

  if (x(n - 1) == x(0)) {
    // All mass at one point: a single narrow bin carries everything.
    const double eps = std::max(1e-12, 1e-12 * std::abs(x(0)));
    m.piece_edges = Eigen::ArrayXd(2);
    m.piece_edges << x(0) - eps, x(0) + eps;
    const double width = m.piece_edges(1) - m.piece_edges(0);
    m.piece_density = Eigen::ArrayXd::Constant(1, 1.0 / width);
    m.support_pad = eps;
    m.flags.push_back("degenerate-sample");
    return m;
  }

  const auto w = static_cast<Eigen::Index>(
      std::llround(std::sqrt(static_cast<double>(n))));
  const Eigen::Index half = std::max<Eigen::Index>(1, w / 2);

  Eigen::ArrayXd value(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    Eigen::Index lo = std::max<Eigen::Index>(0, k - half);
    Eigen::Index hi = std::min<Eigen::Index>(n - 1, k + half);
    // Widen across ties until the difference straddles a positive gap.
    while (x(hi) == x(lo) && (lo > 0 || hi < n - 1)) {
      if (lo > 0) --lo;
      if (hi < n - 1) ++hi;
    }
    value(k) = static_cast<double>(hi - lo) /
               (static_cast<double>(n) * (x(hi) - x(lo)));
  }

  Eigen::ArrayXd edges(n + 1);
  edges(0) = x(0);
  for (Eigen::Index k = 1; k < n; ++k) edges(k) = 0.5 * (x(k - 1) + x(k));
  edges(n) = x(n - 1);

  const Eigen::ArrayXd lengths = edges.tail(n) - edges.head(n);
  const double total = (value * lengths).sum();
  if (!(total > 0.0)) throw ComputeError("ecdf density has zero mass");

  m.piece_edges = edges;
  m.piece_density = value / total;
  const Eigen::Index wi = std::min<Eigen::Index>(n - 1, std::max<Eigen::Index>(1, w));
  m.support_pad = std::max(x(wi) - x(0), x(n - 1) - x(n - 1 - wi));
  return m;
}

double density_at(const DensityModel& m, const Eigen::ArrayXd& x) {
  if (x.size() != m.dim) throw ConfigError("evaluation point has wrong dimension");
  if (m.estimator == Estimator::kEcdfDiff) {
    const Eigen::Index pieces = m.piece_density.size();
    const double v = x(0);
    if (v < m.piece_edges(0) || v >= m.piece_edges(pieces)) return 0.0;
    const double* begin = m.piece_edges.data();
    const double* pos = std::upper_bound(begin, begin + pieces + 1, v);
    const Eigen::Index k =
        std::min<Eigen::Index>(static_cast<Eigen::Index>(pos - begin) - 1, pieces - 1);
    return m.piece_density(k);
  }
  const Eigen::Index n = m.samples.rows();
  double acc = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double h = m.bandwidth(j);
    double contrib = 1.0;
    for (int a = 0; a < m.dim; ++a) {
      contrib *= kernel_value(m.kernel, (x(a) - m.samples(j, a)) / h) / h;
    }
    acc += contrib;
  }
  return acc / static_cast<double>(n);
}

double density_at(const DensityModel& m, double x) {
  Eigen::ArrayXd p(1);
  p(0) = x;
  return density_at(m, p);
}

double log_density_at(const DensityModel& m, const Eigen::ArrayXd& x) {
  if (x.size() != m.dim) throw ConfigError("evaluation point has wrong dimension");
  if (m.estimator == Estimator::kEcdfDiff) {
    return std::log(density_at(m, x));
  }
  return log_kde_raw(m.samples, m.kernel, m.global_scale, m.local_factors, x);
}

double log_density_at(const DensityModel& m, double x) {
  Eigen::ArrayXd p(1);
  p(0) = x;
  return log_density_at(m, p);
}

Eigen::ArrayXd eval_on_grid(const DensityModel& m, const Grid1d& grid) {
  if (m.dim != 1) throw ConfigError("1-D grid evaluation requires a 1-D model");
  const double dx = grid.step();
  if (m.estimator == Estimator::kEcdfDiff) {
    const Eigen::Index pieces = m.piece_density.size();
    Eigen::ArrayXd cum(pieces + 1);
    cum(0) = 0.0;
    for (Eigen::Index k = 0; k < pieces; ++k) {
      cum(k + 1) = cum(k) + m.piece_density(k) * (m.piece_edges(k + 1) - m.piece_edges(k));
    }
    Eigen::ArrayXd out(grid.points);
    double left = piece_cdf(m.piece_edges, m.piece_density, cum, grid.lo);
    for (Eigen::Index j = 0; j < grid.points; ++j) {
      const double right =
          piece_cdf(m.piece_edges, m.piece_density, cum, grid.lo + (j + 1) * dx);
      out(j) = (right - left) / dx;
      left = right;
    }
    return out;
  }
  const Eigen::ArrayXd centers = grid.centers();
  Eigen::ArrayXd acc = Eigen::ArrayXd::Zero(grid.points);
  const Eigen::Index n = m.samples.rows();
  for (Eigen::Index j = 0; j < n; ++j) {
    const double h = m.bandwidth(j);
    const Eigen::ArrayXd u = (centers - m.samples(j, 0)) / h;
    if (m.kernel == Kernel::kGaussian) {
      acc += (kInvSqrt2Pi / h) * (-0.5 * u.square()).exp();
    } else {
      acc += (0.5 / h) * (-u.abs()).exp();
    }
  }
  return acc / static_cast<double>(n);
}

Eigen::ArrayXXd eval_on_grid(const DensityModel& m, const Grid2d& grid) {
  if (m.dim != 2) throw ConfigError("2-D grid evaluation requires a 2-D model");
  check_kde(m);
  const Eigen::ArrayXd cx = grid.x.centers();
  const Eigen::ArrayXd cy = grid.y.centers();
  Eigen::ArrayXXd acc = Eigen::ArrayXXd::Zero(grid.x.points, grid.y.points);
  const Eigen::Index n = m.samples.rows();
  for (Eigen::Index j = 0; j < n; ++j) {
    const double h = m.bandwidth(j);
    const Eigen::ArrayXd ux = (cx - m.samples(j, 0)) / h;
    const Eigen::ArrayXd uy = (cy - m.samples(j, 1)) / h;
    Eigen::ArrayXd kx, ky;
    if (m.kernel == Kernel::kGaussian) {
      kx = (kInvSqrt2Pi / h) * (-0.5 * ux.square()).exp();
      ky = (kInvSqrt2Pi / h) * (-0.5 * uy.square()).exp();
    } else {
      kx = (0.5 / h) * (-ux.abs()).exp();
      ky = (0.5 / h) * (-uy.abs()).exp();
    }
    acc += (kx.matrix() * ky.matrix().transpose()).array();
  }
  return acc / static_cast<double>(n);
}

std::pair<double, double> support_interval(const DensityModel& m, int axis) {
  if (axis < 0 || axis >= m.dim) throw ConfigError("axis out of range");
  if (m.estimator == Estimator::kEcdfDiff) {
    return {m.piece_edges(0) - m.support_pad,
            m.piece_edges(m.piece_edges.size() - 1) + m.support_pad};
  }
  const double pad = 10.0 * m.max_bandwidth();
  const Eigen::ArrayXd col = m.samples.col(axis);
  return {col.minCoeff() - pad, col.maxCoeff() + pad};
}

Grid1d shared_grid(const DensityModel& a, const DensityModel& b, Eigen::Index points) {
  if (a.dim != 1 || b.dim != 1) throw ConfigError("shared_grid requires 1-D models");
  const auto [alo, ahi] = support_interval(a);
  const auto [blo, bhi] = support_interval(b);
  return make_grid(std::min(alo, blo), std::max(ahi, bhi), points);
}

Grid2d shared_grid2(const DensityModel& a, const DensityModel& b,
                    Eigen::Index points_per_axis) {
  if (a.dim != 2 || b.dim != 2) throw ConfigError("shared_grid2 requires 2-D models");
  Grid2d g;
  for (int axis = 0; axis < 2; ++axis) {
    const auto [alo, ahi] = support_interval(a, axis);
    const auto [blo, bhi] = support_interval(b, axis);
    (axis == 0 ? g.x : g.y) =
        make_grid(std::min(alo, blo), std::max(ahi, bhi), points_per_axis);
  }
  return g;
}

}  // namespace edp
