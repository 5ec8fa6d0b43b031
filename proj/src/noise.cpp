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

#include "edp/noise.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>

#include "edp/errors.hpp"
#include "edp/rng.hpp"

namespace edp {
namespace {

double laplace_cdf(double x, double scale) {
  return x < 0.0 ? 0.5 * std::exp(x / scale) : 1.0 - 0.5 * std::exp(-x / scale);
}

double gaussian_cdf(double x, double scale) {
  return 0.5 * std::erfc(-x / (scale * 1.4142135623730950488016887242097));
}

double kernel_cdf(const KernelSpec& k, double x) {
  return k.family == Kernel::kLaplace ? laplace_cdf(x, k.scale)
                                      : gaussian_cdf(x, k.scale);
}

double cell_mass(const KernelSpec& k, double center, double dx) {
  return kernel_cdf(k, center + 0.5 * dx) - kernel_cdf(k, center - 0.5 * dx);
}

// Distance from each ascending grid point to the nearest member of the
// ascending sample array; two-pointer sweep, O(grid + samples).
Eigen::ArrayXd nearest_distance(const Eigen::ArrayXd& grid,
                                const Eigen::ArrayXd& sorted_samples) {
  Eigen::ArrayXd out(grid.size());
  Eigen::Index p = 0;
  const Eigen::Index n = sorted_samples.size();
  for (Eigen::Index j = 0; j < grid.size(); ++j) {
    const double x = grid(j);
    while (p + 1 < n && std::abs(sorted_samples(p + 1) - x) <=
                            std::abs(sorted_samples(p) - x)) {
      ++p;
    }
    out(j) = std::abs(sorted_samples(p) - x);
  }
  return out;
}

// log of a Laplace KDE at scale `scale` on every grid point, evaluated
// against the nearest-sample distance so no exponent is ever positive.
Eigen::ArrayXd log_laplace_kde(const Eigen::ArrayXd& grid,
                               const Eigen::ArrayXd& sorted_samples,
                               const Eigen::ArrayXd& nearest, double scale) {
  Eigen::ArrayXd acc = Eigen::ArrayXd::Zero(grid.size());
  for (Eigen::Index i = 0; i < sorted_samples.size(); ++i) {
    acc += ((nearest - (grid - sorted_samples(i)).abs()) / scale).exp();
  }
  const double n = static_cast<double>(sorted_samples.size());
  return acc.log() - nearest / scale - std::log(2.0 * scale * n);
}

Eigen::ArrayXd sorted_copy(const Eigen::ArrayXd& a) {
  Eigen::ArrayXd s = a;
  std::sort(s.data(), s.data() + s.size());
  return s;
}

}  // namespace

double hausdorff(const Eigen::ArrayXd& a, const Eigen::ArrayXd& b) {
  if (a.size() == 0 || b.size() == 0) {
    throw ConfigError("Hausdorff distance requires non-empty sets");
  }
  const Eigen::ArrayXd sa = sorted_copy(a);
  const Eigen::ArrayXd sb = sorted_copy(b);
  const auto directed = [](const Eigen::ArrayXd& from, const Eigen::ArrayXd& to) {
    double worst = 0.0;
    Eigen::Index p = 0;
    for (Eigen::Index i = 0; i < from.size(); ++i) {
      const double x = from(i);
      while (p + 1 < to.size() &&
             std::abs(to(p + 1) - x) <= std::abs(to(p) - x)) {
        ++p;
      }
      worst = std::max(worst, std::abs(to(p) - x));
    }
    return worst;
  };
  return std::max(directed(sa, sb), directed(sb, sa));
}

LambdaSelection select_lambda(const DatabaseCollection& c, const QuerySpec& q,
                              double eps) {
  if (!(eps > 0.0)) throw ConfigError("epsilon must be positive");
  if (q.dim() != 1) throw ConfigError("noise calibration supports 1-D queries only");
  const QuerySampleSet base = eval_all(q, c);
  const Eigen::ArrayXd base_col = base.column(0);

  LambdaSelection sel;
  sel.per_individual.reserve(c.individuals().size());
  for (const std::string& id : c.individuals()) {
    const QuerySampleSet loo = eval_all_without(q, c, id);
    const double lambda_i = hausdorff(base_col, loo.column(0)) / eps;
    sel.per_individual.emplace_back(id, lambda_i);
    sel.lambda = std::max(sel.lambda, lambda_i);
  }
  return sel;
}

NoiseKernel deconvolve(const KernelSpec& k, double lambda,
                       const DeconvolutionConfig& cfg) {
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be nonnegative");
  if (!(k.scale > 0.0)) throw ConfigError("kernel scale must be positive");

  if (lambda == 0.0) {
    // No noise needed: the identity mechanism, a point mass at zero.
    NoiseKernel h;
    h.form = NoiseKernel::Form::kAnalyticMixture;
    h.lambda = 0.0;
    h.point_mass_weight = 1.0;
    h.polar_moment = 0.0;
    return h;
  }

  if (k.family == Kernel::kLaplace && !cfg.force_tabulated) {
    if (k.scale > lambda) {
      throw ConfigError("Laplace deconvolution requires kernel scale <= lambda; "
                        "the mixture weight would be negative");
    }
    NoiseKernel h;
    h.form = NoiseKernel::Form::kAnalyticMixture;
    h.lambda = lambda;
    const double ratio = k.scale / lambda;
    h.point_mass_weight = ratio * ratio;
    h.polar_moment = (1.0 - h.point_mass_weight) * lambda;
    return h;
  }

  if (!(k.scale < lambda)) {
    throw ConfigError("deconvolution requires kernel scale < lambda");
  }
  const Eigen::Index n = cfg.freq_points;
  if (n < 8 || (n & (n - 1)) != 0) {
    throw ConfigError("freq_points must be a power of two, at least 8");
  }
  const double omega_max = cfg.omega_max > 0.0 ? cfg.omega_max : 64.0 / lambda;
  const double dx = 3.14159265358979323846 / omega_max;

  // Cell masses in FFT index order: index m maps to x = m*dx for m < n/2 and
  // to (m - n)*dx above, so both spectra are real up to rounding.
  const KernelSpec ell{Kernel::kLaplace, lambda};
  std::vector<double> ell_mass(static_cast<std::size_t>(n));
  std::vector<double> k_mass(static_cast<std::size_t>(n));
  for (Eigen::Index m = 0; m < n; ++m) {
    const double x = (m < n / 2 ? static_cast<double>(m)
                                : static_cast<double>(m - n)) * dx;
    ell_mass[static_cast<std::size_t>(m)] = cell_mass(ell, x, dx);
    k_mass[static_cast<std::size_t>(m)] = cell_mass(k, x, dx);
  }

  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> ell_hat, k_hat;
  fft.fwd(ell_hat, ell_mass);
  fft.fwd(k_hat, k_mass);

  double clipped_mass = 0.0;
  double total_mass = 0.0;
  std::vector<std::complex<double>> h_hat(static_cast<std::size_t>(n));
  for (std::size_t m = 0; m < static_cast<std::size_t>(n); ++m) {
    const double lm = std::abs(ell_hat[m]);
    total_mass += lm;
    std::complex<double> denom = k_hat[m];
    if (std::abs(denom) < cfg.reg_floor) {
      clipped_mass += lm;
      denom = std::abs(denom) == 0.0
                  ? std::complex<double>(cfg.reg_floor, 0.0)
                  : denom * (cfg.reg_floor / std::abs(denom));
    }
    h_hat[m] = ell_hat[m] / denom;
  }
  if (clipped_mass > cfg.clip_budget * total_mass) {
    throw ComputeError(
        "deconvolution clipped " + std::to_string(100.0 * clipped_mass / total_mass) +
        "% of the spectral mass (budget " + std::to_string(100.0 * cfg.clip_budget) +
        "%); the kernel scale is too large relative to lambda");
  }

  std::vector<std::complex<double>> h_time;
  fft.inv(h_time, h_hat);

  // Reorder to ascending x, project to a density, renormalize.
  NoiseKernel h;
  h.form = NoiseKernel::Form::kTabulated;
  h.lambda = lambda;
  h.grid_step = dx;
  h.grid_x.resize(n);
  Eigen::ArrayXd raw(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Eigen::Index m = (j + n / 2) % n;  // j=0 is the most negative cell
    h.grid_x(j) = (j - n / 2) * dx;
    raw(j) = h_time[static_cast<std::size_t>(m)].real();
  }
  Eigen::ArrayXd mass = raw.max(0.0);
  const double sum = mass.sum();
  if (!(sum > 0.0)) throw ComputeError("deconvolution produced an empty density");
  mass /= sum;
  h.regularization_residual = (mass - raw).abs().sum();
  h.density = mass / dx;
  h.cumulative.resize(n);
  double acc = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    acc += mass(j);
    h.cumulative(j) = acc;
  }
  h.cumulative(n - 1) = 1.0;
  h.polar_moment = (h.grid_x.abs() * mass).sum();
  return h;
}

Eigen::ArrayXd sample_noise(const NoiseKernel& h, std::uint64_t seed,
                            Eigen::Index count) {
  if (count < 0) throw ConfigError("sample count must be nonnegative");
  Rng rng(seed);
  Eigen::ArrayXd out(count);
  if (h.form == NoiseKernel::Form::kAnalyticMixture) {
    for (Eigen::Index i = 0; i < count; ++i) {
      const double u = rng.next_double();
      out(i) = u < h.point_mass_weight ? 0.0 : rng.next_laplace(h.lambda);
    }
    return out;
  }
  const Eigen::Index n = h.cumulative.size();
  const double* begin = h.cumulative.data();
  for (Eigen::Index i = 0; i < count; ++i) {
    const double u = rng.next_open_double();
    const double* pos = std::lower_bound(begin, begin + n, u);
    const Eigen::Index j = std::min<Eigen::Index>(pos - begin, n - 1);
    const double c_lo = j > 0 ? h.cumulative(j - 1) : 0.0;
    const double c_hi = h.cumulative(j);
    const double frac = c_hi > c_lo ? (u - c_lo) / (c_hi - c_lo) : 0.5;
    out(i) = h.grid_x(j) + (frac - 0.5) * h.grid_step;
  }
  return out;
}

double noised_response(double value, const NoiseKernel& h, std::uint64_t seed) {
  return value + sample_noise(h, seed, 1)(0);
}

EpsilonCheck verify_epsilon(const Eigen::ArrayXd& a, const Eigen::ArrayXd& b,
                            double eps, Eigen::Index grid_points,
                            double span_in_lambdas) {
  if (a.size() == 0 || b.size() == 0) {
    throw ConfigError("verify_epsilon requires non-empty sample sets");
  }
  if (!(eps > 0.0)) throw ConfigError("epsilon must be positive");

  EpsilonCheck check;
  const Eigen::ArrayXd sa = sorted_copy(a);
  const Eigen::ArrayXd sb = sorted_copy(b);
  const double dh = hausdorff(sa, sb);
  check.lambda = dh / eps;
  if (dh == 0.0) {
    if (sa.size() == sb.size() && (sa == sb).all()) {
      check.supremum = 0.0;
      check.pass = true;
      return check;
    }
    throw ComputeError("zero Hausdorff distance with differing sample multisets");
  }

  const double lo = std::min(sa(0), sb(0)) - span_in_lambdas * check.lambda;
  const double hi = std::max(sa(sa.size() - 1), sb(sb.size() - 1)) +
                    span_in_lambdas * check.lambda;
  const Eigen::ArrayXd grid = Eigen::ArrayXd::LinSpaced(grid_points, lo, hi);
  const Eigen::ArrayXd da = nearest_distance(grid, sa);
  const Eigen::ArrayXd db = nearest_distance(grid, sb);
  const Eigen::ArrayXd log_a = log_laplace_kde(grid, sa, da, check.lambda);
  const Eigen::ArrayXd log_b = log_laplace_kde(grid, sb, db, check.lambda);
  check.supremum = (log_a - log_b).abs().maxCoeff();
  check.pass = check.supremum <= eps * (1.0 + 1e-9) + 1e-12;
  return check;
}

}  // namespace edp
