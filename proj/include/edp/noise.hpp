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

#ifndef EDP_NOISE_HPP_
#define EDP_NOISE_HPP_

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "edp/dataset.hpp"
#include "edp/density.hpp"
#include "edp/query.hpp"

namespace edp {

// The curator's distributional inference kernel k.
struct KernelSpec {
  Kernel family = Kernel::kLaplace;
  double scale = 1.0;
};

// A sampleable noise distribution h with k * h = Laplace(lambda). A Laplace k
// admits the exact point-mass + Laplace mixture; other kernels tabulate h on
// a uniform grid obtained by spectral division.
struct NoiseKernel {
  enum class Form { kAnalyticMixture, kTabulated };

  Form form = Form::kAnalyticMixture;
  double lambda = 1.0;  // calibrated Laplace scale of k * h

  // Analytic mixture: point_mass_weight * delta_0 + (1 - w) * Laplace(lambda).
  double point_mass_weight = 0.0;

  // Tabulated density on uniform cells centered at grid_x, plus the
  // cumulative masses at cell right edges for inverse-transform sampling.
  Eigen::ArrayXd grid_x;
  Eigen::ArrayXd density;
  Eigen::ArrayXd cumulative;
  double grid_step = 0.0;

  double polar_moment = 0.0;              // E|y|, the expected absolute noise
  double regularization_residual = 0.0;   // L1 mass moved by the projection
};

struct DeconvolutionConfig {
  Eigen::Index freq_points = 1 << 16;  // power of two
  double omega_max = 0.0;              // 0 = 64 / lambda
  double reg_floor = 1e-12;
  double clip_budget = 0.01;           // max clipped fraction of spectral mass
  bool force_tabulated = false;        // run Laplace k through the grid path
};

// Hausdorff distance between two non-empty point sets, exact, via sorting.
double hausdorff(const Eigen::ArrayXd& a, const Eigen::ArrayXd& b);

struct LambdaSelection {
  double lambda = 0.0;
  std::vector<std::pair<std::string, double>> per_individual;  // (id, lambda_i)
};

// lambda_i = d_H(samples, samples-without-i) / eps; lambda = max_i lambda_i.
LambdaSelection select_lambda(const DatabaseCollection& c, const QuerySpec& q,
                              double eps);

// Solves k * h = Laplace(lambda) for h. Laplace k yields the exact mixture
// h = (s/lambda)^2 * delta_0 + (1 - (s/lambda)^2) * Laplace(lambda); other
// kernels divide spectra on a uniform frequency grid, clip frequencies where
// |F k| falls below reg_floor, zero negative values, and renormalize. Fails
// when clipping would discard more than clip_budget of the spectral mass.
NoiseKernel deconvolve(const KernelSpec& k, double lambda,
                       const DeconvolutionConfig& cfg = {});

// i.i.d. samples of h, reproducible for a given seed.
Eigen::ArrayXd sample_noise(const NoiseKernel& h, std::uint64_t seed,
                            Eigen::Index count);

double noised_response(double value, const NoiseKernel& h, std::uint64_t seed);

struct EpsilonCheck {
  double lambda = 0.0;
  double supremum = 0.0;
  bool pass = false;
};

// Evaluates sup_x |log a(x) - log b(x)| for Laplace KDEs of A and B at scale
// lambda = d_H(A, B) / eps over a dense grid, and compares it against eps.
EpsilonCheck verify_epsilon(const Eigen::ArrayXd& a, const Eigen::ArrayXd& b,
                            double eps, Eigen::Index grid_points = 100000,
                            double span_in_lambdas = 20.0);

}  // namespace edp

#endif  // EDP_NOISE_HPP_
