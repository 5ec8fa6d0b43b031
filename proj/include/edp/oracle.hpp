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

#ifndef EDP_ORACLE_HPP_
#define EDP_ORACLE_HPP_

#include <Eigen/Core>

#include "edp/grid.hpp"
#include "edp/noise.hpp"

// Independent brute-force reference implementations. These exist to check
// the fast paths, both in the test suites and in the CLI's self-check mode;
// none of them carries performance guarantees.
namespace edp::oracle {

// Probabilities over uniform bins on [lo, hi]; must sum to 1 within 1e-12.
struct DiscretePmf {
  double lo = 0.0;
  double hi = 1.0;
  Eigen::ArrayXd prob;

  double step() const { return (hi - lo) / static_cast<double>(prob.size()); }
};

// Pmf from per-cell density values on a grid, normalized exactly.
DiscretePmf make_pmf(const Grid1d& grid, const Eigen::ArrayXd& density);

// Exact finite-sum counterpart of the privacy-risk integral:
// max(sum (p_j - e^eps q_j)+, sum (q_j - e^eps p_j)+). Bins must match.
double discrete_delta(const DiscretePmf& p, const DiscretePmf& q, double eps);

// O(|A| * |B|) Hausdorff distance by full pairwise scan.
double exhaustive_hausdorff(const Eigen::ArrayXd& a, const Eigen::ArrayXd& b);

// Direct quadrature convolution of a tabulated density with kernel k on the
// same grid (no transforms); kernel mass per cell is integrated exactly.
Eigen::ArrayXd numeric_convolve(const Eigen::ArrayXd& density,
                                const KernelSpec& k, const Grid1d& grid);

}  // namespace edp::oracle

#endif  // EDP_ORACLE_HPP_
