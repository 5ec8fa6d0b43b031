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

#include <doctest.h>

#include <cmath>

#include "edp/errors.hpp"
#include "edp/noise.hpp"
#include "edp/rng.hpp"

using namespace edp;
using oracle::DiscretePmf;

namespace {

DiscretePmf pmf_from(std::initializer_list<double> probs) {
  DiscretePmf p;
  p.lo = 0.0;
  p.hi = 1.0;
  p.prob = Eigen::ArrayXd(static_cast<Eigen::Index>(probs.size()));
  Eigen::Index i = 0;
  for (const double v : probs) p.prob(i++) = v;
  return p;
}

}  // namespace

TEST_CASE("discrete_delta on hand-checkable pmfs") {
  CHECK(oracle::discrete_delta(pmf_from({0.5, 0.5}), pmf_from({0.5, 0.5}), 0.3) == 0.0);
  CHECK(oracle::discrete_delta(pmf_from({1, 0}), pmf_from({0, 1}), 5.0) == 1.0);
  CHECK(oracle::discrete_delta(pmf_from({0.6, 0.4}), pmf_from({0.4, 0.6}), 0.0) ==
        doctest::Approx(0.2).epsilon(1e-15));
}

TEST_CASE("discrete_delta rejects mismatched bins") {
  CHECK_THROWS_AS(oracle::discrete_delta(pmf_from({1.0}), pmf_from({0.5, 0.5}), 0.1),
                  ConfigError);
}

TEST_CASE("discrete_delta is symmetric and nonincreasing in epsilon") {
  Rng rng(71);
  for (int trial = 0; trial < 30; ++trial) {
    const Eigen::Index bins = 2 + static_cast<Eigen::Index>(rng.next_u64() % 30);
    Eigen::ArrayXd a(bins), b(bins);
    for (Eigen::Index i = 0; i < bins; ++i) {
      a(i) = rng.next_open_double();
      b(i) = rng.next_open_double();
    }
    DiscretePmf p = pmf_from({});
    p.prob = a / a.sum();
    DiscretePmf q = pmf_from({});
    q.prob = b / b.sum();

    double previous = 1.0;
    for (const double eps : {0.0, 0.2, 0.5, 1.0, 3.0}) {
      const double d = oracle::discrete_delta(p, q, eps);
      CHECK(d == oracle::discrete_delta(q, p, eps));
      CHECK(d <= previous + 1e-15);
      previous = d;
    }
  }
}

TEST_CASE("make_pmf normalizes and validates") {
  const Grid1d grid{0.0, 1.0, 4};
  const DiscretePmf p = oracle::make_pmf(grid, (Eigen::ArrayXd(4) << 1, 1, 1, 1).finished());
  CHECK(p.prob.sum() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(oracle::make_pmf(grid, (Eigen::ArrayXd(4) << 1, -1, 1, 1).finished()),
                  ConfigError);
  CHECK_THROWS_AS(oracle::make_pmf(grid, Eigen::ArrayXd::Zero(4)), ConfigError);
}

TEST_CASE("exhaustive_hausdorff basics") {
  Eigen::ArrayXd a(3), b(3);
  a << 1, 2, 3;
  b << 1, 2, 3;
  CHECK(oracle::exhaustive_hausdorff(a, b) == 0.0);
  CHECK_THROWS_AS(oracle::exhaustive_hausdorff(a, Eigen::ArrayXd()), ConfigError);
}

TEST_CASE("exhaustive_hausdorff is symmetric and satisfies the triangle inequality") {
  Rng rng(73);
  for (int trial = 0; trial < 50; ++trial) {
    const auto size = [&] { return 1 + static_cast<Eigen::Index>(rng.next_u64() % 12); };
    const auto draw = [&](Eigen::Index n) {
      Eigen::ArrayXd v(n);
      for (Eigen::Index i = 0; i < n; ++i) v(i) = 10.0 * rng.next_double();
      return v;
    };
    const Eigen::ArrayXd a = draw(size());
    const Eigen::ArrayXd b = draw(size());
    const Eigen::ArrayXd c = draw(size());
    const double ab = oracle::exhaustive_hausdorff(a, b);
    CHECK(ab == oracle::exhaustive_hausdorff(b, a));
    CHECK(ab <= oracle::exhaustive_hausdorff(a, c) +
                    oracle::exhaustive_hausdorff(c, b) + 1e-12);
  }
}

TEST_CASE("numeric_convolve with a point mass reproduces the kernel") {
  const Eigen::Index m = 200;
  const double dx = 0.01;
  const Grid1d grid{-(m + 0.5) * dx, (m + 0.5) * dx, 2 * m + 1};
  Eigen::ArrayXd density = Eigen::ArrayXd::Zero(grid.points);
  density(m) = 1.0 / dx;  // delta at zero

  const KernelSpec k{Kernel::kGaussian, 0.2};
  const Eigen::ArrayXd out = oracle::numeric_convolve(density, k, grid);
  for (Eigen::Index j = 0; j < grid.points; j += 37) {
    const double x = grid.center(j);
    const double expected = std::exp(-0.5 * x * x / (0.2 * 0.2)) /
                            (0.2 * std::sqrt(2.0 * M_PI));
    CHECK(out(j) == doctest::Approx(expected).epsilon(1e-3));
  }
}

TEST_CASE("numeric_convolve conserves mass") {
  Rng rng(79);
  const Eigen::Index n = 512;
  const Grid1d grid{-8.0, 8.0, n};
  // Unit-mass density concentrated well inside the grid, so no kernel mass
  // escapes past the edges.
  Eigen::ArrayXd density(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = grid.center(i);
    density(i) = std::exp(-0.5 * x * x) * (1.0 + 0.2 * rng.next_double());
  }
  density /= density.sum() * grid.step();

  const KernelSpec k{Kernel::kLaplace, 0.3};
  const Eigen::ArrayXd out = oracle::numeric_convolve(density, k, grid);
  CHECK(out.sum() * grid.step() == doctest::Approx(1.0).epsilon(1e-6));
}
