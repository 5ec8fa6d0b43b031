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

#ifndef EDP_SELF_CHECK_HPP_
#define EDP_SELF_CHECK_HPP_

#include <string>
#include <vector>

namespace edp {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

// Runs the built-in verification suites on synthetic data: oracle
// equivalence of the privacy-risk integral, the Hausdorff fast path against
// the exhaustive scan, the sup-log-ratio bound at lambda = d_H / eps, and
// the deconvolution round trip. tolerance_scale multiplies every tolerance;
// 0 demands exact agreement and is expected to fail.
std::vector<CheckResult> run_self_checks(double tolerance_scale = 1.0);

}  // namespace edp

#endif  // EDP_SELF_CHECK_HPP_
