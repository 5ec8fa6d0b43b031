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

#ifndef EDP_REPORT_IO_HPP_
#define EDP_REPORT_IO_HPP_

#include <cstdint>
#include <optional>
#include <string>

#include "edp/dataset.hpp"
#include "edp/noise.hpp"
#include "edp/privacy.hpp"
#include "edp/query.hpp"

namespace edp {

// Run configuration: a JSON file plus CLI-flag overrides; flags win. Unknown
// keys are rejected before any computation starts.
struct RunConfig {
  std::string input;
  InputLayout layout = InputLayout::kAuto;
  std::optional<QuerySpec> query;
  std::optional<double> epsilon;
  Eigen::ArrayXd epsilon_grid;
  std::uint64_t seed = 0;
  std::string out_dir = ".";
  int dump_densities = 0;
  PrivacyOptions options;

  int bucket_count = 1;
  std::optional<QuerySpec> adversary_query;

  KernelSpec noise_kernel{Kernel::kLaplace, 0.0};  // scale 0 = Silverman
  DeconvolutionConfig deconvolution;
};

RunConfig parse_run_config(const std::string& json_text);

QuerySpec query_from_json(const std::string& json_text);
std::string query_to_json(const QuerySpec& spec);

// Report serialization. JSON is pretty-printed with stable key order so that
// identical inputs produce byte-identical files.
std::string privacy_report_json(const PrivacyReport& report);
std::string risk_curve_json(const RiskCurve& curve);
std::string risk_curve_csv(const RiskCurve& curve);
std::string conditional_report_json(const ConditionalReport& report, double eps);

// Noise artifacts. The kernel CSV holds (x, density) rows; analytic mixtures
// tabulate their continuous part and carry the point mass in the manifest.
std::string noise_kernel_csv(const NoiseKernel& h);
std::string noise_manifest_json(const NoiseKernel& h, const QuerySpec& query,
                                double eps, const LambdaSelection& sel,
                                const KernelSpec& k, std::uint64_t seed,
                                const std::string& kernel_file,
                                std::uint64_t kernel_hash);

struct ManifestData {
  NoiseKernel kernel;
  std::string kernel_file;
  std::uint64_t kernel_hash = 0;
  std::uint64_t seed = 0;
};

// Reloads a kernel from manifest + CSV, verifying the recorded file hash.
ManifestData load_manifest(const std::string& manifest_path);

std::uint64_t fnv1a_hash(const std::string& bytes);
std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace edp

#endif  // EDP_REPORT_IO_HPP_
