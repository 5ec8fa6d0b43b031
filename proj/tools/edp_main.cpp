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

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>

#include "edp/dataset.hpp"
#include "edp/density.hpp"
#include "edp/errors.hpp"
#include "edp/noise.hpp"
#include "edp/oracle.hpp"
#include "edp/privacy.hpp"
#include "edp/query.hpp"
#include "edp/report_io.hpp"
#include "edp/self_check.hpp"

namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitCompute = 4;

// Flag values collected before they override the config file.
struct CliFlags {
  std::string config_path;
  std::optional<std::string> input;
  std::optional<std::string> layout;
  std::optional<std::string> query_json;
  std::optional<double> epsilon;
  std::optional<std::string> epsilon_grid;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<int> threads;
  std::optional<int> dump_densities;
  std::optional<std::string> estimator;

  std::optional<std::string> adversary_json;
  std::optional<int> buckets;

  std::optional<std::string> kernel_family;
  std::optional<std::string> kernel_scale;
};

void add_common_flags(CLI::App* sub, CliFlags* flags) {
  sub->add_option("--config", flags->config_path, "JSON run-config file");
  sub->add_option("--input", flags->input, "input directory or long-format CSV");
  sub->add_option("--layout", flags->layout, "input layout: dir, long, auto");
  sub->add_option("--query", flags->query_json, "query spec as JSON");
  sub->add_option("--seed", flags->seed, "seed recorded for all randomness");
  sub->add_option("--out-dir", flags->out_dir, "output directory");
  sub->add_option("--threads", flags->threads, "worker threads (0 = hardware)");
  sub->add_option("--estimator", flags->estimator, "density estimator: kde, ecdf_diff");
}

Eigen::ArrayXd parse_eps_list(const std::string& text) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string token;
  while (std::getline(ss, token, ',')) {
    if (token.empty()) continue;
    try {
      values.push_back(std::stod(token));
    } catch (const std::exception&) {
      throw edp::ConfigError("cannot parse epsilon value '" + token + "'");
    }
  }
  return Eigen::Map<Eigen::ArrayXd>(values.data(),
                                    static_cast<Eigen::Index>(values.size()));
}

edp::RunConfig resolve_config(const CliFlags& flags) {
  edp::RunConfig cfg;
  if (!flags.config_path.empty()) {
    cfg = edp::parse_run_config(edp::read_file(flags.config_path));
  }
  if (flags.input) cfg.input = *flags.input;
  if (flags.layout) {
    if (*flags.layout == "dir") cfg.layout = edp::InputLayout::kDirectory;
    else if (*flags.layout == "long") cfg.layout = edp::InputLayout::kLongCsv;
    else if (*flags.layout == "auto") cfg.layout = edp::InputLayout::kAuto;
    else throw edp::ConfigError("layout must be one of dir, long, auto");
  }
  if (flags.query_json) cfg.query = edp::query_from_json(*flags.query_json);
  if (flags.epsilon) cfg.epsilon = *flags.epsilon;
  if (flags.epsilon_grid) cfg.epsilon_grid = parse_eps_list(*flags.epsilon_grid);
  if (flags.seed) cfg.seed = *flags.seed;
  if (flags.out_dir) cfg.out_dir = *flags.out_dir;
  if (flags.threads) cfg.options.threads = *flags.threads;
  if (flags.dump_densities) cfg.dump_densities = *flags.dump_densities;
  if (flags.estimator) {
    if (*flags.estimator == "kde") cfg.options.estimator = edp::Estimator::kKde;
    else if (*flags.estimator == "ecdf_diff") cfg.options.estimator = edp::Estimator::kEcdfDiff;
    else throw edp::ConfigError("estimator must be kde or ecdf_diff");
  }
  if (flags.adversary_json) cfg.adversary_query = edp::query_from_json(*flags.adversary_json);
  if (flags.buckets) cfg.bucket_count = *flags.buckets;
  if (flags.kernel_family) {
    if (*flags.kernel_family == "gaussian") cfg.noise_kernel.family = edp::Kernel::kGaussian;
    else if (*flags.kernel_family == "laplace") cfg.noise_kernel.family = edp::Kernel::kLaplace;
    else throw edp::ConfigError("kernel must be gaussian or laplace");
  }
  if (flags.kernel_scale) {
    if (*flags.kernel_scale == "auto") {
      cfg.noise_kernel.scale = 0.0;
    } else {
      try {
        cfg.noise_kernel.scale = std::stod(*flags.kernel_scale);
      } catch (const std::exception&) {
        throw edp::ConfigError("kernel scale must be a number or 'auto'");
      }
    }
  }
  // One recorded seed drives every random choice, fold assignment included.
  cfg.options.fit.cv_seed = cfg.seed;
  return cfg;
}

const edp::QuerySpec& require_query(const edp::RunConfig& cfg) {
  if (!cfg.query) throw edp::ConfigError("a query spec is required (--query)");
  return *cfg.query;
}

double require_epsilon(const edp::RunConfig& cfg) {
  if (!cfg.epsilon) throw edp::ConfigError("an epsilon is required (--epsilon)");
  if (!(*cfg.epsilon > 0.0)) throw edp::ConfigError("epsilon must be positive");
  return *cfg.epsilon;
}

edp::DatabaseCollection load_input(const edp::RunConfig& cfg) {
  if (cfg.input.empty()) throw edp::ConfigError("an input path is required (--input)");
  return edp::load_collection(cfg.input, cfg.layout);
}

std::string sanitize_filename(const std::string& raw) {
  std::string out;
  for (const char ch : raw) {
    out.push_back(std::isalnum(static_cast<unsigned char>(ch)) ? ch : '_');
  }
  return out.empty() ? "unnamed" : out;
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_density_dumps(const edp::DatabaseCollection& c,
                         const edp::QuerySpec& query,
                         const edp::PrivacyReport& report,
                         const edp::RunConfig& cfg) {
  const int count = std::min<int>(cfg.dump_densities,
                                  static_cast<int>(report.per_individual.size()));
  const edp::QuerySampleSet base = edp::eval_all(query, c);
  const edp::DensityModel base_model = edp::fit_density(base, cfg.options);
  for (int rank = 0; rank < count; ++rank) {
    const std::string& id = report.per_individual[static_cast<std::size_t>(rank)].id;
    const edp::QuerySampleSet loo = edp::eval_all_without(query, c, id);
    const edp::DensityModel loo_model = edp::fit_density(loo, cfg.options);
    std::string csv;
    if (base_model.dim == 1) {
      const edp::Grid1d grid =
          edp::shared_grid(base_model, loo_model, cfg.options.grid_points_1d);
      const Eigen::ArrayXd p = edp::eval_on_grid(base_model, grid);
      const Eigen::ArrayXd p_i = edp::eval_on_grid(loo_model, grid);
      csv = "x,p,p_i\n";
      for (Eigen::Index j = 0; j < grid.points; ++j) {
        csv += fmt17(grid.center(j)) + "," + fmt17(p(j)) + "," + fmt17(p_i(j)) + "\n";
      }
    } else {
      const edp::Grid2d grid =
          edp::shared_grid2(base_model, loo_model, cfg.options.grid_points_2d);
      const Eigen::ArrayXXd p = edp::eval_on_grid(base_model, grid);
      const Eigen::ArrayXXd p_i = edp::eval_on_grid(loo_model, grid);
      csv = "x,y,p,p_i\n";
      for (Eigen::Index jx = 0; jx < grid.x.points; ++jx) {
        for (Eigen::Index jy = 0; jy < grid.y.points; ++jy) {
          csv += fmt17(grid.x.center(jx)) + "," + fmt17(grid.y.center(jy)) + "," +
                 fmt17(p(jx, jy)) + "," + fmt17(p_i(jx, jy)) + "\n";
        }
      }
    }
    const fs::path path = fs::path(cfg.out_dir) /
        ("densities_" + std::to_string(rank + 1) + "_" + sanitize_filename(id) + ".csv");
    edp::write_file(path.string(), csv);
  }
}

int cmd_estimate(const CliFlags& flags) {
  const edp::RunConfig cfg = resolve_config(flags);
  const double eps = require_epsilon(cfg);
  const edp::DatabaseCollection c = load_input(cfg);
  const edp::QuerySpec& query = require_query(cfg);

  const edp::PrivacyReport report = edp::empirical_privacy(c, query, eps, cfg.options);

  fs::create_directories(cfg.out_dir);
  edp::write_file((fs::path(cfg.out_dir) / "privacy_report.json").string(),
                  edp::privacy_report_json(report));
  if (cfg.dump_densities > 0) write_density_dumps(c, query, report, cfg);
  std::printf("epsilon %.6g: delta = %.6g, delta_star = %.6g (%zu individuals)\n",
              report.epsilon, report.delta, report.delta_star,
              report.per_individual.size());
  return kExitOk;
}

int cmd_curve(const CliFlags& flags) {
  const edp::RunConfig cfg = resolve_config(flags);
  if (cfg.epsilon_grid.size() == 0) {
    throw edp::ConfigError("an epsilon grid is required (--epsilon-grid)");
  }
  const edp::DatabaseCollection c = load_input(cfg);
  const edp::QuerySpec& query = require_query(cfg);

  const edp::RiskCurve curve = edp::risk_curve(c, query, cfg.epsilon_grid, cfg.options);

  fs::create_directories(cfg.out_dir);
  edp::write_file((fs::path(cfg.out_dir) / "risk_curve.csv").string(),
                  edp::risk_curve_csv(curve));
  edp::write_file((fs::path(cfg.out_dir) / "risk_curve.json").string(),
                  edp::risk_curve_json(curve));
  std::printf("risk curve over %zu epsilon values written\n", curve.points.size());
  return kExitOk;
}

int cmd_noise(const CliFlags& flags) {
  const edp::RunConfig cfg = resolve_config(flags);
  const double eps = require_epsilon(cfg);
  const edp::DatabaseCollection c = load_input(cfg);
  const edp::QuerySpec& query = require_query(cfg);

  const edp::LambdaSelection sel = edp::select_lambda(c, query, eps);

  edp::KernelSpec kernel = cfg.noise_kernel;
  if (kernel.scale <= 0.0) {
    kernel.scale = edp::silverman_scale(edp::eval_all(query, c));
    if (kernel.scale <= 0.0) {
      throw edp::ComputeError("cannot derive a kernel scale from constant samples");
    }
  }
  if (sel.lambda > 0.0 && kernel.scale >= sel.lambda) {
    throw edp::ConfigError(
        "inference kernel scale " + std::to_string(kernel.scale) +
        " must be < lambda " + std::to_string(sel.lambda) +
        "; deconvolution requires the kernel scale to be small relative to lambda");
  }

  const edp::NoiseKernel h = edp::deconvolve(kernel, sel.lambda, cfg.deconvolution);
  const std::string csv = edp::noise_kernel_csv(h);

  fs::create_directories(cfg.out_dir);
  edp::write_file((fs::path(cfg.out_dir) / "noise_kernel.csv").string(), csv);
  edp::write_file((fs::path(cfg.out_dir) / "manifest.json").string(),
                  edp::noise_manifest_json(h, query, eps, sel, kernel, cfg.seed,
                                           "noise_kernel.csv", edp::fnv1a_hash(csv)));
  std::printf("lambda = %.6g, polar moment = %.6g, form = %s\n", h.lambda,
              h.polar_moment,
              h.form == edp::NoiseKernel::Form::kAnalyticMixture ? "analytic_mixture"
                                                                 : "tabulated");
  return kExitOk;
}

Eigen::ArrayXd read_responses(const std::string& path) {
  std::stringstream in(edp::read_file(path));
  std::vector<double> values;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    try {
      values.push_back(std::stod(line));
    } catch (const std::exception&) {
      if (first) {  // tolerate a header row
        first = false;
        continue;
      }
      throw edp::DataError("cannot parse response value '" + line + "' in " + path);
    }
    first = false;
  }
  if (values.empty()) throw edp::DataError("no responses found in " + path);
  return Eigen::Map<Eigen::ArrayXd>(values.data(),
                                    static_cast<Eigen::Index>(values.size()));
}

int cmd_sample(const CliFlags& flags, const std::string& manifest_path,
               Eigen::Index count, const std::string& responses_path) {
  const edp::RunConfig cfg = resolve_config(flags);
  const edp::ManifestData manifest = edp::load_manifest(manifest_path);
  const std::uint64_t seed = flags.seed ? *flags.seed : manifest.seed;

  std::string csv;
  Eigen::Index produced = 0;
  if (!responses_path.empty()) {
    const Eigen::ArrayXd responses = read_responses(responses_path);
    const Eigen::ArrayXd noise =
        edp::sample_noise(manifest.kernel, seed, responses.size());
    csv = "response,noised\n";
    for (Eigen::Index i = 0; i < responses.size(); ++i) {
      csv += fmt17(responses(i)) + "," + fmt17(responses(i) + noise(i)) + "\n";
    }
    produced = responses.size();
  } else {
    if (count <= 0) throw edp::ConfigError("--count must be positive");
    const Eigen::ArrayXd samples = edp::sample_noise(manifest.kernel, seed, count);
    csv = "sample\n";
    for (Eigen::Index i = 0; i < samples.size(); ++i) csv += fmt17(samples(i)) + "\n";
    produced = count;
  }

  fs::create_directories(cfg.out_dir);
  edp::write_file((fs::path(cfg.out_dir) / "samples.csv").string(), csv);
  Json meta;
  meta["seed"] = seed;
  meta["count"] = produced;
  char hash_buf[20];
  std::snprintf(hash_buf, sizeof(hash_buf), "%016llx",
                static_cast<unsigned long long>(manifest.kernel_hash));
  meta["kernel_hash"] = hash_buf;
  edp::write_file((fs::path(cfg.out_dir) / "samples_meta.json").string(),
                  meta.dump(2) + "\n");
  std::printf("wrote %lld value(s) with seed %llu\n",
              static_cast<long long>(produced),
              static_cast<unsigned long long>(seed));
  return kExitOk;
}

int cmd_conditional(const CliFlags& flags) {
  const edp::RunConfig cfg = resolve_config(flags);
  const double eps = require_epsilon(cfg);
  const edp::DatabaseCollection c = load_input(cfg);
  const edp::QuerySpec& query = require_query(cfg);
  if (!cfg.adversary_query) {
    throw edp::ConfigError("an adversary query is required (--adversary-query)");
  }

  const edp::ConditionalReport report = edp::conditional_privacy(
      c, query, *cfg.adversary_query, cfg.bucket_count, eps, cfg.options);

  fs::create_directories(cfg.out_dir);
  edp::write_file((fs::path(cfg.out_dir) / "conditional_report.json").string(),
                  edp::conditional_report_json(report, eps));
  const auto& worst = report.buckets[static_cast<std::size_t>(report.worst_bucket)];
  std::printf("worst bucket %d %s: delta = %.6g, delta_star = %.6g\n",
              report.worst_bucket, worst.label.c_str(), worst.report.delta,
              worst.report.delta_star);
  return kExitOk;
}

int cmd_self_check(const CliFlags& flags, double tolerance_scale) {
  const edp::RunConfig cfg = resolve_config(flags);
  const std::vector<edp::CheckResult> results = edp::run_self_checks(tolerance_scale);
  bool all_pass = true;
  Json checks = Json::array();
  for (const edp::CheckResult& r : results) {
    all_pass = all_pass && r.pass;
    std::printf("[%s] %s: %s\n", r.pass ? "PASS" : "FAIL", r.name.c_str(),
                r.detail.c_str());
    Json entry;
    entry["name"] = r.name;
    entry["pass"] = r.pass;
    entry["detail"] = r.detail;
    checks.push_back(std::move(entry));
  }
  Json summary;
  summary["checks"] = std::move(checks);
  summary["all_pass"] = all_pass;
  fs::create_directories(cfg.out_dir);
  edp::write_file((fs::path(cfg.out_dir) / "self_check.json").string(),
                  summary.dump(2) + "\n");
  return all_pass ? kExitOk : kExitCompute;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"empirical differential privacy estimation and noise calibration"};
  app.require_subcommand(1);

  CliFlags flags;

  CLI::App* estimate = app.add_subcommand(
      "estimate", "privacy report (delta, delta_star) at one epsilon");
  add_common_flags(estimate, &flags);
  estimate->add_option("--epsilon", flags.epsilon, "privacy level epsilon");
  estimate->add_option("--dump-densities", flags.dump_densities,
                       "write density CSVs for the top-N delta_i individuals");

  CLI::App* curve = app.add_subcommand("curve", "risk curve over an epsilon grid");
  add_common_flags(curve, &flags);
  curve->add_option("--epsilon-grid", flags.epsilon_grid,
                    "comma-separated ascending epsilon values");

  CLI::App* noise = app.add_subcommand(
      "noise", "calibrate a noise kernel for a target epsilon");
  add_common_flags(noise, &flags);
  noise->add_option("--epsilon", flags.epsilon, "target privacy level");
  noise->add_option("--kernel", flags.kernel_family,
                    "inference kernel family: gaussian, laplace");
  noise->add_option("--kernel-scale", flags.kernel_scale,
                    "inference kernel scale, or 'auto' for Silverman's rule");

  CLI::App* sample = app.add_subcommand(
      "sample", "draw noise samples, or noise a file of raw responses");
  add_common_flags(sample, &flags);
  std::string manifest_path;
  std::string responses_path;
  Eigen::Index sample_count = 0;
  sample->add_option("--manifest", manifest_path, "manifest.json from the noise step")
      ->required();
  sample->add_option("--count", sample_count, "number of samples to draw");
  sample->add_option("--responses", responses_path,
                     "CSV of raw query responses to noise, one per line");

  CLI::App* conditional = app.add_subcommand(
      "conditional", "per-bucket privacy conditioned on an adversary query");
  add_common_flags(conditional, &flags);
  conditional->add_option("--epsilon", flags.epsilon, "privacy level epsilon");
  conditional->add_option("--adversary-query", flags.adversary_json,
                          "adversary query spec as JSON");
  conditional->add_option("--buckets", flags.buckets, "number of quantile buckets");

  CLI::App* self_check = app.add_subcommand(
      "self-check", "run the built-in verification suites");
  add_common_flags(self_check, &flags);
  double tolerance_scale = 1.0;
  self_check->add_option("--tolerance-scale", tolerance_scale,
                         "multiplier applied to every tolerance");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (estimate->parsed()) return cmd_estimate(flags);
    if (curve->parsed()) return cmd_curve(flags);
    if (noise->parsed()) return cmd_noise(flags);
    if (sample->parsed()) return cmd_sample(flags, manifest_path, sample_count, responses_path);
    if (conditional->parsed()) return cmd_conditional(flags);
    if (self_check->parsed()) return cmd_self_check(flags, tolerance_scale);
  } catch (const edp::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const edp::DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kExitData;
  } catch (const edp::ComputeError& e) {
    std::fprintf(stderr, "computation error: %s\n", e.what());
    return kExitCompute;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitCompute;
  }
  return kExitConfig;
}
