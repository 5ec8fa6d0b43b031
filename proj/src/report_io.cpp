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

#include "edp/report_io.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "edp/errors.hpp"

namespace edp {
namespace {

using Json = nlohmann::ordered_json;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void reject_unknown_keys(const Json& obj, std::initializer_list<const char*> known,
                         const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

Json parse_json(const std::string& text, const std::string& what) {
  Json j = Json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) throw ConfigError("invalid JSON in " + what);
  return j;
}

QuerySpec query_from_json_obj(const Json& j);

QuerySpec query_part(const Json& j) {
  if (j.is_array()) throw ConfigError("joint queries cannot nest");
  return query_from_json_obj(j);
}

QuerySpec query_from_json_obj(const Json& j) {
  if (j.is_array()) {
    if (j.size() != 2) throw ConfigError("a joint query is a two-element array");
    return QuerySpec::joint(query_part(j[0]), query_part(j[1]));
  }
  if (!j.is_object()) throw ConfigError("query spec must be an object or a pair");
  reject_unknown_keys(j, {"kind", "column", "q"}, "query spec");
  QuerySpec spec;
  spec.kind = j.value("kind", "");
  if (spec.kind.empty()) throw ConfigError("query spec is missing 'kind'");
  if (spec.kind == "joint") {
    throw ConfigError("a joint query is written as a two-element array");
  }
  spec.column = j.value("column", "");
  if (j.contains("q")) spec.q = j.at("q").get<double>();
  return spec;
}

Json query_to_json_obj(const QuerySpec& spec) {
  if (spec.kind == "joint") {
    return Json::array({query_to_json_obj(spec.parts.at(0)),
                        query_to_json_obj(spec.parts.at(1))});
  }
  Json j;
  j["kind"] = spec.kind;
  if (!spec.column.empty()) j["column"] = spec.column;
  if (spec.kind == "quantile") j["q"] = spec.q;
  return j;
}

Kernel kernel_from_name(const std::string& name) {
  if (name == "gaussian") return Kernel::kGaussian;
  if (name == "laplace") return Kernel::kLaplace;
  throw ConfigError("unknown kernel '" + name + "' (expected gaussian or laplace)");
}

Json model_summary_json(const ModelSummary& m) {
  Json j;
  j["estimator"] = m.estimator;
  if (m.estimator == "kde") {
    j["kernel"] = m.kernel;
    j["scale"] = m.scale;
    j["variable_bandwidth"] = m.variable;
  }
  if (!m.flags.empty()) j["flags"] = m.flags;
  return j;
}

Json report_body_json(const PrivacyReport& report) {
  Json j;
  j["epsilon"] = report.epsilon;
  j["delta"] = report.delta;
  j["delta_star"] = report.delta_star;
  Json individuals = Json::array();
  for (const IndividualRisk& risk : report.per_individual) {
    Json entry;
    entry["id"] = risk.id;
    entry["delta_i"] = risk.delta_i;
    if (risk.flagged) entry["flagged"] = true;
    individuals.push_back(std::move(entry));
  }
  j["individuals"] = std::move(individuals);
  j["flags"] = report.flags;
  Json model;
  model["base"] = model_summary_json(report.base_model);
  model["worst_individual"] = model_summary_json(report.worst_model);
  j["model"] = std::move(model);
  return j;
}

}  // namespace

QuerySpec query_from_json(const std::string& json_text) {
  return query_from_json_obj(parse_json(json_text, "query spec"));
}

std::string query_to_json(const QuerySpec& spec) {
  return query_to_json_obj(spec).dump();
}

RunConfig parse_run_config(const std::string& json_text) {
  const Json j = parse_json(json_text, "run config");
  if (!j.is_object()) throw ConfigError("run config must be a JSON object");
  reject_unknown_keys(j,
                      {"input", "layout", "query", "epsilon", "epsilon_grid",
                       "seed", "out_dir", "threads", "dump_densities",
                       "estimator", "fit", "grid", "buckets", "adversary_query",
                       "noise"},
                      "run config");
  RunConfig cfg;
  cfg.input = j.value("input", "");
  if (j.contains("layout")) {
    const std::string layout = j.at("layout").get<std::string>();
    if (layout == "dir") cfg.layout = InputLayout::kDirectory;
    else if (layout == "long") cfg.layout = InputLayout::kLongCsv;
    else if (layout == "auto") cfg.layout = InputLayout::kAuto;
    else throw ConfigError("layout must be one of dir, long, auto");
  }
  if (j.contains("query")) cfg.query = query_from_json_obj(j.at("query"));
  if (j.contains("epsilon")) cfg.epsilon = j.at("epsilon").get<double>();
  if (j.contains("epsilon_grid")) {
    const auto& grid = j.at("epsilon_grid");
    if (!grid.is_array()) throw ConfigError("epsilon_grid must be an array");
    cfg.epsilon_grid.resize(static_cast<Eigen::Index>(grid.size()));
    for (std::size_t i = 0; i < grid.size(); ++i) {
      cfg.epsilon_grid(static_cast<Eigen::Index>(i)) = grid[i].get<double>();
    }
  }
  if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("out_dir")) cfg.out_dir = j.at("out_dir").get<std::string>();
  if (j.contains("threads")) cfg.options.threads = j.at("threads").get<int>();
  if (j.contains("dump_densities")) cfg.dump_densities = j.at("dump_densities").get<int>();
  if (j.contains("estimator")) {
    const std::string est = j.at("estimator").get<std::string>();
    if (est == "kde") cfg.options.estimator = Estimator::kKde;
    else if (est == "ecdf_diff") cfg.options.estimator = Estimator::kEcdfDiff;
    else throw ConfigError("estimator must be kde or ecdf_diff");
  }
  if (j.contains("fit")) {
    const Json& fit = j.at("fit");
    reject_unknown_keys(fit, {"kernels", "scale_grid", "knn", "cv_folds", "density_floor"},
                        "fit config");
    if (fit.contains("kernels")) {
      cfg.options.fit.kernel_candidates.clear();
      for (const auto& name : fit.at("kernels")) {
        cfg.options.fit.kernel_candidates.push_back(
            kernel_from_name(name.get<std::string>()));
      }
    }
    if (fit.contains("scale_grid")) {
      const auto& grid = fit.at("scale_grid");
      cfg.options.fit.scale_grid.resize(static_cast<Eigen::Index>(grid.size()));
      for (std::size_t i = 0; i < grid.size(); ++i) {
        cfg.options.fit.scale_grid(static_cast<Eigen::Index>(i)) = grid[i].get<double>();
      }
    }
    if (fit.contains("knn")) cfg.options.fit.knn = fit.at("knn").get<int>();
    if (fit.contains("cv_folds")) cfg.options.fit.cv_folds = fit.at("cv_folds").get<int>();
    if (fit.contains("density_floor")) {
      cfg.options.fit.density_floor = fit.at("density_floor").get<double>();
    }
  }
  if (j.contains("grid")) {
    const Json& grid = j.at("grid");
    reject_unknown_keys(grid, {"points_1d", "points_2d"}, "grid config");
    if (grid.contains("points_1d")) {
      cfg.options.grid_points_1d = grid.at("points_1d").get<Eigen::Index>();
    }
    if (grid.contains("points_2d")) {
      cfg.options.grid_points_2d = grid.at("points_2d").get<Eigen::Index>();
    }
  }
  if (j.contains("buckets")) {
    const Json& buckets = j.at("buckets");
    reject_unknown_keys(buckets, {"count", "min_samples"}, "bucket config");
    if (buckets.contains("count")) cfg.bucket_count = buckets.at("count").get<int>();
    if (buckets.contains("min_samples")) {
      cfg.options.min_bucket_samples = buckets.at("min_samples").get<int>();
    }
  }
  if (j.contains("adversary_query")) {
    cfg.adversary_query = query_from_json_obj(j.at("adversary_query"));
  }
  if (j.contains("noise")) {
    const Json& noise = j.at("noise");
    reject_unknown_keys(noise, {"kernel", "scale", "freq_points", "omega_max"},
                        "noise config");
    if (noise.contains("kernel")) {
      cfg.noise_kernel.family = kernel_from_name(noise.at("kernel").get<std::string>());
    }
    if (noise.contains("scale")) {
      if (noise.at("scale").is_string()) {
        if (noise.at("scale").get<std::string>() != "auto") {
          throw ConfigError("noise scale must be a number or \"auto\"");
        }
        cfg.noise_kernel.scale = 0.0;
      } else {
        cfg.noise_kernel.scale = noise.at("scale").get<double>();
      }
    }
    if (noise.contains("freq_points")) {
      cfg.deconvolution.freq_points = noise.at("freq_points").get<Eigen::Index>();
    }
    if (noise.contains("omega_max")) {
      cfg.deconvolution.omega_max = noise.at("omega_max").get<double>();
    }
  }
  return cfg;
}

std::string privacy_report_json(const PrivacyReport& report) {
  return report_body_json(report).dump(2) + "\n";
}

std::string risk_curve_json(const RiskCurve& curve) {
  Json j;
  Json points = Json::array();
  for (const RiskPoint& p : curve.points) {
    Json entry;
    entry["epsilon"] = p.epsilon;
    entry["delta"] = p.delta;
    entry["delta_star"] = p.delta_star;
    points.push_back(std::move(entry));
  }
  j["curve"] = std::move(points);
  j["flags"] = curve.flags;
  j["model"] = model_summary_json(curve.base_model);
  return j.dump(2) + "\n";
}

std::string risk_curve_csv(const RiskCurve& curve) {
  std::string out = "epsilon,delta,delta_star\n";
  for (const RiskPoint& p : curve.points) {
    out += fmt(p.epsilon) + "," + fmt(p.delta) + "," + fmt(p.delta_star) + "\n";
  }
  return out;
}

std::string conditional_report_json(const ConditionalReport& report, double eps) {
  Json j;
  j["epsilon"] = eps;
  Json buckets = Json::array();
  for (const BucketReport& b : report.buckets) {
    Json entry;
    entry["bucket"] = b.label;
    entry["databases"] = b.database_count;
    entry["evaluated"] = b.evaluated;
    if (b.evaluated) entry["report"] = report_body_json(b.report);
    buckets.push_back(std::move(entry));
  }
  j["buckets"] = std::move(buckets);
  j["worst_bucket"] = report.worst_bucket;
  if (report.worst_bucket >= 0) {
    const auto& worst = report.buckets[static_cast<std::size_t>(report.worst_bucket)];
    j["delta"] = worst.report.delta;
    j["delta_star"] = worst.report.delta_star;
  }
  j["flags"] = report.flags;
  return j.dump(2) + "\n";
}

std::string noise_kernel_csv(const NoiseKernel& h) {
  std::string out = "x,density\n";
  if (h.form == NoiseKernel::Form::kTabulated) {
    for (Eigen::Index j = 0; j < h.grid_x.size(); ++j) {
      out += fmt(h.grid_x(j)) + "," + fmt(h.density(j)) + "\n";
    }
    return out;
  }
  // Analytic mixture: tabulate the continuous Laplace part; the point mass
  // lives in the manifest.
  const Eigen::Index points = 4096;
  const double span = 30.0 * std::max(h.lambda, 1e-12);
  const double weight = 1.0 - h.point_mass_weight;
  for (Eigen::Index j = 0; j < points; ++j) {
    const double x = -span + 2.0 * span * static_cast<double>(j) /
                                static_cast<double>(points - 1);
    const double density =
        h.lambda > 0.0
            ? weight * std::exp(-std::abs(x) / h.lambda) / (2.0 * h.lambda)
            : 0.0;
    out += fmt(x) + "," + fmt(density) + "\n";
  }
  return out;
}

std::string noise_manifest_json(const NoiseKernel& h, const QuerySpec& query,
                                double eps, const LambdaSelection& sel,
                                const KernelSpec& k, std::uint64_t seed,
                                const std::string& kernel_file,
                                std::uint64_t kernel_hash) {
  Json j;
  j["query"] = query_to_json_obj(query);
  j["epsilon"] = eps;
  j["lambda"] = h.lambda;
  j["form"] = h.form == NoiseKernel::Form::kAnalyticMixture ? "analytic_mixture"
                                                            : "tabulated";
  j["point_mass_weight"] = h.point_mass_weight;
  j["polar_moment"] = h.polar_moment;
  j["regularization_residual"] = h.regularization_residual;
  Json kernel;
  kernel["family"] = kernel_name(k.family);
  kernel["scale"] = k.scale;
  j["inference_kernel"] = std::move(kernel);

  // Extremes of the per-individual lambda table; the full table can be large.
  if (!sel.per_individual.empty()) {
    const auto max_it = std::max_element(
        sel.per_individual.begin(), sel.per_individual.end(),
        [](const auto& a, const auto& b) { return a.second < b.second; });
    const auto min_it = std::min_element(
        sel.per_individual.begin(), sel.per_individual.end(),
        [](const auto& a, const auto& b) { return a.second < b.second; });
    Json extremes;
    extremes["max_id"] = max_it->first;
    extremes["max_lambda"] = max_it->second;
    extremes["min_id"] = min_it->first;
    extremes["min_lambda"] = min_it->second;
    extremes["individuals"] = sel.per_individual.size();
    j["lambda_by_individual"] = std::move(extremes);
  }

  j["seed"] = seed;
  j["kernel_file"] = kernel_file;
  char hash_buf[20];
  std::snprintf(hash_buf, sizeof(hash_buf), "%016llx",
                static_cast<unsigned long long>(kernel_hash));
  j["kernel_hash"] = hash_buf;
  return j.dump(2) + "\n";
}

ManifestData load_manifest(const std::string& manifest_path) {
  const Json j = parse_json(read_file(manifest_path), manifest_path);
  ManifestData data;
  data.seed = j.value("seed", std::uint64_t{0});
  data.kernel_file = j.value("kernel_file", "noise_kernel.csv");

  const std::string hash_text = j.value("kernel_hash", "");
  data.kernel_hash = std::strtoull(hash_text.c_str(), nullptr, 16);

  const auto dir = std::filesystem::path(manifest_path).parent_path();
  const std::string csv_path = (dir / data.kernel_file).string();
  const std::string csv = read_file(csv_path);
  if (fnv1a_hash(csv) != data.kernel_hash) {
    throw DataError("kernel file " + csv_path +
                    " does not match the hash recorded in the manifest");
  }

  NoiseKernel h;
  h.lambda = j.value("lambda", 0.0);
  h.point_mass_weight = j.value("point_mass_weight", 0.0);
  h.polar_moment = j.value("polar_moment", 0.0);
  h.regularization_residual = j.value("regularization_residual", 0.0);
  const std::string form = j.value("form", "analytic_mixture");
  if (form == "analytic_mixture") {
    h.form = NoiseKernel::Form::kAnalyticMixture;
  } else if (form == "tabulated") {
    h.form = NoiseKernel::Form::kTabulated;
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);  // header
    std::vector<double> xs, ds;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto comma = line.find(',');
      if (comma == std::string::npos) throw DataError("malformed kernel CSV row");
      xs.push_back(std::stod(line.substr(0, comma)));
      ds.push_back(std::stod(line.substr(comma + 1)));
    }
    if (xs.size() < 2) throw DataError("kernel CSV has too few rows");
    const auto n = static_cast<Eigen::Index>(xs.size());
    h.grid_x = Eigen::Map<Eigen::ArrayXd>(xs.data(), n);
    h.density = Eigen::Map<Eigen::ArrayXd>(ds.data(), n);
    h.grid_step = xs[1] - xs[0];
    Eigen::ArrayXd mass = h.density * h.grid_step;
    const double total = mass.sum();
    if (!(total > 0.0)) throw DataError("kernel CSV density is empty");
    mass /= total;
    h.cumulative.resize(n);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      acc += mass(i);
      h.cumulative(i) = acc;
    }
    h.cumulative(n - 1) = 1.0;
  } else {
    throw DataError("unknown kernel form '" + form + "' in manifest");
  }
  data.kernel = h;
  return data;
}

std::uint64_t fnv1a_hash(const std::string& bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (const char ch : bytes) {
    hash ^= static_cast<unsigned char>(ch);
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << content;
}

}  // namespace edp
