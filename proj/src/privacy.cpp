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

#include "edp/privacy.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>

#include "edp/errors.hpp"

namespace edp {
namespace {

void parallel_for(Eigen::Index count, int threads,
                  const std::function<void(Eigen::Index)>& body) {
  if (threads <= 0) {
    threads = static_cast<int>(std::thread::hardware_concurrency());
    if (threads <= 0) threads = 1;
  }
  threads = std::min<int>(threads, static_cast<int>(count));
  if (threads <= 1) {
    for (Eigen::Index i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<Eigen::Index> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const Eigen::Index i = next.fetch_add(1);
      if (i >= count) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

// One direction of the excess-mass integral on a shared grid. Cells where
// both densities fall below the floor have no meaningful ratio and
// contribute nothing.
template <typename ArrayT>
double positive_part_integral(const ArrayT& p, const ArrayT& q, double factor,
                              double cell, double floor) {
  const ArrayT gap = (p - factor * q).max(0.0);
  return (p < floor && q < floor).select(0.0, gap).sum() * cell;
}

template <typename ArrayT>
Eigen::ArrayXd deltas_for(const ArrayT& p, const ArrayT& q, double cell,
                          const Eigen::ArrayXd& eps_list, double floor) {
  Eigen::ArrayXd out(eps_list.size());
  for (Eigen::Index e = 0; e < eps_list.size(); ++e) {
    const double factor = std::exp(eps_list(e));
    out(e) = clamp01(std::max(
        positive_part_integral(p, q, factor, cell, floor),
        positive_part_integral(q, p, factor, cell, floor)));
  }
  return out;
}

struct EngineRow {
  std::string id;
  Eigen::ArrayXd deltas;  // one per epsilon
  bool flagged = false;
  std::string note;
  ModelSummary model;
};

struct EngineResult {
  std::vector<EngineRow> rows;  // in sorted individual order
  ModelSummary base_model;
  std::vector<std::string> flags;
};

Eigen::ArrayXd pair_deltas(const DensityModel& base, const DensityModel& other,
                           const Eigen::ArrayXd& eps_list,
                           const PrivacyOptions& opt) {
  if (base.dim == 1) {
    const Grid1d grid = shared_grid(base, other, opt.grid_points_1d);
    const Eigen::ArrayXd p = eval_on_grid(base, grid);
    const Eigen::ArrayXd q = eval_on_grid(other, grid);
    return deltas_for(p, q, grid.step(), eps_list, opt.fit.density_floor);
  }
  const Grid2d grid = shared_grid2(base, other, opt.grid_points_2d);
  const Eigen::ArrayXXd p = eval_on_grid(base, grid);
  const Eigen::ArrayXXd q = eval_on_grid(other, grid);
  return deltas_for(p, q, grid.cell_area(), eps_list, opt.fit.density_floor);
}

EngineResult run_privacy(const DatabaseCollection& c, const QuerySpec& spec,
                         const Eigen::ArrayXd& eps_list, const PrivacyOptions& opt) {
  const std::vector<std::string>& ids = c.individuals();
  if (ids.size() < 2) {
    throw DataError("empirical privacy requires at least 2 distinct individuals");
  }

  const QuerySampleSet base_samples = eval_all(spec, c);
  const DensityModel base_model = fit_density(base_samples, opt);

  EngineResult result;
  result.base_model = summarize(base_model);
  result.rows.resize(ids.size());

  parallel_for(static_cast<Eigen::Index>(ids.size()), opt.threads, [&](Eigen::Index k) {
    EngineRow& row = result.rows[static_cast<std::size_t>(k)];
    row.id = ids[static_cast<std::size_t>(k)];
    try {
      const QuerySampleSet loo = eval_all_without(spec, c, row.id);
      if ((loo.points == base_samples.points).all()) {
        // Individual absent from every database: the distributions coincide.
        row.deltas = Eigen::ArrayXd::Zero(eps_list.size());
        row.model = result.base_model;
        return;
      }
      const DensityModel loo_model = fit_density(loo, opt);
      row.model = summarize(loo_model);
      row.deltas = pair_deltas(base_model, loo_model, eps_list, opt);
    } catch (const std::exception& e) {
      // Fail conservative: an individual we cannot assess is fully at risk.
      row.flagged = true;
      row.note = e.what();
      row.deltas = Eigen::ArrayXd::Ones(eps_list.size());
    }
  });

  int flagged_fits = 0;
  for (const EngineRow& row : result.rows) {
    if (row.flagged) {
      result.flags.push_back("individual '" + row.id +
                             "' failed, delta_i forced to 1: " + row.note);
    } else if (!row.model.flags.empty() && row.model.flags != result.base_model.flags) {
      ++flagged_fits;
    }
  }
  for (const std::string& f : result.base_model.flags) {
    result.flags.push_back("base fit: " + f);
  }
  if (flagged_fits > 0) {
    result.flags.push_back(std::to_string(flagged_fits) +
                           " individual fit(s) carried flags");
  }
  return result;
}

PrivacyReport report_for_eps(const EngineResult& engine, Eigen::Index e, double eps) {
  PrivacyReport report;
  report.epsilon = eps;
  report.base_model = engine.base_model;
  report.flags = engine.flags;

  std::vector<double> deltas_in_id_order;
  deltas_in_id_order.reserve(engine.rows.size());
  report.per_individual.reserve(engine.rows.size());
  const EngineRow* worst = nullptr;
  for (const EngineRow& row : engine.rows) {
    const double d = clamp01(row.deltas(e));
    deltas_in_id_order.push_back(d);
    report.per_individual.push_back({row.id, d, row.flagged, row.note});
    if (worst == nullptr || d > clamp01(worst->deltas(e))) worst = &row;
  }
  report.delta = *std::max_element(deltas_in_id_order.begin(), deltas_in_id_order.end());
  report.delta_star = total_risk(deltas_in_id_order);
  report.worst_model = worst->model;

  std::sort(report.per_individual.begin(), report.per_individual.end(),
            [](const IndividualRisk& a, const IndividualRisk& b) {
              if (a.delta_i != b.delta_i) return a.delta_i > b.delta_i;
              return a.id < b.id;
            });
  return report;
}

void check_eps_grid(const Eigen::ArrayXd& eps_grid) {
  if (eps_grid.size() == 0) throw ConfigError("epsilon grid is empty");
  for (Eigen::Index i = 0; i < eps_grid.size(); ++i) {
    if (!(eps_grid(i) > 0.0)) throw ConfigError("epsilon grid must be strictly positive");
    if (i > 0 && !(eps_grid(i) > eps_grid(i - 1))) {
      throw ConfigError("epsilon grid must be strictly increasing");
    }
  }
}

std::string format_range(double lo, double hi) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "[%.6g, %.6g]", lo, hi);
  return buf;
}

}  // namespace

ModelSummary summarize(const DensityModel& m) {
  ModelSummary s;
  s.estimator = estimator_name(m.estimator);
  if (m.estimator == Estimator::kKde) {
    s.kernel = kernel_name(m.kernel);
    s.scale = m.global_scale;
    s.variable = m.variable_bandwidth();
  }
  s.flags = m.flags;
  return s;
}

DensityModel fit_density(const QuerySampleSet& s, const PrivacyOptions& opt) {
  if (opt.fixed_fit.has_value()) {
    return fit_kde(s, opt.fixed_fit->first, opt.fixed_fit->second);
  }
  if (opt.estimator == Estimator::kEcdfDiff) {
    return ecdf_density(s);
  }
  return select_model(s, opt.fit);
}

double infer_privacy_risk(const QuerySampleSet& q, const QuerySampleSet& q_i,
                          double eps, const PrivacyOptions& opt) {
  if (q.dim != q_i.dim) throw ConfigError("sample sets differ in dimension");
  if (q.size() != q_i.size()) {
    throw ConfigError("sample sets differ in length; expected one response per database");
  }
  if (!(eps >= 0.0) || !std::isfinite(eps)) {
    throw ConfigError("epsilon must be finite and nonnegative");
  }
  const DensityModel p = fit_density(q, opt);
  const DensityModel pi = fit_density(q_i, opt);
  Eigen::ArrayXd eps_list(1);
  eps_list(0) = eps;
  return pair_deltas(p, pi, eps_list, opt)(0);
}

double infer_privacy_risk(const QuerySampleSet& q, const QuerySampleSet& q_i,
                          double eps, const FitConfig& cfg) {
  PrivacyOptions opt;
  opt.fit = cfg;
  return infer_privacy_risk(q, q_i, eps, opt);
}

double total_risk(const std::vector<double>& deltas) {
  double log_complement = 0.0;
  for (const double d : deltas) {
    if (!(d >= 0.0 && d <= 1.0)) {
      throw ConfigError("delta values must lie in [0, 1]");
    }
    log_complement += std::log1p(-d);  // -inf when d == 1, absorbing
  }
  return clamp01(-std::expm1(log_complement));
}

PrivacyReport empirical_privacy(const DatabaseCollection& c, const QuerySpec& q,
                                double eps, const PrivacyOptions& opt) {
  if (!(eps > 0.0)) throw ConfigError("epsilon must be positive");
  Eigen::ArrayXd eps_list(1);
  eps_list(0) = eps;
  const EngineResult engine = run_privacy(c, q, eps_list, opt);
  return report_for_eps(engine, 0, eps);
}

RiskCurve risk_curve(const DatabaseCollection& c, const QuerySpec& q,
                     const Eigen::ArrayXd& eps_grid, const PrivacyOptions& opt) {
  check_eps_grid(eps_grid);
  const EngineResult engine = run_privacy(c, q, eps_grid, opt);

  RiskCurve curve;
  curve.base_model = engine.base_model;
  curve.flags = engine.flags;
  curve.points.reserve(static_cast<std::size_t>(eps_grid.size()));
  std::vector<double> deltas(engine.rows.size());
  for (Eigen::Index e = 0; e < eps_grid.size(); ++e) {
    for (std::size_t k = 0; k < engine.rows.size(); ++k) {
      deltas[k] = clamp01(engine.rows[k].deltas(e));
    }
    RiskPoint point;
    point.epsilon = eps_grid(e);
    point.delta = *std::max_element(deltas.begin(), deltas.end());
    point.delta_star = total_risk(deltas);
    curve.points.push_back(point);
  }
  return curve;
}

ConditionalReport conditional_privacy(const DatabaseCollection& c,
                                      const QuerySpec& f, const QuerySpec& g,
                                      int bucket_count, double eps,
                                      const PrivacyOptions& opt) {
  if (bucket_count < 1) throw ConfigError("bucket_count must be at least 1");
  if (g.dim() != 1) throw ConfigError("adversary query must be 1-dimensional");
  const QuerySampleSet g_samples = eval_all(g, c);
  const Eigen::ArrayXd g_vals = g_samples.column(0);

  const auto n = static_cast<Eigen::Index>(c.size());
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return g_vals(a) < g_vals(b);
  });

  ConditionalReport out;
  double worst_delta = -1.0;
  for (int b = 0; b < bucket_count; ++b) {
    const auto begin = static_cast<Eigen::Index>(
        static_cast<std::int64_t>(b) * n / bucket_count);
    const auto end = static_cast<Eigen::Index>(
        static_cast<std::int64_t>(b + 1) * n / bucket_count);

    BucketReport bucket;
    bucket.database_count = end - begin;
    if (bucket.database_count > 0) {
      bucket.g_lo = g_vals(order[static_cast<std::size_t>(begin)]);
      bucket.g_hi = g_vals(order[static_cast<std::size_t>(end - 1)]);
      bucket.label = format_range(bucket.g_lo, bucket.g_hi);
    } else {
      bucket.label = "(empty)";
    }

    const Eigen::Index floor =
        std::max<Eigen::Index>(opt.min_bucket_samples, 2);
    if (bucket.database_count < floor) {
      out.flags.push_back("bucket " + std::to_string(b) + " " + bucket.label +
                          " has insufficient data (" +
                          std::to_string(bucket.database_count) +
                          " databases), excluded from the worst case");
      out.buckets.push_back(std::move(bucket));
      continue;
    }

    std::vector<Database> members;
    members.reserve(static_cast<std::size_t>(bucket.database_count));
    for (Eigen::Index i = begin; i < end; ++i) {
      members.push_back(c.database(static_cast<std::size_t>(order[static_cast<std::size_t>(i)])));
    }
    DatabaseCollection sub(c.schema(), std::move(members));
    bucket.report = empirical_privacy(sub, f, eps, opt);
    bucket.evaluated = true;
    if (bucket.report.delta > worst_delta) {
      worst_delta = bucket.report.delta;
      out.worst_bucket = b;
    }
    out.buckets.push_back(std::move(bucket));
  }

  if (out.worst_bucket < 0) {
    throw ComputeError("every bucket is below the sample floor; decrease "
                       "bucket_count or min_bucket_samples");
  }
  return out;
}

PrivacyReport joint_privacy(const DatabaseCollection& c, const QuerySpec& f1,
                            const QuerySpec& f2, double eps,
                            const PrivacyOptions& opt) {
  if (f1.dim() != 1 || f2.dim() != 1) {
    throw ConfigError("joint privacy requires two 1-dimensional queries");
  }
  PrivacyReport report = empirical_privacy(c, QuerySpec::joint(f1, f2), eps, opt);
  if (c.size() < 10) {
    report.flags.push_back("low sample count (" + std::to_string(c.size()) +
                           " databases) for a 2-D density fit");
  }
  return report;
}

}  // namespace edp
