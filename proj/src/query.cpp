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

#include "edp/query.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

#include "edp/errors.hpp"

namespace edp {
namespace {

const std::vector<Eigen::Index> kNoRows;

Eigen::Index required_column(const QuerySpec& spec, const DatabaseCollection& c) {
  const Eigen::Index col = c.column_index(spec.column);
  if (col < 0) {
    throw ConfigError("unknown column '" + spec.column + "' in query '" +
                      spec.kind + "'");
  }
  return col;
}

// Applies fn to each kept value of the column, skipping the given sorted rows.
// Iteration is in row order so floating-point reductions are reproducible.
template <typename Fn>
void for_each_kept(const Database& d, Eigen::Index col,
                   const std::vector<Eigen::Index>& skip_rows, Fn&& fn) {
  std::size_t s = 0;
  for (Eigen::Index r = 0; r < d.row_count(); ++r) {
    if (s < skip_rows.size() && skip_rows[s] == r) {
      ++s;
      continue;
    }
    fn(d.values(r, col));
  }
}

Eigen::Index kept_count(const Database& d,
                        const std::vector<Eigen::Index>& skip_rows) {
  return d.row_count() - static_cast<Eigen::Index>(skip_rows.size());
}

double eval_sum(const Database& d, const std::vector<Eigen::Index>& skip_rows,
                const QuerySpec& spec, const DatabaseCollection& c) {
  const Eigen::Index col = required_column(spec, c);
  double acc = 0.0;
  for_each_kept(d, col, skip_rows, [&](double v) { acc += v; });
  return acc;
}

double eval_mean(const Database& d, const std::vector<Eigen::Index>& skip_rows,
                 const QuerySpec& spec, const DatabaseCollection& c) {
  const Eigen::Index n = kept_count(d, skip_rows);
  if (n == 0) throw DataError("mean over empty database '" + d.id + "'");
  return eval_sum(d, skip_rows, spec, c) / static_cast<double>(n);
}

double eval_count(const Database& d, const std::vector<Eigen::Index>& skip_rows,
                  const QuerySpec&, const DatabaseCollection&) {
  return static_cast<double>(kept_count(d, skip_rows));
}

double eval_quantile(const Database& d, const std::vector<Eigen::Index>& skip_rows,
                     const QuerySpec& spec, const DatabaseCollection& c) {
  const Eigen::Index col = required_column(spec, c);
  std::vector<double> vals;
  vals.reserve(static_cast<std::size_t>(kept_count(d, skip_rows)));
  for_each_kept(d, col, skip_rows, [&](double v) { vals.push_back(v); });
  if (vals.empty()) {
    throw DataError("quantile over empty database '" + d.id + "'");
  }
  std::sort(vals.begin(), vals.end());
  // Nearest rank: r in 1..n minimizing |r/n - q|, ties toward the lower rank.
  const double n = static_cast<double>(vals.size());
  const auto base = static_cast<Eigen::Index>(std::floor(spec.q * n));
  const Eigen::Index lo = std::clamp<Eigen::Index>(base, 1, vals.size());
  const Eigen::Index hi = std::clamp<Eigen::Index>(base + 1, 1, vals.size());
  const double dlo = std::abs(static_cast<double>(lo) / n - spec.q);
  const double dhi = std::abs(static_cast<double>(hi) / n - spec.q);
  const Eigen::Index rank = dhi < dlo ? hi : lo;
  return vals[rank - 1];
}

std::map<std::string, ScalarQueryFn>& registry() {
  static auto* r = new std::map<std::string, ScalarQueryFn>{
      {"sum", eval_sum},
      {"mean", eval_mean},
      {"count", eval_count},
      {"quantile", eval_quantile},
  };
  return *r;
}

std::mutex& registry_mutex() {
  static auto* m = new std::mutex;
  return *m;
}

const ScalarQueryFn& lookup(const std::string& kind) {
  std::lock_guard<std::mutex> lock(registry_mutex());
  const auto it = registry().find(kind);
  if (it == registry().end()) {
    throw ConfigError("unknown query kind '" + kind + "'");
  }
  return it->second;
}

double evaluate_scalar(const QuerySpec& spec, const Database& d,
                       const std::vector<Eigen::Index>& skip_rows,
                       const DatabaseCollection& c) {
  const double v = lookup(spec.kind)(d, skip_rows, spec, c);
  if (!std::isfinite(v)) {
    throw ComputeError("query '" + spec.kind + "' produced a non-finite value on database '" +
                       d.id + "'");
  }
  return v;
}

Eigen::ArrayXd evaluate_rows(const QuerySpec& spec, const Database& d,
                             const std::vector<Eigen::Index>& skip_rows,
                             const DatabaseCollection& c) {
  Eigen::ArrayXd out(spec.dim());
  if (spec.kind == "joint") {
    out(0) = evaluate_scalar(spec.parts[0], d, skip_rows, c);
    out(1) = evaluate_scalar(spec.parts[1], d, skip_rows, c);
  } else {
    out(0) = evaluate_scalar(spec, d, skip_rows, c);
  }
  return out;
}

QuerySampleSet eval_collection(const QuerySpec& spec, const DatabaseCollection& c,
                               const std::string* individual) {
  validate_query(spec, c);
  QuerySampleSet s;
  s.dim = spec.dim();
  s.points.resize(static_cast<Eigen::Index>(c.size()), s.dim);
  for (std::size_t j = 0; j < c.size(); ++j) {
    const auto& skip = individual ? c.rows_of(j, *individual) : kNoRows;
    try {
      s.points.row(static_cast<Eigen::Index>(j)) =
          evaluate_rows(spec, c.database(j), skip, c);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::runtime_error& e) {
      throw DataError("database '" + c.database(j).id + "': " + e.what());
    }
  }
  return s;
}

}  // namespace

QuerySpec QuerySpec::sum(std::string column) {
  QuerySpec s;
  s.kind = "sum";
  s.column = std::move(column);
  return s;
}

QuerySpec QuerySpec::mean(std::string column) {
  QuerySpec s;
  s.kind = "mean";
  s.column = std::move(column);
  return s;
}

QuerySpec QuerySpec::count() {
  QuerySpec s;
  s.kind = "count";
  return s;
}

QuerySpec QuerySpec::quantile(std::string column, double q) {
  QuerySpec s;
  s.kind = "quantile";
  s.column = std::move(column);
  s.q = q;
  return s;
}

QuerySpec QuerySpec::joint(QuerySpec first, QuerySpec second) {
  QuerySpec s;
  s.kind = "joint";
  s.parts.push_back(std::move(first));
  s.parts.push_back(std::move(second));
  return s;
}

void register_query_kind(const std::string& kind, ScalarQueryFn fn) {
  if (kind == "joint") throw ConfigError("'joint' is structural and cannot be registered");
  std::lock_guard<std::mutex> lock(registry_mutex());
  if (!registry().emplace(kind, std::move(fn)).second) {
    throw ConfigError("query kind '" + kind + "' is already registered");
  }
}

bool query_kind_registered(const std::string& kind) {
  std::lock_guard<std::mutex> lock(registry_mutex());
  return registry().count(kind) > 0;
}

void validate_query(const QuerySpec& spec, const DatabaseCollection& c) {
  if (spec.kind == "joint") {
    if (spec.parts.size() != 2) {
      throw ConfigError("joint query requires exactly 2 component queries");
    }
    for (const QuerySpec& part : spec.parts) {
      if (part.kind == "joint") {
        throw ConfigError("joint queries cannot nest (response dimension <= 2)");
      }
      validate_query(part, c);
    }
    return;
  }
  if (!query_kind_registered(spec.kind)) {
    throw ConfigError("unknown query kind '" + spec.kind + "'");
  }
  if (spec.kind == "quantile" && !(spec.q > 0.0 && spec.q < 1.0)) {
    throw ConfigError("quantile fraction must lie in (0, 1)");
  }
  if (spec.kind != "count" && c.column_index(spec.column) < 0) {
    throw ConfigError("unknown column '" + spec.column + "' in query '" + spec.kind + "'");
  }
}

Eigen::ArrayXd evaluate(const QuerySpec& spec, const Database& d,
                        const DatabaseCollection& c) {
  return evaluate_rows(spec, d, kNoRows, c);
}

QuerySampleSet eval_all(const QuerySpec& spec, const DatabaseCollection& c) {
  return eval_collection(spec, c, nullptr);
}

QuerySampleSet eval_all_without(const QuerySpec& spec, const DatabaseCollection& c,
                                const std::string& individual) {
  return eval_collection(spec, c, &individual);
}

}  // namespace edp
