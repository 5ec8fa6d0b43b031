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

#ifndef EDP_QUERY_HPP_
#define EDP_QUERY_HPP_

#include <Eigen/Core>

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "edp/dataset.hpp"

namespace edp {

// Deterministic statistical query. Scalar kinds: sum, mean, count,
// quantile(q); `joint` pairs two scalar queries into a 2-D response.
// Additional scalar kinds may be registered by name at runtime.
struct QuerySpec {
  std::string kind;
  std::string column;  // unused for count
  double q = 0.5;      // quantile fraction, in (0, 1)
  std::vector<QuerySpec> parts;  // exactly 2 for joint

  int dim() const { return kind == "joint" ? 2 : 1; }

  static QuerySpec sum(std::string column);
  static QuerySpec mean(std::string column);
  static QuerySpec count();
  static QuerySpec quantile(std::string column, double q);
  static QuerySpec joint(QuerySpec first, QuerySpec second);
};

// Query responses, one row per database, in collection order.
struct QuerySampleSet {
  int dim = 1;
  Eigen::ArrayXXd points;  // n x dim

  Eigen::Index size() const { return points.rows(); }
  Eigen::ArrayXd column(int axis) const { return points.col(axis); }
};

// Extension seam: a scalar query evaluator receives the database and the
// sorted row indices to exclude (empty when evaluating the full database).
using ScalarQueryFn = std::function<double(
    const Database&, const std::vector<Eigen::Index>& skip_rows,
    const QuerySpec&, const DatabaseCollection&)>;

// Registers a scalar query kind. Throws ConfigError if the name collides
// with a built-in or an existing registration.
void register_query_kind(const std::string& kind, ScalarQueryFn fn);
bool query_kind_registered(const std::string& kind);

// Validates spec against the collection schema (column existence, quantile
// range, joint nesting depth). Throws ConfigError.
void validate_query(const QuerySpec& spec, const DatabaseCollection& c);

// Evaluates one database; result has spec.dim() entries. Sum over an empty
// database is 0; mean/quantile over an empty database throw DataError.
Eigen::ArrayXd evaluate(const QuerySpec& spec, const Database& d,
                        const DatabaseCollection& c);

// Evaluates every database in collection order.
QuerySampleSet eval_all(const QuerySpec& spec, const DatabaseCollection& c);

// Leave-one-individual-out responses: evaluates each database with every row
// of `individual` removed. Databases not containing the individual contribute
// their unchanged response; the output always has one row per database.
QuerySampleSet eval_all_without(const QuerySpec& spec,
                                const DatabaseCollection& c,
                                const std::string& individual);

}  // namespace edp

#endif  // EDP_QUERY_HPP_
