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

#include <doctest.h>

#include <cmath>

#include "edp/errors.hpp"
#include "edp/rng.hpp"
#include "test_util.hpp"

using namespace edp;
using testing::make_collection;
using testing::make_db;

namespace {

DatabaseCollection two_db_collection() {
  return make_collection({
      make_db("d1", {{"a", 1.5}, {"b", 2.5}}),
      make_db("d2", {{"a", 3.0}, {"c", 4.0}}),
  });
}

}  // namespace

TEST_CASE("evaluate computes the built-in scalar queries") {
  const DatabaseCollection c = two_db_collection();
  const Database& d = c.database(0);

  CHECK(evaluate(QuerySpec::sum("v"), d, c)(0) == 4.0);
  CHECK(evaluate(QuerySpec::mean("v"), d, c)(0) == 2.0);
  CHECK(evaluate(QuerySpec::count(), d, c)(0) == 2.0);
  CHECK(evaluate(QuerySpec::quantile("v", 0.5), d, c)(0) == 1.5);
}

TEST_CASE("joint evaluation pairs the component responses") {
  const DatabaseCollection c = two_db_collection();
  const Eigen::ArrayXd r =
      evaluate(QuerySpec::joint(QuerySpec::sum("v"), QuerySpec::count()),
               c.database(0), c);
  CHECK(r.size() == 2);
  CHECK(r(0) == 4.0);
  CHECK(r(1) == 2.0);
}

TEST_CASE("degenerate databases") {
  const DatabaseCollection c = make_collection({
      make_db("full", {{"a", 1.0}}),
      make_db("empty", {}),
  });
  CHECK(evaluate(QuerySpec::sum("v"), c.database(1), c)(0) == 0.0);
  CHECK_THROWS_WITH_AS(evaluate(QuerySpec::mean("v"), c.database(1), c),
                       doctest::Contains("empty database"), DataError);
  CHECK_THROWS_AS(evaluate(QuerySpec::quantile("v", 0.5), c.database(1), c),
                  DataError);
}

TEST_CASE("unknown column and unknown kind are config errors") {
  const DatabaseCollection c = two_db_collection();
  CHECK_THROWS_WITH_AS(evaluate(QuerySpec::sum("nope"), c.database(0), c),
                       doctest::Contains("unknown column"), ConfigError);
  QuerySpec bogus;
  bogus.kind = "median";
  CHECK_THROWS_AS(eval_all(bogus, c), ConfigError);
  CHECK_THROWS_AS(validate_query(QuerySpec::quantile("v", 1.5), c), ConfigError);
}

TEST_CASE("quantile uses nearest rank with ties toward the lower index") {
  const DatabaseCollection c = make_collection({
      make_db("d1", {{"a", 10}, {"b", 20}, {"c", 30}, {"d", 40}}),
      make_db("d2", {{"a", 1}}),
  });
  const Database& d = c.database(0);
  // q*n = 2 exactly: rank 2 against rank 3 ties at distance 0 vs 0.25.
  CHECK(evaluate(QuerySpec::quantile("v", 0.5), d, c)(0) == 20);
  // q*n = 2.5: ranks 2 and 3 are equidistant, lower wins.
  CHECK(evaluate(QuerySpec::quantile("v", 0.625), d, c)(0) == 20);
  CHECK(evaluate(QuerySpec::quantile("v", 0.9), d, c)(0) == 40);
  CHECK(evaluate(QuerySpec::quantile("v", 0.1), d, c)(0) == 10);
}

TEST_CASE("eval_all evaluates in collection order") {
  const DatabaseCollection c = two_db_collection();
  const QuerySampleSet s = eval_all(QuerySpec::count(), c);
  CHECK(s.size() == 2);
  CHECK(s.points(0, 0) == 2.0);
  CHECK(s.points(1, 0) == 2.0);
}

TEST_CASE("eval_all names the failing database") {
  const DatabaseCollection c = make_collection({
      make_db("good", {{"a", 1.0}}),
      make_db("bad", {}),
  });
  CHECK_THROWS_WITH_AS(eval_all(QuerySpec::mean("v"), c),
                       doctest::Contains("'bad'"), DataError);
}

TEST_CASE("eval_all_without removes exactly one individual's influence") {
  const DatabaseCollection c = make_collection({
      make_db("d1", {{"i", 1.0}, {"a", 5.0}}),
      make_db("d2", {{"i", 1.0}, {"b", 7.0}}),
      make_db("d3", {{"i", 1.0}, {"c", 9.0}}),
  });
  const QuerySpec sum = QuerySpec::sum("v");
  const QuerySampleSet full = eval_all(sum, c);
  const QuerySampleSet without = eval_all_without(sum, c, "i");
  CHECK(without.size() == full.size());
  for (Eigen::Index j = 0; j < full.size(); ++j) {
    CHECK(full.points(j, 0) - without.points(j, 0) == 1.0);
  }

  SUBCASE("absent individual leaves every response unchanged") {
    const QuerySampleSet same = eval_all_without(sum, c, "ghost");
    CHECK((same.points == full.points).all());
  }
  SUBCASE("dropping an individual that empties a database fails for mean") {
    const DatabaseCollection solo = make_collection({
        make_db("d1", {{"i", 1.0}}),
        make_db("d2", {{"i", 2.0}, {"a", 3.0}}),
    });
    CHECK_THROWS_AS(eval_all_without(QuerySpec::mean("v"), solo, "i"), DataError);
  }
}

TEST_CASE("sum leave-one-out equals the direct row-scan contribution") {
  Rng rng(41);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<Database> dbs;
    for (int j = 0; j < 5; ++j) {
      std::vector<std::pair<std::string, double>> rows;
      const int n = 3 + static_cast<int>(rng.next_u64() % 20);
      for (int r = 0; r < n; ++r) {
        rows.emplace_back("i" + std::to_string(rng.next_u64() % 7),
                          10.0 * (rng.next_double() - 0.5));
      }
      dbs.push_back(make_db("db" + std::to_string(j), rows));
    }
    const DatabaseCollection c = make_collection(std::move(dbs));
    const QuerySpec sum = QuerySpec::sum("v");
    const QuerySampleSet full = eval_all(sum, c);

    for (const std::string& id : c.individuals()) {
      const QuerySampleSet loo = eval_all_without(sum, c, id);
      for (std::size_t j = 0; j < c.size(); ++j) {
        const Database& db = c.database(j);
        double contribution = 0.0;
        for (Eigen::Index r = 0; r < db.row_count(); ++r) {
          if (db.individual_ids[r] == id) contribution += db.values(r, 0);
        }
        const auto jj = static_cast<Eigen::Index>(j);
        CHECK(full.points(jj, 0) - loo.points(jj, 0) ==
              doctest::Approx(contribution).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("evaluate is deterministic") {
  const DatabaseCollection c = two_db_collection();
  const QuerySpec q = QuerySpec::quantile("v", 0.3);
  const Eigen::ArrayXd first = evaluate(q, c.database(0), c);
  for (int i = 0; i < 5; ++i) {
    CHECK((evaluate(q, c.database(0), c) == first).all());
  }
}

TEST_CASE("registered query kinds extend the vocabulary") {
  const std::string kind = "test_range";
  if (!query_kind_registered(kind)) {
    register_query_kind(
        kind, [](const Database& d, const std::vector<Eigen::Index>& skip,
                 const QuerySpec& spec, const DatabaseCollection& c) {
          double lo = 0.0, hi = 0.0;
          bool first = true;
          std::size_t s = 0;
          const Eigen::Index col = c.column_index(spec.column);
          for (Eigen::Index r = 0; r < d.row_count(); ++r) {
            if (s < skip.size() && skip[s] == r) {
              ++s;
              continue;
            }
            const double v = d.values(r, col);
            if (first) lo = hi = v, first = false;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
          }
          return hi - lo;
        });
  }
  const DatabaseCollection c = two_db_collection();
  QuerySpec spec;
  spec.kind = kind;
  spec.column = "v";
  CHECK(evaluate(spec, c.database(0), c)(0) == 1.0);
  CHECK_THROWS_AS(register_query_kind("sum", nullptr), ConfigError);
}
