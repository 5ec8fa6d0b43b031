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

#include "edp/dataset.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "edp/errors.hpp"
#include "edp/rng.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;
using namespace edp;
using testing::make_collection;
using testing::make_db;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("edp_dataset_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write(const fs::path& p, const std::string& content) {
  std::ofstream out(p);
  out << content;
}

}  // namespace

TEST_CASE("load_collection reads a directory of per-database CSVs") {
  const fs::path dir = fresh_dir("dir_layout");
  write(dir / "y1.csv", "individual_id,v\na,1.5\nb,2.5\n");
  write(dir / "y2.csv", "individual_id,v\na,3.0\nc,4.0\nc,5.0\n");

  const DatabaseCollection c = load_collection(dir.string());
  CHECK(c.size() == 2);
  CHECK(c.schema() == std::vector<std::string>{"v"});
  CHECK(c.database(0).id == "y1");  // lexicographic file order
  CHECK(c.database(1).row_count() == 3);
  CHECK(c.database(1).values(2, 0) == 5.0);
  CHECK(c.individuals() == std::vector<std::string>{"a", "b", "c"});
  CHECK(c.rows_of(1, "c") == std::vector<Eigen::Index>{1, 2});
}

TEST_CASE("load_collection reads a long-format CSV") {
  const fs::path dir = fresh_dir("long_layout");
  write(dir / "data.csv",
        "database_id,individual_id,v\n"
        "d1,a,1\nd2,a,2\nd3,b,3\nd1,b,4\n");
  const DatabaseCollection c = load_collection((dir / "data.csv").string());
  CHECK(c.size() == 3);
  for (const Database& db : c.databases()) CHECK(db.row_count() <= 2);
  CHECK(c.database(0).id == "d1");  // order of first appearance
  CHECK(c.database(0).individual_ids == std::vector<std::string>{"a", "b"});
}

TEST_CASE("load_collection rejects a single database") {
  const fs::path dir = fresh_dir("single_db");
  write(dir / "data.csv", "database_id,individual_id,v\nd1,a,1\nd1,b,2\n");
  CHECK_THROWS_WITH_AS(load_collection((dir / "data.csv").string()),
                       doctest::Contains("fewer than 2 databases"), DataError);
}

TEST_CASE("load_collection validates input") {
  const fs::path dir = fresh_dir("validation");

  SUBCASE("missing individual_id column") {
    write(dir / "a.csv", "id,v\nx,1\n");
    write(dir / "b.csv", "id,v\nx,1\n");
    CHECK_THROWS_WITH_AS(load_collection(dir.string()),
                         doctest::Contains("individual_id"), DataError);
  }
  SUBCASE("schema mismatch across databases") {
    write(dir / "a.csv", "individual_id,v\nx,1\n");
    write(dir / "b.csv", "individual_id,w\nx,1\n");
    CHECK_THROWS_WITH_AS(load_collection(dir.string()),
                         doctest::Contains("schema mismatch"), DataError);
  }
  SUBCASE("non-numeric value") {
    write(dir / "a.csv", "individual_id,v\nx,1\n");
    write(dir / "b.csv", "individual_id,v\nx,oops\n");
    CHECK_THROWS_WITH_AS(load_collection(dir.string()),
                         doctest::Contains("non-numeric"), DataError);
  }
  SUBCASE("missing numeric cell is an error, not imputed") {
    write(dir / "a.csv", "individual_id,v\nx,1\n");
    write(dir / "b.csv", "individual_id,v\nx,\n");
    CHECK_THROWS_WITH_AS(load_collection(dir.string()),
                         doctest::Contains("missing numeric"), DataError);
  }
  SUBCASE("empty individual id") {
    write(dir / "a.csv", "individual_id,v\nx,1\n");
    write(dir / "b.csv", "individual_id,v\n  ,1\n");
    CHECK_THROWS_AS(load_collection(dir.string()), DataError);
  }
}

TEST_CASE("individual ids are trimmed of surrounding whitespace") {
  const fs::path dir = fresh_dir("trim");
  write(dir / "a.csv", "individual_id,v\n  alice ,1\n");
  write(dir / "b.csv", "individual_id,v\nalice,2\n");
  const DatabaseCollection c = load_collection(dir.string());
  CHECK(c.individuals() == std::vector<std::string>{"alice"});
}

TEST_CASE("individuals is the union across databases") {
  const DatabaseCollection c = make_collection({
      make_db("d1", {{"a", 1}, {"b", 2}}),
      make_db("d2", {{"b", 3}, {"c", 4}}),
  });
  CHECK(individuals(c) == std::vector<std::string>{"a", "b", "c"});
}

TEST_CASE("an empty database contributes no individuals") {
  const DatabaseCollection c = make_collection({
      make_db("d1", {{"a", 1}, {"b", 2}}),
      make_db("d2", {}),
  });
  CHECK(individuals(c) == std::vector<std::string>{"a", "b"});
}

TEST_CASE("drop_individual removes exactly that individual's rows") {
  const Database d = make_db("d", {{"a", 1}, {"i", 2}, {"b", 3}});

  SUBCASE("one row") {
    const Database out = drop_individual(d, "i");
    CHECK(out.row_count() == 2);
    CHECK(out.individual_ids == std::vector<std::string>{"a", "b"});
    CHECK(d.row_count() == 3);  // input untouched
  }
  SUBCASE("multiple rows for one individual") {
    const Database multi = make_db("d", {{"i", 1}, {"a", 2}, {"i", 3}, {"b", 4}});
    const Database out = drop_individual(multi, "i");
    CHECK(out.row_count() == 2);
    CHECK(out.values(0, 0) == 2);
    CHECK(out.values(1, 0) == 4);
  }
  SUBCASE("absent individual is the identity") {
    CHECK(drop_individual(d, "zz") == d);
  }
}

TEST_CASE("drop_individual properties on random databases") {
  Rng rng(99);
  for (int trial = 0; trial < 25; ++trial) {
    std::vector<std::pair<std::string, double>> rows;
    const int n = 1 + static_cast<int>(rng.next_u64() % 30);
    for (int r = 0; r < n; ++r) {
      rows.emplace_back("i" + std::to_string(rng.next_u64() % 6), rng.next_double());
    }
    const Database d = make_db("d", rows);
    const std::string target = "i" + std::to_string(rng.next_u64() % 6);

    const Database once = drop_individual(d, target);
    CHECK(drop_individual(once, target) == once);  // idempotent

    Eigen::Index target_rows = 0;
    for (const auto& id : d.individual_ids) target_rows += id == target;
    CHECK(once.row_count() + target_rows == d.row_count());
  }
}

TEST_CASE("save then load round-trips the collection") {
  Rng rng(7);
  std::vector<Database> dbs;
  for (int j = 0; j < 4; ++j) {
    std::vector<std::pair<std::string, double>> rows;
    for (int r = 0; r < 8; ++r) {
      rows.emplace_back("ind" + std::to_string(r % 5),
                        1000.0 * (rng.next_double() - 0.5));
    }
    dbs.push_back(make_db("db" + std::to_string(j), rows));
  }
  const DatabaseCollection original = make_collection(std::move(dbs));

  const fs::path path = fresh_dir("roundtrip") / "all.csv";
  save_collection(original, path.string());
  const DatabaseCollection reloaded =
      load_collection(path.string(), InputLayout::kLongCsv);
  CHECK(reloaded == original);
}

TEST_CASE("collection rejects duplicate database ids") {
  CHECK_THROWS_AS(make_collection({make_db("d", {{"a", 1}}),
                                   make_db("d", {{"b", 2}})}),
                  DataError);
}
