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

#ifndef EDP_DATASET_HPP_
#define EDP_DATASET_HPP_

#include <Eigen/Core>

#include <string>
#include <unordered_map>
#include <vector>

namespace edp {

// One sampled database: a row table keyed by a global individual identifier.
// An individual may occupy zero, one, or several rows. Numeric cells are
// stored densely, one column per schema entry, rows in file order.
struct Database {
  std::string id;
  std::vector<std::string> individual_ids;  // one per row
  Eigen::ArrayXXd values;                   // rows x columns

  Eigen::Index row_count() const { return values.rows(); }
};

// A collection of databases sharing one column schema and one identity
// notion. Immutable after load; safe to share across threads.
class DatabaseCollection {
 public:
  DatabaseCollection(std::vector<std::string> schema,
                     std::vector<Database> databases);

  const std::vector<std::string>& schema() const { return schema_; }
  const std::vector<Database>& databases() const { return databases_; }
  std::size_t size() const { return databases_.size(); }
  const Database& database(std::size_t j) const { return databases_[j]; }

  // Union of individual ids across all databases, lexicographically sorted.
  const std::vector<std::string>& individuals() const { return individuals_; }

  Eigen::Index column_index(const std::string& name) const;  // -1 if absent

  // Row indices of `individual` in database j, ascending; empty if absent.
  const std::vector<Eigen::Index>& rows_of(std::size_t j,
                                           const std::string& individual) const;

 private:
  std::vector<std::string> schema_;
  std::vector<Database> databases_;
  std::vector<std::string> individuals_;
  std::vector<std::unordered_map<std::string, std::vector<Eigen::Index>>>
      row_index_;
};

enum class InputLayout {
  kAuto,       // directory -> kDirectory, file -> kLongCsv
  kDirectory,  // one CSV per database, database id = file stem
  kLongCsv,    // single CSV with a database_id column
};

// Loads and validates a collection. CSV, UTF-8, header row required;
// `individual_id` is reserved, and the long layout additionally reserves
// `database_id`. Every other column must parse as a finite real. Throws
// DataError on malformed input (missing reserved columns, schema mismatch,
// non-numeric cells, fewer than 2 databases).
DatabaseCollection load_collection(const std::string& source,
                                   InputLayout layout = InputLayout::kAuto);

// Writes the collection as a single long-format CSV. load(save(c)) yields a
// collection equal to c.
void save_collection(const DatabaseCollection& c, const std::string& path);

// Sorted union of individual ids (free-function form of c.individuals()).
std::vector<std::string> individuals(const DatabaseCollection& c);

// Copy of d with every row of `individual` removed. Absence is not an error.
Database drop_individual(const Database& d, const std::string& individual);

bool operator==(const Database& a, const Database& b);
bool operator==(const DatabaseCollection& a, const DatabaseCollection& b);

}  // namespace edp

#endif  // EDP_DATASET_HPP_
