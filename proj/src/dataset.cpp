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

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "edp/errors.hpp"

namespace edp {
namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

// One CSV record; quoted fields may contain commas, newlines, and doubled
// quotes. Returns false at end of stream.
bool read_record(std::istream& in, std::vector<std::string>& fields) {
  fields.clear();
  std::string field;
  bool in_quotes = false;
  bool saw_any = false;
  int c;
  while ((c = in.get()) != EOF) {
    saw_any = true;
    const char ch = static_cast<char>(c);
    if (in_quotes) {
      if (ch == '"') {
        if (in.peek() == '"') {
          field.push_back('"');
          in.get();
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(ch);
      }
    } else if (ch == '"') {
      in_quotes = true;
    } else if (ch == ',') {
      fields.push_back(field);
      field.clear();
    } else if (ch == '\n') {
      break;
    } else if (ch == '\r') {
      if (in.peek() == '\n') in.get();
      break;
    } else {
      field.push_back(ch);
    }
  }
  if (!saw_any) return false;
  fields.push_back(field);
  return true;
}

bool is_blank(const std::vector<std::string>& fields) {
  return fields.size() == 1 && trim(fields[0]).empty();
}

double parse_number(const std::string& raw, const std::string& context) {
  const std::string s = trim(raw);
  if (s.empty()) {
    throw DataError("missing numeric value in " + context);
  }
  const char* begin = s.data();
  const char* end = begin + s.size();
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) {
    throw DataError("non-numeric value '" + s + "' in " + context);
  }
  return value;
}

struct ParsedHeader {
  std::vector<std::string> columns;  // value columns, in file order
  Eigen::Index individual_col = -1;
  Eigen::Index database_col = -1;
  std::vector<Eigen::Index> value_cols;
};

ParsedHeader parse_header(const std::vector<std::string>& fields,
                          bool long_layout, const std::string& context) {
  ParsedHeader h;
  for (std::size_t k = 0; k < fields.size(); ++k) {
    const std::string name = trim(fields[k]);
    if (name == "individual_id") {
      h.individual_col = static_cast<Eigen::Index>(k);
    } else if (long_layout && name == "database_id") {
      h.database_col = static_cast<Eigen::Index>(k);
    } else {
      h.columns.push_back(name);
      h.value_cols.push_back(static_cast<Eigen::Index>(k));
    }
  }
  if (h.individual_col < 0) {
    throw DataError("missing individual_id column in " + context);
  }
  if (long_layout && h.database_col < 0) {
    throw DataError("missing database_id column in " + context);
  }
  return h;
}

Database read_database_csv(const std::string& path, const std::string& db_id,
                           std::vector<std::string>* schema_out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);

  std::vector<std::string> fields;
  if (!read_record(in, fields)) throw DataError("empty file " + path);
  const ParsedHeader header = parse_header(fields, /*long_layout=*/false, path);
  *schema_out = header.columns;

  Database db;
  db.id = db_id;
  std::vector<double> cells;
  Eigen::Index rows = 0;
  while (read_record(in, fields)) {
    if (is_blank(fields)) continue;
    if (fields.size() != header.columns.size() + 1) {
      throw DataError("row " + std::to_string(rows + 2) + " of " + path +
                      " has " + std::to_string(fields.size()) + " fields, expected " +
                      std::to_string(header.columns.size() + 1));
    }
    const std::string individual = trim(fields[header.individual_col]);
    if (individual.empty()) {
      throw DataError("empty individual_id at row " + std::to_string(rows + 2) +
                      " of " + path);
    }
    db.individual_ids.push_back(individual);
    for (std::size_t k = 0; k < header.value_cols.size(); ++k) {
      cells.push_back(parse_number(fields[header.value_cols[k]],
                                   "column '" + header.columns[k] + "' of " + path));
    }
    ++rows;
  }

  const Eigen::Index cols = static_cast<Eigen::Index>(header.columns.size());
  db.values.resize(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) db.values(r, c) = cells[r * cols + c];
  return db;
}

DatabaseCollection load_directory(const std::string& source) {
  namespace fs = std::filesystem;
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(source)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.size() < 2) {
    throw DataError("fewer than 2 databases: found " +
                    std::to_string(files.size()) + " CSV files in " + source);
  }

  std::vector<std::string> schema;
  std::vector<Database> databases;
  for (const auto& file : files) {
    std::vector<std::string> file_schema;
    Database db = read_database_csv(file.string(), file.stem().string(), &file_schema);
    if (databases.empty()) {
      schema = file_schema;
    } else if (file_schema != schema) {
      throw DataError("schema mismatch: " + file.string() +
                      " does not match the first database's columns");
    }
    databases.push_back(std::move(db));
  }
  return DatabaseCollection(std::move(schema), std::move(databases));
}

DatabaseCollection load_long_csv(const std::string& source) {
  std::ifstream in(source, std::ios::binary);
  if (!in) throw DataError("cannot open " + source);

  std::vector<std::string> fields;
  if (!read_record(in, fields)) throw DataError("empty file " + source);
  const ParsedHeader header = parse_header(fields, /*long_layout=*/true, source);

  // Databases in order of first appearance; row order preserved within each.
  std::vector<std::string> db_order;
  std::unordered_map<std::string, std::size_t> db_pos;
  std::vector<std::vector<std::string>> ids_by_db;
  std::vector<std::vector<double>> cells_by_db;

  Eigen::Index line = 1;
  while (read_record(in, fields)) {
    ++line;
    if (is_blank(fields)) continue;
    if (fields.size() != header.columns.size() + 2) {
      throw DataError("row " + std::to_string(line) + " of " + source +
                      " has " + std::to_string(fields.size()) + " fields, expected " +
                      std::to_string(header.columns.size() + 2));
    }
    const std::string db_id = trim(fields[header.database_col]);
    if (db_id.empty()) {
      throw DataError("empty database_id at row " + std::to_string(line) + " of " + source);
    }
    const std::string individual = trim(fields[header.individual_col]);
    if (individual.empty()) {
      throw DataError("empty individual_id at row " + std::to_string(line) + " of " + source);
    }
    auto [it, inserted] = db_pos.try_emplace(db_id, db_order.size());
    if (inserted) {
      db_order.push_back(db_id);
      ids_by_db.emplace_back();
      cells_by_db.emplace_back();
    }
    const std::size_t j = it->second;
    ids_by_db[j].push_back(individual);
    for (std::size_t k = 0; k < header.value_cols.size(); ++k) {
      cells_by_db[j].push_back(parse_number(
          fields[header.value_cols[k]],
          "column '" + header.columns[k] + "' of " + source));
    }
  }

  if (db_order.size() < 2) {
    throw DataError("fewer than 2 databases: " + source + " has " +
                    std::to_string(db_order.size()) + " database_id value(s)");
  }

  const Eigen::Index cols = static_cast<Eigen::Index>(header.columns.size());
  std::vector<Database> databases;
  databases.reserve(db_order.size());
  for (std::size_t j = 0; j < db_order.size(); ++j) {
    Database db;
    db.id = db_order[j];
    db.individual_ids = std::move(ids_by_db[j]);
    const Eigen::Index rows = static_cast<Eigen::Index>(db.individual_ids.size());
    db.values.resize(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c)
        db.values(r, c) = cells_by_db[j][static_cast<std::size_t>(r * cols + c)];
    databases.push_back(std::move(db));
  }
  return DatabaseCollection(header.columns, std::move(databases));
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += "\"\"";
    else out.push_back(ch);
  }
  out += "\"";
  return out;
}

}  // namespace

DatabaseCollection::DatabaseCollection(std::vector<std::string> schema,
                                       std::vector<Database> databases)
    : schema_(std::move(schema)), databases_(std::move(databases)) {
  if (databases_.size() < 2) {
    throw DataError("fewer than 2 databases in collection");
  }
  std::set<std::string> db_ids;
  std::set<std::string> ids;
  row_index_.resize(databases_.size());
  for (std::size_t j = 0; j < databases_.size(); ++j) {
    const Database& db = databases_[j];
    if (!db_ids.insert(db.id).second) {
      throw DataError("duplicate database id '" + db.id + "'");
    }
    if (static_cast<std::size_t>(db.values.rows()) != db.individual_ids.size()) {
      throw DataError("database '" + db.id + "' has inconsistent row counts");
    }
    if (db.values.cols() != static_cast<Eigen::Index>(schema_.size())) {
      throw DataError("database '" + db.id + "' does not match the collection schema");
    }
    for (Eigen::Index r = 0; r < db.row_count(); ++r) {
      const std::string& individual = db.individual_ids[r];
      if (individual.empty()) {
        throw DataError("empty individual_id in database '" + db.id + "'");
      }
      ids.insert(individual);
      row_index_[j][individual].push_back(r);
    }
  }
  individuals_.assign(ids.begin(), ids.end());
}

Eigen::Index DatabaseCollection::column_index(const std::string& name) const {
  for (std::size_t k = 0; k < schema_.size(); ++k) {
    if (schema_[k] == name) return static_cast<Eigen::Index>(k);
  }
  return -1;
}

const std::vector<Eigen::Index>& DatabaseCollection::rows_of(
    std::size_t j, const std::string& individual) const {
  static const std::vector<Eigen::Index> kEmpty;
  const auto& index = row_index_.at(j);
  const auto it = index.find(individual);
  return it == index.end() ? kEmpty : it->second;
}

DatabaseCollection load_collection(const std::string& source, InputLayout layout) {
  namespace fs = std::filesystem;
  if (layout == InputLayout::kAuto) {
    layout = fs::is_directory(source) ? InputLayout::kDirectory : InputLayout::kLongCsv;
  }
  if (layout == InputLayout::kDirectory) {
    if (!fs::is_directory(source)) throw DataError(source + " is not a directory");
    return load_directory(source);
  }
  if (!fs::is_regular_file(source)) throw DataError(source + " is not a file");
  return load_long_csv(source);
}

void save_collection(const DatabaseCollection& c, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << "database_id,individual_id";
  for (const auto& col : c.schema()) out << ',' << csv_escape(col);
  out << '\n';
  char buf[40];
  for (const Database& db : c.databases()) {
    for (Eigen::Index r = 0; r < db.row_count(); ++r) {
      out << csv_escape(db.id) << ',' << csv_escape(db.individual_ids[r]);
      for (Eigen::Index k = 0; k < db.values.cols(); ++k) {
        std::snprintf(buf, sizeof(buf), "%.17g", db.values(r, k));
        out << ',' << buf;
      }
      out << '\n';
    }
  }
}

std::vector<std::string> individuals(const DatabaseCollection& c) {
  return c.individuals();
}

Database drop_individual(const Database& d, const std::string& individual) {
  Database out;
  out.id = d.id;
  std::vector<Eigen::Index> keep;
  keep.reserve(d.individual_ids.size());
  for (Eigen::Index r = 0; r < d.row_count(); ++r) {
    if (d.individual_ids[r] != individual) keep.push_back(r);
  }
  out.individual_ids.reserve(keep.size());
  out.values.resize(static_cast<Eigen::Index>(keep.size()), d.values.cols());
  for (std::size_t r = 0; r < keep.size(); ++r) {
    out.individual_ids.push_back(d.individual_ids[keep[r]]);
    out.values.row(static_cast<Eigen::Index>(r)) = d.values.row(keep[r]);
  }
  return out;
}

bool operator==(const Database& a, const Database& b) {
  return a.id == b.id && a.individual_ids == b.individual_ids &&
         a.values.rows() == b.values.rows() && a.values.cols() == b.values.cols() &&
         (a.values == b.values).all();
}

bool operator==(const DatabaseCollection& a, const DatabaseCollection& b) {
  if (a.schema() != b.schema() || a.size() != b.size()) return false;
  for (std::size_t j = 0; j < a.size(); ++j) {
    if (!(a.database(j) == b.database(j))) return false;
  }
  return true;
}

}  // namespace edp
