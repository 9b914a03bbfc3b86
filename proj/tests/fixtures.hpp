#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include "simpli2/catalog.hpp"
#include "simpli2/join_graph.hpp"
#include "simpli2/query.hpp"

namespace fixtures {

inline std::string data_path(const std::string& rel) { return std::string(SIMPLI2_DATA_DIR) + "/" + rel; }

inline std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

inline const simpli2::Catalog& job_catalog() {
  static const auto cat = simpli2::load_catalog(data_path("job/imdb_catalog.json"));
  return cat;
}

inline std::string job_query_text(const std::string& name) { return read_file(data_path("job/queries/" + name + ".sql")); }

inline simpli2::QueryModel job_query(const std::string& name) {
  return simpli2::parse_query(job_query_text(name), job_catalog());
}

inline simpli2::JoinGraph job_graph(const std::string& name) {
  return simpli2::build_join_graph(job_query(name), job_catalog());
}

/// A -- B catalog: A(id key, rows 100), B(a_id -> A.id, rows 10).
inline const char* two_table_catalog = R"({
  "tables": [
    {"name": "a", "row_count": 100, "columns": ["id", "x"], "unique_keys": [["id"]]},
    {"name": "b", "row_count": 10, "columns": ["id", "a_id", "y"], "unique_keys": [["id"]]}
  ],
  "foreign_keys": [
    {"from_table": "b", "from_columns": ["a_id"], "to_table": "a", "to_columns": ["id"]}
  ]
})";

}  // namespace fixtures
