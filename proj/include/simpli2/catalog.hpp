#pragma once

#include <algorithm>
#include <concepts>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "simpli2/error.hpp"

namespace simpli2 {

struct TableDef {
  std::string name;
  std::uint64_t row_count = 0;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> unique_keys;

  bool has_column(std::string_view column) const {
    return std::find(columns.begin(), columns.end(), column) != columns.end();
  }

  bool operator==(const TableDef&) const = default;
};

struct ForeignKeyDef {
  std::string from_table;
  std::vector<std::string> from_columns;
  std::string to_table;
  std::vector<std::string> to_columns;

  std::string describe() const {
    auto join = [](const std::vector<std::string>& cols) {
      std::string out;
      for (const auto& c : cols) out += (out.empty() ? "" : ",") + c;
      return out;
    };
    return from_table + "(" + join(from_columns) + ") -> " + to_table + "(" + join(to_columns) + ")";
  }

  bool operator==(const ForeignKeyDef&) const = default;
};

/// The only inputs the planner consumes: table sizes and single-column key
/// membership. Anything that builds a join graph is written against this
/// concept so that no other catalog field can leak into planning.
template <class T>
concept ConstraintSource = requires(const T& source, std::string_view table, std::string_view column) {
  { source.row_count(table) } -> std::convertible_to<std::uint64_t>;
  { source.is_key_column(table, column) } -> std::convertible_to<bool>;
};

/// Schema metadata: tables, their sizes and unique keys, and foreign keys.
/// Immutable after construction through `Catalog::make` / `load_catalog`.
class Catalog {
public:
  Catalog() = default;

  /// Validates and builds. Throws ValidationError / ReferenceError with
  /// table/column context.
  static Catalog make(std::vector<TableDef> tables, std::vector<ForeignKeyDef> foreign_keys) {
    Catalog cat;
    for (auto& table : tables) {
      if (table.name.empty()) throw ValidationError("table with empty name");
      if (table.columns.empty()) throw ValidationError("table '" + table.name + "' declares no columns");
      std::set<std::string> seen;
      for (const auto& column : table.columns) {
        if (!seen.insert(column).second)
          throw ValidationError("table '" + table.name + "' declares column '" + column + "' twice");
      }
      for (const auto& key : table.unique_keys) {
        if (key.empty()) throw ValidationError("table '" + table.name + "' declares an empty unique key");
        for (const auto& column : key) {
          if (!table.has_column(column))
            throw ReferenceError("unique key of table '" + table.name + "' names unknown column '" + column + "'");
        }
      }
      auto name = table.name;
      if (!cat.tables_.emplace(name, std::move(table)).second)
        throw ValidationError("duplicate table name '" + name + "'");
    }
    for (auto& fk : foreign_keys) {
      auto from = cat.tables_.find(fk.from_table);
      if (from == cat.tables_.end())
        throw ReferenceError("foreign key " + fk.describe() + ": unknown table '" + fk.from_table + "'");
      auto to = cat.tables_.find(fk.to_table);
      if (to == cat.tables_.end())
        throw ReferenceError("foreign key " + fk.describe() + ": unknown table '" + fk.to_table + "'");
      if (fk.from_columns.empty() || fk.from_columns.size() != fk.to_columns.size())
        throw ValidationError("foreign key " + fk.describe() + ": column lists differ in length");
      for (const auto& c : fk.from_columns) {
        if (!from->second.has_column(c))
          throw ReferenceError("foreign key " + fk.describe() + ": unknown column '" + fk.from_table + "." + c + "'");
      }
      for (const auto& c : fk.to_columns) {
        if (!to->second.has_column(c))
          throw ReferenceError("foreign key " + fk.describe() + ": unknown column '" + fk.to_table + "." + c + "'");
      }
      const auto& keys = to->second.unique_keys;
      if (std::find(keys.begin(), keys.end(), fk.to_columns) == keys.end())
        throw ReferenceError("foreign key " + fk.describe() + ": referenced columns are not a unique key of '" +
                             fk.to_table + "'");
    }
    cat.foreign_keys_ = std::move(foreign_keys);
    return cat;
  }

  const std::map<std::string, TableDef, std::less<>>& tables() const { return tables_; }
  const std::vector<ForeignKeyDef>& foreign_keys() const { return foreign_keys_; }

  bool has_table(std::string_view name) const { return tables_.find(name) != tables_.end(); }

  const TableDef& table(std::string_view name) const {
    auto it = tables_.find(name);
    if (it == tables_.end()) throw ReferenceError("unknown table '" + std::string(name) + "'");
    return it->second;
  }

  std::uint64_t row_count(std::string_view name) const { return table(name).row_count; }

  /// True iff `column` alone is a declared unique key of `table_name`.
  /// Composite keys never qualify.
  bool is_key_column(std::string_view table_name, std::string_view column) const {
    const auto& def = table(table_name);
    if (!def.has_column(column))
      throw ReferenceError("unknown column '" + std::string(table_name) + "." + std::string(column) + "'");
    return std::any_of(def.unique_keys.begin(), def.unique_keys.end(),
                       [&](const auto& key) { return key.size() == 1 && key.front() == column; });
  }

  bool operator==(const Catalog&) const = default;

private:
  std::map<std::string, TableDef, std::less<>> tables_;
  std::vector<ForeignKeyDef> foreign_keys_;
};

static_assert(ConstraintSource<Catalog>);

namespace detail {

inline void reject_unknown_fields(const nlohmann::json& object, std::initializer_list<std::string_view> allowed,
                                  const std::string& context) {
  for (const auto& [key, value] : object.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw ParseError(context + ": unknown field '" + key + "'");
  }
}

template <class T>
T required(const nlohmann::json& object, const char* field, const std::string& context) {
  auto it = object.find(field);
  if (it == object.end()) throw ParseError(context + ": missing field '" + field + "'");
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ParseError(context + ": field '" + field + "' has the wrong type");
  }
}

}  // namespace detail

/// Parses the catalog document (see README for the format).
inline Catalog parse_catalog(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("catalog is not valid JSON: ") + e.what(), e.byte);
  }
  if (!doc.is_object()) throw ParseError("catalog: top level must be an object");
  detail::reject_unknown_fields(doc, {"tables", "foreign_keys"}, "catalog");
  if (!doc.contains("tables") || !doc["tables"].is_array()) throw ParseError("catalog: 'tables' must be an array");

  std::vector<TableDef> tables;
  for (const auto& entry : doc["tables"]) {
    if (!entry.is_object()) throw ParseError("catalog: table entries must be objects");
    std::string context = "table " + (entry.contains("name") ? entry["name"].dump() : "<unnamed>");
    detail::reject_unknown_fields(entry, {"name", "row_count", "columns", "unique_keys"}, context);
    TableDef table;
    table.name = detail::required<std::string>(entry, "name", context);
    auto rows = entry.find("row_count");
    if (rows == entry.end()) throw ParseError(context + ": missing field 'row_count'");
    if (!rows->is_number_integer() || rows->get<std::int64_t>() < 0)
      throw ParseError(context + ": 'row_count' must be a non-negative integer");
    table.row_count = rows->get<std::uint64_t>();
    table.columns = detail::required<std::vector<std::string>>(entry, "columns", context);
    if (entry.contains("unique_keys"))
      table.unique_keys = detail::required<std::vector<std::vector<std::string>>>(entry, "unique_keys", context);
    tables.push_back(std::move(table));
  }

  std::vector<ForeignKeyDef> fks;
  if (doc.contains("foreign_keys")) {
    if (!doc["foreign_keys"].is_array()) throw ParseError("catalog: 'foreign_keys' must be an array");
    std::size_t index = 0;
    for (const auto& entry : doc["foreign_keys"]) {
      std::string context = "foreign key #" + std::to_string(index++);
      if (!entry.is_object()) throw ParseError(context + ": must be an object");
      detail::reject_unknown_fields(entry, {"from_table", "from_columns", "to_table", "to_columns"}, context);
      ForeignKeyDef fk;
      fk.from_table = detail::required<std::string>(entry, "from_table", context);
      fk.from_columns = detail::required<std::vector<std::string>>(entry, "from_columns", context);
      fk.to_table = detail::required<std::string>(entry, "to_table", context);
      fk.to_columns = detail::required<std::vector<std::string>>(entry, "to_columns", context);
      fks.push_back(std::move(fk));
    }
  }
  return Catalog::make(std::move(tables), std::move(fks));
}

inline Catalog load_catalog(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open catalog file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_catalog(buffer.str());
}

inline nlohmann::ordered_json to_json(const Catalog& cat) {
  nlohmann::ordered_json doc;
  doc["tables"] = nlohmann::ordered_json::array();
  for (const auto& [name, table] : cat.tables()) {
    nlohmann::ordered_json entry;
    entry["name"] = table.name;
    entry["row_count"] = table.row_count;
    entry["columns"] = table.columns;
    entry["unique_keys"] = table.unique_keys;
    doc["tables"].push_back(std::move(entry));
  }
  doc["foreign_keys"] = nlohmann::ordered_json::array();
  for (const auto& fk : cat.foreign_keys()) {
    doc["foreign_keys"].push_back({{"from_table", fk.from_table},
                                   {"from_columns", fk.from_columns},
                                   {"to_table", fk.to_table},
                                   {"to_columns", fk.to_columns}});
  }
  return doc;
}

}  // namespace simpli2
