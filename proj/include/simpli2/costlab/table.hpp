#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "simpli2/error.hpp"
#include "simpli2/sql/value.hpp"

namespace simpli2::costlab {

using sql::Value;
using Row = std::vector<Value>;

/// In-memory table loaded from `<name>.csv`.
struct MiniTable {
  std::string name;
  std::vector<std::string> columns;
  std::vector<Row> rows;

  std::size_t column_index(const std::string& column) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == column) return i;
    throw ReferenceError("table '" + name + "' has no column '" + column + "'");
  }
};

using TableSet = std::map<std::string, MiniTable, std::less<>>;

namespace detail {

/// Splits one CSV record. Quoted fields may contain the delimiter and
/// doubled quotes; the flag reports whether each field was quoted.
inline std::vector<std::pair<std::string, bool>> split_record(const std::string& line, char delim, std::size_t lineno) {
  std::vector<std::pair<std::string, bool>> out;
  std::string field;
  bool quoted = false, in_quotes = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"' && field.empty()) {
      in_quotes = quoted = true;
    } else if (c == delim) {
      out.emplace_back(std::move(field), quoted);
      field.clear();
      quoted = false;
    } else if (c != '\r') {
      field += c;
    }
  }
  if (in_quotes) throw ParseError("unterminated quoted field on line " + std::to_string(lineno));
  out.emplace_back(std::move(field), quoted);
  return out;
}

inline Value parse_field(const std::string& text, bool quoted) {
  if (!quoted && text.empty()) return Value{};
  if (!quoted) {
    if (auto i = sql::parse_int(text)) return *i;
  }
  return text;
}

inline std::string format_field(const Value& v, char delim) {
  if (sql::is_null(v)) return "";
  auto text = sql::to_string(v);
  bool needs_quotes = std::holds_alternative<std::string>(v) &&
                      (text.empty() || text.find(delim) != std::string::npos || text.find('"') != std::string::npos ||
                       sql::parse_int(text).has_value());
  if (!needs_quotes) return text;
  std::string out = "\"";
  for (char c : text) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

}  // namespace detail

/// Header row gives column names. Unquoted empty fields are NULL, unquoted
/// integers are integers, everything else is text.
inline MiniTable parse_csv(const std::string& name, std::istream& in, char delim = ',') {
  MiniTable t;
  t.name = name;
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) throw ParseError("table '" + name + "': missing header row");
  ++lineno;
  for (auto& [col, quoted] : detail::split_record(line, delim, lineno)) t.columns.push_back(col);
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto fields = detail::split_record(line, delim, lineno);
    if (fields.size() != t.columns.size())
      throw ParseError("table '" + name + "' line " + std::to_string(lineno) + ": expected " +
                       std::to_string(t.columns.size()) + " fields, got " + std::to_string(fields.size()));
    Row row;
    row.reserve(fields.size());
    for (auto& [text, quoted] : fields) row.push_back(detail::parse_field(text, quoted));
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline void write_csv(const MiniTable& t, std::ostream& out, char delim = ',') {
  for (std::size_t i = 0; i < t.columns.size(); ++i) out << (i ? std::string(1, delim) : "") << t.columns[i];
  out << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? std::string(1, delim) : "") << detail::format_field(row[i], delim);
    out << '\n';
  }
}

/// Loads every `<table>.csv` in `dir`.
inline TableSet load_dataset(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw Error("data directory '" + dir.string() + "' does not exist");
  TableSet out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() != ".csv") continue;
    std::ifstream in(entry.path());
    auto name = entry.path().stem().string();
    out.emplace(name, parse_csv(name, in));
  }
  return out;
}

inline void save_dataset(const TableSet& tables, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& [name, t] : tables) {
    std::ofstream out(dir / (name + ".csv"));
    write_csv(t, out);
  }
}

}  // namespace simpli2::costlab
