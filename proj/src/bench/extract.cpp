#include <algorithm>
#include <cctype>
#include <map>

#include "bench/bench.hpp"

namespace simpli2::bench {
namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::string quoted(const std::string& name) {
  std::string out = "\"";
  for (char c : name) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

std::string quoted_literal(const std::string& s) {
  std::string out = "'";
  for (char c : s) out += c == '\'' ? std::string("''") : std::string(1, c);
  return out + "'";
}

const std::string& cell(const db::QueryResult& r, std::size_t row, std::size_t col) {
  static const std::string empty;
  const auto& v = r.rows.at(row).at(col);
  return v ? *v : empty;
}

std::uint64_t count_rows(db::Connection& conn, const std::string& table) {
  auto r = conn.query("SELECT COUNT(*) FROM " + quoted(table));
  return std::stoull(cell(r, 0, 0));
}

struct RawFk {
  std::string from_table, to_table;
  std::vector<std::string> from_columns, to_columns;
};

void extract_sqlite(db::Connection& conn, std::vector<TableDef>& tables, std::vector<RawFk>& fks) {
  auto names = conn.query("SELECT name FROM sqlite_master WHERE type = 'table' AND name NOT LIKE 'sqlite_%' ORDER BY name");
  for (std::size_t i = 0; i < names.rows.size(); ++i) {
    const auto& name = cell(names, i, 0);
    TableDef def;
    def.name = name;
    def.row_count = count_rows(conn, name);
    auto info = conn.query("PRAGMA table_info(" + quoted(name) + ")");
    std::vector<std::pair<int, std::string>> pk;
    for (std::size_t r = 0; r < info.rows.size(); ++r) {
      def.columns.push_back(cell(info, r, 1));
      int pos = std::stoi(cell(info, r, 5));
      if (pos > 0) pk.emplace_back(pos, cell(info, r, 1));
    }
    std::sort(pk.begin(), pk.end());
    if (!pk.empty()) {
      std::vector<std::string> key;
      for (auto& [p, c] : pk) key.push_back(c);
      def.unique_keys.push_back(key);
    }
    auto indexes = conn.query("PRAGMA index_list(" + quoted(name) + ")");
    for (std::size_t r = 0; r < indexes.rows.size(); ++r) {
      if (cell(indexes, r, 2) != "1") continue;  // not unique
      auto cols = conn.query("PRAGMA index_info(" + quoted(cell(indexes, r, 1)) + ")");
      std::vector<std::string> key;
      for (std::size_t c = 0; c < cols.rows.size(); ++c) key.push_back(cell(cols, c, 2));
      if (std::find(def.unique_keys.begin(), def.unique_keys.end(), key) == def.unique_keys.end())
        def.unique_keys.push_back(key);
    }
    auto fk_rows = conn.query("PRAGMA foreign_key_list(" + quoted(name) + ")");
    std::map<std::string, RawFk> by_id;
    for (std::size_t r = 0; r < fk_rows.rows.size(); ++r) {
      auto& fk = by_id[cell(fk_rows, r, 0)];
      fk.from_table = name;
      fk.to_table = cell(fk_rows, r, 2);
      fk.from_columns.push_back(cell(fk_rows, r, 3));
      fk.to_columns.push_back(cell(fk_rows, r, 4));  // empty: the referenced primary key
    }
    for (auto& [id, fk] : by_id) fks.push_back(std::move(fk));
    tables.push_back(std::move(def));
  }
  // Resolve implicit references to the parent's primary key.
  for (auto& fk : fks) {
    if (std::all_of(fk.to_columns.begin(), fk.to_columns.end(), [](auto& c) { return !c.empty(); })) continue;
    for (const auto& t : tables) {
      if (t.name == fk.to_table && !t.unique_keys.empty()) fk.to_columns = t.unique_keys.front();
    }
  }
}

void extract_postgres(db::Connection& conn, std::vector<TableDef>& tables, std::vector<RawFk>& fks) {
  auto names = conn.query(
      "SELECT table_name FROM information_schema.tables "
      "WHERE table_schema = current_schema() AND table_type = 'BASE TABLE' ORDER BY table_name");
  for (std::size_t i = 0; i < names.rows.size(); ++i) {
    const auto& name = cell(names, i, 0);
    TableDef def;
    def.name = name;
    def.row_count = count_rows(conn, name);
    auto cols = conn.query(
        "SELECT column_name FROM information_schema.columns "
        "WHERE table_schema = current_schema() AND table_name = " + quoted_literal(name) +
        " ORDER BY ordinal_position");
    for (std::size_t r = 0; r < cols.rows.size(); ++r) def.columns.push_back(cell(cols, r, 0));
    auto keys = conn.query(
        "SELECT tc.constraint_name, kcu.column_name FROM information_schema.table_constraints tc "
        "JOIN information_schema.key_column_usage kcu ON kcu.constraint_name = tc.constraint_name "
        "AND kcu.table_schema = tc.table_schema AND kcu.table_name = tc.table_name "
        "WHERE tc.table_schema = current_schema() AND tc.table_name = " + quoted_literal(name) +
        " AND tc.constraint_type IN ('PRIMARY KEY', 'UNIQUE') "
        "ORDER BY tc.constraint_type, tc.constraint_name, kcu.ordinal_position");
    std::map<std::string, std::vector<std::string>> by_name;
    std::vector<std::string> order;
    for (std::size_t r = 0; r < keys.rows.size(); ++r) {
      const auto& k = cell(keys, r, 0);
      if (!by_name.count(k)) order.push_back(k);
      by_name[k].push_back(cell(keys, r, 1));
    }
    for (const auto& k : order) def.unique_keys.push_back(by_name[k]);
    tables.push_back(std::move(def));
  }
  auto rows = conn.query(
      "SELECT c.conname, src.relname, dst.relname, a.attname, af.attname "
      "FROM pg_constraint c "
      "JOIN pg_class src ON src.oid = c.conrelid "
      "JOIN pg_class dst ON dst.oid = c.confrelid "
      "CROSS JOIN LATERAL unnest(c.conkey, c.confkey) WITH ORDINALITY AS k(col, fcol, ord) "
      "JOIN pg_attribute a ON a.attrelid = c.conrelid AND a.attnum = k.col "
      "JOIN pg_attribute af ON af.attrelid = c.confrelid AND af.attnum = k.fcol "
      "WHERE c.contype = 'f' AND src.relnamespace = current_schema()::regnamespace "
      "ORDER BY c.conname, k.ord");
  std::map<std::string, RawFk> by_name;
  std::vector<std::string> order;
  for (std::size_t r = 0; r < rows.rows.size(); ++r) {
    const auto& k = cell(rows, r, 0) + "@" + cell(rows, r, 1);
    if (!by_name.count(k)) order.push_back(k);
    auto& fk = by_name[k];
    fk.from_table = cell(rows, r, 1);
    fk.to_table = cell(rows, r, 2);
    fk.from_columns.push_back(cell(rows, r, 3));
    fk.to_columns.push_back(cell(rows, r, 4));
  }
  for (const auto& k : order) fks.push_back(by_name[k]);
}

}  // namespace

ExtractedCatalog extract_catalog(db::Connection& conn) {
  std::vector<TableDef> tables;
  std::vector<RawFk> raw;
  if (conn.dialect() == db::Dialect::sqlite) extract_sqlite(conn, tables, raw);
  else extract_postgres(conn, tables, raw);

  ExtractedCatalog out;
  // The SQL front end folds identifiers to lower case.
  for (auto& t : tables) {
    t.name = lower(t.name);
    for (auto& c : t.columns) c = lower(c);
    for (auto& k : t.unique_keys)
      for (auto& c : k) c = lower(c);
  }
  std::vector<ForeignKeyDef> fks;
  for (auto& fk : raw) {
    ForeignKeyDef def{lower(fk.from_table), fk.from_columns, lower(fk.to_table), fk.to_columns};
    for (auto& c : def.from_columns) c = lower(c);
    for (auto& c : def.to_columns) c = lower(c);
    auto target = std::find_if(tables.begin(), tables.end(), [&](auto& t) { return t.name == def.to_table; });
    if (target == tables.end() ||
        std::find(target->unique_keys.begin(), target->unique_keys.end(), def.to_columns) == target->unique_keys.end()) {
      out.warnings.push_back("skipped foreign key " + def.describe() + ": the referenced columns are not a declared key");
      continue;
    }
    fks.push_back(std::move(def));
  }
  if (fks.empty())
    out.warnings.push_back("no foreign keys declared: every join will be classified many-to-many unless it hits a key");
  out.catalog = Catalog::make(std::move(tables), std::move(fks));
  return out;
}

}  // namespace simpli2::bench
