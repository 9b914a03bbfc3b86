#pragma once

#include <chrono>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "db/connection.hpp"
#include "simpli2/catalog.hpp"

namespace simpli2::bench {

enum class Mode { original, subquery, leftdeep, size_desc };

const char* to_string(Mode m);
Mode parse_mode(const std::string& name);

struct BenchConfig {
  std::string url;
  std::size_t runs = 5;
  std::vector<Mode> modes{Mode::original, Mode::subquery, Mode::leftdeep, Mode::size_desc};
  std::chrono::milliseconds timeout{60'000};

  void validate() const;
};

struct NamedQuery {
  std::string name;
  std::string sql;
};

enum class Status { ok, timeout, error };
const char* to_string(Status s);

/// Outcome of one query in one mode.
struct BenchCell {
  std::string query;
  Mode mode = Mode::original;
  Status status = Status::ok;
  std::vector<double> run_ms;
  std::optional<double> median_ms;
  std::optional<std::size_t> rows;
  double planning_ms = 0;  // parse + plan + rewrite, never part of run_ms
  std::vector<std::string> prologue;
  /// "verified" when every prologue setting was read back, "n/a" when the
  /// mode has none, else the mismatch.
  std::string settings = "n/a";
  std::vector<std::string> warnings;
};

struct BenchReport {
  std::vector<BenchCell> cells;
  std::vector<std::string> warnings;
};

double median(std::vector<double> xs);

/// SQL text and prologue a mode sends for `sql`. Exposed for tests.
struct ModePlan {
  std::string sql;
  std::vector<std::string> prologue;
  std::vector<std::string> warnings;
};
ModePlan plan_mode(const Catalog& cat, const std::string& sql, Mode mode, db::Dialect dialect);

/// Runs every query in every mode, sequentially on `conn`.
BenchReport run_bench(db::Connection& conn, const Catalog& cat, const std::vector<NamedQuery>& queries,
                      const BenchConfig& config);

/// Tab-separated, one header row, one row per cell.
void write_tsv(const BenchReport& report, std::ostream& out);

/// Reads `SHOW name` on postgres; nullopt elsewhere.
std::optional<std::string> read_setting(db::Connection& conn, const std::string& name);

struct ExtractedCatalog {
  Catalog catalog;
  std::vector<std::string> warnings;
};

/// Builds a catalog from the live schema: exact row counts, primary and
/// unique keys, declared foreign keys.
ExtractedCatalog extract_catalog(db::Connection& conn);

}  // namespace simpli2::bench
