#include <catch_amalgamated.hpp>

#include <filesystem>
#include <regex>
#include <sstream>

#include "bench/bench.hpp"
#include "db_load.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "simpli2/costlab/generator.hpp"

using namespace simpli2;
namespace fs = std::filesystem;

namespace {

costlab::Instance instance(std::uint64_t seed, std::size_t tables) {
  costlab::GeneratorConfig config;
  config.seed = seed;
  config.tables = tables;
  config.max_rows = 150;
  return costlab::generate_instance(config);
}

/// Passes everything through, but strips the first ON predicate from
/// left-deep queries, so that mode returns a different result.
class DroppingConnection : public db::Connection {
public:
  explicit DroppingConnection(db::Connection& inner) : inner_(inner) {}
  db::Dialect dialect() const override { return inner_.dialect(); }
  void execute(const std::string& sql) override { inner_.execute(sql); }
  db::QueryResult query(const std::string& sql) override {
    if (sql.find(" ON ") == std::string::npos) return inner_.query(sql);
    static const std::regex first_on(R"(\n\s*JOIN (\w+) AS (\w+) ON [^\n]*)");
    return inner_.query(std::regex_replace(sql, first_on, "\nCROSS JOIN $1 AS $2", std::regex_constants::format_first_only));
  }
  void set_timeout(std::chrono::milliseconds limit) override { inner_.set_timeout(limit); }

private:
  db::Connection& inner_;
};

}  // namespace

TEST_CASE("median") {
  CHECK(bench::median({3, 1, 2}) == 2);
  CHECK(bench::median({4, 1, 2, 3}) == 2.5);
  CHECK(bench::median({7}) == 7);
  CHECK_THROWS(bench::median({}));
}

TEST_CASE("mode names and config validation") {
  for (auto m : {bench::Mode::original, bench::Mode::subquery, bench::Mode::leftdeep, bench::Mode::size_desc})
    CHECK(bench::parse_mode(bench::to_string(m)) == m);
  CHECK_THROWS_AS(bench::parse_mode("fastest"), Error);
  bench::BenchConfig config;
  config.url = "sqlite::memory:";
  CHECK_NOTHROW(config.validate());
  config.runs = 0;
  CHECK_THROWS_AS(config.validate(), Error);
}

TEST_CASE("mode plans carry the right prologue") {
  auto text = fixtures::job_query_text("18a");
  const auto& cat = fixtures::job_catalog();
  auto pg_sub = bench::plan_mode(cat, text, bench::Mode::subquery, db::Dialect::postgres);
  CHECK(pg_sub.prologue == std::vector<std::string>{"SET from_collapse_limit = 1", "SET join_collapse_limit = 1"});
  auto pg_orig = bench::plan_mode(cat, text, bench::Mode::original, db::Dialect::postgres);
  CHECK(pg_orig.sql == text);
  CHECK(pg_orig.prologue.size() == 2);
  for (const auto& s : pg_orig.prologue) CHECK(s.rfind("RESET ", 0) == 0);
  auto lite = bench::plan_mode(cat, text, bench::Mode::leftdeep, db::Dialect::sqlite);
  CHECK(lite.prologue.empty());
  auto desc = bench::plan_mode(cat, text, bench::Mode::size_desc, db::Dialect::sqlite);
  CHECK(desc.sql.find("FROM cast_info AS ci") != std::string::npos);
}

TEST_CASE("sqlite connection basics") {
  auto conn = db::connect("sqlite::memory:");
  CHECK(conn->dialect() == db::Dialect::sqlite);
  conn->execute("CREATE TABLE t (a INTEGER, b TEXT); INSERT INTO t VALUES (1, NULL), (2, 'x')");
  auto res = conn->query("SELECT a, b FROM t ORDER BY a");
  REQUIRE(res.rows.size() == 2);
  CHECK(res.columns == std::vector<std::string>{"a", "b"});
  CHECK_FALSE(res.rows[0][1]);
  CHECK(res.rows[1][1] == "x");
  CHECK_THROWS_AS(conn->query("SELECT nope FROM t"), db::StatementError);
  CHECK_THROWS_AS(db::connect("mysql://host/db"), Error);
  conn->set_timeout(std::chrono::milliseconds(50));
  CHECK_THROWS_AS(conn->query("WITH RECURSIVE c(x) AS (SELECT 1 UNION ALL SELECT x + 1 FROM c) SELECT count(*) FROM c"),
                  db::TimeoutError);
}

TEST_CASE("bench on sqlite: every mode agrees with the oracle") {
  auto conn = db::connect("sqlite::memory:");
  std::vector<bench::NamedQuery> queries;
  std::map<std::string, std::size_t> expected;
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    auto inst = instance(seed, 2 + seed);
    // Each instance uses t0..tN; give each its own database.
    conn = db::connect("sqlite::memory:");
    dbload::load(*conn, inst.data);
    bench::BenchConfig config;
    config.url = "sqlite::memory:";
    config.runs = 5;
    auto report = bench::run_bench(*conn, inst.catalog, {{"q" + std::to_string(seed), inst.sql}}, config);
    INFO(inst.sql);
    CHECK(report.warnings.empty());
    REQUIRE(report.cells.size() == 4);
    auto want = oracle::evaluate(inst.data, inst.query).size();
    for (const auto& cell : report.cells) {
      CHECK(cell.status == bench::Status::ok);
      CHECK(cell.run_ms.size() == 5);
      CHECK(cell.rows == want);
      CHECK(cell.settings == "n/a");
      REQUIRE(cell.median_ms);
      CHECK(*cell.median_ms == bench::median(cell.run_ms));
    }
    std::ostringstream tsv;
    bench::write_tsv(report, tsv);
    std::string header;
    std::istringstream lines(tsv.str());
    std::getline(lines, header);
    CHECK(header == "query\tmode\tstatus\truns\tmedian_ms\trun_ms\trows\tplanning_ms\tsettings\twarnings");
    std::size_t body = 0;
    for (std::string line; std::getline(lines, line);) ++body;
    CHECK(body == 4);
  }
}

TEST_CASE("bench flags a mode whose rows differ") {
  auto inst = instance(21, 3);
  auto conn = db::connect("sqlite::memory:");
  dbload::load(*conn, inst.data);
  DroppingConnection broken(*conn);
  bench::BenchConfig config;
  config.url = "sqlite::memory:";
  config.runs = 1;
  config.modes = {bench::Mode::original, bench::Mode::leftdeep};
  // Row-level output, so a lost predicate changes the count.
  auto sql = std::regex_replace(inst.sql, std::regex("^SELECT [^\n]*"), "SELECT x0.id");
  auto report = bench::run_bench(broken, inst.catalog, {{"q", sql}}, config);
  REQUIRE(report.warnings.size() == 1);
  CHECK(report.warnings[0].find("correctness: row counts differ") != std::string::npos);
}

TEST_CASE("bench records statement errors per cell") {
  auto conn = db::connect("sqlite::memory:");
  auto cat = parse_catalog(fixtures::two_table_catalog);
  bench::BenchConfig config;
  config.url = "sqlite::memory:";
  config.runs = 1;
  auto report = bench::run_bench(*conn, cat, {{"missing", "SELECT a.x FROM a AS a, b AS b WHERE b.a_id = a.id"},
                                              {"bad", "SELECT FROM"}},
                                 config);
  REQUIRE(report.cells.size() == 8);
  for (const auto& c : report.cells) CHECK(c.status == bench::Status::error);
}

TEST_CASE("catalog extraction from sqlite") {
  auto conn = db::connect("sqlite::memory:");
  conn->execute(
      "CREATE TABLE Person (id INTEGER PRIMARY KEY, code TEXT UNIQUE, name TEXT);"
      "CREATE TABLE pet (id INTEGER PRIMARY KEY, owner_id INTEGER REFERENCES person(id), "
      "  owner_code TEXT REFERENCES person(code), kind TEXT);"
      "CREATE TABLE loose (x INTEGER, pet_kind TEXT REFERENCES pet(kind));"
      "INSERT INTO person VALUES (1, 'a', 'x'), (2, 'b', 'y');"
      "INSERT INTO pet VALUES (1, 1, 'a', 'cat'), (2, 1, 'a', 'dog'), (3, 2, 'b', 'cat');");
  auto got = bench::extract_catalog(*conn);
  const auto& cat = got.catalog;
  CHECK(cat.tables().size() == 3);
  CHECK(cat.table("person").row_count == 2);
  CHECK(cat.table("pet").row_count == 3);
  CHECK(cat.table("loose").row_count == 0);
  CHECK(cat.is_key_column("person", "id"));
  CHECK(cat.is_key_column("person", "code"));
  CHECK_FALSE(cat.is_key_column("pet", "kind"));
  CHECK(cat.foreign_keys().size() == 2);
  REQUIRE(got.warnings.size() == 1);
  CHECK(got.warnings[0].find("skipped foreign key") != std::string::npos);

  auto q = parse_query("SELECT p.name FROM person AS p, pet AS x WHERE x.owner_id = p.id", cat);
  auto g = build_join_graph(q, cat);
  REQUIRE(g.edges().size() == 1);
  CHECK(g.edges()[0].predicate.kind == JoinKind::one_to_many);
}
