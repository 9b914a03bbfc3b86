#include <catch_amalgamated.hpp>

#include <regex>

#include "fixtures.hpp"
#include "graphs.hpp"
#include "oracles.hpp"
#include "simpli2/costlab/equivalence.hpp"
#include "simpli2/costlab/generator.hpp"
#include "simpli2/planner.hpp"
#include "simpli2/rewriter.hpp"

using namespace simpli2;

namespace {

std::size_t count(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

/// FROM-clause tables of each nesting level, innermost first.
std::vector<std::vector<std::string>> level_tables(const sql::SelectStmt& stmt) {
  std::vector<std::vector<std::string>> out;
  const sql::SelectStmt* s = &stmt;
  std::vector<std::vector<std::string>> outer_first;
  while (s) {
    std::vector<std::string> tables;
    const sql::SelectStmt* next = nullptr;
    for (const auto& item : s->from) {
      if (item.source.is_derived()) next = item.source.derived.get();
      else tables.push_back(item.source.alias);
    }
    outer_first.push_back(tables);
    s = next;
  }
  return {outer_first.rbegin(), outer_first.rend()};
}

std::vector<std::string> canonical_conjuncts(const QueryModel& q) {
  std::vector<std::string> out;
  for (const auto& j : q.joins) {
    auto a = j.left.str(), b = j.right.str();
    out.push_back(std::min(a, b) + " = " + std::max(a, b));
  }
  for (const auto& s : q.selections) out.push_back(render_conjunct(s.expr));
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST_CASE("18a nests three levels, first partition innermost") {
  auto q = fixtures::job_query("18a");
  auto o = simpli2_order(fixtures::job_graph("18a"));
  auto r = rewrite_subquery(q, o);
  CHECK(r.prologue == std::vector<std::string>{"SET from_collapse_limit = 1", "SET join_collapse_limit = 1"});
  auto stmt = sql::parse_select(r.sql, true);
  CHECK(level_tables(stmt) ==
        std::vector<std::vector<std::string>>{{"mi_idx", "it2", "t"}, {"mi", "it1"}, {"ci", "n"}});
  REQUIRE(r.exported_column_map.size() == 3);
  CHECK(r.exported_column_map[0].at(ColumnRef{"t", "id"}) == "t_id");
  CHECK(r.exported_column_map[0].count(ColumnRef{"mi_idx", "info"}) == 1);  // used by the outer MIN
  CHECK(r.exported_column_map[0].count(ColumnRef{"it2", "info"}) == 0);     // consumed inside level 1
  CHECK(r.exported_column_map[0].count(ColumnRef{"it2", "id"}) == 0);
  CHECK(r.exported_column_map[1].count(ColumnRef{"mi", "info"}) == 1);
  CHECK(r.exported_column_map[1].count(ColumnRef{"t", "id"}) == 1);
  CHECK(r.exported_column_map[2].empty());
  CHECK(r.sql.find("sq2.t_id = ci.movie_id") != std::string::npos);
  CHECK(r.sql.find("MIN(sq2.mi_idx_info) AS movie_votes") != std::string::npos);
}

TEST_CASE("18a leftdeep chain puts each join at its earliest ON") {
  auto q = fixtures::job_query("18a");
  auto o = simpli2_order(fixtures::job_graph("18a"));
  auto r = rewrite_leftdeep(q, o);
  CHECK(r.prologue.size() == 2);
  auto stmt = sql::parse_select(r.sql, true);
  REQUIRE(stmt.from.size() == 1);
  std::vector<std::string> chain{stmt.from[0].source.alias};
  for (const auto& j : stmt.from[0].joins) chain.push_back(j.source.alias);
  CHECK(chain == o.sequence);

  // Earliest valid step for each predicate: the position of its later alias.
  std::size_t placed = 0;
  for (std::size_t i = 0; i < stmt.from[0].joins.size(); ++i) {
    const auto& j = stmt.from[0].joins[i];
    REQUIRE(j.on);
    std::vector<sql::Expr> parts;
    sql::flatten_and(*j.on, parts);
    for (const auto& p : parts) {
      std::size_t latest = 0;
      for (const auto& a : sql::qualifiers(p)) latest = std::max(latest, o.position(a));
      CHECK(latest == i + 1);
      ++placed;
    }
  }
  CHECK(placed == 9);
  CHECK(count(r.sql, "WHERE") == 1);
}

TEST_CASE("single partition returns the query with its prologue") {
  auto cat = Catalog::make({{"a", 10, {"id", "x"}, {{"id"}}}, {"b", 5, {"a_id", "y"}, {}}}, {{"b", {"a_id"}, "a", {"id"}}});
  auto q = parse_query("SELECT a.x, b.y FROM a a, b b WHERE a.id = b.a_id AND b.y > 2", cat);
  auto o = simpli2_order(build_join_graph(q, cat));
  REQUIRE(o.partitions.size() == 1);
  auto r = rewrite_subquery(q, o);
  CHECK(r.sql.find("(") == std::string::npos);
  CHECK(r.prologue.size() == 2);
  CHECK(r.exported_column_map.empty());
  CHECK(rewrite_subquery(q, o, EngineProfile::generic).prologue.empty());
}

TEST_CASE("two-table leftdeep is a single join") {
  auto cat = Catalog::make({{"a", 10, {"id", "x"}, {{"id"}}}, {"b", 5, {"a_id", "y"}, {}}}, {{"b", {"a_id"}, "a", {"id"}}});
  auto q = parse_query("SELECT a.x, b.y FROM a a, b b WHERE a.id = b.a_id", cat);
  auto r = rewrite_leftdeep(q, simpli2_order(build_join_graph(q, cat)));
  CHECK(count(r.sql, "JOIN ") == 1);
  CHECK(r.warnings.empty());
}

TEST_CASE("Cartesian steps become cross joins with a warning") {
  auto cat = Catalog::make({{"a", 10, {"g"}, {}}, {"b", 20, {"g"}, {}}, {"c", 5, {"g"}, {}}}, {});
  auto q = parse_query("SELECT a.g FROM a a, b b, c c WHERE a.g = b.g", cat);
  auto o = simpli2_order(build_join_graph(q, cat));
  auto r = rewrite_leftdeep(q, o);
  CHECK(count(r.sql, "CROSS JOIN c AS c") == 1);
  CHECK(r.warnings.size() == 1);
}

TEST_CASE("render_settings and profile names") {
  CHECK(render_settings(parse_profile("postgres-compatible")).size() == 2);
  CHECK(render_settings(parse_profile("generic")).empty());
  CHECK_THROWS_AS(parse_profile("oracle"), ValidationError);
  CHECK_THROWS_AS(parse_rewrite_mode("bushy"), ValidationError);
}

TEST_CASE("order and query must match") {
  auto q = fixtures::job_query("18a");
  auto other = simpli2_order(fixtures::job_graph("6a"));
  CHECK_THROWS_AS(rewrite_subquery(q, other), ValidationError);
  CHECK_THROWS_AS(rewrite_leftdeep(q, other), ValidationError);
}

TEST_CASE("rename clashes are rejected") {
  auto cat = Catalog::make({{"a", 10, {"b_c", "g"}, {}}, {"a_b", 20, {"c", "g"}, {}}, {"z", 30, {"g", "k"}, {}}}, {});
  // Alias a with column b_c and alias a_b with column c both rename to a_b_c.
  auto q = parse_query("SELECT z.k FROM a a, a_b a_b, z z WHERE a.g = a_b.g AND z.g = a.g AND z.k = a.b_c AND z.k = a_b.c", cat);
  JoinOrder o;
  o.sequence = {"a", "a_b", "z"};
  o.partitions = {{"a", {"a", "a_b"}}, {"z", {"z"}}};
  CHECK_THROWS_AS(rewrite_subquery(q, o), ValidationError);
}

TEST_CASE("SELECT * cannot be nested") {
  auto q = parse_query(R"(SELECT * FROM cast_info ci, movie_info mi, title t
                         WHERE ci.movie_id = mi.movie_id AND t.id = mi.movie_id)",
                       fixtures::job_catalog());
  auto o = simpli2_order(build_join_graph(q, fixtures::job_catalog()));
  REQUIRE(o.partitions.size() > 1);
  CHECK_THROWS_AS(rewrite_subquery(q, o), ValidationError);
  CHECK_NOTHROW(rewrite_leftdeep(q, o));
}

TEST_CASE("every conjunct appears exactly once and the output re-parses") {
  for (const auto* name : {"1a", "3a", "6a", "17a", "18a", "32a"}) {
    INFO(name);
    auto q = fixtures::job_query(name);
    auto o = simpli2_order(fixtures::job_graph(name));
    for (auto mode : {RewriteMode::subquery, RewriteMode::leftdeep}) {
      auto r = rewrite(q, o, mode);
      // Undo the renaming, then compare the conjunct multisets.
      auto sql = r.sql;
      for (const auto& level : r.exported_column_map)
        for (const auto& [col, renamed] : level)
          sql = std::regex_replace(sql, std::regex("\\bsq[0-9_]+\\." + renamed + "\\b"), col.str());
      auto flat = sql::parse_select(sql, true);
      std::vector<std::string> found;
      auto collect = [&](auto& self, const sql::SelectStmt& s) -> void {
        std::vector<sql::Expr> cs;
        for (const auto& item : s.from) {
          if (item.source.is_derived()) self(self, *item.source.derived);
          for (const auto& j : item.joins)
            if (j.on) sql::flatten_and(*j.on, cs);
        }
        if (s.where) sql::flatten_and(*s.where, cs);
        for (const auto& c : cs) {
          if (c.kind == sql::ExprKind::binary && c.op == "=" && c.args[0].kind == sql::ExprKind::column &&
              c.args[1].kind == sql::ExprKind::column && c.args[0].column.qualifier != c.args[1].column.qualifier) {
            auto a = c.args[0].column.str(), b = c.args[1].column.str();
            found.push_back(std::min(a, b) + " = " + std::max(a, b));
          } else {
            found.push_back(render_conjunct(c));
          }
        }
      };
      collect(collect, flat);
      std::sort(found.begin(), found.end());
      CHECK(found == canonical_conjuncts(q));
    }
  }
}

TEST_CASE("renamed references resolve to an inner export") {
  auto q = fixtures::job_query("17a");
  auto o = simpli2_order(fixtures::job_graph("17a"));
  auto r = rewrite_subquery(q, o);
  std::regex ref("\\b(sq[0-9_]+)\\.([a-z_0-9]+)");
  for (auto it = std::sregex_iterator(r.sql.begin(), r.sql.end(), ref); it != std::sregex_iterator(); ++it) {
    std::size_t level = std::stoul((*it)[1].str().substr(2)) - 1;
    bool exported = false;
    for (const auto& [c, name] : r.exported_column_map.at(level)) exported = exported || name == (*it)[2].str();
    CHECK(exported);
  }
}

TEST_CASE("rewrites evaluate to the original result on generated data") {
  std::size_t checked = 0;
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    costlab::GeneratorConfig config;
    config.seed = seed;
    config.tables = 2 + seed % 5;
    config.max_rows = 60;
    auto inst = costlab::generate_instance(config);
    INFO(inst.sql);
    auto g = build_join_graph(inst.query, inst.catalog);
    auto o = simpli2_order(g);
    auto expected = oracle::evaluate(inst.data, inst.query);
    for (auto mode : {RewriteMode::subquery, RewriteMode::leftdeep}) {
      auto r = rewrite(inst.query, o, mode);
      CHECK(oracle::as_text(costlab::evaluate_rewritten(inst.data, r)) == expected);
      ++checked;
    }
  }
  CHECK(checked == 80);
}
