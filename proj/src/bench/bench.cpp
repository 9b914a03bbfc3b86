#include "bench/bench.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include "simpli2/join_graph.hpp"
#include "simpli2/planner.hpp"
#include "simpli2/rewriter.hpp"

namespace simpli2::bench {

const char* to_string(Mode m) {
  switch (m) {
    case Mode::original: return "original";
    case Mode::subquery: return "subquery";
    case Mode::leftdeep: return "leftdeep";
    default: return "size-desc";
  }
}

Mode parse_mode(const std::string& name) {
  if (name == "original") return Mode::original;
  if (name == "subquery") return Mode::subquery;
  if (name == "leftdeep") return Mode::leftdeep;
  if (name == "size-desc") return Mode::size_desc;
  throw ValidationError("unknown bench mode '" + name + "'");
}

const char* to_string(Status s) {
  switch (s) {
    case Status::ok: return "ok";
    case Status::timeout: return "timeout";
    default: return "error";
  }
}

void BenchConfig::validate() const {
  if (runs < 1) throw ValidationError("runs must be at least 1");
  if (modes.empty()) throw ValidationError("at least one mode is required");
}

double median(std::vector<double> xs) {
  if (xs.empty()) throw ValidationError("median of no values");
  std::sort(xs.begin(), xs.end());
  auto n = xs.size();
  return n % 2 ? xs[n / 2] : (xs[n / 2 - 1] + xs[n / 2]) / 2;
}

namespace {

const std::vector<std::string> collapse_settings = {"from_collapse_limit", "join_collapse_limit"};

}  // namespace

ModePlan plan_mode(const Catalog& cat, const std::string& sql, Mode mode, db::Dialect dialect) {
  auto profile = dialect == db::Dialect::postgres ? EngineProfile::postgres : EngineProfile::generic;
  ModePlan out;
  if (mode == Mode::original) {
    out.sql = sql;
    // Undo whatever an earlier mode pinned on this session.
    if (profile == EngineProfile::postgres)
      for (const auto& s : collapse_settings) out.prologue.push_back("RESET " + s);
    return out;
  }
  auto q = parse_query(sql, cat);
  auto g = build_join_graph(q, cat);
  RewrittenQuery r;
  if (mode == Mode::size_desc) {
    r = rewrite_leftdeep(q, size_order(g, SizeDirection::descending, false), profile);
  } else {
    auto o = simpli2_order(g);
    r = mode == Mode::subquery ? rewrite_subquery(q, o, profile) : rewrite_leftdeep(q, o, profile);
  }
  out.sql = r.sql;
  out.prologue = r.prologue;
  out.warnings = r.warnings;
  return out;
}

std::optional<std::string> read_setting(db::Connection& conn, const std::string& name) {
  if (conn.dialect() != db::Dialect::postgres) return std::nullopt;
  auto res = conn.query("SHOW " + name);
  if (res.rows.size() != 1 || res.rows[0].empty() || !res.rows[0][0]) return std::nullopt;
  return *res.rows[0][0];
}

namespace {

/// Reads back every `SET x = v` of the prologue.
std::string verify_prologue(db::Connection& conn, const std::vector<std::string>& prologue) {
  std::string problems;
  std::size_t checked = 0;
  for (const auto& stmt : prologue) {
    if (stmt.rfind("SET ", 0) != 0) continue;
    auto eq = stmt.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      s.erase(0, s.find_first_not_of(" ;"));
      s.erase(s.find_last_not_of(" ;") + 1);
      return s;
    };
    auto name = trim(stmt.substr(4, eq - 4));
    auto want = trim(stmt.substr(eq + 1));
    auto got = read_setting(conn, name);
    ++checked;
    if (!got || *got != want) problems += (problems.empty() ? "" : "; ") + name + "=" + got.value_or("?") + " (want " + want + ")";
  }
  if (checked == 0) return "n/a";
  return problems.empty() ? "verified" : problems;
}

}  // namespace

BenchReport run_bench(db::Connection& conn, const Catalog& cat, const std::vector<NamedQuery>& queries,
                      const BenchConfig& config) {
  config.validate();
  using clock = std::chrono::steady_clock;
  auto ms = [](clock::duration d) { return std::chrono::duration<double, std::milli>(d).count(); };
  BenchReport report;
  conn.set_timeout(config.timeout);

  for (const auto& q : queries) {
    std::map<Mode, std::size_t> rows_by_mode;
    for (auto mode : config.modes) {
      BenchCell cell;
      cell.query = q.name;
      cell.mode = mode;
      auto t0 = clock::now();
      ModePlan plan;
      try {
        plan = plan_mode(cat, q.sql, mode, conn.dialect());
      } catch (const Error& e) {
        cell.status = Status::error;
        cell.warnings.push_back(e.what());
        report.cells.push_back(std::move(cell));
        continue;
      }
      cell.planning_ms = ms(clock::now() - t0);
      cell.prologue = plan.prologue;
      cell.warnings = plan.warnings;
      try {
        for (const auto& stmt : plan.prologue) conn.execute(stmt);
        cell.settings = verify_prologue(conn, plan.prologue);
        if (cell.settings != "n/a" && cell.settings != "verified")
          cell.warnings.push_back("session settings not applied: " + cell.settings);
        for (std::size_t run = 0; run < config.runs; ++run) {
          auto start = clock::now();
          auto res = conn.query(plan.sql);
          cell.run_ms.push_back(ms(clock::now() - start));
          if (cell.rows && *cell.rows != res.rows.size())
            cell.warnings.push_back("row count changed between runs");
          cell.rows = res.rows.size();
        }
        cell.median_ms = median(cell.run_ms);
        rows_by_mode[mode] = *cell.rows;
      } catch (const db::TimeoutError& e) {
        cell.status = Status::timeout;
        cell.warnings.push_back(e.what());
      } catch (const db::StatementError& e) {
        cell.status = Status::error;
        cell.warnings.push_back(e.what());
      }
      report.cells.push_back(std::move(cell));
    }
    std::set<std::size_t> distinct;
    for (const auto& [m, n] : rows_by_mode) distinct.insert(n);
    if (distinct.size() > 1) {
      std::string detail;
      for (const auto& [m, n] : rows_by_mode) detail += std::string(detail.empty() ? "" : ", ") + to_string(m) + "=" + std::to_string(n);
      report.warnings.push_back("correctness: row counts differ across modes for " + q.name + " (" + detail + ")");
    }
  }
  // Leave the session as we found it.
  if (conn.dialect() == db::Dialect::postgres) {
    for (const auto& s : collapse_settings) conn.execute("RESET " + s);
  }
  return report;
}

void write_tsv(const BenchReport& report, std::ostream& out) {
  auto clean = [](std::string s) {
    std::replace(s.begin(), s.end(), '\t', ' ');
    std::replace(s.begin(), s.end(), '\n', ' ');
    return s;
  };
  auto fixed = [](double v) {
    std::ostringstream s;
    s.setf(std::ios::fixed);
    s.precision(3);
    s << v;
    return s.str();
  };
  out << "query\tmode\tstatus\truns\tmedian_ms\trun_ms\trows\tplanning_ms\tsettings\twarnings\n";
  for (const auto& c : report.cells) {
    std::string runs;
    for (auto v : c.run_ms) runs += (runs.empty() ? "" : ",") + fixed(v);
    std::string warnings;
    for (const auto& w : c.warnings) warnings += (warnings.empty() ? "" : " | ") + w;
    out << c.query << '\t' << to_string(c.mode) << '\t' << to_string(c.status) << '\t' << c.run_ms.size() << '\t'
        << (c.median_ms ? fixed(*c.median_ms) : "") << '\t' << runs << '\t'
        << (c.rows ? std::to_string(*c.rows) : "") << '\t' << fixed(c.planning_ms) << '\t' << clean(c.settings) << '\t'
        << clean(warnings) << '\n';
  }
}

}  // namespace simpli2::bench
