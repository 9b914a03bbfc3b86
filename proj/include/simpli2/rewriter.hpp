#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "simpli2/error.hpp"
#include "simpli2/planner.hpp"
#include "simpli2/query.hpp"

namespace simpli2 {

enum class EngineProfile { generic, postgres };

inline EngineProfile parse_profile(std::string_view name) {
  if (name == "generic") return EngineProfile::generic;
  if (name == "postgres-compatible" || name == "postgres") return EngineProfile::postgres;
  throw ValidationError("unknown engine profile '" + std::string(name) + "'");
}

inline const char* to_string(EngineProfile p) { return p == EngineProfile::generic ? "generic" : "postgres-compatible"; }

/// Session statements that make the engine execute the written join order
/// verbatim and keep derived tables un-flattened.
inline std::vector<std::string> render_settings(EngineProfile target) {
  if (target == EngineProfile::postgres) return {"SET from_collapse_limit = 1", "SET join_collapse_limit = 1"};
  return {};
}

enum class RewriteMode { subquery, leftdeep };

inline const char* to_string(RewriteMode m) { return m == RewriteMode::subquery ? "subquery" : "leftdeep"; }

inline RewriteMode parse_rewrite_mode(std::string_view name) {
  if (name == "subquery") return RewriteMode::subquery;
  if (name == "leftdeep") return RewriteMode::leftdeep;
  throw ValidationError("unknown rewrite mode '" + std::string(name) + "'");
}

struct RewrittenQuery {
  RewriteMode mode = RewriteMode::subquery;
  std::string sql;
  /// Level i (0-based) -> columns the level exports and their new names.
  /// Empty in leftdeep mode and for single-partition orders.
  std::vector<std::map<ColumnRef, std::string>> exported_column_map;
  std::vector<std::string> prologue;
  std::vector<std::string> warnings;
};

namespace detail {

inline void check_order_matches(const QueryModel& q, const JoinOrder& o) {
  auto expected = q.aliases();
  auto actual = o.sequence;
  std::sort(expected.begin(), expected.end());
  std::sort(actual.begin(), actual.end());
  if (expected != actual) throw ValidationError("join order does not cover exactly the query's aliases");
  std::vector<std::string> concat;
  for (const auto& p : o.partitions) concat.insert(concat.end(), p.members.begin(), p.members.end());
  if (concat != o.sequence) throw ValidationError("join order partitions do not concatenate to its sequence");
}

struct Conjunct {
  std::size_t ordinal;
  sql::Expr expr;
  std::set<std::string> aliases;
};

inline std::vector<Conjunct> conjuncts_of(const QueryModel& q) {
  std::vector<Conjunct> out;
  for (const auto& j : q.joins) out.push_back({j.ordinal, j.expr(), {j.left.qualifier, j.right.qualifier}});
  for (const auto& s : q.selections) out.push_back({s.ordinal, s.expr, s.aliases});
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.ordinal < b.ordinal; });
  return out;
}

inline std::string indent(const std::string& text, const std::string& pad) {
  std::string out = pad;
  for (char c : text) {
    out += c;
    if (c == '\n') out += pad;
  }
  return out;
}

inline std::string select_list(const QueryModel& q, const sql::ColumnRenderer& col) {
  if (q.star) return "*";
  std::string out;
  for (std::size_t i = 0; i < q.output.size(); ++i) {
    if (i) out += ", ";
    out += sql::render(q.output[i].expr, col);
    if (!q.output[i].name.empty()) out += " AS " + q.output[i].name;
  }
  return out;
}

}  // namespace detail

/// Nested-subquery form: partition 1 is the innermost level; each later
/// partition wraps the previous level as a derived table. Every column a
/// later level needs is exported as `<alias>_<column>`.
inline RewrittenQuery rewrite_subquery(const QueryModel& q, const JoinOrder& o,
                                       EngineProfile target = EngineProfile::postgres) {
  detail::check_order_matches(q, o);
  RewrittenQuery out;
  out.mode = RewriteMode::subquery;
  out.prologue = render_settings(target);

  const std::size_t levels = o.partitions.size();
  if (levels <= 1) {
    out.sql = render_query(q);
    return out;
  }
  if (q.star) throw ValidationError("SELECT * cannot be split into subqueries; list the output columns");

  std::map<std::string, std::size_t> level_of;
  for (std::size_t i = 0; i < levels; ++i)
    for (const auto& m : o.partitions[i].members) level_of[m] = i;
  auto conjuncts = detail::conjuncts_of(q);
  auto conjunct_level = [&](const detail::Conjunct& c) {
    std::size_t l = 0;
    for (const auto& a : c.aliases) l = std::max(l, level_of.at(a));
    return l;
  };

  // Derived-table names must not shadow query aliases.
  std::vector<std::string> derived_name(levels);
  for (std::size_t i = 0; i + 1 < levels; ++i) {
    std::string name = "sq" + std::to_string(i + 1);
    while (q.find(name)) name += "_";
    derived_name[i] = name;
  }

  // exports[i]: columns of aliases at level <= i used above level i.
  std::vector<std::set<ColumnRef>> needed(levels);
  auto need_above = [&](const sql::Expr& e, std::size_t level) {
    sql::visit_columns(e, [&](const ColumnRef& c) {
      for (std::size_t i = level_of.at(c.qualifier); i < level; ++i) needed[i].insert(c);
    });
  };
  for (const auto& c : conjuncts) need_above(c.expr, conjunct_level(c));
  for (const auto& item : q.output) need_above(item.expr, levels - 1);

  auto position = [&](const std::string& alias) { return o.position(alias); };
  out.exported_column_map.resize(levels);
  std::vector<std::vector<ColumnRef>> exports(levels);
  for (std::size_t i = 0; i + 1 < levels; ++i) {
    exports[i].assign(needed[i].begin(), needed[i].end());
    std::stable_sort(exports[i].begin(), exports[i].end(), [&](const ColumnRef& a, const ColumnRef& b) {
      if (a.qualifier != b.qualifier) return position(a.qualifier) < position(b.qualifier);
      return a.column < b.column;
    });
    std::map<std::string, ColumnRef> taken;
    for (const auto& c : exports[i]) {
      std::string name = c.qualifier + "_" + c.column;
      auto [it, fresh] = taken.emplace(name, c);
      if (!fresh)
        throw ValidationError("renamed column '" + name + "' is ambiguous between " + it->second.str() + " and " +
                              c.str());
      out.exported_column_map[i][c] = name;
    }
  }

  auto renderer_for = [&](std::size_t level) -> sql::ColumnRenderer {
    return [&, level](const ColumnRef& c) {
      if (level_of.at(c.qualifier) == level) return c.str();
      return derived_name[level - 1] + "." + out.exported_column_map[level - 1].at(c);
    };
  };

  std::string inner;
  for (std::size_t level = 0; level < levels; ++level) {
    auto col = renderer_for(level);
    std::string text = "SELECT ";
    if (level + 1 == levels) {
      text += detail::select_list(q, col);
    } else if (exports[level].empty()) {
      text += "1 AS " + derived_name[level] + "_unit";
    } else {
      for (std::size_t k = 0; k < exports[level].size(); ++k) {
        const auto& c = exports[level][k];
        text += (k ? ",\n       " : "") + col(c) + " AS " + out.exported_column_map[level].at(c);
      }
    }
    text += "\nFROM ";
    bool first = true;
    if (level > 0) {
      text += "(\n" + detail::indent(inner, "  ") + "\n) AS " + derived_name[level - 1];
      first = false;
    }
    for (const auto& alias : o.partitions[level].members) {
      text += first ? "" : ",\n     ";
      text += q.instance(alias).base_table + " AS " + alias;
      first = false;
    }
    bool first_conjunct = true;
    for (const auto& c : conjuncts) {
      if (conjunct_level(c) != level) continue;
      text += first_conjunct ? "\nWHERE " : "\n  AND ";
      text += render_conjunct(c.expr, col);
      first_conjunct = false;
    }
    inner = std::move(text);
  }
  out.sql = inner + ";";
  return out;
}

/// Flat left-deep form: one explicit JOIN chain in sequence order, each
/// join predicate in the earliest ON clause where both sides are bound.
inline RewrittenQuery rewrite_leftdeep(const QueryModel& q, const JoinOrder& o,
                                       EngineProfile target = EngineProfile::postgres) {
  detail::check_order_matches(q, o);
  RewrittenQuery out;
  out.mode = RewriteMode::leftdeep;
  out.prologue = render_settings(target);

  std::vector<const JoinPredicate*> joins;
  for (const auto& j : q.joins) joins.push_back(&j);
  std::sort(joins.begin(), joins.end(), [](auto* a, auto* b) { return a->ordinal < b->ordinal; });

  std::set<std::string> bound;
  std::vector<bool> emitted(joins.size(), false);
  std::string text = "SELECT " + detail::select_list(q, {}) + "\nFROM ";
  for (std::size_t i = 0; i < o.sequence.size(); ++i) {
    const auto& alias = o.sequence[i];
    std::string source = q.instance(alias).base_table + " AS " + alias;
    bound.insert(alias);
    if (i == 0) {
      text += source;
      continue;
    }
    std::vector<std::string> on;
    for (std::size_t k = 0; k < joins.size(); ++k) {
      if (emitted[k]) continue;
      const auto& j = *joins[k];
      if (bound.count(j.left.qualifier) && bound.count(j.right.qualifier)) {
        on.push_back(j.left.str() + " = " + j.right.str());
        emitted[k] = true;
      }
    }
    if (on.empty()) {
      text += "\nCROSS JOIN " + source;
      out.warnings.push_back("cross join at step " + std::to_string(i) + ": '" + alias +
                             "' shares no join predicate with the preceding tables");
      continue;
    }
    text += "\nJOIN " + source + " ON ";
    for (std::size_t k = 0; k < on.size(); ++k) text += (k ? " AND " : "") + on[k];
  }
  std::vector<const SelectionPredicate*> selections;
  for (const auto& s : q.selections) selections.push_back(&s);
  std::sort(selections.begin(), selections.end(), [](auto* a, auto* b) { return a->ordinal < b->ordinal; });
  for (std::size_t k = 0; k < selections.size(); ++k) {
    text += k == 0 ? "\nWHERE " : "\n  AND ";
    text += render_conjunct(selections[k]->expr);
  }
  out.sql = text + ";";
  return out;
}

inline RewrittenQuery rewrite(const QueryModel& q, const JoinOrder& o, RewriteMode mode,
                              EngineProfile target = EngineProfile::postgres) {
  return mode == RewriteMode::subquery ? rewrite_subquery(q, o, target) : rewrite_leftdeep(q, o, target);
}

inline nlohmann::ordered_json to_json(const RewrittenQuery& r) {
  nlohmann::ordered_json doc;
  doc["mode"] = to_string(r.mode);
  doc["prologue"] = r.prologue;
  doc["sql"] = r.sql;
  doc["exports"] = nlohmann::ordered_json::array();
  for (const auto& level : r.exported_column_map) {
    nlohmann::ordered_json m = nlohmann::ordered_json::object();
    for (const auto& [c, name] : level) m[c.str()] = name;
    doc["exports"].push_back(std::move(m));
  }
  doc["warnings"] = r.warnings;
  return doc;
}

}  // namespace simpli2
