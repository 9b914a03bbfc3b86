#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "simpli2/catalog.hpp"
#include "simpli2/error.hpp"
#include "simpli2/sql/ast.hpp"
#include "simpli2/sql/parser.hpp"
#include "simpli2/sql/render.hpp"

namespace simpli2 {

using sql::ColumnRef;

struct TableInstance {
  std::string alias;
  std::string base_table;
  std::uint64_t size = 0;

  bool operator==(const TableInstance&) const = default;
};

enum class JoinKind { one_to_many, many_to_many };
enum class KeySide { left, right, none };

inline const char* to_string(JoinKind k) { return k == JoinKind::one_to_many ? "1:n" : "n:m"; }
inline const char* to_string(KeySide s) {
  switch (s) {
    case KeySide::left: return "left";
    case KeySide::right: return "right";
    default: return "none";
  }
}

/// Equi-join `left = right` between two distinct aliases. `ordinal` is the
/// conjunct's position in the WHERE clause; implied (transitive) edges get
/// ordinals after every written conjunct.
struct JoinPredicate {
  ColumnRef left;
  ColumnRef right;
  JoinKind kind = JoinKind::many_to_many;
  KeySide key_side = KeySide::none;
  std::size_t ordinal = 0;
  bool implied = false;

  sql::Expr expr() const {
    return sql::Expr::make_binary("=", sql::Expr::make_column(left.qualifier, left.column),
                                  sql::Expr::make_column(right.qualifier, right.column));
  }

  bool operator==(const JoinPredicate&) const = default;
};

/// Any WHERE conjunct that is not an equi-join; carried as opaque text plus
/// its parsed form for placement, renaming and evaluation.
struct SelectionPredicate {
  std::string text;
  std::set<std::string> aliases;
  sql::Expr expr;
  std::size_t ordinal = 0;
};

struct OutputItem {
  std::string text;
  std::string name;  // AS name, may be empty
  sql::Expr expr;
  std::set<std::string> aliases;
};

struct QueryModel {
  std::vector<TableInstance> instances;
  std::vector<JoinPredicate> joins;
  std::vector<SelectionPredicate> selections;
  std::vector<OutputItem> output;
  bool star = false;

  const TableInstance* find(std::string_view alias) const {
    for (const auto& t : instances)
      if (t.alias == alias) return &t;
    return nullptr;
  }

  const TableInstance& instance(std::string_view alias) const {
    if (const auto* t = find(alias)) return *t;
    throw ReferenceError("unknown alias '" + std::string(alias) + "'");
  }

  std::vector<std::string> aliases() const {
    std::vector<std::string> out;
    for (const auto& t : instances) out.push_back(t.alias);
    return out;
  }

  std::size_t conjunct_count() const { return joins.size() + selections.size(); }
};

/// Ignores verbatim text; compares what the query means.
inline bool structurally_equal(const QueryModel& a, const QueryModel& b) {
  if (a.instances != b.instances || a.joins != b.joins || a.star != b.star) return false;
  if (a.selections.size() != b.selections.size() || a.output.size() != b.output.size()) return false;
  for (std::size_t i = 0; i < a.selections.size(); ++i) {
    const auto& x = a.selections[i];
    const auto& y = b.selections[i];
    if (!(x.expr == y.expr) || x.aliases != y.aliases || x.ordinal != y.ordinal) return false;
  }
  for (std::size_t i = 0; i < a.output.size(); ++i) {
    const auto& x = a.output[i];
    const auto& y = b.output[i];
    if (!(x.expr == y.expr) || x.name != y.name || x.aliases != y.aliases) return false;
  }
  return true;
}

/// Classifies `pred` from key constraints only. One key endpoint gives 1:n
/// with that endpoint as key side; two keys give 1:n keyed on the left;
/// none gives n:m.
template <ConstraintSource Source>
void classify_join(JoinPredicate& pred, std::string_view left_table, std::string_view right_table,
                   const Source& source) {
  bool left_key = source.is_key_column(left_table, pred.left.column);
  bool right_key = source.is_key_column(right_table, pred.right.column);
  if (left_key) {
    pred.kind = JoinKind::one_to_many;
    pred.key_side = KeySide::left;
  } else if (right_key) {
    pred.kind = JoinKind::one_to_many;
    pred.key_side = KeySide::right;
  } else {
    pred.kind = JoinKind::many_to_many;
    pred.key_side = KeySide::none;
  }
}

struct QueryParseOptions {
  /// Accept `a JOIN b ON ...` / `CROSS JOIN` chains; ON predicates become
  /// WHERE conjuncts in textual order.
  bool explicit_joins = false;
};

namespace detail {

class QueryBinder {
public:
  QueryBinder(const Catalog& cat, QueryModel& q) : cat_(cat), q_(q) {}

  void add_instance(const sql::TableSource& src) {
    if (src.is_derived()) throw ParseError("unsupported syntax: derived table in input query", src.offset);
    if (!cat_.has_table(src.table))
      throw ReferenceError("unknown table '" + src.table + "' (alias '" + src.alias + "')");
    if (q_.find(src.alias)) throw ValidationError("duplicate alias '" + src.alias + "'");
    q_.instances.push_back({src.alias, src.table, cat_.row_count(src.table)});
  }

  /// Qualifies unqualified references and checks every column exists.
  void bind(sql::Expr& e) const {
    sql::visit_columns_mut(e, [&](ColumnRef& c) {
      if (c.qualifier.empty()) {
        const TableInstance* owner = nullptr;
        for (const auto& t : q_.instances) {
          if (cat_.table(t.base_table).has_column(c.column)) {
            if (owner) throw ReferenceError("ambiguous column '" + c.column + "'");
            owner = &t;
          }
        }
        if (!owner) throw ReferenceError("unknown column '" + c.column + "'");
        c.qualifier = owner->alias;
        return;
      }
      const auto* inst = q_.find(c.qualifier);
      if (!inst) throw ReferenceError("unknown alias '" + c.qualifier + "' in '" + c.str() + "'");
      if (!cat_.table(inst->base_table).has_column(c.column))
        throw ReferenceError("unknown column '" + c.str() + "' (table '" + inst->base_table + "')");
    });
  }

  void add_conjunct(sql::Expr e, std::string text) {
    bind(e);
    std::size_t ordinal = q_.conjunct_count();
    if (e.kind == sql::ExprKind::binary && e.op == "=" && e.args[0].kind == sql::ExprKind::column &&
        e.args[1].kind == sql::ExprKind::column && e.args[0].column.qualifier != e.args[1].column.qualifier) {
      JoinPredicate pred;
      pred.left = e.args[0].column;
      pred.right = e.args[1].column;
      pred.ordinal = ordinal;
      classify_join(pred, q_.instance(pred.left.qualifier).base_table, q_.instance(pred.right.qualifier).base_table,
                    cat_);
      q_.joins.push_back(std::move(pred));
      return;
    }
    SelectionPredicate sel;
    sel.aliases = sql::qualifiers(e);
    if (sel.aliases.empty()) throw ValidationError("predicate '" + text + "' references no table");
    sel.text = std::move(text);
    sel.expr = std::move(e);
    sel.ordinal = ordinal;
    q_.selections.push_back(std::move(sel));
  }

private:
  const Catalog& cat_;
  QueryModel& q_;
};

}  // namespace detail

/// Parses a single SELECT of the supported subset into a QueryModel bound
/// against `cat`. Join edges come out classified.
inline QueryModel parse_query(std::string_view text, const Catalog& cat, QueryParseOptions options = {}) {
  auto stmt = sql::parse_select(text, options.explicit_joins);
  QueryModel q;
  detail::QueryBinder binder(cat, q);

  std::vector<const sql::Expr*> on_clauses;
  for (const auto& item : stmt.from) {
    binder.add_instance(item.source);
    for (const auto& join : item.joins) {
      binder.add_instance(join.source);
      if (join.on) on_clauses.push_back(&*join.on);
    }
  }

  std::vector<sql::Expr> conjuncts;
  for (const auto* on : on_clauses) sql::flatten_and(*on, conjuncts);
  if (stmt.where) sql::flatten_and(*stmt.where, conjuncts);
  for (auto& c : conjuncts) {
    auto rendered = sql::render(c);
    binder.add_conjunct(std::move(c), std::move(rendered));
  }

  q.star = stmt.star;
  for (auto& item : stmt.items) {
    OutputItem out;
    binder.bind(item.expr);
    out.text = std::move(item.text);
    out.name = std::move(item.alias);
    out.aliases = sql::qualifiers(item.expr);
    out.expr = std::move(item.expr);
    q.output.push_back(std::move(out));
  }
  return q;
}

/// Renders one member of an AND chain, parenthesised when it is itself a
/// disjunction.
inline std::string render_conjunct(const sql::Expr& e, const sql::ColumnRenderer& col = {}) {
  auto text = sql::render(e, col);
  return e.kind == sql::ExprKind::binary && e.op == "OR" ? "(" + text + ")" : text;
}

/// Renders the model back to SQL in the input subset (comma FROM list, one
/// WHERE conjunction in ordinal order).
inline std::string render_query(const QueryModel& q) {
  std::string out = "SELECT ";
  if (q.star) {
    out += "*";
  } else {
    for (std::size_t i = 0; i < q.output.size(); ++i) {
      if (i) out += ", ";
      out += sql::render(q.output[i].expr);
      if (!q.output[i].name.empty()) out += " AS " + q.output[i].name;
    }
  }
  out += "\nFROM ";
  for (std::size_t i = 0; i < q.instances.size(); ++i) {
    if (i) out += ",\n     ";
    out += q.instances[i].base_table + " AS " + q.instances[i].alias;
  }
  std::vector<std::pair<std::size_t, sql::Expr>> conjuncts;
  for (const auto& j : q.joins) conjuncts.emplace_back(j.ordinal, j.expr());
  for (const auto& s : q.selections) conjuncts.emplace_back(s.ordinal, s.expr);
  std::sort(conjuncts.begin(), conjuncts.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  for (std::size_t i = 0; i < conjuncts.size(); ++i) {
    out += i == 0 ? "\nWHERE " : "\n  AND ";
    out += render_conjunct(conjuncts[i].second);
  }
  return out + ";";
}

/// Equality classes of join columns: returns the equi-join predicates implied
/// by transitivity that are not already present (in either orientation).
/// Implied predicates are left unclassified; graph construction classifies
/// them like any other edge.
inline std::vector<JoinPredicate> implied_joins(const QueryModel& q) {
  std::map<ColumnRef, ColumnRef> parent;
  auto find = [&](ColumnRef c) {
    while (parent.at(c) != c) c = parent.at(c);
    return c;
  };
  for (const auto& j : q.joins) {
    parent.try_emplace(j.left, j.left);
    parent.try_emplace(j.right, j.right);
  }
  for (const auto& j : q.joins) {
    auto a = find(j.left);
    auto b = find(j.right);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
  std::map<ColumnRef, std::vector<ColumnRef>> classes;
  for (const auto& [c, p] : parent) classes[find(c)].push_back(c);

  std::set<std::pair<ColumnRef, ColumnRef>> present;
  for (const auto& j : q.joins) {
    present.emplace(j.left, j.right);
    present.emplace(j.right, j.left);
  }
  std::vector<JoinPredicate> out;
  std::size_t ordinal = q.conjunct_count();
  for (const auto& [root, members] : classes) {
    for (std::size_t i = 0; i < members.size(); ++i) {
      for (std::size_t k = i + 1; k < members.size(); ++k) {
        const auto& a = members[i];
        const auto& b = members[k];
        if (a.qualifier == b.qualifier || present.count({a, b})) continue;
        JoinPredicate p;
        p.left = a;
        p.right = b;
        p.ordinal = ordinal++;
        p.implied = true;
        out.push_back(p);
      }
    }
  }
  return out;
}

/// Returns `q` with its implied equi-joins appended (classified against
/// `source`). Adding them never changes the query result.
template <ConstraintSource Source>
QueryModel with_implied_joins(QueryModel q, const Source& source) {
  for (auto p : implied_joins(q)) {
    classify_join(p, q.instance(p.left.qualifier).base_table, q.instance(p.right.qualifier).base_table, source);
    q.joins.push_back(std::move(p));
  }
  return q;
}

}  // namespace simpli2
