#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "simpli2/costlab/table.hpp"
#include "simpli2/error.hpp"
#include "simpli2/planner.hpp"
#include "simpli2/query.hpp"
#include "simpli2/sql/ast.hpp"

namespace simpli2::costlab {

struct ExecOptions {
  /// Any intermediate result larger than this aborts the evaluation.
  std::uint64_t row_ceiling = 1'000'000;
};

struct QualifiedColumn {
  std::string qualifier;
  std::string name;
};

/// A bag of rows with qualified column names.
struct Relation {
  std::vector<QualifiedColumn> columns;
  std::vector<Row> rows;
};

using ResultSet = std::vector<Row>;

/// Sum of join-output cardinalities of a left-deep execution. Base-table
/// scans (after their selections) are free; the final join counts.
struct CostReport {
  JoinOrder order;
  std::vector<std::uint64_t> step_cardinalities;
  std::uint64_t analytical_cost = 0;
};

namespace detail {

inline bool truthy(const Value& v) {
  if (const auto* i = std::get_if<std::int64_t>(&v)) return *i != 0;
  if (const auto* d = std::get_if<double>(&v)) return *d != 0.0;
  return false;
}

inline Value boolean(std::optional<bool> b) {
  if (!b) return Value{};
  return static_cast<std::int64_t>(*b ? 1 : 0);
}

inline std::optional<bool> as_bool(const Value& v) {
  if (sql::is_null(v)) return std::nullopt;
  return truthy(v);
}

/// SQL LIKE with `%` and `_`; case-sensitive, no escape character.
inline bool like_match(std::string_view text, std::string_view pattern) {
  std::size_t t = 0, p = 0, star_p = std::string_view::npos, star_t = 0;
  while (t < text.size()) {
    if (p < pattern.size() && (pattern[p] == '_' || pattern[p] == text[t])) {
      ++t;
      ++p;
    } else if (p < pattern.size() && pattern[p] == '%') {
      star_p = p++;
      star_t = t;
    } else if (star_p != std::string_view::npos) {
      p = star_p + 1;
      t = ++star_t;
    } else {
      return false;
    }
  }
  while (p < pattern.size() && pattern[p] == '%') ++p;
  return p == pattern.size();
}

inline std::optional<double> as_number(const Value& v) {
  auto c = sql::canonical(v);
  if (const auto* i = std::get_if<std::int64_t>(&c)) return static_cast<double>(*i);
  if (const auto* d = std::get_if<double>(&c)) return *d;
  return std::nullopt;
}

inline Value arithmetic(const std::string& op, const Value& a, const Value& b) {
  if (sql::is_null(a) || sql::is_null(b)) return Value{};
  if (op == "||") return sql::to_string(a) + sql::to_string(b);
  auto ca = sql::canonical(a), cb = sql::canonical(b);
  if (ca.index() == 1 && cb.index() == 1 && op != "/") {
    auto x = std::get<std::int64_t>(ca), y = std::get<std::int64_t>(cb);
    if (op == "+") return x + y;
    if (op == "-") return x - y;
    return x * y;
  }
  auto x = as_number(a), y = as_number(b);
  if (!x || !y) throw ExecutionError("non-numeric operand to '" + op + "'");
  if (op == "+") return *x + *y;
  if (op == "-") return *x - *y;
  if (op == "*") return *x * *y;
  if (*y == 0) return Value{};
  if (ca.index() == 1 && cb.index() == 1) return std::get<std::int64_t>(ca) / std::get<std::int64_t>(cb);
  return *x / *y;
}

/// Applies a non-aggregate operator to already evaluated operands.
inline Value apply_operator(const sql::Expr& e, const std::vector<Value>& args) {
  using K = sql::ExprKind;
  switch (e.kind) {
    case K::literal: return e.literal;
    case K::unary:
      if (e.op == "NOT") {
        auto b = as_bool(args[0]);
        return b ? boolean(!*b) : Value{};
      }
      if (sql::is_null(args[0])) return Value{};
      return arithmetic("-", std::int64_t{0}, args[0]);
    case K::binary: {
      const auto& op = e.op;
      if (op == "AND") {
        auto a = as_bool(args[0]), b = as_bool(args[1]);
        if ((a && !*a) || (b && !*b)) return boolean(false);
        if (a && b) return boolean(true);
        return Value{};
      }
      if (op == "OR") {
        auto a = as_bool(args[0]), b = as_bool(args[1]);
        if ((a && *a) || (b && *b)) return boolean(true);
        if (a && b) return boolean(false);
        return Value{};
      }
      if (op == "+" || op == "-" || op == "*" || op == "/" || op == "||") return arithmetic(op, args[0], args[1]);
      auto c = sql::compare(args[0], args[1]);
      if (!c) return Value{};
      if (op == "=") return boolean(*c == 0);
      if (op == "<>") return boolean(*c != 0);
      if (op == "<") return boolean(*c < 0);
      if (op == ">") return boolean(*c > 0);
      if (op == "<=") return boolean(*c <= 0);
      if (op == ">=") return boolean(*c >= 0);
      throw ExecutionError("unsupported operator '" + op + "'");
    }
    case K::in_list: {
      if (sql::is_null(args[0])) return Value{};
      bool saw_null = false;
      for (std::size_t i = 1; i < args.size(); ++i) {
        auto c = sql::compare(args[0], args[i]);
        if (!c) {
          saw_null = true;
        } else if (*c == 0) {
          return boolean(!e.negated);
        }
      }
      return saw_null ? Value{} : boolean(e.negated);
    }
    case K::between: {
      auto lo = sql::compare(args[0], args[1]);
      auto hi = sql::compare(args[0], args[2]);
      std::optional<bool> a = lo ? std::optional<bool>(*lo >= 0) : std::nullopt;
      std::optional<bool> b = hi ? std::optional<bool>(*hi <= 0) : std::nullopt;
      std::optional<bool> r;
      if ((a && !*a) || (b && !*b)) r = false;
      else if (a && b) r = true;
      if (r && e.negated) r = !*r;
      return boolean(r);
    }
    case K::like: {
      if (sql::is_null(args[0]) || sql::is_null(args[1])) return Value{};
      bool m = like_match(sql::to_string(args[0]), sql::to_string(args[1]));
      return boolean(m != e.negated);
    }
    case K::is_null: return boolean(sql::is_null(args[0]) != e.negated);
    case K::call:
      if (sql::is_aggregate_name(e.op)) throw ExecutionError("aggregate " + e.op + " outside the select list");
      throw ExecutionError("unsupported function " + e.op);
    default: throw ExecutionError("cannot evaluate expression");
  }
}

/// Expression with column references resolved to row positions.
struct Bound {
  const sql::Expr* expr = nullptr;
  std::size_t column = SIZE_MAX;
  std::vector<Bound> args;
};

inline std::optional<std::size_t> resolve(const std::vector<QualifiedColumn>& layout, const sql::ColumnRef& ref) {
  std::optional<std::size_t> hit;
  for (std::size_t i = 0; i < layout.size(); ++i) {
    if (layout[i].name != ref.column) continue;
    if (!ref.qualifier.empty() && layout[i].qualifier != ref.qualifier) continue;
    if (hit) throw ExecutionError("ambiguous column reference '" + ref.str() + "'");
    hit = i;
  }
  return hit;
}

inline Bound bind_expr(const sql::Expr& e, const std::vector<QualifiedColumn>& layout) {
  Bound b;
  b.expr = &e;
  if (e.kind == sql::ExprKind::column) {
    auto idx = resolve(layout, e.column);
    if (!idx) throw ReferenceError("column '" + e.column.str() + "' is not available");
    b.column = *idx;
  }
  for (const auto& a : e.args) b.args.push_back(bind_expr(a, layout));
  return b;
}

inline Value eval(const Bound& b, const Row& row) {
  if (b.expr->kind == sql::ExprKind::column) return row[b.column];
  std::vector<Value> args;
  args.reserve(b.args.size());
  for (const auto& a : b.args) args.push_back(eval(a, row));
  return apply_operator(*b.expr, args);
}

inline Value aggregate(const Bound& b, const std::vector<Row>& rows) {
  const auto& op = b.expr->op;
  if (op == "COUNT") {
    if (!b.args.empty() && b.args[0].expr->kind == sql::ExprKind::star) return static_cast<std::int64_t>(rows.size());
    std::int64_t n = 0;
    for (const auto& r : rows)
      if (!sql::is_null(eval(b.args.at(0), r))) ++n;
    return n;
  }
  if (b.args.size() != 1) throw ExecutionError(op + " expects one argument");
  Value best;
  double sum = 0;
  bool integral = true;
  std::int64_t isum = 0, count = 0;
  for (const auto& r : rows) {
    auto v = eval(b.args[0], r);
    if (sql::is_null(v)) continue;
    ++count;
    if (op == "MIN" || op == "MAX") {
      if (sql::is_null(best)) {
        best = v;
      } else {
        auto c = sql::compare(v, best);
        if ((op == "MIN" && *c < 0) || (op == "MAX" && *c > 0)) best = v;
      }
      continue;
    }
    auto c = sql::canonical(v);
    if (c.index() == 1) {
      isum += std::get<std::int64_t>(c);
    } else {
      integral = false;
    }
    auto n = as_number(v);
    if (!n) throw ExecutionError(op + " over non-numeric value");
    sum += *n;
  }
  if (op == "MIN" || op == "MAX") return best;
  if (count == 0) return Value{};
  if (op == "SUM") return integral ? Value(isum) : Value(sum);
  if (op == "AVG") return sum / static_cast<double>(count);
  throw ExecutionError("unsupported aggregate " + op);
}

inline Value eval_grouped(const Bound& b, const std::vector<Row>& rows) {
  const auto& e = *b.expr;
  if (e.kind == sql::ExprKind::call && sql::is_aggregate_name(e.op)) return aggregate(b, rows);
  if (e.kind == sql::ExprKind::column)
    throw ExecutionError("column '" + e.column.str() + "' must appear inside an aggregate");
  std::vector<Value> args;
  for (const auto& a : b.args) args.push_back(eval_grouped(a, rows));
  return apply_operator(e, args);
}

struct KeyHash {
  std::size_t operator()(const Row& key) const {
    std::size_t h = 0;
    for (const auto& v : key) h = h * 1000003u ^ sql::ValueHash{}(v);
    return h;
  }
};

struct KeyEq {
  bool operator()(const Row& a, const Row& b) const {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
      if (sql::compare_canonical(sql::canonical(a[i]), sql::canonical(b[i])) != 0) return false;
    return true;
  }
};

inline std::vector<QualifiedColumn> concat(const std::vector<QualifiedColumn>& a, const std::vector<QualifiedColumn>& b) {
  auto out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

/// Which inputs a conjunct touches.
inline std::vector<std::size_t> sources_of(const sql::Expr& e, const std::vector<Relation>& inputs) {
  std::vector<std::size_t> out;
  sql::visit_columns(e, [&](const sql::ColumnRef& ref) {
    std::optional<std::size_t> owner;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      if (resolve(inputs[i].columns, ref)) {
        if (owner) throw ExecutionError("ambiguous column reference '" + ref.str() + "'");
        owner = i;
      }
    }
    if (!owner) throw ReferenceError("column '" + ref.str() + "' is not available");
    if (std::find(out.begin(), out.end(), *owner) == out.end()) out.push_back(*owner);
  });
  std::sort(out.begin(), out.end());
  return out;
}

inline void filter_in_place(Relation& rel, const std::vector<const sql::Expr*>& predicates) {
  if (predicates.empty()) return;
  std::vector<Bound> bound;
  for (const auto* p : predicates) bound.push_back(bind_expr(*p, rel.columns));
  std::vector<Row> kept;
  for (auto& row : rel.rows) {
    bool ok = std::all_of(bound.begin(), bound.end(), [&](const Bound& b) { return truthy(eval(b, row)); });
    if (ok) kept.push_back(std::move(row));
  }
  rel.rows = std::move(kept);
}

}  // namespace detail

struct JoinRun {
  Relation result;
  std::vector<std::uint64_t> steps;  // |result| after each join
};

/// Left-deep execution in input order. Single-input conjuncts filter their
/// input first; every other conjunct is applied at the first step where all
/// of its inputs are bound, equalities against the new input serving as
/// hash-join keys.
inline JoinRun join_left_deep(std::vector<Relation> inputs, const std::vector<sql::Expr>& conjuncts,
                              const ExecOptions& options = {}) {
  if (inputs.empty()) throw ExecutionError("nothing to join");
  std::vector<std::vector<const sql::Expr*>> at_step(inputs.size());
  std::vector<std::vector<const sql::Expr*>> local(inputs.size());
  for (const auto& c : conjuncts) {
    auto src = detail::sources_of(c, inputs);
    if (src.size() <= 1) {
      local[src.empty() ? 0 : src.front()].push_back(&c);
    } else {
      at_step[src.back()].push_back(&c);
    }
  }
  for (std::size_t i = 0; i < inputs.size(); ++i) detail::filter_in_place(inputs[i], local[i]);

  JoinRun run;
  Relation current = std::move(inputs[0]);
  for (std::size_t i = 1; i < inputs.size(); ++i) {
    Relation& right = inputs[i];
    std::vector<std::size_t> left_keys, right_keys;
    std::vector<const sql::Expr*> residual;
    for (const auto* c : at_step[i]) {
      if (c->kind == sql::ExprKind::binary && c->op == "=" && c->args[0].kind == sql::ExprKind::column &&
          c->args[1].kind == sql::ExprKind::column) {
        auto l0 = detail::resolve(current.columns, c->args[0].column);
        auto r1 = detail::resolve(right.columns, c->args[1].column);
        auto l1 = detail::resolve(current.columns, c->args[1].column);
        auto r0 = detail::resolve(right.columns, c->args[0].column);
        if (l0 && r1) {
          left_keys.push_back(*l0);
          right_keys.push_back(*r1);
          continue;
        }
        if (l1 && r0) {
          left_keys.push_back(*l1);
          right_keys.push_back(*r0);
          continue;
        }
      }
      residual.push_back(c);
    }

    Relation out;
    out.columns = detail::concat(current.columns, right.columns);
    std::vector<detail::Bound> filters;
    for (const auto* c : residual) filters.push_back(detail::bind_expr(*c, out.columns));
    auto emit = [&](const Row& l, const Row& r) {
      Row row;
      row.reserve(l.size() + r.size());
      row.insert(row.end(), l.begin(), l.end());
      row.insert(row.end(), r.begin(), r.end());
      for (const auto& f : filters)
        if (!detail::truthy(detail::eval(f, row))) return;
      out.rows.push_back(std::move(row));
      if (out.rows.size() > options.row_ceiling)
        throw ExecutionError("intermediate result exceeds the row ceiling of " + std::to_string(options.row_ceiling) +
                             " rows at join step " + std::to_string(i));
    };

    if (left_keys.empty()) {
      for (const auto& l : current.rows)
        for (const auto& r : right.rows) emit(l, r);
    } else {
      std::unordered_map<Row, std::vector<std::size_t>, detail::KeyHash, detail::KeyEq> table;
      for (std::size_t k = 0; k < right.rows.size(); ++k) {
        Row key;
        bool has_null = false;
        for (auto idx : right_keys) {
          has_null |= sql::is_null(right.rows[k][idx]);
          key.push_back(right.rows[k][idx]);
        }
        if (!has_null) table[std::move(key)].push_back(k);
      }
      for (const auto& l : current.rows) {
        Row key;
        bool has_null = false;
        for (auto idx : left_keys) {
          has_null |= sql::is_null(l[idx]);
          key.push_back(l[idx]);
        }
        if (has_null) continue;
        auto it = table.find(key);
        if (it == table.end()) continue;
        for (auto k : it->second) emit(l, right.rows[k]);
      }
    }
    run.steps.push_back(out.rows.size());
    current = std::move(out);
  }
  run.result = std::move(current);
  return run;
}

/// Evaluates select items over a joined relation. Aggregates collapse the
/// relation to one row.
inline ResultSet project(const Relation& rel, const std::vector<const sql::Expr*>& items, bool star) {
  ResultSet out;
  if (star) return rel.rows;
  bool grouped = std::any_of(items.begin(), items.end(), [](const auto* e) { return sql::contains_aggregate(*e); });
  std::vector<detail::Bound> bound;
  for (const auto* e : items) bound.push_back(detail::bind_expr(*e, rel.columns));
  if (grouped) {
    Row row;
    for (const auto& b : bound) row.push_back(detail::eval_grouped(b, rel.rows));
    out.push_back(std::move(row));
    return out;
  }
  for (const auto& r : rel.rows) {
    Row row;
    for (const auto& b : bound) row.push_back(detail::eval(b, r));
    out.push_back(std::move(row));
  }
  return out;
}

inline Relation instance_relation(const TableSet& tables, const std::string& table, const std::string& alias) {
  auto it = tables.find(table);
  if (it == tables.end()) throw ReferenceError("no data loaded for table '" + table + "'");
  Relation rel;
  for (const auto& c : it->second.columns) rel.columns.push_back({alias, c});
  rel.rows = it->second.rows;
  return rel;
}

/// All conjuncts of `q` in WHERE order.
inline std::vector<sql::Expr> conjunct_exprs(const QueryModel& q) {
  std::vector<std::pair<std::size_t, sql::Expr>> tagged;
  for (const auto& j : q.joins) tagged.emplace_back(j.ordinal, j.expr());
  for (const auto& s : q.selections) tagged.emplace_back(s.ordinal, s.expr);
  std::sort(tagged.begin(), tagged.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<sql::Expr> out;
  for (auto& [o, e] : tagged) out.push_back(std::move(e));
  return out;
}

struct Execution {
  ResultSet result;
  CostReport cost;
};

/// Runs `q` left-deep in `o.sequence` order and reports every intermediate
/// cardinality.
inline Execution execute_order(const TableSet& tables, const QueryModel& q, const JoinOrder& o,
                               const ExecOptions& options = {}) {
  std::vector<Relation> inputs;
  for (const auto& alias : o.sequence) inputs.push_back(instance_relation(tables, q.instance(alias).base_table, alias));
  if (inputs.size() != q.instances.size()) throw ValidationError("order does not cover every query alias");
  auto run = join_left_deep(std::move(inputs), conjunct_exprs(q), options);
  std::vector<const sql::Expr*> items;
  for (const auto& item : q.output) items.push_back(&item.expr);

  Execution ex;
  ex.result = project(run.result, items, q.star);
  if (q.star) {
    // Star output follows the FROM list, not the join order.
    std::vector<std::size_t> perm;
    for (const auto& inst : q.instances)
      for (std::size_t i = 0; i < run.result.columns.size(); ++i)
        if (run.result.columns[i].qualifier == inst.alias) perm.push_back(i);
    for (auto& row : ex.result) {
      Row reordered;
      for (auto i : perm) reordered.push_back(row[i]);
      row = std::move(reordered);
    }
  }
  ex.cost.order = o;
  ex.cost.step_cardinalities = std::move(run.steps);
  ex.cost.analytical_cost = std::accumulate(ex.cost.step_cardinalities.begin(), ex.cost.step_cardinalities.end(),
                                            std::uint64_t{0});
  return ex;
}

/// Per-level cardinalities of a nested evaluation, innermost level first.
struct StatementTrace {
  std::vector<std::vector<std::uint64_t>> level_steps;
};

namespace detail {

inline std::string output_name(const sql::SelectItem& item) {
  if (!item.alias.empty()) return item.alias;
  if (item.expr.kind == sql::ExprKind::column) return item.expr.column.column;
  return "?column?";
}

inline Relation evaluate_statement(const sql::SelectStmt& stmt, const TableSet& tables, const ExecOptions& options,
                                   StatementTrace& trace, std::size_t depth);

inline Relation source_relation(const sql::TableSource& src, const TableSet& tables, const ExecOptions& options,
                                StatementTrace& trace, std::size_t depth) {
  if (!src.is_derived()) return instance_relation(tables, src.table, src.alias);
  auto inner = evaluate_statement(*src.derived, tables, options, trace, depth + 1);
  for (auto& c : inner.columns) c.qualifier = src.alias;
  return inner;
}

inline Relation evaluate_statement(const sql::SelectStmt& stmt, const TableSet& tables, const ExecOptions& options,
                                   StatementTrace& trace, std::size_t depth) {
  try {
    std::vector<Relation> inputs;
    std::vector<sql::Expr> conjuncts;
    for (const auto& item : stmt.from) {
      inputs.push_back(source_relation(item.source, tables, options, trace, depth));
      for (const auto& j : item.joins) {
        inputs.push_back(source_relation(j.source, tables, options, trace, depth));
        if (j.on) flatten_and(*j.on, conjuncts);
      }
    }
    if (stmt.where) flatten_and(*stmt.where, conjuncts);
    auto run = join_left_deep(std::move(inputs), conjuncts, options);
    trace.level_steps.push_back(run.steps);

    Relation out;
    std::vector<const sql::Expr*> items;
    if (stmt.star) {
      out.columns = run.result.columns;
    } else {
      for (const auto& item : stmt.items) {
        items.push_back(&item.expr);
        out.columns.push_back({"", output_name(item)});
      }
    }
    out.rows = project(run.result, items, stmt.star);
    return out;
  } catch (const ExecutionError& e) {
    std::string what = e.what();
    if (what.rfind("nesting level", 0) == 0) throw;
    throw ExecutionError("nesting level " + std::to_string(depth) + ": " + what);
  }
}

}  // namespace detail

/// Evaluates parsed SQL (derived tables innermost-out, explicit joins in
/// written order).
inline ResultSet evaluate(const sql::SelectStmt& stmt, const TableSet& tables, const ExecOptions& options = {},
                          StatementTrace* trace = nullptr) {
  StatementTrace local;
  auto rel = detail::evaluate_statement(stmt, tables, options, trace ? *trace : local, 0);
  return rel.rows;
}

/// Sorted canonical copy, for multiset comparison.
inline ResultSet normalized(ResultSet rows) {
  for (auto& r : rows)
    for (auto& v : r) v = sql::canonical(v);
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(), [](const Value& x, const Value& y) {
      return sql::compare_canonical(x, y) < 0;
    });
  });
  return rows;
}

inline bool same_multiset(const ResultSet& a, const ResultSet& b) {
  if (a.size() != b.size()) return false;
  auto x = normalized(a), y = normalized(b);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i].size() != y[i].size()) return false;
    for (std::size_t k = 0; k < x[i].size(); ++k)
      if (sql::compare_canonical(x[i][k], y[i][k]) != 0) return false;
  }
  return true;
}

inline nlohmann::ordered_json to_json(const CostReport& c) {
  return {{"algorithm", c.order.algorithm},
          {"sequence", c.order.sequence},
          {"step_cardinalities", c.step_cardinalities},
          {"analytical_cost", c.analytical_cost}};
}

}  // namespace simpli2::costlab
