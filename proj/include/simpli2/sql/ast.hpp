#pragma once

#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "simpli2/sql/value.hpp"

namespace simpli2::sql {

struct ColumnRef {
  std::string qualifier;  // empty when unqualified
  std::string column;

  std::string str() const { return qualifier.empty() ? column : qualifier + "." + column; }
  auto operator<=>(const ColumnRef&) const = default;
};

enum class ExprKind {
  column,
  literal,
  star,      // only as COUNT(*) argument
  unary,     // op: NOT, -
  binary,    // op: AND OR = <> < > <= >= + - * / ||
  in_list,   // args[0] IN (args[1..])
  between,   // args[0] BETWEEN args[1] AND args[2]
  like,      // args[0] LIKE args[1]
  is_null,   // args[0] IS NULL
  call,      // op = upper-cased function name
};

/// Scalar/boolean expression tree. `negated` covers NOT IN, NOT LIKE,
/// NOT BETWEEN and IS NOT NULL.
struct Expr {
  ExprKind kind = ExprKind::literal;
  std::string op;
  ColumnRef column;
  Value literal;
  bool negated = false;
  std::vector<Expr> args;

  static Expr make_column(std::string qualifier, std::string column) {
    Expr e;
    e.kind = ExprKind::column;
    e.column = {std::move(qualifier), std::move(column)};
    return e;
  }
  static Expr make_literal(Value v) {
    Expr e;
    e.kind = ExprKind::literal;
    e.literal = std::move(v);
    return e;
  }
  static Expr make_binary(std::string op, Expr lhs, Expr rhs) {
    Expr e;
    e.kind = ExprKind::binary;
    e.op = std::move(op);
    e.args.push_back(std::move(lhs));
    e.args.push_back(std::move(rhs));
    return e;
  }

  bool operator==(const Expr&) const = default;
};

inline bool is_aggregate_name(const std::string& name) {
  return name == "MIN" || name == "MAX" || name == "COUNT" || name == "SUM" || name == "AVG";
}

template <class F>
void visit_columns(const Expr& e, F&& f) {
  if (e.kind == ExprKind::column) f(e.column);
  for (const auto& a : e.args) visit_columns(a, f);
}

template <class F>
void visit_columns_mut(Expr& e, F&& f) {
  if (e.kind == ExprKind::column) f(e.column);
  for (auto& a : e.args) visit_columns_mut(a, f);
}

inline bool contains_aggregate(const Expr& e) {
  if (e.kind == ExprKind::call && is_aggregate_name(e.op)) return true;
  for (const auto& a : e.args)
    if (contains_aggregate(a)) return true;
  return false;
}

inline std::set<std::string> qualifiers(const Expr& e) {
  std::set<std::string> out;
  visit_columns(e, [&](const ColumnRef& c) { out.insert(c.qualifier); });
  return out;
}

/// Splits a tree of ANDs into its conjuncts, left to right.
inline void flatten_and(const Expr& e, std::vector<Expr>& out) {
  if (e.kind == ExprKind::binary && e.op == "AND") {
    flatten_and(e.args[0], out);
    flatten_and(e.args[1], out);
  } else {
    out.push_back(e);
  }
}

struct SelectStmt;

/// A base table or a parenthesised derived table, always aliased.
struct TableSource {
  std::string table;  // empty for derived tables
  std::string alias;
  std::shared_ptr<const SelectStmt> derived;
  std::size_t offset = 0;

  bool is_derived() const { return derived != nullptr; }
};

enum class JoinType { inner, cross };

struct JoinClause {
  JoinType type = JoinType::inner;
  TableSource source;
  std::optional<Expr> on;
};

/// One comma-separated FROM entry: a source followed by explicit joins.
struct FromItem {
  TableSource source;
  std::vector<JoinClause> joins;
};

struct SelectItem {
  Expr expr;
  std::string alias;  // empty when no AS
  std::string text;   // verbatim source text of the expression
};

struct SelectStmt {
  bool star = false;
  std::vector<SelectItem> items;
  std::vector<FromItem> from;
  std::optional<Expr> where;
};

}  // namespace simpli2::sql
