#pragma once

#include <functional>
#include <string>

#include "simpli2/sql/ast.hpp"

namespace simpli2::sql {

using ColumnRenderer = std::function<std::string(const ColumnRef&)>;

namespace detail {

inline int precedence(const Expr& e) {
  switch (e.kind) {
    case ExprKind::binary:
      if (e.op == "OR") return 1;
      if (e.op == "AND") return 2;
      if (e.op == "+" || e.op == "-" || e.op == "||") return 5;
      if (e.op == "*" || e.op == "/") return 6;
      return 4;  // comparisons
    case ExprKind::unary: return e.op == "NOT" ? 3 : 7;
    case ExprKind::in_list:
    case ExprKind::between:
    case ExprKind::like:
    case ExprKind::is_null: return 4;
    default: return 8;
  }
}

inline std::string quote_string(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') out += '\'';
    out += c;
  }
  return out + "'";
}

inline void render_into(const Expr& e, const ColumnRenderer& col, std::string& out);

inline void render_child(const Expr& child, int min_prec, const ColumnRenderer& col, std::string& out) {
  bool paren = precedence(child) < min_prec;
  if (paren) out += '(';
  render_into(child, col, out);
  if (paren) out += ')';
}

inline void render_into(const Expr& e, const ColumnRenderer& col, std::string& out) {
  switch (e.kind) {
    case ExprKind::column: out += col ? col(e.column) : e.column.str(); return;
    case ExprKind::literal:
      out += std::holds_alternative<std::string>(e.literal) ? quote_string(std::get<std::string>(e.literal))
                                                            : to_string(e.literal);
      return;
    case ExprKind::star: out += '*'; return;
    case ExprKind::unary:
      if (e.op == "NOT") {
        out += "NOT ";
        render_child(e.args[0], 3, col, out);
      } else {
        out += e.op;
        render_child(e.args[0], 7, col, out);
      }
      return;
    case ExprKind::binary: {
      int p = precedence(e);
      // Left-associative: the right operand needs strictly higher precedence.
      bool comparison = p == 4;
      render_child(e.args[0], comparison ? p + 1 : p, col, out);
      out += ' ' + e.op + ' ';
      render_child(e.args[1], p + 1, col, out);
      return;
    }
    case ExprKind::in_list:
      render_child(e.args[0], 5, col, out);
      out += e.negated ? " NOT IN (" : " IN (";
      for (std::size_t i = 1; i < e.args.size(); ++i) {
        if (i > 1) out += ", ";
        render_child(e.args[i], 5, col, out);
      }
      out += ')';
      return;
    case ExprKind::between:
      render_child(e.args[0], 5, col, out);
      out += e.negated ? " NOT BETWEEN " : " BETWEEN ";
      render_child(e.args[1], 5, col, out);
      out += " AND ";
      render_child(e.args[2], 5, col, out);
      return;
    case ExprKind::like:
      render_child(e.args[0], 5, col, out);
      out += e.negated ? " NOT LIKE " : " LIKE ";
      render_child(e.args[1], 5, col, out);
      return;
    case ExprKind::is_null:
      render_child(e.args[0], 5, col, out);
      out += e.negated ? " IS NOT NULL" : " IS NULL";
      return;
    case ExprKind::call:
      out += e.op + '(';
      for (std::size_t i = 0; i < e.args.size(); ++i) {
        if (i) out += ", ";
        render_into(e.args[i], col, out);
      }
      out += ')';
      return;
  }
}

}  // namespace detail

/// Renders an expression; `col` substitutes column references (default:
/// `qualifier.column`).
inline std::string render(const Expr& e, const ColumnRenderer& col = {}) {
  std::string out;
  detail::render_into(e, col, out);
  return out;
}

inline std::string render(const SelectStmt& stmt);

namespace detail {

inline std::string render_source(const TableSource& src) {
  if (src.is_derived()) return "(" + render(*src.derived) + ") AS " + src.alias;
  return src.alias == src.table ? src.table : src.table + " AS " + src.alias;
}

}  // namespace detail

inline std::string render(const SelectStmt& stmt) {
  std::string out = "SELECT ";
  if (stmt.star) {
    out += '*';
  } else {
    for (std::size_t i = 0; i < stmt.items.size(); ++i) {
      if (i) out += ", ";
      out += render(stmt.items[i].expr);
      if (!stmt.items[i].alias.empty()) out += " AS " + stmt.items[i].alias;
    }
  }
  out += " FROM ";
  for (std::size_t i = 0; i < stmt.from.size(); ++i) {
    if (i) out += ", ";
    out += detail::render_source(stmt.from[i].source);
    for (const auto& j : stmt.from[i].joins) {
      out += j.type == JoinType::cross ? " CROSS JOIN " : " JOIN ";
      out += detail::render_source(j.source);
      if (j.on) out += " ON " + render(*j.on);
    }
  }
  if (stmt.where) out += " WHERE " + render(*stmt.where);
  return out;
}

}  // namespace simpli2::sql
