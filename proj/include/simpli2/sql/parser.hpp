#pragma once

#include <cctype>
#include <string>
#include <string_view>
#include <vector>

#include "simpli2/error.hpp"
#include "simpli2/sql/ast.hpp"

namespace simpli2::sql {

enum class TokenKind { identifier, keyword, integer, decimal, string, symbol, end };

struct Token {
  TokenKind kind = TokenKind::end;
  std::string text;  // keywords upper-cased, identifiers lower-cased unless quoted
  std::size_t offset = 0;
  std::size_t end = 0;
};

namespace detail {

inline bool is_keyword(std::string_view upper) {
  static constexpr std::string_view keywords[] = {
      "SELECT", "FROM", "WHERE", "AS",   "AND",  "OR",    "NOT",   "IN",    "LIKE",  "BETWEEN", "IS",
      "NULL",   "JOIN", "INNER", "CROSS", "ON",  "GROUP", "ORDER", "BY",    "HAVING", "UNION", "LIMIT",
      "LEFT",   "RIGHT", "FULL", "OUTER", "DISTINCT", "EXISTS", "CASE", "NATURAL", "USING"};
  for (auto k : keywords)
    if (k == upper) return true;
  return false;
}

inline std::vector<Token> tokenize(std::string_view sql) {
  std::vector<Token> out;
  std::size_t i = 0;
  const std::size_t n = sql.size();
  while (i < n) {
    char c = sql[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (c == '-' && i + 1 < n && sql[i + 1] == '-') {
      while (i < n && sql[i] != '\n') ++i;
      continue;
    }
    if (c == '/' && i + 1 < n && sql[i + 1] == '*') {
      auto close = sql.find("*/", i + 2);
      if (close == std::string_view::npos) throw ParseError("unterminated comment", i);
      i = close + 2;
      continue;
    }
    Token tok;
    tok.offset = i;
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < n && (std::isalnum(static_cast<unsigned char>(sql[j])) || sql[j] == '_' || sql[j] == '$')) ++j;
      std::string word(sql.substr(i, j - i));
      std::string upper = word;
      for (auto& ch : upper) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
      if (is_keyword(upper)) {
        tok.kind = TokenKind::keyword;
        tok.text = upper;
      } else {
        tok.kind = TokenKind::identifier;
        for (auto& ch : word) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
        tok.text = word;
      }
      i = j;
    } else if (c == '"') {
      auto close = sql.find('"', i + 1);
      if (close == std::string_view::npos) throw ParseError("unterminated quoted identifier", i);
      tok.kind = TokenKind::identifier;
      tok.text = std::string(sql.substr(i + 1, close - i - 1));
      i = close + 1;
    } else if (std::isdigit(static_cast<unsigned char>(c)) ||
               (c == '.' && i + 1 < n && std::isdigit(static_cast<unsigned char>(sql[i + 1])))) {
      std::size_t j = i;
      bool dot = false;
      while (j < n && (std::isdigit(static_cast<unsigned char>(sql[j])) || (sql[j] == '.' && !dot))) {
        if (sql[j] == '.') {
          // "1.x" would be a qualified name on a number; refuse silently by stopping.
          if (j + 1 < n && !std::isdigit(static_cast<unsigned char>(sql[j + 1]))) break;
          dot = true;
        }
        ++j;
      }
      tok.kind = dot ? TokenKind::decimal : TokenKind::integer;
      tok.text = std::string(sql.substr(i, j - i));
      i = j;
    } else if (c == '\'') {
      std::string value;
      std::size_t j = i + 1;
      for (;;) {
        if (j >= n) throw ParseError("unterminated string literal", i);
        if (sql[j] == '\'') {
          if (j + 1 < n && sql[j + 1] == '\'') {
            value += '\'';
            j += 2;
            continue;
          }
          break;
        }
        value += sql[j++];
      }
      tok.kind = TokenKind::string;
      tok.text = std::move(value);
      i = j + 1;
    } else {
      static constexpr std::string_view two[] = {"<>", "!=", "<=", ">=", "||"};
      tok.kind = TokenKind::symbol;
      bool matched = false;
      for (auto op : two) {
        if (sql.substr(i, 2) == op) {
          tok.text = std::string(op);
          i += 2;
          matched = true;
          break;
        }
      }
      if (!matched) {
        if (std::string_view("=<>(),.*+-/;").find(c) == std::string_view::npos)
          throw ParseError(std::string("unexpected character '") + c + "'", i);
        tok.text = std::string(1, c);
        ++i;
      }
    }
    tok.end = i;
    out.push_back(std::move(tok));
  }
  Token end;
  end.kind = TokenKind::end;
  end.offset = end.end = n;
  out.push_back(end);
  return out;
}

class Parser {
public:
  Parser(std::string_view sql, bool allow_joins) : sql_(sql), tokens_(tokenize(sql)), allow_joins_(allow_joins) {}

  SelectStmt parse_statement() {
    auto stmt = parse_select();
    while (peek_symbol(";")) advance();
    if (peek().kind != TokenKind::end) unsupported("trailing input");
    return stmt;
  }

  Expr parse_standalone_expression() {
    auto e = parse_or();
    if (peek().kind != TokenKind::end) unsupported("trailing input");
    return e;
  }

private:
  const Token& peek(std::size_t ahead = 0) const {
    return tokens_[std::min(pos_ + ahead, tokens_.size() - 1)];
  }
  const Token& advance() { return tokens_[pos_ < tokens_.size() - 1 ? pos_++ : pos_]; }

  bool peek_keyword(std::string_view kw, std::size_t ahead = 0) const {
    return peek(ahead).kind == TokenKind::keyword && peek(ahead).text == kw;
  }
  bool peek_symbol(std::string_view s) const { return peek().kind == TokenKind::symbol && peek().text == s; }

  bool accept_keyword(std::string_view kw) {
    if (!peek_keyword(kw)) return false;
    advance();
    return true;
  }
  bool accept_symbol(std::string_view s) {
    if (!peek_symbol(s)) return false;
    advance();
    return true;
  }

  [[noreturn]] void unsupported(const std::string& what) const {
    const auto& t = peek();
    std::string near = t.kind == TokenKind::end ? "end of input" : "'" + t.text + "'";
    throw ParseError("unsupported syntax: " + what + " near " + near, t.offset);
  }

  void expect_keyword(std::string_view kw) {
    if (!accept_keyword(kw)) unsupported("expected " + std::string(kw));
  }
  void expect_symbol(std::string_view s) {
    if (!accept_symbol(s)) unsupported("expected '" + std::string(s) + "'");
  }

  std::string expect_identifier(const char* what) {
    if (peek().kind != TokenKind::identifier) unsupported(std::string("expected ") + what);
    return advance().text;
  }

  SelectStmt parse_select() {
    expect_keyword("SELECT");
    if (peek_keyword("DISTINCT")) unsupported("DISTINCT");
    SelectStmt stmt;
    if (accept_symbol("*")) {
      stmt.star = true;
    } else {
      do {
        SelectItem item;
        std::size_t begin = peek().offset;
        item.expr = parse_or();
        item.text = std::string(sql_.substr(begin, tokens_[pos_ - 1].end - begin));
        if (accept_keyword("AS")) {
          item.alias = expect_identifier("output name");
        } else if (peek().kind == TokenKind::identifier) {
          item.alias = advance().text;
        }
        stmt.items.push_back(std::move(item));
      } while (accept_symbol(","));
    }
    expect_keyword("FROM");
    do {
      stmt.from.push_back(parse_from_item());
    } while (accept_symbol(","));
    if (accept_keyword("WHERE")) stmt.where = parse_or();
    for (auto kw : {"GROUP", "ORDER", "HAVING", "UNION", "LIMIT"}) {
      if (peek_keyword(kw)) unsupported(std::string(kw) + " clause");
    }
    return stmt;
  }

  TableSource parse_table_source() {
    TableSource src;
    src.offset = peek().offset;
    if (accept_symbol("(")) {
      if (!allow_joins_) unsupported("derived table");
      src.derived = std::make_shared<SelectStmt>(parse_select());
      expect_symbol(")");
      accept_keyword("AS");
      src.alias = expect_identifier("derived table alias");
      return src;
    }
    src.table = expect_identifier("table name");
    if (accept_keyword("AS")) {
      src.alias = expect_identifier("table alias");
    } else if (peek().kind == TokenKind::identifier) {
      src.alias = advance().text;
    } else {
      src.alias = src.table;
    }
    return src;
  }

  FromItem parse_from_item() {
    FromItem item;
    item.source = parse_table_source();
    for (;;) {
      for (auto kw : {"LEFT", "RIGHT", "FULL", "NATURAL"})
        if (peek_keyword(kw)) unsupported("outer or natural join");
      if (peek_keyword("JOIN") || peek_keyword("INNER") || peek_keyword("CROSS")) {
        if (!allow_joins_) unsupported("explicit JOIN");
        JoinClause join;
        if (accept_keyword("CROSS")) {
          join.type = JoinType::cross;
        } else {
          accept_keyword("INNER");
        }
        expect_keyword("JOIN");
        join.source = parse_table_source();
        if (join.type == JoinType::inner) {
          expect_keyword("ON");
          join.on = parse_or();
        }
        item.joins.push_back(std::move(join));
        continue;
      }
      return item;
    }
  }

  Expr parse_or() {
    auto lhs = parse_and();
    while (accept_keyword("OR")) lhs = Expr::make_binary("OR", std::move(lhs), parse_and());
    return lhs;
  }

  Expr parse_and() {
    auto lhs = parse_not();
    while (accept_keyword("AND")) lhs = Expr::make_binary("AND", std::move(lhs), parse_not());
    return lhs;
  }

  Expr parse_not() {
    if (accept_keyword("NOT")) {
      Expr e;
      e.kind = ExprKind::unary;
      e.op = "NOT";
      e.args.push_back(parse_not());
      return e;
    }
    return parse_predicate();
  }

  Expr parse_predicate() {
    auto lhs = parse_additive();
    if (peek().kind == TokenKind::symbol) {
      static constexpr std::string_view cmp[] = {"=", "<>", "!=", "<", ">", "<=", ">="};
      for (auto op : cmp) {
        if (peek().text == op) {
          advance();
          std::string norm = op == "!=" ? "<>" : std::string(op);
          return Expr::make_binary(norm, std::move(lhs), parse_additive());
        }
      }
    }
    bool negated = false;
    if (peek_keyword("NOT") && (peek_keyword("IN", 1) || peek_keyword("LIKE", 1) || peek_keyword("BETWEEN", 1))) {
      advance();
      negated = true;
    }
    if (accept_keyword("IN")) {
      Expr e;
      e.kind = ExprKind::in_list;
      e.negated = negated;
      e.args.push_back(std::move(lhs));
      expect_symbol("(");
      if (peek_keyword("SELECT")) unsupported("subquery");
      do {
        e.args.push_back(parse_additive());
      } while (accept_symbol(","));
      expect_symbol(")");
      return e;
    }
    if (accept_keyword("LIKE")) {
      Expr e;
      e.kind = ExprKind::like;
      e.negated = negated;
      e.args.push_back(std::move(lhs));
      e.args.push_back(parse_additive());
      return e;
    }
    if (accept_keyword("BETWEEN")) {
      Expr e;
      e.kind = ExprKind::between;
      e.negated = negated;
      e.args.push_back(std::move(lhs));
      e.args.push_back(parse_additive());
      expect_keyword("AND");
      e.args.push_back(parse_additive());
      return e;
    }
    if (accept_keyword("IS")) {
      Expr e;
      e.kind = ExprKind::is_null;
      e.negated = accept_keyword("NOT");
      expect_keyword("NULL");
      e.args.push_back(std::move(lhs));
      return e;
    }
    return lhs;
  }

  Expr parse_additive() {
    auto lhs = parse_multiplicative();
    for (;;) {
      if (peek_symbol("+") || peek_symbol("-") || peek_symbol("||")) {
        auto op = advance().text;
        lhs = Expr::make_binary(op, std::move(lhs), parse_multiplicative());
      } else {
        return lhs;
      }
    }
  }

  Expr parse_multiplicative() {
    auto lhs = parse_unary();
    for (;;) {
      if (peek_symbol("*") || peek_symbol("/")) {
        auto op = advance().text;
        lhs = Expr::make_binary(op, std::move(lhs), parse_unary());
      } else {
        return lhs;
      }
    }
  }

  Expr parse_unary() {
    if (accept_symbol("-")) {
      auto operand = parse_unary();
      if (operand.kind == ExprKind::literal && operand.literal.index() == 1)
        return Expr::make_literal(-std::get<std::int64_t>(operand.literal));
      if (operand.kind == ExprKind::literal && operand.literal.index() == 2)
        return Expr::make_literal(-std::get<double>(operand.literal));
      Expr e;
      e.kind = ExprKind::unary;
      e.op = "-";
      e.args.push_back(std::move(operand));
      return e;
    }
    return parse_primary();
  }

  Expr parse_primary() {
    const auto& t = peek();
    switch (t.kind) {
      case TokenKind::integer: {
        auto v = parse_int(t.text);
        if (!v) throw ParseError("integer literal out of range", t.offset);
        advance();
        return Expr::make_literal(*v);
      }
      case TokenKind::decimal: {
        auto v = parse_double(t.text);
        advance();
        return Expr::make_literal(v.value_or(0.0));
      }
      case TokenKind::string: {
        auto text = advance().text;
        return Expr::make_literal(std::move(text));
      }
      case TokenKind::keyword:
        if (t.text == "NULL") {
          advance();
          return Expr::make_literal(Value{});
        }
        if (t.text == "EXISTS" || t.text == "CASE") unsupported(t.text);
        unsupported("unexpected keyword");
      case TokenKind::symbol:
        if (t.text == "(") {
          advance();
          if (peek_keyword("SELECT")) unsupported("subquery");
          auto inner = parse_or();
          expect_symbol(")");
          return inner;
        }
        unsupported("unexpected symbol");
      case TokenKind::identifier: {
        std::string first = advance().text;
        if (accept_symbol("(")) {
          Expr call;
          call.kind = ExprKind::call;
          call.op = first;
          for (auto& ch : call.op) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
          if (peek_keyword("DISTINCT")) unsupported("DISTINCT aggregate");
          if (accept_symbol("*")) {
            Expr star;
            star.kind = ExprKind::star;
            call.args.push_back(std::move(star));
          } else if (!peek_symbol(")")) {
            do {
              call.args.push_back(parse_or());
            } while (accept_symbol(","));
          }
          expect_symbol(")");
          return call;
        }
        if (accept_symbol(".")) {
          auto column = expect_identifier("column name");
          return Expr::make_column(std::move(first), std::move(column));
        }
        return Expr::make_column("", std::move(first));
      }
      case TokenKind::end:
        unsupported("unexpected end of input");
    }
    unsupported("unexpected token");
  }

  std::string_view sql_;
  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  bool allow_joins_;
};

}  // namespace detail

/// Parses the query subset. `allow_joins` additionally admits derived
/// tables and explicit INNER/CROSS JOIN chains (the rewritten forms).
inline SelectStmt parse_select(std::string_view sql, bool allow_joins = false) {
  return detail::Parser(sql, allow_joins).parse_statement();
}

inline Expr parse_expression(std::string_view text) {
  return detail::Parser(text, false).parse_standalone_expression();
}

}  // namespace simpli2::sql
