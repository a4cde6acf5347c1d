#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "keyinst/error.hpp"
#include "keyinst/sql/ast.hpp"
#include "keyinst/sql/lexer.hpp"

namespace keyinst::sql {

namespace detail {

inline const std::set<std::string, std::less<>>& reserved_words() {
  static const std::set<std::string, std::less<>> words = {
      "SELECT", "FROM",  "WHERE",   "GROUP",  "BY",      "HAVING", "ORDER",
      "LIMIT",  "OFFSET", "EXCEPT", "INTERSECT", "UNION", "JOIN",  "INNER",
      "LEFT",   "OUTER", "CROSS",   "ON",     "AS",      "AND",    "OR",
      "NOT",    "IN",    "LIKE",    "BETWEEN", "IS",     "NULL",   "EXISTS",
      "DISTINCT", "ALL", "ASC",     "DESC",
  };
  return words;
}

inline bool is_reserved(const Token& t) {
  return t.kind == TokenKind::Word && !t.quoted && reserved_words().count(t.upper()) > 0;
}

class Parser {
public:
  explicit Parser(std::string_view text) : tokens_(tokenize(text)) {}

  Node parse_statement() {
    Node select = parse_select();
    if (is_punct(";")) advance();
    expect_end();
    return select;
  }

private:
  std::vector<Token> tokens_;
  std::size_t pos_ = 0;

  const Token& cur() const { return tokens_[pos_]; }
  const Token& peek(std::size_t ahead = 1) const {
    std::size_t i = pos_ + ahead;
    return i < tokens_.size() ? tokens_[i] : tokens_.back();
  }
  void advance() {
    if (pos_ + 1 < tokens_.size()) ++pos_;
  }

  bool is_word(std::string_view upper_name) const {
    return cur().kind == TokenKind::Word && !cur().quoted && cur().upper() == upper_name;
  }
  bool is_punct(std::string_view p) const {
    return cur().kind == TokenKind::Punct && cur().text == p;
  }
  bool accept_word(std::string_view upper_name) {
    if (is_word(upper_name)) {
      advance();
      return true;
    }
    return false;
  }
  void expect_word(std::string_view upper_name) {
    if (!accept_word(upper_name)) fail(std::string(upper_name));
  }
  void expect_punct(std::string_view p) {
    if (!is_punct(p)) fail("'" + std::string(p) + "'");
    advance();
  }
  void expect_end() {
    if (cur().kind != TokenKind::End) fail("end of statement");
  }

  [[noreturn]] void fail(const std::string& expected) const {
    const Token& t = cur();
    std::string got = t.kind == TokenKind::End ? "end of input" : "'" + t.text + "'";
    throw ParseError("unexpected " + got, t.offset, expected);
  }

  // select_stmt := select_core (compound_op select_core)* [ORDER BY ...] [LIMIT ...]
  Node parse_select() {
    Node select{NodeKind::Select};
    select.children.push_back(parse_select_core());
    while (is_word("UNION") || is_word("INTERSECT") || is_word("EXCEPT")) {
      Node compound{NodeKind::Compound};
      compound.text = cur().upper();
      advance();
      if (compound.text == "UNION" && accept_word("ALL")) compound.text = "UNION ALL";
      compound.children.push_back(parse_select_core());
      select.children.push_back(std::move(compound));
    }
    if (accept_word("ORDER")) {
      expect_word("BY");
      Node order{NodeKind::OrderBy};
      order.children.push_back(parse_ordering_term());
      while (is_punct(",")) {
        advance();
        order.children.push_back(parse_ordering_term());
      }
      select.children.push_back(std::move(order));
    }
    if (accept_word("LIMIT")) {
      Node limit{NodeKind::Limit};
      limit.children.push_back(parse_expr());
      if (accept_word("OFFSET")) {
        limit.text = "OFFSET";
        limit.children.push_back(parse_expr());
      } else if (is_punct(",")) {
        advance();
        limit.text = ",";
        limit.children.push_back(parse_expr());
      }
      select.children.push_back(std::move(limit));
    }
    return select;
  }

  Node parse_ordering_term() {
    Node term{NodeKind::OrderingTerm};
    term.children.push_back(parse_expr());
    if (is_word("ASC") || is_word("DESC")) {
      term.text = cur().upper();
      advance();
    }
    return term;
  }

  Node parse_select_core() {
    expect_word("SELECT");
    Node core{NodeKind::SelectCore};
    if (accept_word("DISTINCT")) {
      core.distinct = true;
    } else {
      accept_word("ALL");
    }
    Node list{NodeKind::SelectList};
    list.children.push_back(parse_result_column());
    while (is_punct(",")) {
      advance();
      list.children.push_back(parse_result_column());
    }
    core.children.push_back(std::move(list));
    if (accept_word("FROM")) core.children.push_back(parse_table_list());
    if (accept_word("WHERE")) {
      Node where{NodeKind::Where};
      where.children.push_back(parse_expr());
      core.children.push_back(std::move(where));
    }
    if (is_word("GROUP")) {
      advance();
      expect_word("BY");
      Node group{NodeKind::GroupBy};
      group.children.push_back(parse_expr());
      while (is_punct(",")) {
        advance();
        group.children.push_back(parse_expr());
      }
      core.children.push_back(std::move(group));
    }
    if (accept_word("HAVING")) {
      Node having{NodeKind::Having};
      having.children.push_back(parse_expr());
      core.children.push_back(std::move(having));
    }
    return core;
  }

  Node parse_result_column() {
    Node col{NodeKind::ResultColumn};
    if (is_punct("*")) {
      advance();
      Node star{NodeKind::Star};
      col.children.push_back(std::move(star));
      return col;
    }
    if (cur().kind == TokenKind::Word && !is_reserved(cur()) && peek().kind == TokenKind::Punct &&
        peek().text == "." && peek(2).kind == TokenKind::Punct && peek(2).text == "*") {
      Node star{NodeKind::Star};
      star.text = cur().text;
      advance();  // table
      advance();  // .
      advance();  // *
      col.children.push_back(std::move(star));
      return col;
    }
    col.children.push_back(parse_expr());
    col.aux = parse_optional_alias();
    return col;
  }

  std::string parse_optional_alias() {
    if (accept_word("AS")) {
      if (cur().kind != TokenKind::Word) fail("alias name");
      std::string alias = cur().text;
      advance();
      return alias;
    }
    if (cur().kind == TokenKind::Word && !is_reserved(cur())) {
      std::string alias = cur().text;
      advance();
      return alias;
    }
    return {};
  }

  // table_list := table_ref ((',' | join_phrase) table_ref [ON expr])*
  Node parse_table_list() {
    Node from{NodeKind::From};
    from.children.push_back(parse_table_ref());
    while (true) {
      if (is_punct(",")) {
        advance();
        Node join{NodeKind::Join};
        join.text = ",";
        join.children.push_back(parse_table_ref());
        from.children.push_back(std::move(join));
        continue;
      }
      std::string phrase;
      if (is_word("JOIN")) {
        phrase = "JOIN";
        advance();
      } else if (is_word("INNER")) {
        advance();
        expect_word("JOIN");
        phrase = "INNER JOIN";
      } else if (is_word("LEFT")) {
        advance();
        std::string p = "LEFT";
        if (accept_word("OUTER")) p += " OUTER";
        expect_word("JOIN");
        phrase = p + " JOIN";
      } else if (is_word("CROSS")) {
        advance();
        expect_word("JOIN");
        phrase = "CROSS JOIN";
      } else {
        break;
      }
      Node join{NodeKind::Join};
      join.text = phrase;
      join.children.push_back(parse_table_ref());
      if (accept_word("ON")) join.children.push_back(parse_expr());
      from.children.push_back(std::move(join));
    }
    return from;
  }

  Node parse_table_ref() {
    if (is_punct("(")) {
      advance();
      Node sub{NodeKind::SubqueryTable};
      sub.children.push_back(parse_select());
      expect_punct(")");
      sub.aux = parse_optional_alias();
      return sub;
    }
    if (cur().kind != TokenKind::Word || is_reserved(cur())) fail("table name");
    Node table{NodeKind::TableName};
    table.text = cur().text;
    advance();
    table.aux = parse_optional_alias();
    return table;
  }

  Node parse_expr() { return parse_or(); }

  Node parse_or() {
    Node lhs = parse_and();
    while (is_word("OR")) {
      advance();
      Node node{NodeKind::Binary};
      node.text = "OR";
      node.children.push_back(std::move(lhs));
      node.children.push_back(parse_and());
      lhs = std::move(node);
    }
    return lhs;
  }

  Node parse_and() {
    Node lhs = parse_not();
    while (is_word("AND")) {
      advance();
      Node node{NodeKind::Binary};
      node.text = "AND";
      node.children.push_back(std::move(lhs));
      node.children.push_back(parse_not());
      lhs = std::move(node);
    }
    return lhs;
  }

  Node parse_not() {
    if (is_word("NOT") &&
        !(peek().kind == TokenKind::Word &&
          (peek().upper() == "IN" || peek().upper() == "LIKE" || peek().upper() == "BETWEEN"))) {
      advance();
      Node node{NodeKind::Unary};
      node.text = "NOT";
      node.children.push_back(parse_not());
      return node;
    }
    return parse_predicate();
  }

  // comparison operators and the IN/LIKE/BETWEEN/IS NULL forms
  Node parse_predicate() {
    Node lhs = parse_additive();
    while (true) {
      if (cur().kind == TokenKind::Punct) {
        const std::string& p = cur().text;
        if (p == "=" || p == "==" || p == "!=" || p == "<>" || p == "<" || p == "<=" ||
            p == ">" || p == ">=") {
          std::string op = p;
          advance();
          Node node{NodeKind::Binary};
          node.text = op;
          node.children.push_back(std::move(lhs));
          node.children.push_back(parse_additive());
          lhs = std::move(node);
          continue;
        }
      }
      bool negated = false;
      if (is_word("NOT") && peek().kind == TokenKind::Word &&
          (peek().upper() == "IN" || peek().upper() == "LIKE" || peek().upper() == "BETWEEN")) {
        negated = true;
        advance();
      }
      if (is_word("IN")) {
        advance();
        expect_punct("(");
        if (is_word("SELECT")) {
          Node node{NodeKind::InSubquery};
          node.negated = negated;
          node.children.push_back(std::move(lhs));
          node.children.push_back(parse_select());
          expect_punct(")");
          lhs = std::move(node);
        } else {
          Node node{NodeKind::InList};
          node.negated = negated;
          node.children.push_back(std::move(lhs));
          node.children.push_back(parse_expr());
          while (is_punct(",")) {
            advance();
            node.children.push_back(parse_expr());
          }
          expect_punct(")");
          lhs = std::move(node);
        }
        continue;
      }
      if (is_word("LIKE")) {
        advance();
        Node node{NodeKind::LikeExpr};
        node.negated = negated;
        node.children.push_back(std::move(lhs));
        node.children.push_back(parse_additive());
        lhs = std::move(node);
        continue;
      }
      if (is_word("BETWEEN")) {
        advance();
        Node node{NodeKind::BetweenExpr};
        node.negated = negated;
        node.children.push_back(std::move(lhs));
        node.children.push_back(parse_additive());
        expect_word("AND");
        node.children.push_back(parse_additive());
        lhs = std::move(node);
        continue;
      }
      if (negated) fail("IN, LIKE or BETWEEN");
      if (is_word("IS")) {
        advance();
        Node node{NodeKind::IsNullExpr};
        node.negated = accept_word("NOT");
        expect_word("NULL");
        node.children.push_back(std::move(lhs));
        lhs = std::move(node);
        continue;
      }
      break;
    }
    return lhs;
  }

  Node parse_additive() {
    Node lhs = parse_multiplicative();
    while (is_punct("+") || is_punct("-") || is_punct("||")) {
      std::string op = cur().text;
      advance();
      Node node{NodeKind::Binary};
      node.text = op;
      node.children.push_back(std::move(lhs));
      node.children.push_back(parse_multiplicative());
      lhs = std::move(node);
    }
    return lhs;
  }

  Node parse_multiplicative() {
    Node lhs = parse_unary();
    while (is_punct("*") || is_punct("/") || is_punct("%")) {
      std::string op = cur().text;
      advance();
      Node node{NodeKind::Binary};
      node.text = op;
      node.children.push_back(std::move(lhs));
      node.children.push_back(parse_unary());
      lhs = std::move(node);
    }
    return lhs;
  }

  Node parse_unary() {
    if (is_punct("-") || is_punct("+")) {
      Node node{NodeKind::Unary};
      node.text = cur().text;
      advance();
      node.children.push_back(parse_unary());
      return node;
    }
    return parse_primary();
  }

  Node parse_primary() {
    if (is_punct("(")) {
      advance();
      if (is_word("SELECT")) {
        Node sub{NodeKind::Subquery};
        sub.children.push_back(parse_select());
        expect_punct(")");
        return sub;
      }
      Node paren{NodeKind::Paren};
      paren.children.push_back(parse_expr());
      expect_punct(")");
      return paren;
    }
    if (cur().kind == TokenKind::Number) {
      Node lit{NodeKind::Literal};
      lit.text = cur().text;
      lit.aux = "number";
      advance();
      return lit;
    }
    if (cur().kind == TokenKind::String) {
      Node lit{NodeKind::Literal};
      lit.text = cur().text;
      lit.aux = "string";
      advance();
      return lit;
    }
    if (is_word("NULL")) {
      advance();
      Node lit{NodeKind::Literal};
      lit.text = "NULL";
      lit.aux = "null";
      return lit;
    }
    if (is_word("EXISTS")) {
      advance();
      expect_punct("(");
      Node node{NodeKind::ExistsExpr};
      if (!is_word("SELECT")) fail("SELECT");
      node.children.push_back(parse_select());
      expect_punct(")");
      return node;
    }
    if (cur().kind == TokenKind::Word && !is_reserved(cur())) {
      // function call or column reference
      if (peek().kind == TokenKind::Punct && peek().text == "(" && !cur().quoted) {
        Node call{NodeKind::FuncCall};
        call.text = cur().text;
        advance();  // name
        advance();  // (
        if (accept_word("DISTINCT")) call.distinct = true;
        if (is_punct("*")) {
          advance();
          call.children.push_back(Node{NodeKind::Star});
        } else if (!is_punct(")")) {
          call.children.push_back(parse_expr());
          while (is_punct(",")) {
            advance();
            call.children.push_back(parse_expr());
          }
        }
        expect_punct(")");
        return call;
      }
      Node ref{NodeKind::ColumnRef};
      ref.text = cur().text;
      advance();
      if (is_punct(".")) {
        advance();
        if (cur().kind != TokenKind::Word || is_reserved(cur())) fail("column name");
        ref.text += "." + cur().text;
        advance();
      }
      return ref;
    }
    fail("expression");
  }
};

}  // namespace detail

/// Parses one SQL statement into a tree preserving clause structure and
/// nesting. Throws ParseError with a byte offset on malformed input.
inline Node parse_sql(std::string_view text) {
  bool all_space = true;
  for (char c : text) {
    if (!std::isspace(static_cast<unsigned char>(c))) {
      all_space = false;
      break;
    }
  }
  if (text.empty() || all_space) throw ParseError("empty statement", 0, "SELECT");
  detail::Parser parser(text);
  return parser.parse_statement();
}

}  // namespace keyinst::sql
