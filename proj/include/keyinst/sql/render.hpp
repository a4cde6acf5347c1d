#pragma once

#include <string>
#include <vector>

#include "keyinst/sql/ast.hpp"
#include "keyinst/sql/keywords.hpp"

namespace keyinst::sql {

struct RenderOptions {
  // Replace identifiers, literals and aliases with "_" (skeleton form).
  bool mask = false;
};

namespace detail {

inline bool is_aggregate_name(const std::string& upper) {
  return upper == "COUNT" || upper == "AVG" || upper == "SUM" || upper == "MIN" ||
         upper == "MAX";
}

inline std::string to_upper(const std::string& s) {
  std::string u;
  u.reserve(s.size());
  for (char c : s) u += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return u;
}

class Renderer {
public:
  explicit Renderer(RenderOptions opts) : opts_(opts) {}

  std::string render(const Node& node) {
    emit_node(node);
    return join();
  }

private:
  RenderOptions opts_;
  std::vector<std::string> atoms_;

  void atom(std::string a) { atoms_.push_back(std::move(a)); }

  std::string join() const {
    std::string out;
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
      const std::string& a = atoms_[i];
      if (i > 0) {
        const std::string& prev = atoms_[i - 1];
        bool skip = a == ")" || a == "," || a == ";" || prev == "(" ||
                    (prev.size() > 1 && prev.back() == '(');
        if (!skip) out += ' ';
      }
      out += a;
    }
    return out;
  }

  std::string ident(const std::string& name) const { return opts_.mask ? "_" : name; }

  void emit_string_literal(const std::string& value) {
    if (opts_.mask) {
      atom("_");
      return;
    }
    std::string quoted = "'";
    for (char c : value) {
      quoted += c;
      if (c == '\'') quoted += '\'';
    }
    quoted += '\'';
    atom(quoted);
  }

  void emit_list(const std::vector<Node>& items, std::size_t first, std::size_t count) {
    for (std::size_t i = 0; i < count; ++i) {
      if (i > 0) atom(",");
      emit_node(items[first + i]);
    }
  }

  void emit_alias(const std::string& alias) {
    if (alias.empty() || opts_.mask) return;
    atom("AS");
    atom(alias);
  }

  void emit_node(const Node& n) {
    switch (n.kind) {
      case NodeKind::Select: {
        for (const Node& child : n.children) emit_node(child);
        break;
      }
      case NodeKind::Compound: {
        if (n.text == "UNION ALL") {
          atom("UNION");
          atom("ALL");
        } else {
          atom(n.text);
        }
        emit_node(n.children[0]);
        break;
      }
      case NodeKind::SelectCore: {
        atom("SELECT");
        if (n.distinct) atom("DISTINCT");
        for (const Node& child : n.children) emit_node(child);
        break;
      }
      case NodeKind::SelectList: {
        emit_list(n.children, 0, n.children.size());
        break;
      }
      case NodeKind::ResultColumn: {
        emit_node(n.children[0]);
        emit_alias(n.aux);
        break;
      }
      case NodeKind::Star: {
        if (n.text.empty() || opts_.mask) {
          atom("*");
        } else {
          atom(n.text + ".*");
        }
        break;
      }
      case NodeKind::From: {
        atom("FROM");
        for (const Node& child : n.children) emit_node(child);
        break;
      }
      case NodeKind::TableName: {
        atom(ident(n.text));
        emit_alias(n.aux);
        break;
      }
      case NodeKind::SubqueryTable: {
        atom("(");
        emit_node(n.children[0]);
        atom(")");
        emit_alias(n.aux);
        break;
      }
      case NodeKind::Join: {
        if (n.text == ",") {
          atom(",");
        } else {
          for (std::size_t i = 0, start = 0; i <= n.text.size(); ++i) {
            if (i == n.text.size() || n.text[i] == ' ') {
              atom(n.text.substr(start, i - start));
              start = i + 1;
            }
          }
        }
        emit_node(n.children[0]);
        if (n.children.size() > 1) {
          atom("ON");
          emit_node(n.children[1]);
        }
        break;
      }
      case NodeKind::Where: {
        atom("WHERE");
        emit_node(n.children[0]);
        break;
      }
      case NodeKind::GroupBy: {
        atom("GROUP");
        atom("BY");
        emit_list(n.children, 0, n.children.size());
        break;
      }
      case NodeKind::Having: {
        atom("HAVING");
        emit_node(n.children[0]);
        break;
      }
      case NodeKind::OrderBy: {
        atom("ORDER");
        atom("BY");
        emit_list(n.children, 0, n.children.size());
        break;
      }
      case NodeKind::OrderingTerm: {
        emit_node(n.children[0]);
        if (!n.text.empty()) atom(n.text);
        break;
      }
      case NodeKind::Limit: {
        atom("LIMIT");
        emit_node(n.children[0]);
        if (n.children.size() > 1) {
          atom(n.text == "OFFSET" ? "OFFSET" : ",");
          emit_node(n.children[1]);
        }
        break;
      }
      case NodeKind::Binary: {
        emit_node(n.children[0]);
        atom(n.text);
        emit_node(n.children[1]);
        break;
      }
      case NodeKind::Unary: {
        if (n.text == "NOT") {
          atom("NOT");
          emit_node(n.children[0]);
        } else {
          // merge sign with simple operands so "-5" stays one token
          const Node& operand = n.children[0];
          if (operand.kind == NodeKind::Literal || operand.kind == NodeKind::ColumnRef) {
            std::size_t before = atoms_.size();
            emit_node(operand);
            atoms_[before] = n.text + atoms_[before];
          } else {
            atom(n.text);
            emit_node(operand);
          }
        }
        break;
      }
      case NodeKind::Paren: {
        atom("(");
        emit_node(n.children[0]);
        atom(")");
        break;
      }
      case NodeKind::FuncCall: {
        std::string upper = to_upper(n.text);
        std::string head;
        if (is_aggregate_name(upper)) {
          head = upper;
        } else {
          head = opts_.mask ? "_" : n.text;
        }
        atom(head + "(");
        if (n.distinct) atom("DISTINCT");
        emit_list(n.children, 0, n.children.size());
        atom(")");
        break;
      }
      case NodeKind::ColumnRef: {
        atom(ident(n.text));
        break;
      }
      case NodeKind::Literal: {
        if (n.aux == "string") {
          emit_string_literal(n.text);
        } else if (n.aux == "null") {
          atom(opts_.mask ? "_" : "NULL");
        } else {
          atom(opts_.mask ? "_" : n.text);
        }
        break;
      }
      case NodeKind::Subquery: {
        atom("(");
        emit_node(n.children[0]);
        atom(")");
        break;
      }
      case NodeKind::InList: {
        emit_node(n.children[0]);
        if (n.negated) atom("NOT");
        atom("IN");
        atom("(");
        emit_list(n.children, 1, n.children.size() - 1);
        atom(")");
        break;
      }
      case NodeKind::InSubquery: {
        emit_node(n.children[0]);
        if (n.negated) atom("NOT");
        atom("IN");
        atom("(");
        emit_node(n.children[1]);
        atom(")");
        break;
      }
      case NodeKind::LikeExpr: {
        emit_node(n.children[0]);
        if (n.negated) atom("NOT");
        atom("LIKE");
        emit_node(n.children[1]);
        break;
      }
      case NodeKind::BetweenExpr: {
        emit_node(n.children[0]);
        if (n.negated) atom("NOT");
        atom("BETWEEN");
        emit_node(n.children[1]);
        atom("AND");
        emit_node(n.children[2]);
        break;
      }
      case NodeKind::IsNullExpr: {
        emit_node(n.children[0]);
        atom("IS");
        if (n.negated) atom("NOT");
        atom("NULL");
        break;
      }
      case NodeKind::ExistsExpr: {
        atom("EXISTS");
        atom("(");
        emit_node(n.children[0]);
        atom(")");
        break;
      }
    }
  }
};

}  // namespace detail

/// Renders a parse tree back to SQL text: keywords uppercased, single-spaced.
/// With mask enabled, every identifier, literal and expression operand
/// becomes "_" and aliases are dropped.
inline std::string render(const Node& tree, RenderOptions opts = {}) {
  detail::Renderer renderer(opts);
  return renderer.render(tree);
}

}  // namespace keyinst::sql
