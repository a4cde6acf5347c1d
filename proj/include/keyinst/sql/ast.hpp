#pragma once

#include <string>
#include <vector>

namespace keyinst::sql {

enum class NodeKind {
  Select,        // children: SelectCore, Compound*, then optional OrderBy, Limit
  Compound,      // text: "UNION" | "UNION ALL" | "INTERSECT" | "EXCEPT"; child: SelectCore
  SelectCore,    // distinct flag; children: SelectList, then optional From/Where/GroupBy/Having
  SelectList,    // children: ResultColumn+
  ResultColumn,  // aux: alias; child: expression or Star
  Star,          // text: optional table prefix ("" for bare *)
  From,          // children: first table ref, then Join nodes
  TableName,     // text: table name; aux: alias
  SubqueryTable, // aux: alias; child: Select
  Join,          // text: join phrase or ","; children: table ref, optional ON expression
  Where,         // child: expression
  GroupBy,       // children: expressions
  Having,        // child: expression
  OrderBy,       // children: OrderingTerm+
  OrderingTerm,  // text: "" | "ASC" | "DESC"; child: expression
  Limit,         // text: "" | "OFFSET" | ","; children: one or two expressions
  Binary,        // text: operator; children: lhs, rhs
  Unary,         // text: "-" | "+" | "NOT"; child: operand
  Paren,         // child: parenthesized expression
  FuncCall,      // text: function name; distinct flag; children: args (may be Star)
  ColumnRef,     // text: "col" or "table.col"
  Literal,       // text: lexeme; aux: "number" | "string" | "null"
  Subquery,      // child: Select (scalar or IN right-hand side)
  InList,        // negated; children: lhs, then list items
  InSubquery,    // negated; children: lhs, Select
  LikeExpr,      // negated; children: lhs, pattern
  BetweenExpr,   // negated; children: operand, low, high
  IsNullExpr,    // negated; child: operand
  ExistsExpr,    // child: Select
};

/// One parse-tree node. A single variant struct keeps tree walks (keyword
/// collection, rendering, reference scanning) compact.
struct Node {
  NodeKind kind{};
  std::string text;
  std::string aux;
  bool negated = false;
  bool distinct = false;
  std::vector<Node> children;
};

}  // namespace keyinst::sql
