#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

#include "keyinst/sql/ast.hpp"
#include "keyinst/sql/keywords.hpp"
#include "keyinst/sql/parser.hpp"
#include "keyinst/sql/render.hpp"

namespace keyinst::sql {

/// Normalized SQL with every identifier, literal and operand masked to "_".
struct SqlSkeleton {
  std::string text;

  bool operator==(const SqlSkeleton&) const = default;
};

/// The structural operation a statement is bucketed under.
enum class StructuralType {
  GroupBy,
  Having,
  OrderBy,
  Limit,
  Except,
  Intersect,
  Union,
  None,
};

inline constexpr std::array<std::string_view, 8> kStructuralTypeNames = {
    "GROUP BY", "HAVING", "ORDER BY", "LIMIT", "EXCEPT", "INTERSECT", "UNION", "NONE",
};

constexpr std::string_view name_of(StructuralType t) {
  return kStructuralTypeNames[static_cast<std::size_t>(t)];
}

inline std::optional<StructuralType> structural_type_from_name(std::string_view name) {
  std::string upper;
  for (char c : name) upper += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  for (std::size_t i = 0; i < kStructuralTypeNames.size(); ++i) {
    if (upper == kStructuralTypeNames[i]) return static_cast<StructuralType>(i);
  }
  return std::nullopt;
}

namespace detail {

inline void collect_keywords(const Node& n, KeywordSet& out) {
  switch (n.kind) {
    case NodeKind::SelectCore:
      out.insert(SqlKeyword::Select);
      if (n.distinct) out.insert(SqlKeyword::Distinct);
      break;
    case NodeKind::From:
      out.insert(SqlKeyword::From);
      break;
    case NodeKind::Join:
      if (n.text != ",") out.insert(SqlKeyword::Join);
      break;
    case NodeKind::Where:
      out.insert(SqlKeyword::Where);
      break;
    case NodeKind::GroupBy:
      out.insert(SqlKeyword::GroupBy);
      break;
    case NodeKind::Having:
      out.insert(SqlKeyword::Having);
      break;
    case NodeKind::OrderBy:
      out.insert(SqlKeyword::OrderBy);
      break;
    case NodeKind::Limit:
      out.insert(SqlKeyword::Limit);
      break;
    case NodeKind::Compound:
      if (n.text == "EXCEPT") {
        out.insert(SqlKeyword::Except);
      } else if (n.text == "INTERSECT") {
        out.insert(SqlKeyword::Intersect);
      } else {
        out.insert(SqlKeyword::Union);
      }
      break;
    case NodeKind::Binary:
      if (n.text == "AND") out.insert(SqlKeyword::And);
      if (n.text == "OR") out.insert(SqlKeyword::Or);
      break;
    case NodeKind::Unary:
      if (n.text == "NOT") out.insert(SqlKeyword::Not);
      break;
    case NodeKind::FuncCall: {
      std::string upper = to_upper(n.text);
      if (upper == "COUNT") out.insert(SqlKeyword::Count);
      if (upper == "AVG") out.insert(SqlKeyword::Avg);
      if (upper == "SUM") out.insert(SqlKeyword::Sum);
      if (upper == "MIN") out.insert(SqlKeyword::Min);
      if (upper == "MAX") out.insert(SqlKeyword::Max);
      if (n.distinct) out.insert(SqlKeyword::Distinct);
      break;
    }
    case NodeKind::InList:
    case NodeKind::InSubquery:
      out.insert(SqlKeyword::In);
      if (n.negated) out.insert(SqlKeyword::Not);
      break;
    case NodeKind::LikeExpr:
      out.insert(SqlKeyword::Like);
      if (n.negated) out.insert(SqlKeyword::Not);
      break;
    case NodeKind::BetweenExpr:
      // the range separator is a bare AND token
      out.insert(SqlKeyword::Between);
      out.insert(SqlKeyword::And);
      if (n.negated) out.insert(SqlKeyword::Not);
      break;
    case NodeKind::IsNullExpr:
      if (n.negated) out.insert(SqlKeyword::Not);
      break;
    default:
      break;
  }
  for (const Node& child : n.children) collect_keywords(child, out);
}

}  // namespace detail

/// Every enumerated keyword occurring anywhere in the statement, subqueries
/// included, deduplicated.
inline KeywordSet extract_keywords(const Node& tree) {
  KeywordSet out;
  detail::collect_keywords(tree, out);
  return out;
}

inline KeywordSet extract_keywords(std::string_view sql) {
  return extract_keywords(parse_sql(sql));
}

/// Priority-filtered suggestion: the structural keywords the statement uses,
/// or SELECT/FROM when it has none.
inline KeywordSuggestion make_keyword_suggestion(const Node& tree) {
  return filter_by_priority(extract_keywords(tree));
}

inline KeywordSuggestion make_keyword_suggestion(std::string_view sql) {
  return make_keyword_suggestion(parse_sql(sql));
}

/// Masks identifiers and literals to "_", uppercases keywords, single-spaces.
inline SqlSkeleton extract_skeleton(const Node& tree) {
  return SqlSkeleton{render(tree, RenderOptions{.mask = true})};
}

inline SqlSkeleton extract_skeleton(std::string_view sql) {
  return extract_skeleton(parse_sql(sql));
}

/// First structural tag present, in the fixed precedence
/// EXCEPT > INTERSECT > UNION > HAVING > GROUP BY > LIMIT > ORDER BY.
inline StructuralType classify_structural_type(const Node& tree) {
  KeywordSet keywords = extract_keywords(tree);
  static constexpr std::array<std::pair<SqlKeyword, StructuralType>, 7> precedence = {{
      {SqlKeyword::Except, StructuralType::Except},
      {SqlKeyword::Intersect, StructuralType::Intersect},
      {SqlKeyword::Union, StructuralType::Union},
      {SqlKeyword::Having, StructuralType::Having},
      {SqlKeyword::GroupBy, StructuralType::GroupBy},
      {SqlKeyword::Limit, StructuralType::Limit},
      {SqlKeyword::OrderBy, StructuralType::OrderBy},
  }};
  for (auto [k, t] : precedence) {
    if (keywords.count(k)) return t;
  }
  return StructuralType::None;
}

inline StructuralType classify_structural_type(std::string_view sql) {
  return classify_structural_type(parse_sql(sql));
}

/// True when the outermost query carries an ORDER BY clause.
inline bool has_top_level_order_by(const Node& tree) {
  for (const Node& child : tree.children) {
    if (child.kind == NodeKind::OrderBy) return true;
  }
  return false;
}

}  // namespace keyinst::sql
