#pragma once

#include <array>
#include <cctype>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace keyinst::sql {

/// The keyword vocabulary tracked by the analyzer. Enumerator order is the
/// canonical presentation order: the eight structural keywords, then
/// SELECT/FROM, then everything that never appears in a suggestion.
enum class SqlKeyword {
  GroupBy,
  Having,
  OrderBy,
  Limit,
  Except,
  Intersect,
  Union,
  Where,
  Select,
  From,
  Join,
  Count,
  In,
  Avg,
  Sum,
  Min,
  Max,
  Distinct,
  Like,
  Between,
  Not,
  Or,
  And,
};

enum class PriorityClass { Highest, Second, Excluded };

inline constexpr std::size_t kKeywordCount = 23;

inline constexpr std::array<std::string_view, kKeywordCount> kKeywordNames = {
    "GROUP BY", "HAVING", "ORDER BY", "LIMIT", "EXCEPT", "INTERSECT",
    "UNION",    "WHERE",  "SELECT",   "FROM",  "JOIN",   "COUNT",
    "IN",       "AVG",    "SUM",      "MIN",   "MAX",    "DISTINCT",
    "LIKE",     "BETWEEN", "NOT",     "OR",    "AND",
};

constexpr std::string_view name_of(SqlKeyword k) {
  return kKeywordNames[static_cast<std::size_t>(k)];
}

constexpr PriorityClass priority_of(SqlKeyword k) {
  if (static_cast<int>(k) <= static_cast<int>(SqlKeyword::Where)) {
    return PriorityClass::Highest;
  }
  if (k == SqlKeyword::Select || k == SqlKeyword::From) {
    return PriorityClass::Second;
  }
  return PriorityClass::Excluded;
}

inline std::vector<SqlKeyword> keywords_in_class(PriorityClass c) {
  std::vector<SqlKeyword> out;
  for (std::size_t i = 0; i < kKeywordCount; ++i) {
    auto k = static_cast<SqlKeyword>(i);
    if (priority_of(k) == c) out.push_back(k);
  }
  return out;
}

/// Canonicalizes "order   by" / "ORDER BY" / "Order By" to one keyword.
/// Internal whitespace runs collapse to a single space.
inline std::optional<SqlKeyword> keyword_from_name(std::string_view name) {
  std::string canon;
  canon.reserve(name.size());
  bool pending_space = false;
  for (char ch : name) {
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!canon.empty()) pending_space = true;
      continue;
    }
    if (pending_space) {
      canon += ' ';
      pending_space = false;
    }
    canon += static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  }
  for (std::size_t i = 0; i < kKeywordCount; ++i) {
    if (canon == kKeywordNames[i]) return static_cast<SqlKeyword>(i);
  }
  return std::nullopt;
}

using KeywordSet = std::set<SqlKeyword>;  // ordered by canonical enum order

/// Priority-filtered, canonically ordered keyword list attached to a KeyInst.
struct KeywordSuggestion {
  std::vector<SqlKeyword> keywords;

  bool operator==(const KeywordSuggestion&) const = default;
};

/// Applies the priority filter to a full keyword set: structural keywords
/// win outright; SELECT/FROM only surface when no structural keyword is
/// present; everything else is dropped.
inline KeywordSuggestion filter_by_priority(const KeywordSet& all) {
  KeywordSuggestion out;
  bool has_highest = false;
  for (SqlKeyword k : all) {
    if (priority_of(k) == PriorityClass::Highest) {
      has_highest = true;
      break;
    }
  }
  PriorityClass wanted = has_highest ? PriorityClass::Highest : PriorityClass::Second;
  for (SqlKeyword k : all) {  // std::set iterates in canonical order
    if (priority_of(k) == wanted) out.keywords.push_back(k);
  }
  return out;
}

inline std::string format_keyword_list(const std::vector<SqlKeyword>& ks,
                                       std::string_view separator = ", ") {
  std::string out;
  for (SqlKeyword k : ks) {
    if (!out.empty()) out += separator;
    out += name_of(k);
  }
  return out;
}

}  // namespace keyinst::sql
