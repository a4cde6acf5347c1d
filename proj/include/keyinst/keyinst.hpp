#pragma once

#include <cctype>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "keyinst/error.hpp"
#include "keyinst/schema.hpp"
#include "keyinst/sql/analysis.hpp"
#include "keyinst/sql/keywords.hpp"

namespace keyinst {

/// A per-task instruction: a short natural-language reading of the question
/// plus the priority-filtered keywords the target query is expected to use.
struct KeyInst {
  std::string question_analysis;
  sql::KeywordSuggestion keyword_suggestion;

  bool operator==(const KeyInst&) const = default;
};

namespace detail {

inline std::string trim(std::string_view s) {
  std::size_t begin = 0;
  std::size_t end = s.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(s[begin]))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1]))) --end;
  return std::string(s.substr(begin, end - begin));
}

inline std::string lower_copy(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

inline void validate_suggestion(const sql::KeywordSuggestion& s) {
  bool has_highest = false;
  bool has_second = false;
  for (std::size_t i = 0; i < s.keywords.size(); ++i) {
    sql::SqlKeyword k = s.keywords[i];
    switch (sql::priority_of(k)) {
      case sql::PriorityClass::Highest: has_highest = true; break;
      case sql::PriorityClass::Second: has_second = true; break;
      case sql::PriorityClass::Excluded:
        throw KeyInstError(std::string("excluded keyword in suggestion: ") +
                           std::string(sql::name_of(k)));
    }
    if (i > 0 && static_cast<int>(s.keywords[i - 1]) >= static_cast<int>(k)) {
      throw KeyInstError("suggestion not in canonical order");
    }
  }
  if (has_highest && has_second) {
    throw KeyInstError("suggestion mixes structural keywords with SELECT/FROM");
  }
}

}  // namespace detail

/// Validating constructor for KeyInst values.
inline KeyInst make_keyinst(std::string question_analysis,
                            sql::KeywordSuggestion keyword_suggestion) {
  std::string analysis = detail::trim(question_analysis);
  if (analysis.empty()) throw KeyInstError("question analysis is empty");
  if (analysis.find("```") != std::string::npos) {
    throw KeyInstError("question analysis contains a code block");
  }
  detail::validate_suggestion(keyword_suggestion);
  return KeyInst{std::move(analysis), std::move(keyword_suggestion)};
}

inline constexpr std::string_view kAnalysisMarker = "Question analysis:";
inline constexpr std::string_view kSuggestionMarker = "Keyword suggestion:";

/// Two fixed lines: the analysis, then the keyword sentence with keywords in
/// canonical order. Byte-deterministic.
inline std::string render_keyinst(const KeyInst& keyinst) {
  std::string out = std::string(kAnalysisMarker) + " " + keyinst.question_analysis + "\n" +
                    std::string(kSuggestionMarker);
  if (keyinst.keyword_suggestion.keywords.empty()) {
    out += " none.";
  } else {
    out += " consider using " + sql::format_keyword_list(keyinst.keyword_suggestion.keywords) +
           " in the SQL.";
  }
  return out;
}

/// Reads a KeyInst back from model output. Case-insensitive marker search;
/// text before the suggestion marker doubles as the analysis when the
/// analysis marker is absent (completion-style output). Unknown keyword
/// tokens are ignored; excluded ones are dropped and counted.
inline KeyInst parse_keyinst(const std::string& text, int* dropped_excluded = nullptr) {
  std::string lower = detail::lower_copy(text);
  std::string analysis_marker = detail::lower_copy(kAnalysisMarker);
  std::string suggestion_marker = detail::lower_copy("Keyword suggestion");

  std::size_t analysis_pos = lower.find(analysis_marker);
  std::size_t suggestion_pos = lower.find(suggestion_marker);
  if (analysis_pos == std::string::npos && suggestion_pos == std::string::npos) {
    throw KeyInstParseError("no KeyInst markers in text");
  }

  std::string analysis;
  if (analysis_pos != std::string::npos) {
    std::size_t begin = analysis_pos + analysis_marker.size();
    std::size_t end = (suggestion_pos != std::string::npos && suggestion_pos > begin)
                          ? suggestion_pos
                          : text.size();
    analysis = detail::trim(text.substr(begin, end - begin));
  } else {
    analysis = detail::trim(text.substr(0, suggestion_pos));
  }
  if (analysis.empty()) throw KeyInstParseError("missing question analysis");

  sql::KeywordSet recognized;
  int dropped = 0;
  if (suggestion_pos != std::string::npos) {
    std::string tail = text.substr(suggestion_pos + suggestion_marker.size());
    // the template's closing phrase would otherwise read as the IN keyword
    std::size_t closing = detail::lower_copy(tail).find(" in the sql");
    if (closing != std::string::npos) tail.resize(closing);
    // word scan with adjacent-pair handling for GROUP BY / ORDER BY
    std::vector<std::string> words;
    std::string word;
    for (char c : tail) {
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '_') {
        word += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
      } else if (!word.empty()) {
        words.push_back(word);
        word.clear();
      }
    }
    if (!word.empty()) words.push_back(word);
    for (std::size_t i = 0; i < words.size(); ++i) {
      std::optional<sql::SqlKeyword> k;
      if ((words[i] == "GROUP" || words[i] == "ORDER") && i + 1 < words.size() &&
          words[i + 1] == "BY") {
        k = sql::keyword_from_name(words[i] + " BY");
        ++i;
      } else {
        k = sql::keyword_from_name(words[i]);
      }
      if (!k) continue;
      if (sql::priority_of(*k) == sql::PriorityClass::Excluded) {
        ++dropped;
        continue;
      }
      recognized.insert(*k);
    }
  }
  if (dropped_excluded != nullptr) *dropped_excluded = dropped;
  return make_keyinst(std::move(analysis), sql::filter_by_priority(recognized));
}

/// One KeyInst-set entry. The suggestion is always the one recomputed from
/// the gold query.
struct KeyInstRecord {
  DatabaseSchema schema;
  std::string question;
  KeyInst keyinst;
  std::string gold_sql;
};

/// Builds a record enforcing the suggestion-matches-gold invariant.
inline KeyInstRecord make_keyinst_record(DatabaseSchema schema, std::string question,
                                         std::string analysis, std::string gold_sql) {
  sql::KeywordSuggestion suggestion = sql::make_keyword_suggestion(gold_sql);
  KeyInst keyinst = make_keyinst(std::move(analysis), std::move(suggestion));
  return KeyInstRecord{std::move(schema), std::move(question), std::move(keyinst),
                       std::move(gold_sql)};
}

}  // namespace keyinst
