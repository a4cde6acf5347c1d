#pragma once

// Brute-force keyword oracle. Deliberately independent of the library's
// lexer/parser: a raw character walk that skips quoted regions, collects
// bare words, and matches enumerated keywords against a local table
// (multi-word keywords as adjacent word pairs).

#include <cctype>
#include <set>
#include <string>
#include <vector>

namespace testsupport {

inline std::vector<std::string> oracle_scan_words(const std::string& sql) {
  std::vector<std::string> words;
  std::size_t i = 0;
  while (i < sql.size()) {
    char c = sql[i];
    if (c == '\'') {
      ++i;
      while (i < sql.size()) {
        if (sql[i] == '\'' && i + 1 < sql.size() && sql[i + 1] == '\'') {
          i += 2;
          continue;
        }
        if (sql[i] == '\'') {
          ++i;
          break;
        }
        ++i;
      }
      continue;
    }
    if (c == '"' || c == '`' || c == '[') {
      char close = (c == '[') ? ']' : c;
      ++i;
      while (i < sql.size() && sql[i] != close) ++i;
      if (i < sql.size()) ++i;
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::string word;
      while (i < sql.size() &&
             (std::isalnum(static_cast<unsigned char>(sql[i])) || sql[i] == '_')) {
        word += static_cast<char>(std::toupper(static_cast<unsigned char>(sql[i])));
        ++i;
      }
      words.push_back(word);
      continue;
    }
    ++i;
  }
  return words;
}

inline const std::vector<std::string>& oracle_keyword_names() {
  static const std::vector<std::string> names = {
      "GROUP BY", "HAVING", "ORDER BY", "LIMIT", "EXCEPT", "INTERSECT",
      "UNION",    "WHERE",  "SELECT",   "FROM",  "JOIN",   "COUNT",
      "IN",       "AVG",    "SUM",      "MIN",   "MAX",    "DISTINCT",
      "LIKE",     "BETWEEN", "NOT",     "OR",    "AND",
  };
  return names;
}

/// Keyword names found in the statement, in the oracle's canonical order.
inline std::vector<std::string> oracle_keywords(const std::string& sql) {
  auto words = oracle_scan_words(sql);
  std::set<std::string> found;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if ((words[i] == "GROUP" || words[i] == "ORDER") && i + 1 < words.size() &&
        words[i + 1] == "BY") {
      found.insert(words[i] + " BY");
      continue;
    }
    for (const auto& name : oracle_keyword_names()) {
      if (name == words[i]) {
        found.insert(name);
        break;
      }
    }
  }
  std::vector<std::string> ordered;
  for (const auto& name : oracle_keyword_names()) {
    if (found.count(name)) ordered.push_back(name);
  }
  return ordered;
}

/// Priority filter applied to the scanned keyword list.
inline std::vector<std::string> oracle_suggestion(const std::string& sql) {
  static const std::set<std::string> highest = {"GROUP BY", "HAVING", "ORDER BY", "LIMIT",
                                                "EXCEPT",   "INTERSECT", "UNION", "WHERE"};
  static const std::set<std::string> second = {"SELECT", "FROM"};
  auto all = oracle_keywords(sql);
  std::vector<std::string> high, sec;
  for (const auto& name : all) {
    if (highest.count(name)) high.push_back(name);
    if (second.count(name)) sec.push_back(name);
  }
  return high.empty() ? sec : high;
}

}  // namespace testsupport
