#pragma once

#include <algorithm>
#include <cctype>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "keyinst/keyinst.hpp"
#include "keyinst/schema.hpp"

namespace keyinst {

inline constexpr std::string_view kMaskToken = "<mask>";

/// A question with schema-linked spans replaced by the mask token, plus its
/// lowercase word list ("<mask>" stays atomic).
struct MaskedQuestion {
  std::string text;
  std::vector<std::string> tokens;

  bool operator==(const MaskedQuestion&) const = default;
};

namespace detail {

inline bool is_word_byte(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

// Case-insensitive pattern match at one position. Pattern underscores also
// match a space, so "shop_name" hits "shop name".
inline bool pattern_matches_at(const std::string& text, std::size_t at,
                               const std::string& pattern) {
  if (at + pattern.size() > text.size()) return false;
  for (std::size_t i = 0; i < pattern.size(); ++i) {
    char t = static_cast<char>(std::tolower(static_cast<unsigned char>(text[at + i])));
    char p = pattern[i];  // patterns stored lowercase
    if (p == '_') {
      if (t != '_' && t != ' ') return false;
    } else if (t != p) {
      return false;
    }
  }
  return true;
}

struct MaskPattern {
  std::string text;          // lowercase
  bool allow_plural = false; // only table names absorb a plural suffix
};

inline std::vector<MaskPattern> schema_mask_patterns(const DatabaseSchema& schema) {
  std::vector<MaskPattern> patterns;
  for (const auto& table : schema.tables) {
    patterns.push_back({lower(table.name), true});
    for (const auto& column : table.columns) {
      patterns.push_back({lower(column.name), false});
      patterns.push_back({lower(table.name) + "." + lower(column.name), false});
    }
  }
  std::sort(patterns.begin(), patterns.end(), [](const MaskPattern& a, const MaskPattern& b) {
    if (a.text.size() != b.text.size()) return a.text.size() > b.text.size();
    if (a.text != b.text) return a.text < b.text;
    return a.allow_plural && !b.allow_plural;
  });
  patterns.erase(std::unique(patterns.begin(), patterns.end(),
                             [](const MaskPattern& a, const MaskPattern& b) {
                               return a.text == b.text;
                             }),
                 patterns.end());
  return patterns;
}

}  // namespace detail

/// Replaces every word-boundary occurrence of a table name, column name, or
/// table.column string with the mask token (case-insensitive; underscores in
/// schema terms also match spaces; trailing plural "s"/"es" is absorbed).
inline MaskedQuestion mask_question(const std::string& question, const DatabaseSchema& schema) {
  auto patterns = detail::schema_mask_patterns(schema);
  std::string masked;
  std::size_t i = 0;
  while (i < question.size()) {
    bool at_word_start = (i == 0) || !detail::is_word_byte(question[i - 1]);
    if (at_word_start && detail::is_word_byte(question[i])) {
      std::size_t match_end = 0;
      for (const auto& pattern : patterns) {  // longest first
        if (!detail::pattern_matches_at(question, i, pattern.text)) continue;
        std::size_t end = i + pattern.text.size();
        auto boundary = [&](std::size_t pos) {
          return pos >= question.size() || !detail::is_word_byte(question[pos]);
        };
        if (boundary(end)) {
          match_end = end;
          break;
        }
        if (!pattern.allow_plural) continue;
        char c0 = static_cast<char>(std::tolower(static_cast<unsigned char>(question[end])));
        if (c0 == 'e' && end + 1 < question.size() &&
            std::tolower(static_cast<unsigned char>(question[end + 1])) == 's' &&
            boundary(end + 2)) {
          match_end = end + 2;
          break;
        }
        if (c0 == 's' && boundary(end + 1)) {
          match_end = end + 1;
          break;
        }
      }
      if (match_end > 0) {
        masked += kMaskToken;
        i = match_end;
        continue;
      }
    }
    masked += question[i];
    ++i;
  }

  MaskedQuestion out;
  out.text = std::move(masked);
  std::size_t pos = 0;
  std::string word;
  auto flush = [&] {
    if (!word.empty()) {
      out.tokens.push_back(word);
      word.clear();
    }
  };
  while (pos < out.text.size()) {
    if (out.text.compare(pos, kMaskToken.size(), kMaskToken) == 0) {
      flush();
      out.tokens.emplace_back(kMaskToken);
      pos += kMaskToken.size();
      continue;
    }
    char c = out.text[pos];
    if (std::isalnum(static_cast<unsigned char>(c))) {
      word += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else {
      flush();
    }
    ++pos;
  }
  flush();
  return out;
}

/// Token-multiset Jaccard similarity. Symmetric, 1.0 on identical token
/// lists, 0.0 on disjoint nonempty ones; two empty lists score 1.0.
inline double similarity(const MaskedQuestion& a, const MaskedQuestion& b) {
  if (a.tokens.empty() && b.tokens.empty()) return 1.0;
  std::map<std::string, int> counts_a, counts_b;
  for (const auto& t : a.tokens) ++counts_a[t];
  for (const auto& t : b.tokens) ++counts_b[t];
  std::size_t intersection = 0;
  std::size_t union_size = 0;
  auto ia = counts_a.begin();
  auto ib = counts_b.begin();
  while (ia != counts_a.end() || ib != counts_b.end()) {
    if (ib == counts_b.end() || (ia != counts_a.end() && ia->first < ib->first)) {
      union_size += static_cast<std::size_t>(ia->second);
      ++ia;
    } else if (ia == counts_a.end() || ib->first < ia->first) {
      union_size += static_cast<std::size_t>(ib->second);
      ++ib;
    } else {
      intersection += static_cast<std::size_t>(std::min(ia->second, ib->second));
      union_size += static_cast<std::size_t>(std::max(ia->second, ib->second));
      ++ia;
      ++ib;
    }
  }
  if (union_size == 0) return 1.0;
  return static_cast<double>(intersection) / static_cast<double>(union_size);
}

using SimilarityMetric = std::function<double(const MaskedQuestion&, const MaskedQuestion&)>;

struct ScoredRecord {
  std::size_t index = 0;
  double score = 0.0;
};

/// Scores every pool record against the task question (each side masked
/// with its own schema) and orders by descending score, index ascending on
/// ties. Records whose question is string-identical to the task question
/// are left out.
inline std::vector<ScoredRecord> score_pool(const TaskInstance& task,
                                            const std::vector<KeyInstRecord>& pool,
                                            const SimilarityMetric& metric = similarity) {
  MaskedQuestion target = mask_question(task.question, task.schema);
  std::vector<ScoredRecord> scored;
  scored.reserve(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (pool[i].question == task.question) continue;
    MaskedQuestion candidate = mask_question(pool[i].question, pool[i].schema);
    scored.push_back(ScoredRecord{i, metric(target, candidate)});
  }
  std::sort(scored.begin(), scored.end(), [](const ScoredRecord& a, const ScoredRecord& b) {
    return a.score != b.score ? a.score > b.score : a.index < b.index;
  });
  return scored;
}

/// Top-m most similar KeyInst records for the task.
inline std::vector<KeyInstRecord> select_demonstrations(
    const TaskInstance& task, const std::vector<KeyInstRecord>& pool, std::size_t m,
    const SimilarityMetric& metric = similarity) {
  auto scored = score_pool(task, pool, metric);
  std::vector<KeyInstRecord> out;
  for (std::size_t i = 0; i < scored.size() && i < m; ++i) {
    out.push_back(pool[scored[i].index]);
  }
  return out;
}

}  // namespace keyinst
