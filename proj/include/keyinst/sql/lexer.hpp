#pragma once

#include <cctype>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "keyinst/error.hpp"

namespace keyinst::sql {

enum class TokenKind { Word, Number, String, Punct, End };

struct Token {
  TokenKind kind{};
  std::string text;    // raw lexeme; quotes stripped for quoted identifiers
  std::size_t offset{};
  bool quoted = false;  // quoted identifiers never act as keywords

  std::string upper() const {
    std::string u;
    u.reserve(text.size());
    for (char c : text) u += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return u;
  }
};

namespace detail {

inline bool is_word_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}

inline bool is_word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

}  // namespace detail

/// Splits SQL text into tokens. String literals use single quotes with ''
/// escaping; identifiers may be double-quoted, backquoted, or bracketed.
inline std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  const std::size_t n = text.size();

  auto push = [&](TokenKind kind, std::string lexeme, std::size_t at, bool quoted = false) {
    tokens.push_back(Token{kind, std::move(lexeme), at, quoted});
  };

  while (i < n) {
    char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    std::size_t start = i;
    if (detail::is_word_start(c)) {
      std::size_t j = i + 1;
      while (j < n && detail::is_word_char(text[j])) ++j;
      push(TokenKind::Word, std::string(text.substr(i, j - i)), start);
      i = j;
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && i + 1 < n && std::isdigit(static_cast<unsigned char>(text[i + 1])))) {
      std::size_t j = i;
      bool seen_dot = false;
      while (j < n && (std::isdigit(static_cast<unsigned char>(text[j])) ||
                       (text[j] == '.' && !seen_dot))) {
        if (text[j] == '.') seen_dot = true;
        ++j;
      }
      if (j < n && (text[j] == 'e' || text[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < n && (text[k] == '+' || text[k] == '-')) ++k;
        if (k < n && std::isdigit(static_cast<unsigned char>(text[k]))) {
          ++k;
          while (k < n && std::isdigit(static_cast<unsigned char>(text[k]))) ++k;
          j = k;
        }
      }
      push(TokenKind::Number, std::string(text.substr(i, j - i)), start);
      i = j;
      continue;
    }
    if (c == '\'') {
      std::string value;
      std::size_t j = i + 1;
      bool closed = false;
      while (j < n) {
        if (text[j] == '\'') {
          if (j + 1 < n && text[j + 1] == '\'') {
            value += '\'';
            j += 2;
            continue;
          }
          closed = true;
          ++j;
          break;
        }
        value += text[j];
        ++j;
      }
      if (!closed) throw ParseError("unterminated string literal", start, "closing quote");
      push(TokenKind::String, std::move(value), start);
      i = j;
      continue;
    }
    if (c == '"' || c == '`' || c == '[') {
      char close = (c == '[') ? ']' : c;
      std::size_t j = i + 1;
      std::string value;
      bool closed = false;
      while (j < n) {
        if (text[j] == close) {
          closed = true;
          ++j;
          break;
        }
        value += text[j];
        ++j;
      }
      if (!closed) throw ParseError("unterminated quoted identifier", start, std::string(1, close));
      push(TokenKind::Word, std::move(value), start, /*quoted=*/true);
      i = j;
      continue;
    }
    // two-character operators first
    if (i + 1 < n) {
      std::string_view two = text.substr(i, 2);
      if (two == "<>" || two == "<=" || two == ">=" || two == "!=" || two == "==" ||
          two == "||") {
        push(TokenKind::Punct, std::string(two), start);
        i += 2;
        continue;
      }
    }
    switch (c) {
      case '(': case ')': case ',': case '.': case ';': case '*':
      case '+': case '-': case '/': case '%': case '=': case '<': case '>':
        push(TokenKind::Punct, std::string(1, c), start);
        ++i;
        break;
      default:
        throw ParseError(std::string("unexpected character '") + c + "'", start, "SQL token");
    }
  }
  push(TokenKind::End, "", n);
  return tokens;
}

}  // namespace keyinst::sql
