#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace fincontext::text {

// A normalized word together with its byte span in the source text.
struct Token {
  std::string norm;
  std::size_t begin = 0;
  std::size_t end = 0;
};

inline bool is_ascii_alnum(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

// Non-ASCII bytes are kept inside words so UTF-8 names survive intact.
inline bool is_word_byte(unsigned char c) { return is_ascii_alnum(c) || c >= 0x80; }

inline char to_lower(char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

inline std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = to_lower(c);
  return out;
}

inline std::string_view trim(std::string_view s) {
  auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

// Collapses every run of whitespace to one space and trims the ends.
inline std::string collapse_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending = false;
  for (char c : s) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      pending = !out.empty();
      continue;
    }
    if (pending) out.push_back(' ');
    pending = false;
    out.push_back(c);
  }
  return out;
}

namespace detail {

// Length of an apostrophe at `i` (ASCII ' or U+2019), 0 when none.
inline std::size_t apostrophe_at(std::string_view s, std::size_t i) {
  if (s[i] == '\'') return 1;
  if (s.size() - i >= 3 && static_cast<unsigned char>(s[i]) == 0xE2 &&
      static_cast<unsigned char>(s[i + 1]) == 0x80 &&
      static_cast<unsigned char>(s[i + 2]) == 0x99) {
    return 3;
  }
  return 0;
}

}  // namespace detail

// Splits into lowercase alphanumeric words. Punctuation separates words and
// a possessive "'s" is dropped, so "Amcor's" and "Co.'s" yield "amcor" and
// "co". The curly apostrophe is recognized; the byte sequence is never
// mistaken for word content.
inline std::vector<Token> tokenize(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    if (std::size_t a = detail::apostrophe_at(s, i); a > 0) {
      std::size_t j = i + a;
      if (j < s.size() && (s[j] == 's' || s[j] == 'S') &&
          (j + 1 == s.size() || !is_word_byte(static_cast<unsigned char>(s[j + 1])))) {
        i = j + 1;
      } else {
        i = j;
      }
      continue;
    }
    auto c = static_cast<unsigned char>(s[i]);
    if (!is_word_byte(c)) {
      ++i;
      continue;
    }
    Token t;
    t.begin = i;
    while (i < s.size() && is_word_byte(static_cast<unsigned char>(s[i])) &&
           detail::apostrophe_at(s, i) == 0) {
      t.norm.push_back(to_lower(s[i]));
      ++i;
    }
    t.end = i;
    out.push_back(std::move(t));
  }
  return out;
}

// Case-, punctuation- and possessive-insensitive key for alias lookup.
inline std::string normalize(std::string_view s) {
  std::string out;
  for (const auto& t : tokenize(s)) {
    if (!out.empty()) out.push_back(' ');
    out += t.norm;
  }
  return out;
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(sep, start);
    out.emplace_back(s.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

inline bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

}  // namespace fincontext::text
