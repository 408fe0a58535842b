#pragma once

// Tokenization shared by every module: ASCII-lowercased, whitespace split,
// leading/trailing ASCII punctuation stripped, internal hyphens and
// apostrophes kept. Offsets are counted in Unicode code points so that
// positional analysis bins "characters", not bytes.

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "keyscore/porter.hpp"

namespace keyscore {

struct Token {
  std::string text;
  std::size_t offset = 0;  // code-point offset of the first kept character

  friend bool operator==(const Token&, const Token&) = default;
};

namespace detail {

inline bool is_ascii_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

inline bool is_ascii_punct(unsigned char c) {
  return (c >= 33 && c <= 47) || (c >= 58 && c <= 64) || (c >= 91 && c <= 96) || (c >= 123 && c <= 126);
}

inline bool is_utf8_continuation(unsigned char c) { return (c & 0xC0) == 0x80; }

}  // namespace detail

/// Number of code points in a UTF-8 string.
inline std::size_t text_length(std::string_view text) {
  std::size_t n = 0;
  for (unsigned char c : text)
    if (!detail::is_utf8_continuation(c)) ++n;
  return n;
}

inline std::vector<Token> tokenize_with_offsets(std::string_view text) {
  std::vector<Token> out;
  std::size_t i = 0;
  std::size_t cp = 0;  // code points consumed before byte i
  const auto advance = [&] {
    if (!detail::is_utf8_continuation(static_cast<unsigned char>(text[i]))) ++cp;
    ++i;
  };
  while (i < text.size()) {
    while (i < text.size() && detail::is_ascii_space(static_cast<unsigned char>(text[i]))) advance();
    if (i >= text.size()) break;
    const std::size_t start_byte = i;
    const std::size_t start_cp = cp;
    while (i < text.size() && !detail::is_ascii_space(static_cast<unsigned char>(text[i]))) advance();
    std::string_view word = text.substr(start_byte, i - start_byte);

    std::size_t lead = 0;
    while (lead < word.size() && detail::is_ascii_punct(static_cast<unsigned char>(word[lead]))) ++lead;
    std::size_t stop = word.size();
    while (stop > lead && detail::is_ascii_punct(static_cast<unsigned char>(word[stop - 1]))) --stop;
    if (stop == lead) continue;

    Token tok;
    tok.offset = start_cp + lead;  // stripped punctuation is single-byte ASCII
    tok.text.reserve(stop - lead);
    for (std::size_t p = lead; p < stop; ++p) {
      const char c = word[p];
      tok.text.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : c);
    }
    out.push_back(std::move(tok));
  }
  return out;
}

/// "Web Search-Engine!" -> [web, search-engine]
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  for (auto& t : tokenize_with_offsets(text)) out.push_back(std::move(t.text));
  return out;
}

inline std::vector<std::string> stem_all(const std::vector<std::string>& tokens) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(stem(t));
  return out;
}

inline std::string join(const std::vector<std::string>& parts, std::string_view sep = " ") {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out.append(sep);
    out.append(parts[i]);
  }
  return out;
}

}  // namespace keyscore
