#pragma once

// Lexical layer for Lean 4 source: comment/string masking, identifier
// classes, bracket depth. Everything above it works on the masked view so
// byte offsets always line up with the original text.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace lemmaguide::lean {

struct CodePoint {
  char32_t value = 0;
  std::size_t length = 1;
};

/// Decodes one UTF-8 sequence; malformed bytes decode as themselves with length 1.
inline CodePoint decode_utf8(std::string_view text, std::size_t pos) {
  const auto byte = [&](std::size_t i) { return static_cast<unsigned char>(text[i]); };
  const unsigned char lead = byte(pos);
  if (lead < 0x80) return {lead, 1};
  std::size_t length = 0;
  char32_t value = 0;
  if ((lead & 0xE0) == 0xC0) {
    length = 2;
    value = lead & 0x1F;
  } else if ((lead & 0xF0) == 0xE0) {
    length = 3;
    value = lead & 0x0F;
  } else if ((lead & 0xF8) == 0xF0) {
    length = 4;
    value = lead & 0x07;
  } else {
    return {lead, 1};
  }
  if (pos + length > text.size()) return {lead, 1};
  for (std::size_t i = 1; i < length; ++i) {
    const unsigned char c = byte(pos + i);
    if ((c & 0xC0) != 0x80) return {lead, 1};
    value = (value << 6) | (c & 0x3F);
  }
  return {value, length};
}

/// Start byte of the code point that ends right before `pos`.
inline std::size_t previous_boundary(std::string_view text, std::size_t pos) {
  if (pos == 0) return 0;
  std::size_t p = pos - 1;
  while (p > 0 && (static_cast<unsigned char>(text[p]) & 0xC0) == 0x80) --p;
  return p;
}

inline bool is_letter_like(char32_t c) {
  return (c >= 0x3B1 && c <= 0x3C9 && c != 0x3BB) ||  // α-ω except λ
         (c >= 0x391 && c <= 0x3A9 && c != 0x3A0 && c != 0x3A3) ||  // Α-Ω except Π, Σ
         (c >= 0x3CA && c <= 0x3FB) ||                 // Coptic
         (c >= 0x1F00 && c <= 0x1FFE) ||               // polytonic Greek
         (c >= 0x2100 && c <= 0x214F) ||               // letterlike block (ℕ ℝ ℤ ...)
         (c >= 0x1D49C && c <= 0x1D59F) ||             // script / double-struck
         (c >= 0xC0 && c <= 0x24F && c != 0xD7 && c != 0xF7);  // Latin-1/Extended
}

inline bool is_subscript(char32_t c) {
  return (c >= 0x2080 && c <= 0x208E) || (c >= 0x2090 && c <= 0x209C) ||
         (c >= 0x1D62 && c <= 0x1D6A);
}

inline bool is_ident_start(char32_t c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' || is_letter_like(c);
}

inline bool is_ident_rest(char32_t c) {
  return is_ident_start(c) || (c >= '0' && c <= '9') || c == '\'' || c == '!' || c == '?' ||
         is_subscript(c);
}

inline bool is_open_bracket(char32_t c) {
  return c == '(' || c == '[' || c == '{' || c == U'⟨' || c == U'⦃' || c == U'⟦' || c == U'‹';
}

inline bool is_close_bracket(char32_t c) {
  return c == ')' || c == ']' || c == '}' || c == U'⟩' || c == U'⦄' || c == U'⟧' || c == U'›';
}

inline char32_t matching_open(char32_t close) {
  switch (close) {
    case ')': return '(';
    case ']': return '[';
    case '}': return '{';
    case U'⟩': return U'⟨';
    case U'⦄': return U'⦃';
    case U'⟧': return U'⟦';
    case U'›': return U'‹';
    default: return 0;
  }
}

/// Copy of `text` with every comment and string/char literal byte replaced by
/// a space (newlines kept), so the result has identical offsets and lines.
inline std::string mask_non_code(std::string_view text) {
  std::string out(text);
  const std::size_t n = text.size();
  auto blank = [&](std::size_t from, std::size_t to) {
    for (std::size_t i = from; i < to && i < n; ++i) {
      if (out[i] != '\n') out[i] = ' ';
    }
  };
  std::size_t i = 0;
  while (i < n) {
    const char c = text[i];
    if (c == '-' && i + 1 < n && text[i + 1] == '-') {
      std::size_t end = text.find('\n', i);
      if (end == std::string_view::npos) end = n;
      blank(i, end);
      i = end;
    } else if (c == '/' && i + 1 < n && text[i + 1] == '-') {
      // block comments nest in Lean 4
      std::size_t depth = 1;
      std::size_t j = i + 2;
      while (j < n && depth > 0) {
        if (text[j] == '/' && j + 1 < n && text[j + 1] == '-') {
          ++depth;
          j += 2;
        } else if (text[j] == '-' && j + 1 < n && text[j + 1] == '/') {
          --depth;
          j += 2;
        } else {
          ++j;
        }
      }
      blank(i, j);
      i = j;
    } else if (c == '"') {
      std::size_t j = i + 1;
      while (j < n && text[j] != '"') {
        j += (text[j] == '\\') ? 2 : 1;
      }
      j = (j < n) ? j + 1 : n;
      blank(i, j);
      i = j;
    } else if (c == '\'') {
      // char literal only where an identifier cannot be continuing (h' is an identifier)
      const bool after_ident =
          i > 0 && is_ident_rest(decode_utf8(text, previous_boundary(text, i)).value);
      if (!after_ident && i + 2 < n) {
        std::size_t j = i + 1;
        if (text[j] == '\\') {
          j += 2;
        } else {
          j += decode_utf8(text, j).length;
        }
        if (j < n && text[j] == '\'') {
          blank(i, j + 1);
          i = j + 1;
          continue;
        }
      }
      ++i;
    } else {
      ++i;
    }
  }
  return out;
}

/// True when every bracket in the code portion of `text` is closed by its
/// own partner, in order.
inline bool delimiters_balanced(std::string_view text) {
  const std::string masked = mask_non_code(text);
  std::vector<char32_t> stack;
  std::size_t i = 0;
  while (i < masked.size()) {
    const CodePoint cp = decode_utf8(masked, i);
    if (is_open_bracket(cp.value)) {
      stack.push_back(cp.value);
    } else if (is_close_bracket(cp.value)) {
      if (stack.empty() || stack.back() != matching_open(cp.value)) return false;
      stack.pop_back();
    }
    i += cp.length;
  }
  return stack.empty();
}

/// Whether an identifier can be touching position `pos` from the left.
inline bool ident_before(std::string_view code, std::size_t pos) {
  if (pos == 0) return false;
  const char32_t prev = decode_utf8(code, previous_boundary(code, pos)).value;
  return is_ident_rest(prev) || prev == '.';
}

inline bool ident_after(std::string_view code, std::size_t pos) {
  if (pos >= code.size()) return false;
  return is_ident_rest(decode_utf8(code, pos).value);
}

/// Next standalone occurrence of `word` in already-masked code at or after `from`.
inline std::optional<std::size_t> find_token(std::string_view code, std::string_view word,
                                             std::size_t from = 0) {
  std::size_t pos = code.find(word, from);
  while (pos != std::string_view::npos) {
    if (!ident_before(code, pos) && !ident_after(code, pos + word.size())) return pos;
    pos = code.find(word, pos + 1);
  }
  return std::nullopt;
}

/// Length of the identifier starting at `pos` (dotted components included), 0 if none.
inline std::size_t identifier_length(std::string_view code, std::size_t pos) {
  if (pos >= code.size()) return 0;
  std::size_t i = pos;
  if (code[i] == '\xC2' && i + 1 < code.size() && code[i + 1] == '\xAB') {  // «quoted»
    const std::size_t close = code.find("\xC2\xBB", i);
    return close == std::string_view::npos ? 0 : close + 2 - pos;
  }
  CodePoint cp = decode_utf8(code, i);
  if (!is_ident_start(cp.value)) return 0;
  while (i < code.size()) {
    cp = decode_utf8(code, i);
    if (is_ident_rest(cp.value)) {
      i += cp.length;
    } else if (cp.value == '.' && i + 1 < code.size() &&
               is_ident_start(decode_utf8(code, i + 1).value)) {
      i += 1;
    } else {
      break;
    }
  }
  return i - pos;
}

inline bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; }

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

/// Whitespace runs collapsed to a single space, ends trimmed.
inline std::string normalize_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (char c : trim(s)) {
    if (is_space(c)) {
      pending_space = true;
    } else {
      if (pending_space) out.push_back(' ');
      pending_space = false;
      out.push_back(c);
    }
  }
  return out;
}

struct Line {
  std::size_t begin = 0;  // offset of first byte
  std::size_t end = 0;    // offset of '\n' or text end
  std::size_t indent = 0;
  bool blank = true;  // no code on the line (whitespace or comment only)
};

/// Lines of the masked text; `indent` counts leading spaces (tabs count as one).
inline std::vector<Line> split_lines(std::string_view masked) {
  std::vector<Line> lines;
  std::size_t begin = 0;
  while (begin <= masked.size()) {
    std::size_t end = masked.find('\n', begin);
    if (end == std::string_view::npos) end = masked.size();
    Line line{begin, end, 0, true};
    while (begin + line.indent < end && (masked[begin + line.indent] == ' ' ||
                                          masked[begin + line.indent] == '\t')) {
      ++line.indent;
    }
    for (std::size_t i = begin; i < end; ++i) {
      if (!is_space(masked[i])) {
        line.blank = false;
        break;
      }
    }
    lines.push_back(line);
    if (end == masked.size()) break;
    begin = end + 1;
  }
  return lines;
}

}  // namespace lemmaguide::lean
