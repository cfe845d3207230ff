#include "adshield/text.hpp"

#include <array>
#include <cstdint>

namespace adshield::text {
namespace {

// Decodes one UTF-8 code point starting at `pos`. Malformed bytes decode
// as a single byte so offsets always advance.
struct CodePoint {
  std::uint32_t value;
  std::size_t length;
};

CodePoint decode(std::string_view s, std::size_t pos) {
  const auto b0 = static_cast<unsigned char>(s[pos]);
  auto cont = [&](std::size_t i) -> int {
    if (pos + i >= s.size()) return -1;
    const auto b = static_cast<unsigned char>(s[pos + i]);
    return (b & 0xC0) == 0x80 ? (b & 0x3F) : -1;
  };
  if (b0 < 0x80) return {b0, 1};
  if ((b0 & 0xE0) == 0xC0) {
    const int c1 = cont(1);
    if (c1 >= 0) return {((b0 & 0x1Fu) << 6) | static_cast<std::uint32_t>(c1), 2};
  } else if ((b0 & 0xF0) == 0xE0) {
    const int c1 = cont(1), c2 = cont(2);
    if (c1 >= 0 && c2 >= 0)
      return {((b0 & 0x0Fu) << 12) | (static_cast<std::uint32_t>(c1) << 6) |
                  static_cast<std::uint32_t>(c2),
              3};
  } else if ((b0 & 0xF8) == 0xF0) {
    const int c1 = cont(1), c2 = cont(2), c3 = cont(3);
    if (c1 >= 0 && c2 >= 0 && c3 >= 0)
      return {((b0 & 0x07u) << 18) | (static_cast<std::uint32_t>(c1) << 12) |
                  (static_cast<std::uint32_t>(c2) << 6) | static_cast<std::uint32_t>(c3),
              4};
  }
  return {b0, 1};
}

bool is_space(std::uint32_t cp) {
  if (cp == 0x20 || (cp >= 0x09 && cp <= 0x0D)) return true;
  switch (cp) {
    case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

bool is_punct(std::uint32_t cp) {
  if (cp < 0x80) {
    return (cp >= 0x21 && cp <= 0x2F) || (cp >= 0x3A && cp <= 0x40) ||
           (cp >= 0x5B && cp <= 0x60) || (cp >= 0x7B && cp <= 0x7E);
  }
  switch (cp) {
    case 0x00AB: case 0x00BB:                              // « »
    case 0x2013: case 0x2014:                              // – —
    case 0x2018: case 0x2019: case 0x201C: case 0x201D:    // ‘ ’ “ ”
    case 0x2026:                                           // …
      return true;
    default:
      return false;
  }
}

}  // namespace

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    // skip whitespace
    CodePoint cp = decode(text, pos);
    if (is_space(cp.value)) {
      pos += cp.length;
      continue;
    }
    // collect chunk [start, end) of non-space code points
    std::vector<std::pair<std::size_t, CodePoint>> cps;
    while (pos < text.size()) {
      cp = decode(text, pos);
      if (is_space(cp.value)) break;
      cps.emplace_back(pos, cp);
      pos += cp.length;
    }
    const std::size_t end = pos;

    std::size_t lead = 0;
    while (lead < cps.size() && is_punct(cps[lead].second.value)) ++lead;
    std::size_t trail = cps.size();
    while (trail > lead && is_punct(cps[trail - 1].second.value)) --trail;

    auto emit = [&](std::size_t b, std::size_t e) {
      out.push_back(Token{std::string(text.substr(b, e - b)), b, e});
    };
    for (std::size_t i = 0; i < lead; ++i)
      emit(cps[i].first, cps[i].first + cps[i].second.length);
    if (trail > lead) {
      const std::size_t core_end =
          trail < cps.size() ? cps[trail].first : end;
      emit(cps[lead].first, core_end);
    }
    for (std::size_t i = trail; i < cps.size(); ++i)
      emit(cps[i].first, cps[i].first + cps[i].second.length);
  }
  return out;
}

bool is_sentence_final(std::string_view token) {
  return token == "." || token == "!" || token == "?" || token == "…";
}

bool is_closing_mark(std::string_view token) {
  static constexpr std::array<std::string_view, 9> kClosers = {
      "\"", "'", ")", "]", "}", "’", "”", "»", "«"};
  for (auto c : kClosers)
    if (token == c) return true;
  return false;
}

namespace {

template <typename TextOf>
std::vector<SentenceSpan> split_impl(std::size_t n, TextOf text_of) {
  std::vector<SentenceSpan> spans;
  std::size_t start = 0;
  std::size_t i = 0;
  while (i < n) {
    if (is_sentence_final(text_of(i))) {
      std::size_t j = i + 1;
      while (j < n && (is_sentence_final(text_of(j)) || is_closing_mark(text_of(j)))) ++j;
      spans.push_back({start, j});
      start = j;
      i = j;
    } else {
      ++i;
    }
  }
  if (start < n) spans.push_back({start, n});
  return spans;
}

}  // namespace

std::vector<SentenceSpan> split_sentences(const std::vector<Token>& tokens,
                                          std::string_view /*text*/) {
  return split_impl(tokens.size(),
                    [&](std::size_t i) -> std::string_view { return tokens[i].text; });
}

std::vector<SentenceSpan> split_sentences(const std::vector<std::string>& tokens) {
  return split_impl(tokens.size(),
                    [&](std::size_t i) -> std::string_view { return tokens[i]; });
}

std::vector<std::string> token_texts(const std::vector<Token>& tokens) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(t.text);
  return out;
}

std::string lowercase(std::string_view s) {
  std::string out(s);
  for (auto& c : out)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return out;
}

}  // namespace adshield::text
