#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace adshield::text {

/// A token with its byte offsets into the source text.
/// Invariant: source.substr(char_start, char_end - char_start) == text.
struct Token {
  std::string text;
  std::size_t char_start = 0;
  std::size_t char_end = 0;  // exclusive

  friend bool operator==(const Token&, const Token&) = default;
};

/// Half-open range of token indices forming one sentence.
struct SentenceSpan {
  std::size_t token_start = 0;
  std::size_t token_end = 0;  // exclusive

  std::size_t size() const noexcept { return token_end - token_start; }
  friend bool operator==(const SentenceSpan&, const SentenceSpan&) = default;
};

/// Splits on Unicode whitespace, then peels leading and trailing punctuation
/// off each chunk into single-character tokens. Inner punctuation stays
/// attached ("fun.co.uk", "don't"). Offsets are byte offsets into `text`.
std::vector<Token> tokenize(std::string_view text);

/// Sentence boundaries fall after a sentence-final token (".", "!", "?",
/// "…"), extended over any directly following sentence-final or closing
/// quote/bracket tokens. Remaining tokens form a final sentence. The spans
/// partition the token sequence.
std::vector<SentenceSpan> split_sentences(const std::vector<Token>& tokens,
                                          std::string_view text);

/// Same rule over bare token strings (corpus records carry tokens without
/// offsets).
std::vector<SentenceSpan> split_sentences(const std::vector<std::string>& tokens);

std::vector<std::string> token_texts(const std::vector<Token>& tokens);

/// ASCII lowercasing; non-ASCII bytes pass through unchanged.
std::string lowercase(std::string_view s);

bool is_sentence_final(std::string_view token);
bool is_closing_mark(std::string_view token);

}  // namespace adshield::text
