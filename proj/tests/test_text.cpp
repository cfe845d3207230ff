#include <doctest.h>

#include "adshield/text.hpp"
#include "support.hpp"

using namespace adshield;

namespace {

std::vector<std::string> texts(std::string_view s) { return text::token_texts(text::tokenize(s)); }

}  // namespace

TEST_CASE("tokenize examples") {
  CHECK(text::tokenize("").empty());
  CHECK(text::tokenize(" \t\n").empty());
  const auto t = text::tokenize("Book FUN Flights!");
  REQUIRE(t.size() == 4);
  CHECK(text::token_texts(t) == std::vector<std::string>{"Book", "FUN", "Flights", "!"});
  CHECK(t[2].char_start == 9);
  CHECK(t[2].char_end == 16);
  CHECK(t[3].char_start == 16);
  CHECK(texts("(see fun.co.uk, don't!)") ==
        std::vector<std::string>{"(", "see", "fun.co.uk", ",", "don't", "!", ")"});
  CHECK(texts("\"Quoted.\"") == std::vector<std::string>{"\"", "Quoted", ".", "\""});
}

TEST_CASE("tokenize handles Unicode whitespace and punctuation") {
  // no-break space, em dash, ellipsis and curly quotes
  const std::string s = "Try\xC2\xA0it \xE2\x80\x94 now\xE2\x80\xA6 \xE2\x80\x9Cyes\xE2\x80\x9D";
  const auto toks = text::tokenize(s);
  CHECK(text::token_texts(toks) ==
        std::vector<std::string>{"Try", "it", "\xE2\x80\x94", "now", "\xE2\x80\xA6",
                                 "\xE2\x80\x9C", "yes", "\xE2\x80\x9D"});
  for (const auto& t : toks) CHECK(s.substr(t.char_start, t.char_end - t.char_start) == t.text);
}

TEST_CASE("token offsets match substrings of random text") {
  testsupport::Rng rng(1);
  const std::string alphabet = "abcXYZ019 .,!?;:'\"()[]-\t\n";
  for (int t = 0; t < 1000; ++t) {
    std::string s(rng.below(1001), ' ');
    for (auto& c : s) c = alphabet[rng.below(alphabet.size())];
    const auto toks = text::tokenize(s);
    std::size_t prev_end = 0;
    for (const auto& tok : toks) {
      REQUIRE(tok.char_start < tok.char_end);
      REQUIRE(tok.char_start >= prev_end);
      REQUIRE(s.substr(tok.char_start, tok.char_end - tok.char_start) == tok.text);
      // gaps between tokens are whitespace only
      for (std::size_t i = prev_end; i < tok.char_start; ++i)
        REQUIRE(std::isspace(static_cast<unsigned char>(s[i])));
      prev_end = tok.char_end;
    }
    // re-tokenizing the single-space join is a fixed point
    std::string joined;
    for (const auto& tok : toks) joined += (joined.empty() ? "" : " ") + tok.text;
    REQUIRE(texts(joined) == text::token_texts(toks));
  }
}

TEST_CASE("split_sentences examples") {
  const std::string s = "A. B.";
  const auto toks = text::tokenize(s);
  REQUIRE(toks.size() == 4);
  const auto spans = text::split_sentences(toks, s);
  REQUIRE(spans.size() == 2);
  CHECK(spans[0] == text::SentenceSpan{0, 2});
  CHECK(spans[1] == text::SentenceSpan{2, 4});

  const std::string plain = "no terminal punctuation here";
  CHECK(text::split_sentences(text::tokenize(plain), plain).size() == 1);
  CHECK(text::split_sentences(std::vector<std::string>{}).empty());

  const std::string quoted = "He said \"stop!\" Then left.";
  const auto q = text::split_sentences(text::tokenize(quoted), quoted);
  REQUIRE(q.size() == 2);
  CHECK(q[0].token_end == 6);
  const std::string multi = "Really?! Yes.";
  CHECK(text::split_sentences(text::tokenize(multi), multi).size() == 2);
}

TEST_CASE("sentence count equals the number of generated sentences") {
  testsupport::Rng rng(2);
  const std::vector<std::string> words = {"alpha", "beta", "Gamma", "delta", "x1", "fun.co"};
  const std::vector<std::string> ends = {".", "!", "?", "\xE2\x80\xA6", ".)", "?\"", "!!"};
  for (int t = 0; t < 500; ++t) {
    const auto n = 1 + rng.below(6);
    std::string s;
    for (std::size_t k = 0; k < n; ++k) {
      const auto len = 1 + rng.below(8);
      for (std::size_t w = 0; w < len; ++w) s += words[rng.below(words.size())] + (w + 1 < len ? " " : "");
      s += ends[rng.below(ends.size())] + " ";
    }
    const auto toks = text::tokenize(s);
    const auto spans = text::split_sentences(toks, s);
    REQUIRE(spans.size() == n);
    REQUIRE(spans.front().token_start == 0);
    REQUIRE(spans.back().token_end == toks.size());
    for (std::size_t i = 1; i < spans.size(); ++i) REQUIRE(spans[i].token_start == spans[i - 1].token_end);
    for (const auto& sp : spans) REQUIRE(sp.size() > 0);
    REQUIRE(text::split_sentences(text::token_texts(toks)) == spans);
  }
}

TEST_CASE("lowercase is ASCII only") {
  CHECK(text::lowercase("MiXeD 123") == "mixed 123");
  CHECK(text::lowercase("\xC3\x84X") == "\xC3\x84x");
}
