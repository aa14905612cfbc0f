#include <doctest.h>

#include "stylo/text.hpp"

using namespace stylo;

TEST_SUITE_BEGIN("text");

TEST_CASE("punctuation marks are the 11 vocabulary slots") {
  const auto& marks = punctuation_marks();
  CHECK(marks.size() == 11);
  for (const auto& m : marks) CHECK(is_punct_token(m));
  CHECK(!is_punct_token("word"));
  CHECK(!is_punct_token(""));
}

TEST_CASE("ascii_reduce maps unicode punctuation") {
  CHECK(ascii_reduce("“quoted”") == "\"quoted\"");
  CHECK(ascii_reduce("it’s") == "it's");
  CHECK(ascii_reduce("a—b") == "a-b");
  CHECK(ascii_reduce("wait…") == "wait...");
  CHECK(ascii_reduce("plain text") == "plain text");
}

TEST_CASE("tokenize splits punctuation and lowercases") {
  CHECK(tokenize("She said 'No!'") ==
        std::vector<std::string>{"she", "said", "'", "no", "!", "'"});
  CHECK(tokenize("") == std::vector<std::string>{});
  CHECK(tokenize("end.") == std::vector<std::string>{"end", "."});
}

TEST_CASE("tokenize collapses dot runs into an ellipsis token") {
  CHECK(tokenize("well...") == std::vector<std::string>{"well", "..."});
  CHECK(tokenize("so.. yes") == std::vector<std::string>{"so", "...", "yes"});
}

TEST_CASE("detokenize joins with single spaces") {
  CHECK(detokenize({"a", ",", "b"}) == "a , b");
  CHECK(detokenize({}) == "");
}

TEST_CASE("ends_sentence handles trailing quotes") {
  CHECK(ends_sentence("done."));
  CHECK(ends_sentence("really?'"));
  CHECK(ends_sentence("go!"));
  CHECK(!ends_sentence("word"));
  CHECK(!ends_sentence("half,"));
}

TEST_SUITE_END();
