#include <doctest.h>

#include "stylo/distort.hpp"
#include "stylo/text.hpp"

using namespace stylo;

TEST_SUITE_BEGIN("distortion");

TEST_CASE("build_dictionary keeps the k most frequent words") {
  FrequentWordDictionary d = build_dictionary({"a", "a", "b"}, 1);
  CHECK(d.entries == std::unordered_set<std::string>{"a"});
  CHECK(build_dictionary({"a", "b"}, 0).entries.empty());
  // tie broken lexicographically
  CHECK(build_dictionary({"b", "a"}, 1).entries ==
        std::unordered_set<std::string>{"a"});
  // punctuation never enters the dictionary
  CHECK(build_dictionary({".", ".", "x"}, 1).entries ==
        std::unordered_set<std::string>{"x"});
}

TEST_CASE("the four modes on the reference sentence") {
  FrequentWordDictionary dict;
  dict.entries = {"had"};
  dict.k = 1;
  const std::string text = "Mary had 42 lambs";
  CHECK(distort(text, dict, DistortMode::MA) == "**** had ## *****");
  CHECK(distort(text, dict, DistortMode::SA) == "* had # *");
  CHECK(distort(text, dict, DistortMode::EX) == "m**y had 42 l***s");
  CHECK(distort(text, dict, DistortMode::L2) == "**ry had 42 ***bs");
}

TEST_CASE("punctuation always passes unchanged") {
  FrequentWordDictionary empty;
  for (DistortMode mode : {DistortMode::MA, DistortMode::SA, DistortMode::EX,
                           DistortMode::L2}) {
    auto out = distort(std::vector<std::string>{"word", ",", "!", "..."},
                       empty, mode);
    CHECK(out[1] == ",");
    CHECK(out[2] == "!");
    CHECK(out[3] == "...");
  }
}

TEST_CASE("token count preserved, MA preserves lengths, SA collapses") {
  FrequentWordDictionary empty;
  std::vector<std::string> tokens = {"alpha", "be", "c", "1234", ","};
  for (DistortMode mode : {DistortMode::MA, DistortMode::SA, DistortMode::EX,
                           DistortMode::L2}) {
    auto out = distort(tokens, empty, mode);
    CHECK(out.size() == tokens.size());
  }
  auto ma = distort(tokens, empty, DistortMode::MA);
  for (size_t i = 0; i < tokens.size(); ++i) {
    CHECK(ma[i].size() == tokens[i].size());
  }
  auto sa = distort(tokens, empty, DistortMode::SA);
  CHECK(sa[0] == "*");
  CHECK(sa[3] == "#");
}

TEST_CASE("distortion is idempotent") {
  FrequentWordDictionary dict;
  dict.entries = {"the"};
  std::vector<std::string> tokens = {"the", "weather", "was", "4ever", "fine",
                                     "."};
  for (DistortMode mode : {DistortMode::MA, DistortMode::SA, DistortMode::EX,
                           DistortMode::L2}) {
    auto once = distort(tokens, dict, mode);
    CHECK(distort(once, dict, mode) == once);
  }
}

TEST_CASE("mode parsing") {
  CHECK(distort_mode_from_string("ma") == DistortMode::MA);
  CHECK(distort_mode_from_string("L2") == DistortMode::L2);
  CHECK_THROWS(distort_mode_from_string("xx"));
}

TEST_SUITE_END();
