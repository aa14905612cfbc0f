#include <doctest.h>

#include <sstream>

#include "stylo/errors.hpp"
#include "stylo/vocab.hpp"

using namespace stylo;

TEST_SUITE_BEGIN("representation");

TEST_CASE("build_vocabulary ranks by frequency then lexicographically") {
  Vocabulary v = build_vocabulary({"a", "a", "b", "b", "b", "c"}, 2);
  CHECK(v.words() == std::vector<std::string>{"b", "a"});

  Vocabulary tie = build_vocabulary({"a", "a", "b", "b"}, 1);
  CHECK(tie.words() == std::vector<std::string>{"a"});

  CHECK_THROWS_AS(build_vocabulary({"a", "b"}, 3), InsufficientData);
}

TEST_CASE("vocabulary ignores punctuation tokens when ranking words") {
  Vocabulary v = build_vocabulary({".", ".", ".", "a", "b", "b"}, 2);
  CHECK(v.words() == std::vector<std::string>{"b", "a"});
}

TEST_CASE("index layout: oov 0, punctuation 1..11, words from 12") {
  Vocabulary v = build_vocabulary({"the", "the", "cat"}, 2);
  CHECK(v.total_size() == 14);
  CHECK(v.index_of("the") == 12);
  CHECK(v.index_of("cat") == 13);
  CHECK(v.index_of(".") == 1);
  CHECK(v.index_of("xyzzy") == 0);
  CHECK(v.token_at(0) == Vocabulary::kOovMarker);
  CHECK(v.token_at(12) == "the");
  CHECK(v.token_at(1) == ".");
}

TEST_CASE("encode and decode round trip") {
  Vocabulary v = build_vocabulary({"the", "the", "cat"}, 2);
  LabeledChunk chunk;
  chunk.tokens = {"the", "cat", ".", "unknown"};
  chunk.author_id = "a";
  chunk.domain_id = "d";
  chunk.story_id = "s";
  EncodedChunk enc = encode_chunk(chunk, v);
  CHECK(enc.indices == std::vector<int>{12, 13, 1, 0});
  CHECK(enc.author_id == "a");
  auto decoded = decode_indices(enc.indices, v);
  CHECK(decoded ==
        std::vector<std::string>{"the", "cat", ".", Vocabulary::kOovMarker});
}

TEST_CASE("vocabulary is invariant to stream order") {
  Vocabulary a = build_vocabulary({"x", "y", "y", "z", "z", "z"}, 3);
  Vocabulary b = build_vocabulary({"z", "z", "y", "x", "z", "y"}, 3);
  CHECK(a.words() == b.words());
}

TEST_CASE("wordlist round trip") {
  Vocabulary v = build_vocabulary({"one", "one", "two"}, 2);
  std::stringstream buf;
  v.save_wordlist(buf);
  Vocabulary back = Vocabulary::load_wordlist(buf);
  CHECK(back.words() == v.words());
  CHECK(back.index_of("one") == v.index_of("one"));
}

TEST_SUITE_END();
