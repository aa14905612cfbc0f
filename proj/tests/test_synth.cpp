#include <doctest.h>

#include <map>

#include "stylo/errors.hpp"
#include "stylo/synth.hpp"
#include "stylo/text.hpp"

using namespace stylo;

namespace {

std::map<std::string, long> word_counts(const RawStory& story) {
  std::map<std::string, long> counts;
  for (const auto& b : story.blocks) {
    for (const auto& t : tokenize(b.text)) {
      if (!is_punct_token(t)) ++counts[t];
    }
  }
  return counts;
}

}  // namespace

TEST_SUITE_BEGIN("synth");

TEST_CASE("default spec shapes and profile normalization") {
  GeneratorSpec spec = default_generator_spec(3, 4, 0.5, 0.3, 2, 500, 7);
  CHECK(spec.authors.size() == 3);
  CHECK(spec.domains.size() == 4);
  CHECK(spec.content_lexicon.size() == 300);
  CHECK(spec.background_lexicon.size() == 50);
  for (const auto& a : spec.authors) {
    double sum = 0.0;
    for (double w : a.function_weights) sum += w;
    CHECK(sum == doctest::Approx(1.0));
    CHECK(a.ender_weights.size() == 3);
  }
  for (const auto& d : spec.domains) {
    double sum = 0.0;
    for (double w : d.content_weights) sum += w;
    CHECK(sum == doctest::Approx(1.0));
  }
}

TEST_CASE("generation is deterministic in the seed") {
  GeneratorSpec spec = default_generator_spec(2, 2, 0.5, 0.3, 1, 300, 9);
  auto a = generate(spec);
  auto b = generate(spec);
  REQUIRE(a.size() == b.size());
  CHECK(a.size() == 4);
  for (size_t i = 0; i < a.size(); ++i) {
    REQUIRE(a[i].blocks.size() == b[i].blocks.size());
    for (size_t p = 0; p < a[i].blocks.size(); ++p) {
      CHECK(a[i].blocks[p].text == b[i].blocks[p].text);
    }
  }
  GeneratorSpec other = spec;
  other.seed = 10;
  auto c = generate(other);
  CHECK(c[0].blocks[0].text != a[0].blocks[0].text);
}

TEST_CASE("generator rejects invalid specs") {
  CHECK_THROWS_AS(default_generator_spec(1, 2, 0.5, 0.3, 1, 100, 1),
                  ConfigError);
  GeneratorSpec spec = default_generator_spec(2, 2, 0.5, 0.3, 1, 100, 1);
  spec.style_strength = 1.5;
  CHECK_THROWS_AS(generate(spec), ConfigError);
}

TEST_CASE("word marginals match the mixture via chi-square") {
  GeneratorSpec spec = default_generator_spec(2, 2, 0.4, 0.4, 1, 100000, 5);
  auto corpus = generate(spec);
  // cell (author0, domain0) is the first story
  auto counts = word_counts(corpus[0]);
  auto expected = expected_word_distribution(spec, 0, 0);
  long total = 0;
  for (const auto& [w, n] : counts) total += n;
  CHECK(total >= 100000);

  double chi2 = 0.0;
  int dof = 0;
  for (const auto& [word, p] : expected) {
    double e = p * static_cast<double>(total);
    if (e < 5.0) continue;
    long observed = counts.count(word) ? counts.at(word) : 0;
    chi2 += (observed - e) * (observed - e) / e;
    ++dof;
  }
  // generous criterion: chi2 within 1.5x dof rules out distribution drift
  CHECK(dof > 100);
  CHECK(chi2 < 1.5 * dof);

  // no words outside the declared lexicons
  for (const auto& [word, n] : counts) {
    CHECK(expected.count(word) == 1);
  }
}

TEST_CASE("domain contrast lies on the pool axis") {
  GeneratorSpec spec = default_generator_spec(2, 4, 0.0, 1.0, 1, 20000, 6);
  size_t half = spec.content_lexicon.size() / 2;
  auto corpus = generate(spec);
  auto pool_share = [&](const RawStory& story) {
    auto counts = word_counts(story);
    double x = 0.0, total = 0.0;
    for (size_t i = 0; i < spec.content_lexicon.size(); ++i) {
      auto it = counts.find(spec.content_lexicon[i]);
      if (it == counts.end()) continue;
      total += it->second;
      if (i < half) x += it->second;
    }
    return x / total;
  };
  // even domains leans to pool X, odd domains to pool Y, for every domain
  CHECK(pool_share(corpus[0]) > 0.6);   // domain0
  CHECK(pool_share(corpus[1]) < 0.4);   // domain1
  CHECK(pool_share(corpus[2]) > 0.6);   // domain2
  CHECK(pool_share(corpus[3]) < 0.4);   // domain3
}

TEST_CASE("expected distribution sums to 1") {
  GeneratorSpec spec = default_generator_spec(2, 2, 0.3, 0.5, 1, 100, 2);
  auto dist = expected_word_distribution(spec, 1, 1);
  double sum = 0.0;
  for (const auto& [w, p] : dist) sum += p;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_SUITE_END();
