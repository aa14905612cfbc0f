#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "stylo/ingest.hpp"

namespace stylo {

// Author style lives in function-word frequencies, punctuation rates and
// sentence length; domain style lives in a content-word distribution over a
// lexicon shared by all domains.
struct AuthorProfile {
  std::string id;
  std::vector<double> function_weights;  // over spec.function_lexicon
  // multiplicative per-word preferences over spec.content_lexicon (authors
  // favor some topics within whatever pool mix the domain dictates); empty
  // means no preference
  std::vector<double> content_tilts;
  std::vector<double> ender_weights;  // over {., !, ?}
  double comma_rate = 0.1;
  double mean_sentence_length = 12.0;
};

struct DomainProfile {
  std::string id;
  std::vector<double> content_weights;  // over spec.content_lexicon
};

struct GeneratorSpec {
  std::vector<std::string> function_lexicon;
  std::vector<std::string> content_lexicon;
  std::vector<std::string> background_lexicon;
  std::vector<AuthorProfile> authors;
  std::vector<DomainProfile> domains;
  double style_strength = 0.5;
  double domain_strength = 0.8;
  int stories_per_cell = 10;
  int words_per_story = 8000;
  uint64_t seed = 1;
};

// Deterministic profiles: per-author log-normal tilts over a fixed function
// lexicon. Domains share one content lexicon split into two pools and differ
// only in the pool mixing ratio, so every domain contrast lies on the same
// axis and suppressing it transfers to held-out domains.
GeneratorSpec default_generator_spec(int num_authors, int num_domains,
                                     double style_strength,
                                     double domain_strength,
                                     int stories_per_cell, int words_per_story,
                                     uint64_t seed);

std::vector<RawStory> generate(const GeneratorSpec& spec);

// Expected marginal distribution of word slots (punctuation excluded) for a
// given (author, domain) cell; used by the chi-square oracle.
std::map<std::string, double> expected_word_distribution(
    const GeneratorSpec& spec, int author, int domain);

}  // namespace stylo
