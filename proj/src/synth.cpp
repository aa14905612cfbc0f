#include "stylo/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "stylo/errors.hpp"
#include "stylo/rng.hpp"

namespace stylo {

namespace {

const std::vector<std::string>& function_words() {
  static const std::vector<std::string> words = {
      "the", "of",   "and",  "a",    "to",   "in",  "is",   "it",   "he",
      "she", "was",  "for",  "on",   "with", "as",  "his",  "her",  "at",
      "by",  "they", "we",   "you",  "but",  "not", "had",  "this", "that",
      "from", "were", "or"};
  return words;
}

std::vector<std::string> synth_words(int count, size_t length, uint64_t seed,
                                     const std::string& stream,
                                     const std::string& consonants) {
  static const std::string vowels = "aeiou";
  CounterRng rng(seed, stream);
  std::vector<std::string> out;
  std::map<std::string, bool> seen;
  while (static_cast<int>(out.size()) < count) {
    std::string w;
    for (size_t i = 0; i < length; ++i) {
      const std::string& pool = i % 2 == 0 ? consonants : vowels;
      w.push_back(pool[rng.next_below(pool.size())]);
    }
    if (!seen[w]) {
      seen[w] = true;
      out.push_back(w);
    }
  }
  return out;
}

void check_spec(const GeneratorSpec& spec) {
  if (spec.authors.size() < 2 || spec.domains.size() < 2) {
    throw ConfigError("generator needs >= 2 authors and >= 2 domains");
  }
  if (spec.style_strength < 0.0 || spec.style_strength > 1.0 ||
      spec.domain_strength < 0.0 || spec.domain_strength > 1.0) {
    throw ConfigError("style/domain strength must be in [0, 1]");
  }
  for (const auto& a : spec.authors) {
    if (a.function_weights.size() != spec.function_lexicon.size() ||
        a.ender_weights.size() != 3 ||
        (!a.content_tilts.empty() &&
         a.content_tilts.size() != spec.content_lexicon.size())) {
      throw ConfigError("author profile dimensions mismatch");
    }
  }
  for (const auto& d : spec.domains) {
    if (d.content_weights.size() != spec.content_lexicon.size()) {
      throw ConfigError("domain profile dimensions mismatch");
    }
  }
}

// mixture weights over {style, domain, background}
void mixture_weights(const GeneratorSpec& spec, double& ws, double& wd,
                     double& wb) {
  ws = spec.style_strength;
  wd = spec.domain_strength;
  wb = std::max(0.0, 1.0 - ws - wd);
  double total = ws + wd + wb;
  ws /= total;
  wd /= total;
  wb /= total;
}

// domain content weights scaled by the author's topical tilts, renormalized
std::vector<double> cell_content_weights(const GeneratorSpec& spec,
                                         const AuthorProfile& author,
                                         const DomainProfile& domain) {
  std::vector<double> w = domain.content_weights;
  if (!author.content_tilts.empty()) {
    double sum = 0.0;
    for (size_t i = 0; i < w.size(); ++i) {
      w[i] *= author.content_tilts[i];
      sum += w[i];
    }
    for (auto& v : w) v /= sum;
  }
  return w;
}

}  // namespace

GeneratorSpec default_generator_spec(int num_authors, int num_domains,
                                     double style_strength,
                                     double domain_strength,
                                     int stories_per_cell, int words_per_story,
                                     uint64_t seed) {
  if (num_authors < 2 || num_domains < 2) {
    throw ConfigError("generator needs >= 2 authors and >= 2 domains");
  }
  GeneratorSpec spec;
  spec.style_strength = style_strength;
  spec.domain_strength = domain_strength;
  spec.stories_per_cell = stories_per_cell;
  spec.words_per_story = words_per_story;
  spec.seed = seed;
  spec.function_lexicon = function_words();
  // the two domain pools use disjoint consonant sets so the contrast
  // survives the drop to character trigrams
  spec.content_lexicon = synth_words(150, 7, seed, "lexicon/pool-x", "bcdfgkz");
  auto pool_y = synth_words(150, 7, seed, "lexicon/pool-y", "lmnprst");
  spec.content_lexicon.insert(spec.content_lexicon.end(), pool_y.begin(),
                              pool_y.end());
  spec.background_lexicon =
      synth_words(50, 5, seed, "lexicon/background", "bcdfgklmnprstvz");

  // style_strength also scales how far each author deviates from a neutral
  // profile, so weak style means both fewer and less distinctive markers
  const double s = style_strength;
  for (int a = 0; a < num_authors; ++a) {
    AuthorProfile p;
    p.id = "author" + std::to_string(a);
    CounterRng rng(seed, "profile/author/" + std::to_string(a));
    double sum = 0.0;
    for (size_t w = 0; w < spec.function_lexicon.size(); ++w) {
      double v = std::exp(0.8 * s * rng.next_normal());
      p.function_weights.push_back(v);
      sum += v;
    }
    for (auto& v : p.function_weights) v /= sum;
    // per-word topical preferences plus a mild preference for one content
    // pool, so topic choice genuinely confounds authorship
    double pool_bias = s * rng.next_normal();
    for (size_t w = 0; w < spec.content_lexicon.size(); ++w) {
      double tilt = std::exp(0.8 * s * rng.next_normal());
      if (w < spec.content_lexicon.size() / 2) tilt *= std::exp(pool_bias);
      p.content_tilts.push_back(tilt);
    }
    // sentence-ender habits, comma rate and length drift toward a shared
    // neutral profile as style weakens
    double excl = 0.2 + s * (0.3 * rng.next_double() - 0.15);
    double ques = 0.15 + s * (0.2 * rng.next_double() - 0.1);
    p.ender_weights = {1.0 - excl - ques, excl, ques};
    p.comma_rate = 0.125 + s * (0.15 * rng.next_double() - 0.075);
    p.mean_sentence_length = 13.0 + s * (10.0 * rng.next_double() - 5.0);
    spec.authors.push_back(std::move(p));
  }
  for (int d = 0; d < num_domains; ++d) {
    DomainProfile p;
    p.id = "domain" + std::to_string(d);
    CounterRng rng(seed, "profile/domain/" + std::to_string(d));
    // pool X = first half of the lexicon, pool Y = second half; each domain
    // picks a mixing ratio on alternating sides of the X/Y axis
    double alpha = d % 2 == 0 ? rng.uniform(0.7, 0.9) : rng.uniform(0.1, 0.3);
    size_t half = spec.content_lexicon.size() / 2;
    size_t rest = spec.content_lexicon.size() - half;
    p.content_weights.assign(spec.content_lexicon.size(), 0.0);
    for (size_t i = 0; i < half; ++i) {
      p.content_weights[i] = alpha / static_cast<double>(half);
    }
    for (size_t i = half; i < spec.content_lexicon.size(); ++i) {
      p.content_weights[i] = (1.0 - alpha) / static_cast<double>(rest);
    }
    spec.domains.push_back(std::move(p));
  }
  return spec;
}

std::vector<RawStory> generate(const GeneratorSpec& spec) {
  check_spec(spec);
  double ws, wd, wb;
  mixture_weights(spec, ws, wd, wb);

  std::vector<RawStory> corpus;
  for (size_t a = 0; a < spec.authors.size(); ++a) {
    const AuthorProfile& author = spec.authors[a];
    for (size_t d = 0; d < spec.domains.size(); ++d) {
      const DomainProfile& domain = spec.domains[d];
      std::vector<double> content = cell_content_weights(spec, author, domain);
      for (int s = 0; s < spec.stories_per_cell; ++s) {
        RawStory story;
        story.story_id =
            author.id + "-" + domain.id + "-" + std::to_string(s);
        story.author_id = author.id;
        story.domain_id = domain.id;
        CounterRng rng(spec.seed, "story/" + story.story_id);

        int words = 0;
        std::string paragraph;
        int sentences_in_par = 0;
        while (words < spec.words_per_story) {
          // one sentence
          int len = static_cast<int>(std::lround(
              author.mean_sentence_length *
              (0.5 + rng.next_double())));
          len = std::max(len, 3);
          for (int w = 0; w < len; ++w) {
            double u = rng.next_double();
            std::string word;
            if (u < ws) {
              word = spec.function_lexicon[rng.next_discrete(
                  author.function_weights)];
            } else if (u < ws + wd) {
              word = spec.content_lexicon[rng.next_discrete(content)];
            } else {
              word = spec.background_lexicon[rng.next_below(
                  spec.background_lexicon.size())];
            }
            if (!paragraph.empty()) paragraph.push_back(' ');
            paragraph += word;
            ++words;
            if (w + 1 < len && rng.next_double() < author.comma_rate) {
              paragraph += " ,";
            }
          }
          static const char* enders[3] = {".", "!", "?"};
          paragraph += " ";
          paragraph += enders[rng.next_discrete(author.ender_weights)];
          ++sentences_in_par;
          if (sentences_in_par >= 5) {
            story.blocks.push_back({BlockKind::plain, paragraph});
            paragraph.clear();
            sentences_in_par = 0;
          }
        }
        if (!paragraph.empty()) {
          story.blocks.push_back({BlockKind::plain, paragraph});
        }
        corpus.push_back(std::move(story));
      }
    }
  }
  return corpus;
}

std::map<std::string, double> expected_word_distribution(
    const GeneratorSpec& spec, int author, int domain) {
  double ws, wd, wb;
  mixture_weights(spec, ws, wd, wb);
  std::map<std::string, double> dist;
  const AuthorProfile& a = spec.authors.at(author);
  const DomainProfile& d = spec.domains.at(domain);
  for (size_t i = 0; i < spec.function_lexicon.size(); ++i) {
    dist[spec.function_lexicon[i]] += ws * a.function_weights[i];
  }
  std::vector<double> content = cell_content_weights(spec, a, d);
  for (size_t i = 0; i < spec.content_lexicon.size(); ++i) {
    if (content[i] > 0.0) {
      dist[spec.content_lexicon[i]] += wd * content[i];
    }
  }
  for (const auto& w : spec.background_lexicon) {
    dist[w] += wb / static_cast<double>(spec.background_lexicon.size());
  }
  return dist;
}

}  // namespace stylo
