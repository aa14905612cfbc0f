#include "stylo/vocab.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "stylo/errors.hpp"
#include "stylo/text.hpp"

namespace stylo {

Vocabulary::Vocabulary(std::vector<std::string> words)
    : words_(std::move(words)) {
  const auto& punct = punctuation_marks();
  for (size_t i = 0; i < punct.size(); ++i) {
    index_[punct[i]] = static_cast<int>(i) + 1;
  }
  for (size_t i = 0; i < words_.size(); ++i) {
    if (index_.count(words_[i])) {
      throw ConfigError("duplicate vocabulary entry: " + words_[i]);
    }
    index_[words_[i]] = static_cast<int>(i) + 12;
  }
}

int Vocabulary::index_of(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kOovIndex : it->second;
}

std::string Vocabulary::token_at(int index) const {
  if (index == kOovIndex) return kOovMarker;
  if (index >= 1 && index <= 11) return punctuation_marks()[index - 1];
  int w = index - 12;
  if (w < 0 || w >= static_cast<int>(words_.size())) {
    throw ConfigError("vocabulary index out of range: " + std::to_string(index));
  }
  return words_[w];
}

void Vocabulary::save_wordlist(std::ostream& out) const {
  for (const auto& w : words_) out << w << '\n';
}

Vocabulary Vocabulary::load_wordlist(std::istream& in) {
  std::vector<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) words.push_back(line);
  }
  return Vocabulary(std::move(words));
}

Vocabulary Vocabulary::load_wordlist_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open wordlist: " + path);
  return load_wordlist(in);
}

Vocabulary build_vocabulary(const std::vector<std::string>& token_stream,
                            int word_count) {
  std::map<std::string, long> counts;
  for (const auto& t : token_stream) {
    if (!is_punct_token(t)) ++counts[t];
  }
  if (static_cast<int>(counts.size()) < word_count) {
    throw InsufficientData("vocabulary needs " + std::to_string(word_count) +
                           " distinct words, stream has " +
                           std::to_string(counts.size()));
  }
  std::vector<std::pair<std::string, long>> ranked(counts.begin(), counts.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<std::string> words;
  words.reserve(word_count);
  for (int i = 0; i < word_count; ++i) words.push_back(ranked[i].first);
  return Vocabulary(std::move(words));
}

EncodedChunk encode_chunk(const LabeledChunk& chunk, const Vocabulary& vocab) {
  EncodedChunk out;
  out.indices.reserve(chunk.tokens.size());
  for (const auto& t : chunk.tokens) out.indices.push_back(vocab.index_of(t));
  out.author_id = chunk.author_id;
  out.domain_id = chunk.domain_id;
  out.story_id = chunk.story_id;
  return out;
}

std::vector<std::string> decode_indices(const std::vector<int>& indices,
                                        const Vocabulary& vocab) {
  std::vector<std::string> out;
  out.reserve(indices.size());
  for (int i : indices) out.push_back(vocab.token_at(i));
  return out;
}

}  // namespace stylo
