#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

#include "stylo/ingest.hpp"

namespace stylo {

// Slot layout: 0 = OOV, 1..11 punctuation, 12.. words in rank order.
class Vocabulary {
 public:
  static constexpr int kOovIndex = 0;
  static constexpr const char* kOovMarker = "<oov>";

  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> words);

  int total_size() const { return static_cast<int>(words_.size()) + 12; }
  int word_count() const { return static_cast<int>(words_.size()); }

  int index_of(const std::string& token) const;
  std::string token_at(int index) const;

  const std::vector<std::string>& words() const { return words_; }

  void save_wordlist(std::ostream& out) const;
  static Vocabulary load_wordlist(std::istream& in);
  static Vocabulary load_wordlist_file(const std::string& path);

 private:
  std::vector<std::string> words_;  // rank order
  std::unordered_map<std::string, int> index_;
};

// The word_count most frequent non-punctuation tokens, ties broken
// lexicographically. Throws InsufficientData when the stream has fewer
// distinct words.
Vocabulary build_vocabulary(const std::vector<std::string>& token_stream,
                            int word_count = 2001);

struct EncodedChunk {
  std::vector<int> indices;  // length = chunk length
  std::string author_id;
  std::string domain_id;
  std::string story_id;
};

EncodedChunk encode_chunk(const LabeledChunk& chunk, const Vocabulary& vocab);

std::vector<std::string> decode_indices(const std::vector<int>& indices,
                                        const Vocabulary& vocab);

}  // namespace stylo
