#pragma once

#include <string>
#include <unordered_set>
#include <vector>

namespace stylo {

// MA: every masked letter -> '*', digit -> '#'
// SA: whole masked token -> "*" ("#" if all digits)
// EX: keep first and last character, mask the interior
// L2: keep the last two characters, mask the rest
enum class DistortMode { MA, SA, EX, L2 };

DistortMode distort_mode_from_string(const std::string& s);

struct FrequentWordDictionary {
  std::unordered_set<std::string> entries;  // lowercase
  int k = 0;
};

// k most frequent non-punctuation tokens, ties lexicographic.
FrequentWordDictionary build_dictionary(
    const std::vector<std::string>& token_stream, int k);

std::string distort_token(const std::string& token, DistortMode mode);

// Tokens in the dictionary and punctuation tokens pass unchanged.
std::vector<std::string> distort(const std::vector<std::string>& tokens,
                                 const FrequentWordDictionary& dict,
                                 DistortMode mode);

std::string distort(const std::string& text, const FrequentWordDictionary& dict,
                    DistortMode mode);

}  // namespace stylo
