#include "stylo/distort.hpp"

#include <algorithm>
#include <cctype>
#include <map>

#include "stylo/errors.hpp"
#include "stylo/text.hpp"

namespace stylo {

DistortMode distort_mode_from_string(const std::string& s) {
  if (s == "ma" || s == "MA") return DistortMode::MA;
  if (s == "sa" || s == "SA") return DistortMode::SA;
  if (s == "ex" || s == "EX") return DistortMode::EX;
  if (s == "l2" || s == "L2") return DistortMode::L2;
  throw ConfigError("unknown distortion mode: " + s);
}

FrequentWordDictionary build_dictionary(
    const std::vector<std::string>& token_stream, int k) {
  std::map<std::string, long> counts;
  for (const auto& t : token_stream) {
    if (!is_punct_token(t)) ++counts[t];
  }
  std::vector<std::pair<std::string, long>> ranked(counts.begin(), counts.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  FrequentWordDictionary dict;
  dict.k = std::min<int>(k, static_cast<int>(ranked.size()));
  for (int i = 0; i < dict.k; ++i) dict.entries.insert(ranked[i].first);
  return dict;
}

namespace {

// '#' stays '#' so applying a distortion twice is a no-op
char mask_char(char c) {
  if (std::isdigit(static_cast<unsigned char>(c)) || c == '#') return '#';
  return '*';
}

}  // namespace

std::string distort_token(const std::string& token, DistortMode mode) {
  switch (mode) {
    case DistortMode::MA: {
      std::string out = token;
      for (char& c : out) c = mask_char(c);
      return out;
    }
    case DistortMode::SA: {
      bool all_digits = !token.empty() &&
                        std::all_of(token.begin(), token.end(), [](char c) {
                          return std::isdigit(static_cast<unsigned char>(c)) ||
                                 c == '#';
                        });
      return all_digits ? "#" : "*";
    }
    case DistortMode::EX: {
      if (token.size() <= 2) return token;
      std::string out = token;
      for (size_t i = 1; i + 1 < out.size(); ++i) out[i] = mask_char(out[i]);
      return out;
    }
    case DistortMode::L2: {
      if (token.size() <= 2) return token;
      std::string out = token;
      for (size_t i = 0; i + 2 < out.size(); ++i) out[i] = mask_char(out[i]);
      return out;
    }
  }
  return token;
}

std::vector<std::string> distort(const std::vector<std::string>& tokens,
                                 const FrequentWordDictionary& dict,
                                 DistortMode mode) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) {
    if (is_punct_token(t) || dict.entries.count(t)) {
      out.push_back(t);
    } else {
      out.push_back(distort_token(t, mode));
    }
  }
  return out;
}

std::string distort(const std::string& text, const FrequentWordDictionary& dict,
                    DistortMode mode) {
  return detokenize(distort(tokenize(text), dict, mode));
}

}  // namespace stylo
