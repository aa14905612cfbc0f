#pragma once

#include <string>
#include <vector>

namespace stylo {

// The 11 punctuation marks kept as standalone tokens. Order is the
// vocabulary slot order (slots 1..11). The ellipsis is spelled "..." after
// ASCII reduction.
const std::vector<std::string>& punctuation_marks();

bool is_punct_token(const std::string& token);

// Maps Unicode quotes, dashes, ellipses and non-breaking spaces to their
// ASCII equivalents. Input is treated as UTF-8; unknown bytes pass through.
std::string ascii_reduce(const std::string& text);

// Whitespace split, no further processing.
std::vector<std::string> whitespace_tokens(const std::string& text);

// A whitespace token that terminates a sentence: ends in '.', '!' or '?',
// possibly followed by quote characters.
bool ends_sentence(const std::string& ws_token);

// Full tokenization: whitespace split, punctuation marks split off as
// standalone tokens (dot runs of length >= 2 become "..."), words lowercased.
std::vector<std::string> tokenize(const std::string& text);

std::string detokenize(const std::vector<std::string>& tokens);

std::string to_lower(const std::string& s);

}  // namespace stylo
